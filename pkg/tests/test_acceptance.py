"""Acceptance criteria 1-9 at their stated tolerances.

Each test records one PASS/FAIL line (with the measured values) that the
conftest hook prints at the end of the session; run this file directly to
get the same lines without pytest.  Criteria sharing a grid field reuse it
through the conftest cache.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import field_for
from juliageom.cli import rabbit_parameter
from juliageom.errors import ComponentUnresolved
from juliageom.grid import julia_sample
from juliageom.orbits import semi_hyperbolicity_verdict
from juliageom.pullback import julia_points_near, mod_bound_check, random_mod_cases, shrink_experiment
from juliageom.ratmap import Polynomial, RationalMap, poly_roots, root_residual
from juliageom.regularity import crosscut_continuum, holder_check, john_estimate, random_julia_pairs
from juliageom.sphere import INF, chordal_distance
from juliageom.summability import sigma_sequence, summability_report

RESULTS = {}
ROUNDTRIP = []  # max relative lift round-trip errors from every shrink run


def record(number, ok, detail):
    RESULTS[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[number]


def q(c):
    return RationalMap.quadratic(c)


# 1 ------------------------------------------------------------------------


def test_criterion_1_squaring_map():
    t0 = time.perf_counter()
    f = q(0)
    shrink = shrink_experiment(f, julia_sample(f, 2000, seed=0), 0.2, 10, per_depth_samples=6, seed=0)
    ROUNDTRIP.append(shrink.max_roundtrip_error)
    _, field, _ = field_for(0, 512, "standard", 1.25)
    disk = field.component_at(0j)
    john = john_estimate(f, field, disk, samples=1000, seed=0)
    holder = holder_check(f, field, disk, samples=400, seed=0)
    dt = time.perf_counter() - t0
    ok = 1.7 <= shrink.fitted_lambda <= 2.3 and john.epsilon_hat >= 0.8 and abs(holder.slope - 1) <= 0.25
    record(
        1,
        ok,
        f"lambda-hat {shrink.fitted_lambda:.3f} in [1.7, 2.3]; eps-hat {john.epsilon_hat:.3f} >= 0.8; "
        f"Holder slope {holder.slope:.3f} within 25% of 1; {dt:.0f} s",
    )


# 2 ------------------------------------------------------------------------

TRUTH = {
    "z^2 + i": (1j, "semi_hyperbolic"),
    "z^2 - 2": (-2, "semi_hyperbolic"),
    "z^2 + 1/4": (0.25, "not_semi_hyperbolic"),
    "z^2": (0, "semi_hyperbolic"),
    "z^2 - 1": (-1, "semi_hyperbolic"),
    "rabbit": (None, "semi_hyperbolic"),
}


def test_criterion_2_semi_hyperbolicity_verdicts():
    got, ok = [], True
    verdicts = {}
    for name, (c, want) in TRUTH.items():
        v = semi_hyperbolicity_verdict(q(rabbit_parameter() if c is None else c))
        verdicts[name] = v
        good = v.verdict == want
        if name == "z^2 + 1/4":
            good &= v.parabolic_found
        if name in ("z^2", "z^2 - 1", "rabbit"):
            good &= not v.julia_critical
        ok &= good
        got.append(f"{name}: {v.verdict}")
    (e,) = verdicts["z^2 + i"].julia_critical
    rec_err = abs(e.recurrence_distance - np.sqrt(2))
    (e,) = verdicts["z^2 - 2"].julia_critical
    omega_ok = len(e.omega) == 1 and chordal_distance(e.omega[0], 2) <= 1e-6
    ok &= rec_err <= 1e-6 and omega_ok
    record(2, ok, f"{'; '.join(got)}; |rec - sqrt2| = {rec_err:.1e}; omega(0) for z^2 - 2 = {e.omega}")


# 3 ------------------------------------------------------------------------

# (label, c, chart, half_width, component point)
STABLE = [
    ("z^2 - 2 basin of inf", -2, "inverted", 1.0, INF),
    ("z^2 + i basin of inf", 1j, "inverted", 1.5, INF),
    ("basilica, component of 0", -1, "standard", 1.7, 0j),
]


def _eps(c, N, chart, hw, point, samples):
    f, field, _ = field_for(c, N, chart, hw)
    return john_estimate(f, field, field.component_at(point), samples=samples, seed=0, keep_paths=False).epsilon_hat


def test_criterion_3_resolution_behaviour():
    parts, ok = [], True
    for label, c, chart, hw, point in STABLE:
        e512 = _eps(c, 512, chart, hw, point, 300)
        e1024 = _eps(c, 1024, chart, hw, point, 300)
        rel = abs(e1024 - e512) / e512
        ok &= rel <= 0.3
        parts.append(f"{label} {e512:.3f} -> {e1024:.3f} ({100 * rel:.0f}%)")
    cauli = [_eps(0.25, N, "inverted", 2.5, INF, 1000) for N in (256, 512, 1024)]
    ok &= cauli[0] > cauli[1] > cauli[2]
    parts.append("cauliflower basin of inf " + " > ".join(f"{e:.3f}" for e in cauli))
    record(3, ok, "; ".join(parts))


# 4 ------------------------------------------------------------------------


def basilica_bounded_eps(samples=200):
    f, field, _ = field_for(-1, 1024, "standard", 1.7)
    bounded = field.basin_id[field.spec.cell_of(0j)]
    comps = field.largest_components(10, basin=bounded)
    eps = [john_estimate(f, field, k, samples=samples, seed=k, keep_paths=False).epsilon_hat for k in comps]
    return comps, eps


_BASILICA = {}


def basilica_eps():
    if not _BASILICA:
        _BASILICA["comps"], _BASILICA["eps"] = basilica_bounded_eps()
    return _BASILICA["comps"], _BASILICA["eps"]


def test_criterion_4_uniform_epsilon():
    comps, eps = basilica_eps()
    lo, hi = min(eps), max(eps)
    ok = len(comps) == 10 and hi / lo <= 10 and lo >= 0.05
    record(4, ok, f"10 largest bounded components: eps-hat in [{lo:.3f}, {hi:.3f}], max/min {hi / lo:.2f} <= 10")


# 5 ------------------------------------------------------------------------


def test_criterion_5_modulus_bound():
    parts, ok = [], True
    for name, c in (("z^2", 0), ("z^2 - 2", -2)):
        f = q(c)
        cases = random_mod_cases(f, julia_sample(f, 2000, seed=1), 100, seed=2, n_max=5)
        worst = mod_bound_check(f, cases)
        used = sum(case.ratio is not None for case in cases)
        mu = max(case.mu for case in cases)
        ok &= worst < 1 and used >= 50
        parts.append(f"{name}: max ratio {worst:.3f} < 1 over {used}/100 cases (max degree {mu})")
    record(5, ok, "; ".join(parts))


# 6 ------------------------------------------------------------------------


def test_criterion_6_parabolic_shrink():
    f = q(0.25)
    sample = julia_sample(f, 2000, seed=0)
    bases = list(dict.fromkeys(julia_points_near(f, sample, 0.5, 0.05, 4)))
    parts, ok = [], True
    for r in (0.005, 0.02):
        rep = shrink_experiment(f, sample, r, 20, bases=bases, seed=0)
        ROUNDTRIP.append(rep.max_roundtrip_error)
        ok &= rep.fitted_lambda <= 1.15 and rep.verdict != "expshrink_consistent"
        parts.append(f"r={r}: lambda-hat {rep.fitted_lambda:.3f} <= 1.15, {rep.verdict}")
    record(6, ok, "; ".join(parts))


# 7 ------------------------------------------------------------------------


def _crosscuts(c, N, chart, hw, pairs=100, seed=0):
    f, field, sample = field_for(c, N, chart, hw)
    ratios, unresolved = [], 0
    for a, b in random_julia_pairs(field, sample, pairs, seed=seed):
        try:
            ratios.append(crosscut_continuum(f, field, sample, a, b).ratio)
        except ComponentUnresolved:
            unresolved += 1
    return ratios, unresolved


def test_criterion_7_crosscut_continua():
    f, field, _ = field_for(0, 512, "standard", 1.25)
    eps_disk = john_estimate(f, field, field.component_at(0j), samples=300, seed=0, keep_paths=False).epsilon_hat
    # the exterior of the disk is window-truncated here; the disk's eps-hat
    # is the relevant one, since crosscut continua replace disk-side arcs
    sq, sq_un = _crosscuts(0, 512, "standard", 1.25)
    _, eps = basilica_eps()
    ba, ba_un = _crosscuts(-1, 1024, "standard", 1.7)
    sq_bound, ba_bound = min(1.7, 1.2 / eps_disk), 1.2 / min(eps)
    ok = (
        len(sq) >= 80
        and len(ba) >= 80
        and max(sq) <= sq_bound
        and max(ba) <= ba_bound
    )
    record(
        7,
        ok,
        f"z^2: max ratio {max(sq):.3f} <= {sq_bound:.3f} ({len(sq)}/100 resolved); "
        f"basilica: max ratio {max(ba):.3f} <= {ba_bound:.3f} ({len(ba)}/100 resolved)",
    )


# 8 ------------------------------------------------------------------------


def test_criterion_8_summability_closed_form():
    f = q(-2)
    v = semi_hyperbolicity_verdict(f)
    sigma = sigma_sequence(f, v, 8)
    rel = float(np.max(np.abs(sigma / 4.0 ** np.arange(1, 9) - 1)))
    rep = summability_report(f, v, 8, alpha_override=0.5)
    gap = abs(rep.partial_sums[-1] - 1)
    slope_err = abs(rep.ce_slope / np.log(4) - 1)
    ok = rel <= 1e-9 and gap <= 2**-8 and slope_err <= 0.01
    record(
        8,
        ok,
        f"max |sigma_n / 4^n - 1| = {rel:.1e}; |S_8 - 1| = {gap:.2e} <= 2^-8; ce_slope {rep.ce_slope:.6f} vs log 4",
    )


# 9 ------------------------------------------------------------------------


def _cli_run(tmp):
    cmd = [sys.executable, "-m", "juliageom.cli", "summability", "--preset", "dendrite", "--seed", "11"]
    cmd += ["--no-timings", "--quiet", "--config", str(tmp)]
    return subprocess.run(cmd, capture_output=True, check=True).stdout


def test_criterion_9_infrastructure(tmp_path):
    # lift round trips: every accepted lift of the shrink runs above, plus a
    # fresh batch when this criterion runs alone
    f = q(1j)
    rep = shrink_experiment(f, julia_sample(f, 1000, seed=3), 0.1, 5, per_depth_samples=4, seed=3)
    roundtrip = max(ROUNDTRIP + [rep.max_roundtrip_error])
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(200):
        deg = int(rng.integers(1, 33))
        P = Polynomial(rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1))
        for z, _m in poly_roots(P):
            worst = max(worst, root_residual(P, z) / P.norm)
    cfg = tmp_path / "run.ini"
    cfg.write_text("[grid]\nresolution = 64\n[summability]\nn = 12\n")
    a, b = _cli_run(cfg), _cli_run(cfg)
    identical = a == b and json.loads(a)["summability"]["trend"] == "converging_trend"
    ok = roundtrip <= 1e-6 and worst <= 1e-10 and identical
    record(
        9,
        ok,
        f"max lift round-trip {roundtrip:.1e} r <= 1e-6 r; max root residual {worst:.1e} ||P|| <= 1e-10 ||P||; "
        f"repeated seeded runs byte-identical: {identical}",
    )


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    tests = [
        test_criterion_1_squaring_map,
        test_criterion_2_semi_hyperbolicity_verdicts,
        test_criterion_3_resolution_behaviour,
        test_criterion_4_uniform_epsilon,
        test_criterion_5_modulus_bound,
        test_criterion_6_parabolic_shrink,
        test_criterion_7_crosscut_continua,
        test_criterion_8_summability_closed_form,
    ]
    for i, t in enumerate(tests, 1):
        try:
            t()
        except AssertionError:
            pass
        print(RESULTS.get(i, f"criterion {i}: FAIL  (error before a result was recorded)"), flush=True)
    with tempfile.TemporaryDirectory() as d:
        try:
            test_criterion_9_infrastructure(Path(d))
        except AssertionError:
            pass
    print(RESULTS.get(9, "criterion 9: FAIL  (error before a result was recorded)"))
