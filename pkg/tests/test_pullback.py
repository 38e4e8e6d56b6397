import numpy as np
import pytest

from conftest import field_for
from juliageom.errors import CriticalValueOnPath, InsufficientData, ValidationError
from juliageom.grid import julia_sample
from juliageom.pullback import (
    ModCase,
    Polyline,
    ball_component,
    critical_values,
    fit_lambda,
    lift_path,
    mod_bound_check,
    mod_bound_ratio,
    nearest_preimage_chain,
    random_mod_cases,
    random_preimage_chain,
    shrink_experiment,
    shrink_verdict,
)
from juliageom.ratmap import RationalMap, evaluate
from juliageom.sphere import chordal_distance

SQ = RationalMap.quadratic(0)


def test_lift_real_segment_both_branches():
    gamma = Polyline([4.0, 6.5, 9.0])
    lift = lift_path(SQ, gamma, 2.0)
    assert np.allclose(lift.points, [2.0, np.sqrt(6.5), 3.0], atol=1e-12)
    lift = lift_path(SQ, gamma, -2.0)
    assert np.allclose(lift.points, [-2.0, -np.sqrt(6.5), -3.0], atol=1e-12)


def test_lift_loop_around_critical_value_has_monodromy():
    theta = np.linspace(0, 2 * np.pi, 33)[:-1]
    gamma = Polyline(list(np.exp(1j * theta)), closed=True)
    lift = lift_path(SQ, gamma, 1.0)
    # once around 0 downstairs is half way round upstairs
    assert not lift.closed
    assert chordal_distance(lift.points[-1], -1.0) < 1e-9


def test_lift_through_critical_value_refused():
    with pytest.raises(CriticalValueOnPath):
        lift_path(SQ, Polyline([-1.0, 1.0]), 1j)


def test_lift_requires_preimage():
    with pytest.raises(ValidationError):
        lift_path(SQ, Polyline([4.0, 9.0]), 3.0)


def test_lift_points_map_back():
    f = RationalMap.quadratic(1j)
    gamma = Polyline([2 + 1j, 3 + 0.5j, 2.5 - 1j])
    w0 = next(w for w in [np.sqrt(2 + 1j - 1j), -np.sqrt(2 + 1j - 1j)])
    lift = lift_path(f, gamma, w0)
    for w, z in zip(lift.points, gamma.points):
        assert chordal_distance(evaluate(f, w), z) < 1e-10


def test_critical_values_of_iterates():
    cv = critical_values(RationalMap.quadratic(-2), 3)
    assert any(chordal_distance(c, -2) < 1e-12 for c in cv)
    assert any(chordal_distance(c, 2) < 1e-12 for c in cv)


def test_ball_component_local_inverse():
    comp = ball_component(SQ, 1.0, 0.1, 1, 1.0)
    assert comp.covering_degree == 1
    # sqrt halves lengths near 1: a chordal 0.1-ball pulls back to about 0.05
    assert comp.diameter == pytest.approx(0.1, rel=0.05)
    pts = np.asarray(comp.boundary.points)
    radius = np.abs(pts - 1)
    assert np.all((radius > 0.045) & (radius < 0.056))


def test_ball_component_two_disjoint_preimages():
    a = ball_component(SQ, 1.0, 0.5, 1, -1.0)
    b = ball_component(SQ, 1.0, 0.5, 1, 1.0)
    assert a.covering_degree == 1 and b.covering_degree == 1
    pa, pb = np.asarray(a.boundary.points), np.asarray(b.boundary.points)
    assert np.all(pa.real < 0) and np.all(pb.real > 0)


def test_ball_component_double_cover():
    # B(0.5, 1.2) contains the critical value 0: one doubly covering preimage
    comp = ball_component(SQ, 0.5, 1.2, 1, np.sqrt(0.5))
    assert comp.covering_degree == 2
    assert comp.boundary.closed


def test_ball_component_roundtrip():
    f = RationalMap.quadratic(1j)
    rng = np.random.default_rng(0)
    w = random_preimage_chain(f, -1j, 3, rng)
    comp = ball_component(f, -1j, 0.1, 3, w)
    assert comp.roundtrip_error <= 1e-6 * comp.base_radius


def test_preimage_chains():
    f = RationalMap.quadratic(-1)
    rng = np.random.default_rng(1)
    w = random_preimage_chain(f, 1.618, 4, rng)
    z = w
    for _ in range(4):
        z = evaluate(f, z)
    assert abs(z - 1.618) < 1e-9
    v = nearest_preimage_chain(f, 0.5, 3)
    for _ in range(3):
        v = evaluate(f, v)
    assert abs(v - 0.5) < 1e-9


def test_fit_lambda_exact_geometric():
    d = [0.3 * 2.0**-n for n in range(1, 11)]
    lam, window = fit_lambda(list(range(1, 11)), d)
    assert lam == pytest.approx(2.0, rel=1e-12)
    assert window == (1, 10)


def test_fit_lambda_uses_suffix_window():
    depths = list(range(1, 11))
    d = [0.5, 0.45, 0.4] + [0.3 * 3.0**-n for n in range(4, 11)]
    lam, window = fit_lambda(depths, d)
    assert lam == pytest.approx(3.0, rel=1e-9)
    assert window[1] == 10 and window[0] >= 3


def test_shrink_verdicts():
    assert shrink_verdict(1.5, [0.1, 0.01]) == "expshrink_consistent"
    assert shrink_verdict(1.01, [0.1, 0.09]) == "shrinking_fails"
    assert shrink_verdict(1.01, [0.1, 0.03]) == "sumshrink_only_consistent"


def test_shrink_chebyshev_expshrink():
    f = RationalMap.quadratic(-2)
    sample = julia_sample(f, 2000, seed=0)
    rep = shrink_experiment(f, sample, 0.2, 10, per_depth_samples=4, seed=0)
    assert rep.verdict == "expshrink_consistent" and rep.fitted_lambda > 1.05
    assert rep.max_roundtrip_error <= 1e-6
    assert np.all(np.diff(rep.partial_sums) > 0)


def test_shrink_validation():
    sample = julia_sample(SQ, 100, seed=0)
    with pytest.raises(ValidationError):
        shrink_experiment(SQ, sample, 0.7, 5)
    with pytest.raises(ValidationError):
        shrink_experiment(SQ, sample, 0.1, 0)


def test_mod_bound_examples():
    rng = np.random.default_rng(5)
    w = random_preimage_chain(SQ, 1.0, 3, rng)
    ratio, mu, _ = mod_bound_ratio(SQ, 1.0, 0.4, 0.1, 3, w)
    assert ratio < 1 and mu == 1
    ratio, _, _ = mod_bound_ratio(SQ, 1.0, 0.4, 0.4, 3, w)
    assert ratio == pytest.approx(1 / 64)
    # base containing the critical value 0 of z^2: doubly covered
    ratio, mu, _ = mod_bound_ratio(SQ, 0.5, 0.9, 0.2, 1, np.sqrt(0.5))
    assert mu == 2 and ratio < 1


def test_mod_bound_random_cases_squaring():
    sample = julia_sample(SQ, 500, seed=2)
    cases = random_mod_cases(SQ, sample, 20, seed=3, n_max=4)
    assert mod_bound_check(SQ, cases) < 1
    assert all(isinstance(c, ModCase) and c.mu >= 1 for c in cases)
