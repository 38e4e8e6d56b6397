import functools

import numpy as np
import pytest

from juliageom.errors import NoJuliaCriticalPoints, ValidationError
from juliageom.orbits import semi_hyperbolicity_verdict
from juliageom.ratmap import RationalMap
from juliageom.sphere import chordal_distance
from juliageom.summability import (
    critical_products,
    mu_max,
    sigma_sequence,
    summability_report,
    trend_label,
)


@functools.lru_cache(maxsize=None)
def setup(c):
    f = RationalMap.quadratic(c)
    return f, semi_hyperbolicity_verdict(f)


def spherical_derivative(z):
    # |f'(z)| (1 + |z|^2) / (1 + |f(z)|^2) for f(z) = z^2 + c
    return lambda c: 2 * abs(z) * (1 + abs(z) ** 2) / (1 + abs(z * z + c) ** 2)


def test_chebyshev_sigma_closed_form():
    f, v = setup(-2)
    sigma = sigma_sequence(f, v, 12)
    # f(0) = -2, then 2 forever: spherical derivative 4 at each step
    assert np.allclose(sigma, 4.0 ** np.arange(1, 13), rtol=1e-12)


def test_chebyshev_report():
    f, v = setup(-2)
    rep = summability_report(f, v, 8)
    assert rep.mu_max == 1 and rep.alpha == 0.5
    assert rep.ce_slope == pytest.approx(np.log(4), abs=1e-12)
    assert rep.ce_residual < 1e-9
    assert rep.partial_sums[-1] == pytest.approx(0.99609375, rel=1e-12)
    assert rep.trend == "converging_trend"
    d = rep.to_dict()
    assert d["mu_convention"] == "order" and len(d["sigma"]) == 8


def test_alpha_zero_diverges():
    f, v = setup(-2)
    rep = summability_report(f, v, 10, alpha_override=0)
    assert np.allclose(rep.partial_sums, np.arange(1, 11))
    assert rep.trend == "diverging_trend"
    with pytest.raises(ValidationError):
        summability_report(f, v, 10, alpha_override=-1)


def test_local_degree_convention():
    f, v = setup(-2)
    assert mu_max(v, "local_degree") == 2
    assert summability_report(f, v, 4, convention="local_degree").alpha == pytest.approx(1 / 3)
    with pytest.raises(ValidationError):
        mu_max(v, "valence")


def test_no_julia_critical_points():
    f, v = setup(0)
    with pytest.raises(NoJuliaCriticalPoints):
        sigma_sequence(f, v, 4)


def test_misiurewicz_i_products():
    # 0 -> i -> -1 + i -> -i -> -1 + i: preperiodic, cycle multiplier 4|(-1+i)(-i)|
    f, v = setup(1j)
    (prods,) = critical_products(f, v, 6)
    orbit = [1j, -1 + 1j, -1j, -1 + 1j, -1j, -1 + 1j]
    expected = np.cumprod([spherical_derivative(z)(1j) for z in orbit])
    assert np.allclose(prods, expected, rtol=1e-10)
    assert chordal_distance(orbit[-1], -1 + 1j) == 0


def test_validation():
    f, v = setup(-2)
    with pytest.raises(ValidationError):
        critical_products(f, v, 0)


def test_trend_labels():
    assert trend_label(np.cumsum(0.5 ** np.arange(10))) == "converging_trend"
    assert trend_label(np.cumsum(np.arange(1, 11))) == "diverging_trend"
    assert trend_label(np.cumsum([1.0, 0.5, 0.5, 0.49, 0.5, 0.48, 0.5, 0.47])) == "flat"
    assert trend_label(np.array([1.0])) == "flat"
