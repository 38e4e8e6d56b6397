"""Derivative growth along critical orbits in the Julia set.

sigma_n is the smallest spherical derivative |(f^n)'(f(c))| over critical
points c in J.  The Collet-Eckmann slope is the growth rate of log sigma_n;
the summability partial sums use the exponent alpha = 1 / (1 + mu_max).
All verdicts here are heuristic labels of finite data.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CriticalOrbitHitsCritical, NoJuliaCriticalPoints, ValidationError
from .orbits import forward_orbit
from .ratmap import critical_points
from .sphere import chordal_distance

HIT_TOLERANCE = 1e-6
CONVERGING = "converging_trend"
DIVERGING = "diverging_trend"
FLAT = "flat"
CONVENTIONS = ("order", "local_degree")


@dataclass
class SummabilityReport:
    sigma: np.ndarray
    ce_slope: float
    ce_residual: float
    alpha: float
    partial_sums: np.ndarray
    mu_max: int
    trend: str
    convention: str = "order"

    def to_dict(self):
        return {
            "sigma": [float(s) for s in self.sigma],
            "ce_slope": self.ce_slope,
            "ce_residual": self.ce_residual,
            "alpha": self.alpha,
            "partial_sums": [float(s) for s in self.partial_sums],
            "mu_max": self.mu_max,
            "mu_convention": self.convention,
            "trend": self.trend,
        }


def _julia_critical(f, verdict):
    crit = verdict.julia_critical
    if not crit:
        raise NoJuliaCriticalPoints("no critical point in J; the condition is vacuous")
    return crit


def critical_products(f, verdict, N):
    """Per in-J critical point, the cumulative spherical derivatives
    |(f^n)'(f(c))| for n = 1..N, after checking that the orbit f(c), ...,
    f^N(c) stays HIT_TOLERANCE away from every critical point."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    crit = _julia_critical(f, verdict)
    all_crit = np.array([cp.location for cp in critical_points(f)])
    out = []
    for e in crit:
        rec = forward_orbit(f, e.point, N + 1)
        orbit = np.array(rec.points[1 : N + 1])
        d = chordal_distance(orbit[:, None], all_crit[None, :])
        if np.any(d < HIT_TOLERANCE):
            raise CriticalOrbitHitsCritical(f"orbit of critical point {e.point} meets a critical point")
        # forward_orbit from c: prods[k] = |(f^{k+1})'(c)|, which vanishes;
        # restart the product at f(c) instead
        rec = forward_orbit(f, orbit[0], N)
        out.append(rec.deriv_products)
    return out


def sigma_sequence(f, verdict, N):
    """sigma_1..sigma_N, the minimum over in-J critical points."""
    return np.min(np.vstack(critical_products(f, verdict, N)), axis=0)


def mu_max(verdict, convention="order"):
    """Largest multiplicity among in-J critical points: order of vanishing
    of f' ('order') or local degree ('local_degree', one more)."""
    if convention not in CONVENTIONS:
        raise ValidationError(f"unknown multiplicity convention {convention!r}")
    mu = max(e.multiplicity for e in verdict.julia_critical)
    return mu + 1 if convention == "local_degree" else mu


def trend_label(partial_sums):
    """Three-way label from the increments in the last quarter of the sums."""
    inc = np.diff(np.concatenate([[0.0], partial_sums]))
    tail = inc[-max(2, len(inc) // 4) - 1 :]
    if len(tail) < 2:
        return FLAT
    a, b = tail[:-1], tail[1:]
    if np.all(b >= a):
        return DIVERGING
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = b / a
    if np.all(a > 0) and np.all(ratio < 0.9):
        return CONVERGING
    return FLAT


def summability_report(f, verdict, N, alpha_override=None, convention="order"):
    sigma = sigma_sequence(f, verdict, N)
    mu = mu_max(verdict, convention)
    alpha = float(alpha_override) if alpha_override is not None else 1.0 / (1 + mu)
    if alpha < 0:
        raise ValidationError("alpha must be nonnegative")
    partial = np.cumsum(sigma ** (-alpha))
    n = np.arange(1, N + 1)
    logs = np.log(sigma)
    if N >= 2:
        slope, icpt = np.polyfit(n, logs, 1)
        resid = float(np.max(np.abs(logs - (slope * n + icpt))))
    else:
        slope, resid = float(logs[0]), 0.0
    return SummabilityReport(sigma, float(slope), resid, alpha, partial, mu, trend_label(partial), convention)
