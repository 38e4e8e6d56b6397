"""Forward orbits, omega-limit estimates, cycles and the semi-hyperbolicity verdict.

Every verdict produced here is numerical evidence from finite orbits, never
a proof: recurrence of a critical point is judged from its distance to a
sampled limit set, and parabolic cycles are recognised only at periods up
to `MAX_NEWTON_PERIOD` (or when a critical orbit converges to them).
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.spatial import cKDTree

from .errors import ValidationError
from .ratmap import (
    chart_of,
    critical_points,
    evaluate,
    orbit_with_derivative,
    to_chart,
    from_chart,
)
from .sphere import INF, chordal_distance, is_inf, spherical_derivative_factor, to_sphere

MAX_ORBIT = 100_000
MAX_NEWTON_PERIOD = 6
MAX_CRITICAL_PERIOD = 64
RHO_REC = 1e-3
RECURRENT_CERTAIN = 1e-6
CONVERGENCE_RADIUS = 1e-6
OMEGA_MERGE = 1e-6

SUPERATTRACTING = "superattracting"
ATTRACTING = "attracting"
REPELLING = "repelling"
PARABOLIC = "parabolic_suspect"
NEUTRAL = "neutral_irrational_suspect"


@dataclass
class OrbitRecord:
    points: list
    deriv_products: np.ndarray


@dataclass
class CycleInfo:
    points: list
    period: int
    multiplier: float
    kind: str
    multiplier_complex: complex = 0j

    @property
    def attracting(self):
        return self.kind in (SUPERATTRACTING, ATTRACTING)

    def contains(self, z, tol=1e-8):
        return min(chordal_distance(z, p) for p in self.points) <= tol

    def to_dict(self):
        return {
            "points": [_point_json(p) for p in self.points],
            "period": self.period,
            "multiplier": self.multiplier,
            "class": self.kind,
        }


@dataclass
class CriticalEvidence:
    point: complex
    multiplicity: int
    in_julia: bool
    recurrence_distance: float = None
    attracted_cycle: CycleInfo = None
    omega: list = field(default_factory=list)

    def to_dict(self):
        return {
            "point": _point_json(self.point),
            "multiplicity": self.multiplicity,
            "in_julia": self.in_julia,
            "recurrence_distance": self.recurrence_distance,
            "omega": [_point_json(w) for w in self.omega],
            "attracted_cycle": None if self.attracted_cycle is None else self.attracted_cycle.to_dict(),
        }


@dataclass
class SemiHypVerdict:
    verdict: str
    evidence: list
    parabolic_found: bool
    rho_rec: float = RHO_REC
    note: str = "numerical evidence from finite orbits, not a proof"

    @property
    def julia_critical(self):
        return [e for e in self.evidence if e.in_julia]

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "parabolic_found": self.parabolic_found,
            "rho_rec": self.rho_rec,
            "evidence": [e.to_dict() for e in self.evidence],
            "note": self.note,
        }


def _point_json(z):
    if is_inf(z):
        return "inf"
    return [float(z.real), float(z.imag)]


# --------------------------------------------------------------------------


def forward_orbit(f, z, n, max_length=MAX_ORBIT):
    """z, f(z), ..., f^n(z) with cumulative spherical derivatives |(f^k)'(z)|."""
    if n < 0 or n > max_length:
        raise ValidationError(f"orbit length must lie in [0, {max_length}]")
    pts = [complex(z)]
    prods = np.empty(n)
    acc = 1.0
    for k in range(n):
        acc *= spherical_derivative_factor(f, pts[-1])
        prods[k] = acc
        pts.append(evaluate(f, pts[-1]))
    return OrbitRecord(pts, prods)


def _iterate(f, z, n):
    pts = [complex(z)]
    for _ in range(n):
        pts.append(evaluate(f, pts[-1]))
    return pts


def cluster_points(points, radius=OMEGA_MERGE):
    """Greedy chordal clustering; returns one representative per cluster.

    Points are visited in order and each unassigned point absorbs every
    unassigned point within `radius` of it, so the result is deterministic.
    """
    pts = np.asarray(points, complex)
    if len(pts) == 0:
        return []
    tree = cKDTree(to_sphere(pts))
    taken = np.zeros(len(pts), bool)
    reps = []
    for i in range(len(pts)):
        if taken[i]:
            continue
        reps.append(complex(pts[i]))
        taken[tree.query_ball_point(to_sphere(pts[i]), radius)] = True
    return reps


def omega_limit_estimate(f, x, burn_in=1000, sample=10_000):
    """Clustered sample {f^k(x) : burn_in < k <= burn_in + sample}."""
    if burn_in < 0 or sample < 1 or burn_in + sample > MAX_ORBIT:
        raise ValidationError("burn_in + sample exceeds the orbit limit")
    pts = _iterate(f, x, burn_in + sample)
    return cluster_points(pts[burn_in + 1 :])


# --------------------------------------------------------------------------
# cycles


def classify_multiplier(m):
    a = abs(m)
    if a < 1e-8:
        return SUPERATTRACTING
    if a < 1 - 1e-3:
        return ATTRACTING
    if a > 1 + 1e-3:
        return REPELLING
    ang = cmath.phase(m)
    for q in range(1, 13):
        for p in range(-q, q + 1):
            if abs(ang - 2 * math.pi * p / q) <= 1e-3:
                return PARABOLIC
    return NEUTRAL


def _cycle_from_point(f, z, period):
    pts = _iterate(f, z, period - 1)
    inv = chart_of(z)
    _, m, _, _ = orbit_with_derivative(f, z, period, target_inv=inv)
    if not cmath.isfinite(m):
        # a cycle through a pole of the chart: fall back to spherical factors
        m = complex(np.prod([spherical_derivative_factor(f, p) for p in pts]))
    order = sorted(range(period), key=lambda i: _sort_key(pts[i]))
    start = order[0]
    pts = pts[start:] + pts[:start]
    return CycleInfo(pts, period, float(abs(m)), classify_multiplier(m), complex(m))


def _sort_key(z):
    if is_inf(z):
        return (1, 0.0, 0.0)
    return (0, round(z.real, 9), round(z.imag, 9))


def _minimal_period(f, z, max_period, tol=1e-8):
    w = z
    for k in range(1, max_period + 1):
        w = evaluate(f, w)
        if chordal_distance(w, z) <= tol:
            return k
    return None


def _newton_periodic(f, z, k, iters=200):
    """Refine a period-k point by Newton on f^k(u) - u in the chart of z."""
    inv = chart_of(z)
    u = to_chart(z, inv)
    for _ in range(iters):
        w, dw, _, _ = orbit_with_derivative(f, from_chart(u, inv), k, target_inv=inv)
        if not cmath.isfinite(dw):
            return None
        F = to_chart(w, inv) - u
        if not cmath.isfinite(F) or dw == 1:
            return None
        step = F / (dw - 1)
        u = u - step
        if abs(step) <= 1e-15 * (1 + abs(u)):
            break
    z = from_chart(u, inv)
    if chordal_distance(_iterate(f, z, k)[-1], z) > 1e-8:
        return None
    return z


def _local_array(f, u, src_inv, dst_inv):
    P = np.empty_like(u)
    Q = np.empty_like(u)
    dP = np.empty_like(u)
    dQ = np.empty_like(u)
    for mask, p, q in ((~src_inv, f.p, f.q), (src_inv, f.p[::-1], f.q[::-1])):
        if not mask.any():
            continue
        uu = u[mask]
        P[mask] = npoly.polyval(uu, p)
        Q[mask] = npoly.polyval(uu, q)
        dP[mask] = npoly.polyval(uu, npoly.polyder(p))
        dQ[mask] = npoly.polyval(uu, npoly.polyder(q))
    P, Q = np.where(dst_inv, Q, P), np.where(dst_inv, P, Q)
    dP, dQ = np.where(dst_inv, dQ, dP), np.where(dst_inv, dP, dQ)
    with np.errstate(all="ignore"):
        return P / Q, (dP * Q - P * dQ) / (Q * Q)


def periodic_points_newton(f, k):
    """Period-k points (k <= 6) found by Newton from seeds covering both charts."""
    g = np.linspace(-2.4, 2.4, 25)
    std = (g[None, :] + 1j * g[:, None]).ravel()
    h = np.linspace(-0.95, 0.95, 13)
    inv = (h[None, :] + 1j * h[:, None]).ravel()
    inv = inv[np.abs(inv) < 1]
    u0 = np.concatenate([std, inv]).astype(complex)
    seed_inv = np.concatenate([np.zeros(len(std), bool), np.ones(len(inv), bool)])
    u, flags = _newton_vectorized(f, k, u0, seed_inv)
    out = []
    for ui, ii in zip(u, flags):
        z = from_chart(complex(ui), bool(ii))
        if chordal_distance(_iterate(f, z, k)[-1], z) <= 1e-9:
            out.append(z)
    return cluster_points(out, 1e-7)


def _newton_vectorized(f, k, u, seed_inv, iters=80):
    alive = np.ones(len(u), bool)
    with np.errstate(all="ignore"):
        for _ in range(iters):
            v = u.copy()
            cur = seed_inv.copy()
            deriv = np.ones_like(u)
            for j in range(k):
                if j == k - 1:
                    tgt = seed_inv
                else:
                    w_std, _ = _local_array(f, v, cur, np.zeros(len(v), bool))
                    tgt = ~(np.abs(w_std) <= 1)
                v, dv = _local_array(f, v, cur, tgt)
                deriv = deriv * dv
                cur = tgt
            step = (v - u) / (deriv - 1)
            ok = np.isfinite(step)
            alive &= ok
            u = np.where(ok, u - step, u)
            if np.all(~alive | (np.abs(step) <= 1e-14 * (1 + np.abs(u)))):
                break
    keep = alive & np.isfinite(u)
    return u[keep], seed_inv[keep]


def _critical_tail(f, c, steps, tol=CONVERGENCE_RADIUS):
    """Iterate a critical orbit; return (points, candidate period or None)."""
    pts = [complex(c)]
    z = complex(c)
    for n in range(1, steps + 1):
        z = evaluate(f, z)
        pts.append(z)
        if n % 25 == 0 or n == steps:
            for k in range(1, min(MAX_CRITICAL_PERIOD, n) + 1):
                if chordal_distance(pts[-1], pts[-1 - k]) < tol:
                    return pts, k
    return pts, None


def detect_cycles(f, max_period=MAX_NEWTON_PERIOD, critical_steps=20_000):
    """Attracting cycles from critical orbits plus all low-period cycles
    found by Newton from seeds; deduplicated and sorted by period."""
    found = []

    def add(cyc):
        for other in found:
            if other.period == cyc.period and other.contains(cyc.points[0]):
                return other
        found.append(cyc)
        return cyc

    for cp in critical_points(f):
        pts, k = _critical_tail(f, cp.location, critical_steps)
        if k is None:
            continue
        z = _newton_periodic(f, pts[-1], k)
        if z is None:
            continue
        kk = _minimal_period(f, z, k)
        if kk is not None:
            add(_cycle_from_point(f, z, kk))
    for k in range(1, max_period + 1):
        for z in periodic_points_newton(f, k):
            kk = _minimal_period(f, z, k)
            if kk == k:
                add(_cycle_from_point(f, z, k))
    found.sort(key=lambda c: (c.period, _sort_key(c.points[0])))
    return found


def critical_fate(f, c, cycles, steps):
    """Orbit of c and the attracting (or parabolic) cycle it converges to."""
    pts = _iterate(f, c, steps)
    tail = pts[-1]
    for cyc in cycles:
        if cyc.kind in (SUPERATTRACTING, ATTRACTING, PARABOLIC):
            if cyc.contains(tail, CONVERGENCE_RADIUS) or (
                cyc.kind == PARABOLIC and cyc.contains(tail, 1e-2) and _approaches(pts, cyc)
            ):
                return pts, cyc
    return pts, None


def _approaches(pts, cyc):
    d = [min(chordal_distance(p, q) for q in cyc.points) for p in pts[-200::cyc.period]]
    return all(b <= a + 1e-15 for a, b in zip(d, d[1:]))


def semi_hyperbolicity_verdict(f, cycles=None, rho_rec=RHO_REC, burn_in=1000, sample=10_000):
    """Three-way semi-hyperbolicity verdict with per-critical-point evidence."""
    if cycles is None:
        cycles = detect_cycles(f)
    parabolic = any(c.kind == PARABOLIC for c in cycles)
    evidence = []
    for cp in critical_points(f):
        pts, cyc = critical_fate(f, cp.location, cycles, burn_in + sample)
        if cyc is not None:
            evidence.append(CriticalEvidence(cp.location, cp.multiplicity, False, None, cyc))
            continue
        omega = cluster_points(pts[burn_in + 1 :])
        rec = float(np.min(chordal_distance(cp.location, np.asarray(omega))))
        evidence.append(CriticalEvidence(cp.location, cp.multiplicity, True, rec, None, omega))
    rec = [e.recurrence_distance for e in evidence if e.in_julia]
    if parabolic:
        verdict = "not_semi_hyperbolic"
    elif all(r > rho_rec for r in rec):
        verdict = "semi_hyperbolic"
    elif any(r <= RECURRENT_CERTAIN for r in rec):
        verdict = "not_semi_hyperbolic"
    else:
        verdict = "inconclusive"
    return SemiHypVerdict(verdict, evidence, parabolic, rho_rec)
