"""Branch-tracked inverse iteration: path lifting, pullbacks of chordal balls,
and the shrinking experiments.

All lifting goes through one predictor-corrector tracker.  To move a lift
point w from base parameter a to b the tracker runs Newton on
f^n(w) = gamma(b) seeded at w; the first Newton step is the predictor.  The
step is accepted only when every later (corrector) step is at most a quarter
of the previous one, which keeps the iteration inside the basin of the
branch being followed.  Otherwise the parameter interval is bisected.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import CriticalValueOnPath, InsufficientData, LiftDiverged, NumericalError, ValidationError
from .ratmap import (
    chart_of,
    critical_points,
    evaluate,
    from_chart,
    orbit_with_derivative,
    preimage_points,
    to_chart,
)
from .sphere import (
    chordal_distance,
    chordal_radius_to_chart,
    is_inf,
    rotation_from,
    rotation_to,
    to_sphere,
)

M_CV = 1e-5
MAX_DEPTH = 24
CONTRACTION = 0.25
NEWTON_ITERS = 12
INITIAL_POINTS = 256
REFINE_FRACTION = 64
RETRY_ATTEMPTS = 5
RESIDUAL_FLOOR = 64 * 2.0**-52


@dataclass
class Polyline:
    """Sequence of sphere points; `closed` joins the last point to the first."""

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        if len(self.points) < 2:
            raise ValidationError("a polyline needs at least two points")

    def segments(self):
        p = self.points
        if self.closed:
            return list(zip(p, np.roll(p, -1)))
        return list(zip(p[:-1], p[1:]))

    def length(self):
        return float(sum(chordal_distance(a, b) for a, b in self.segments()))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("re,im\n")
            for z in self.points:
                fh.write("inf,inf\n" if is_inf(z) else f"{z.real!r},{z.imag!r}\n")


@dataclass
class PullbackComponent:
    base_center: complex
    base_radius: float
    depth: int
    boundary: Polyline
    diameter: float
    covering_degree: int
    seed_point: complex = 0j
    roundtrip_error: float = 0.0
    requested_radius: float = 0.0

    def to_dict(self):
        return {
            "base_radius": self.base_radius,
            "depth": self.depth,
            "diameter": self.diameter,
            "covering_degree": self.covering_degree,
            "boundary_points": len(self.boundary.points),
            "roundtrip_error": self.roundtrip_error,
        }


@dataclass
class ShrinkReport:
    radius: float
    depths: list
    max_diameter: list
    fitted_lambda: float
    omega: list
    partial_sums: list
    verdict: str
    fit_window: tuple = (1, 1)
    skipped: int = 0
    attempted: int = 0
    max_covering_degree: int = 1
    max_roundtrip_error: float = 0.0
    components: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "radius": self.radius,
            "depths": list(self.depths),
            "max_diameter": list(self.max_diameter),
            "fitted_lambda": self.fitted_lambda,
            "fit_window": list(self.fit_window),
            "omega": list(self.omega),
            "partial_sums": list(self.partial_sums),
            "verdict": self.verdict,
            "skipped": self.skipped,
            "attempted": self.attempted,
            "max_covering_degree": self.max_covering_degree,
            "max_roundtrip_error": self.max_roundtrip_error,
        }


# --------------------------------------------------------------------------
# the tracker


def _newton(f, n, w, target):
    """Newton for f^n(x) = target from x = w in chart coordinates.

    Returns (x, accepted).  Acceptance requires contraction by CONTRACTION
    at every step after the first and convergence within NEWTON_ITERS.
    """
    inv = chart_of(w)
    u = to_chart(w, inv)
    tinv = chart_of(target)
    T = to_chart(target, tinv)
    prev = None
    for _ in range(NEWTON_ITERS):
        x = from_chart(u, inv)
        wn, d, src, _ = orbit_with_derivative(f, x, n, target_inv=tinv)
        if src != inv:
            inv = src
            u = to_chart(x, inv)
        if not cmath.isfinite(d) or d == 0:
            return x, False
        F = to_chart(wn, tinv) - T
        if abs(F) <= RESIDUAL_FLOOR * (1 + abs(T) + abs(d) * (1 + abs(u))):
            # residual at rounding level; further steps would only be noise
            return from_chart(u - F / d, inv), True
        step = F / d
        a = abs(step)
        if not math.isfinite(a):
            return x, False
        if prev is not None and a > CONTRACTION * prev:
            return x, False
        u = u - step
        if a <= 4e-16 * (1 + abs(u)):
            return from_chart(u, inv), True
        prev = a
    return from_chart(u, inv), False


def _track(f, n, gamma, ts, w0):
    """Lift points of the base curve gamma(t) for t in ts, starting at w0."""
    out = [w0]
    w = w0
    for a, b in zip(ts[:-1], ts[1:]):
        t = a
        pending = [b]
        while pending:
            s = pending[-1]
            x, ok = _newton(f, n, w, gamma(s))
            if ok:
                w, t = x, s
                pending.pop()
            else:
                if len(pending) > MAX_DEPTH:
                    raise LiftDiverged(f"bisection depth exceeded {MAX_DEPTH} near t = {t}")
                pending.append(0.5 * (t + s))
        out.append(w)
    return out


def _iterate(f, z, n):
    for _ in range(n):
        z = evaluate(f, z)
    return z


def critical_values(f, n=1):
    """Critical values of f^n: f^j(c) for critical points c and j = 1..n."""
    out = []
    for cp in critical_points(f):
        z = cp.location
        for _ in range(n):
            z = evaluate(f, z)
            out.append(z)
    return out


def _segment_distance(a, b, c):
    """Chordal distance from c to the chart segment [a, b] (chart of a)."""
    inv = chart_of(a)
    ua, ub, uc = to_chart(a, inv), to_chart(b, inv), to_chart(c, inv)
    if is_inf(ub):
        return 0.0 if is_inf(uc) else min(chordal_distance(a, c), chordal_distance(b, c))
    ends = min(chordal_distance(a, c), chordal_distance(b, c))
    if is_inf(uc):
        return ends
    v = ub - ua
    if v == 0:
        return ends
    t = min(1.0, max(0.0, ((uc - ua) * v.conjugate()).real / abs(v) ** 2))
    return min(ends, chordal_distance(from_chart(ua + t * v, inv), c))


def _chart_line(a, b):
    inv = chart_of(a)
    ua, ub = to_chart(a, inv), to_chart(b, inv)
    return lambda t: from_chart(ua + t * (ub - ua), inv)


def lift_path(f, gamma, w0, m_cv=M_CV):
    """Continuous lift of `gamma` through f^-1 starting at w0.

    Segments are straight in the chart of their first point.  For a closed
    gamma the closing segment is lifted too; if the lift returns to w0 the
    result is closed, otherwise (nontrivial monodromy) it is returned open
    with the endpoint of the lifted closing segment appended.
    """
    g0 = gamma.points[0]
    if chordal_distance(evaluate(f, w0), g0) > 1e-8:
        raise ValidationError("w0 is not a preimage of the first path point")
    cvs = critical_values(f)
    segs = gamma.segments()
    for a, b in segs:
        for c in cvs:
            if _segment_distance(a, b, c) < m_cv:
                raise CriticalValueOnPath(f"path passes within {m_cv} of critical value {c}")
    pts = [complex(w0)]
    for a, b in segs:
        pts.append(_track(f, 1, _chart_line(a, b), [0.0, 1.0], pts[-1])[-1])
    if gamma.closed:
        end = pts.pop()
        if chordal_distance(end, pts[0]) <= 1e-9:
            return Polyline(pts, closed=True)
        return Polyline(pts + [end], closed=False)
    return Polyline(pts, closed=False)


# --------------------------------------------------------------------------
# pullbacks of balls


def max_pairwise_distance(points, chunk=2048):
    """Exact max pairwise chordal distance, chunked."""
    X = to_sphere(np.asarray(points, complex))
    best = 0.0
    for i in range(0, len(X), chunk):
        best = max(best, float(cdist(X[i : i + chunk], X).max()))
    return min(best, 2.0)


def _ball_component(f, z, r, n, w, m_cv, initial_points, refine):
    for c in critical_values(f, n):
        if abs(chordal_distance(c, z) - r) < m_cv:
            raise CriticalValueOnPath(f"critical value {c} within {m_cv} of the circle")
    if chordal_distance(_iterate(f, w, n), z) >= r:
        raise ValidationError("f^n(w) does not lie in the base ball")
    w = _regular_seed(f, z, r, n, complex(w))
    rot, unrot = rotation_to(z), rotation_from(z)
    rho = chordal_radius_to_chart(r)
    zeta0 = complex(unrot(_iterate(f, w, n)))
    theta0 = cmath.phase(zeta0) if abs(zeta0) > 1e-12 * rho else 0.0
    inner = [complex(unrot(c)) for c in critical_values(f, n) if chordal_distance(c, z) < r]
    _, dw, _, _ = orbit_with_derivative(f, complex(w), n)
    if cmath.isfinite(dw) and abs(dw) > 0:
        # w is regular for f^n: a critical value sitting at the spoke's start
        # belongs to other branches
        inner = [c for c in inner if abs(c - zeta0) > m_cv]
    theta = theta0
    for k in [0] + [s * j for j in range(1, 33) for s in (1, -1)]:
        theta = theta0 + k * 2 * math.pi / 64
        end = rho * cmath.exp(1j * theta)
        if all(_plane_segment_distance(zeta0, end, c) > m_cv for c in inner):
            break
    else:
        raise CriticalValueOnPath("no spoke avoids the critical values inside the ball")
    end = rho * cmath.exp(1j * theta)
    spoke = lambda t: complex(rot(zeta0 + t * (end - zeta0)))
    start = _track(f, n, spoke, list(np.linspace(0, 1, 9)), complex(w))[-1]

    circle = lambda s: complex(rot(rho * cmath.exp(1j * (theta + s))))
    M = initial_points
    step = 2 * math.pi / M
    pts, params = [start], [0.0]
    max_circuits = min(f.degree**n, 256)
    degree = None
    for k in range(1, max_circuits + 1):
        ts = list((k - 1) * 2 * math.pi + step * np.arange(M + 1))
        lifted = _track(f, n, circle, ts, pts[-1])
        gaps = [chordal_distance(a, b) for a, b in zip(lifted[:-1], lifted[1:])]
        tol = max(1e-13, 1e-4 * min(g for g in gaps if g > 0)) if any(gaps) else 1e-13
        pts.extend(lifted[1:])
        params.extend(ts[1:])
        if chordal_distance(pts[-1], start) <= tol:
            degree = k
            break
    if degree is None:
        raise LiftDiverged("lifted circle did not close within the degree bound")
    pts.pop()
    params.pop()
    pts, params = _refine(f, n, circle, pts, params, 2 * math.pi * degree, refine)
    base = [circle(s) for s in params]
    err = max(chordal_distance(_iterate(f, p, n), b) for p, b in zip(pts, base))
    return PullbackComponent(
        z, r, n, Polyline(pts, closed=True), max_pairwise_distance(pts), degree, complex(w), float(err)
    )


def _near_critical_chain(f, w, n, crit, tol=1e-7):
    x = w
    for _ in range(n):
        if any(chordal_distance(x, c) < tol for c in crit):
            return True
        x = evaluate(f, x)
    return False


def _regular_seed(f, z, r, n, w):
    """w itself, or a nearby point of the same component when the orbit of
    w meets a critical point before time n (the spoke cannot start at a
    critical point of f^n)."""
    crit = [cp.location for cp in critical_points(f)]
    if not _near_critical_chain(f, w, n, crit):
        return w
    inv = chart_of(w)
    u = to_chart(w, inv)
    for eps in 10.0 ** -np.arange(3, 13):
        x = from_chart(u + eps * cmath.exp(0.5j), inv)
        if chordal_distance(_iterate(f, x, n), z) < 0.5 * r and not _near_critical_chain(f, x, n, crit):
            return x
    raise CriticalValueOnPath("seed point is critical for f^n and has no usable neighbour")


def _plane_segment_distance(a, b, c):
    v = b - a
    t = 0.0 if v == 0 else min(1.0, max(0.0, ((c - a) * v.conjugate()).real / abs(v) ** 2))
    return abs(a + t * v - c)


def _refine(f, n, circle, pts, params, period, refine, passes=4):
    """Insert lifted points where consecutive boundary points are farther
    apart than diameter / refine."""
    for _ in range(passes):
        target = max_pairwise_distance(pts) / refine
        new_pts, new_params, changed = [], [], False
        m = len(pts)
        for i in range(m):
            a, b = pts[i], pts[(i + 1) % m]
            sa = params[i]
            sb = params[i + 1] if i + 1 < m else period
            new_pts.append(a)
            new_params.append(sa)
            gap = chordal_distance(a, b)
            if gap > target:
                k = min(int(math.ceil(gap / target)), 64)
                ts = list(np.linspace(sa, sb, k + 1))
                lifted = _track(f, n, circle, ts, a)
                new_pts.extend(lifted[1:-1])
                new_params.extend(ts[1:-1])
                changed = True
        pts, params = new_pts, new_params
        if not changed:
            break
    return pts, params


def ball_component(
    f,
    z,
    r,
    n,
    w,
    m_cv=M_CV,
    initial_points=INITIAL_POINTS,
    refine=REFINE_FRACTION,
    attempts=RETRY_ATTEMPTS,
):
    """The component of f^-n(B(z, r)) containing w, by lifting the circle.

    The circle is lifted through f^n directly (Newton on f^n with chart
    derivatives), which is the composite of the step-by-step lifts; the
    number of base circuits needed to close up is the covering degree of
    f^n on the component.  When a critical value of some f^k, k <= n, lies
    within m_cv of the circle, the radius is perturbed to r(1 +- 1e-3),
    r(1 +- 2e-3), ... for up to `attempts` radii in total.
    """
    if not 0 < r < 2:
        raise ValidationError("radius must lie in (0, 2)")
    if n < 0 or int(n) != n:
        raise ValidationError("depth must be a nonnegative integer")
    radii = [r]
    k = 1
    while len(radii) < attempts:
        radii.extend([r * (1 + k * 1e-3), r * (1 - k * 1e-3)])
        k += 1
    last = None
    for rr in radii[:attempts]:
        try:
            comp = _ball_component(f, z, rr, int(n), w, m_cv, initial_points, refine)
            comp.requested_radius = r
            return comp
        except CriticalValueOnPath as exc:
            last = exc
        except ValidationError as exc:
            if rr == r:
                raise
            last = exc
    raise CriticalValueOnPath(f"all {attempts} radii failed: {last}")


# --------------------------------------------------------------------------
# experiments


def random_preimage_chain(f, z, n, rng):
    """w with f^n(w) = z, by n uniformly random preimage choices."""
    w = z
    for _ in range(n):
        pre = preimage_points(f, w)
        w = pre[rng.integers(len(pre))]
    return w


def nearest_preimage_chain(f, z, n):
    """w with f^n(w) = z, always taking the preimage nearest the previous point."""
    w = z
    for _ in range(n):
        pre = preimage_points(f, w)
        w = min(pre, key=lambda p: chordal_distance(p, w))
    return w


def fit_lambda(depths, diameters, tol=0.1, min_points=3):
    """lambda-hat = exp(-slope) of log diameter against depth.

    The fit uses the longest suffix of depths whose least-squares line has
    every residual below `tol`; with no such suffix, the last `min_points`.
    Returns (lambda_hat, (first_depth, last_depth)).
    """
    x = np.asarray(depths, float)
    y = np.log(np.asarray(diameters, float))
    m = len(x)
    if m < 2:
        return 1.0, (int(x[0]), int(x[-1]))
    k = min(min_points, m)
    chosen = m - k
    for start in range(0, m - k + 1):
        coef = np.polyfit(x[start:], y[start:], 1)
        if np.max(np.abs(np.polyval(coef, x[start:]) - y[start:])) < tol:
            chosen = start
            break
    slope = np.polyfit(x[chosen:], y[chosen:], 1)[0]
    return float(math.exp(-slope)), (int(x[chosen]), int(x[-1]))


def shrink_verdict(lam, diameters):
    if lam >= 1.05:
        return "expshrink_consistent"
    if diameters[-1] > 0.5 * diameters[0]:
        return "shrinking_fails"
    return "sumshrink_only_consistent"


def shrink_experiment(f, sample, r, n_max, per_depth_samples=8, seed=0, bases=None, nearest_branch=True):
    """Maximal pullback diameters by depth, lambda-hat fit and verdict.

    Bases are drawn from the Julia sample (or given).  At every depth each
    base gets one random preimage chain (seeded) and, with
    `nearest_branch`, the chain that keeps to the preimage nearest the base,
    which follows the slowest-shrinking branch near a fixed point.
    """
    if not 0 < r < 0.5:
        raise ValidationError("shrink radius must lie in (0, 0.5)")
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    rng = np.random.default_rng(seed)
    if bases is None:
        pts = np.asarray(sample.points)
        if len(pts) == 0:
            raise ValidationError("empty Julia sample")
        idx = rng.choice(len(pts), size=min(per_depth_samples, len(pts)), replace=False)
        bases = [complex(pts[i]) for i in sorted(idx)]
    depths = list(range(1, n_max + 1))
    maxima, comps = [], []
    skipped = attempted = 0
    for n in depths:
        best = 0.0
        for z in bases:
            ws = [random_preimage_chain(f, z, n, rng)]
            if nearest_branch:
                ws.append(nearest_preimage_chain(f, z, n))
            for w in ws:
                attempted += 1
                try:
                    comp = ball_component(f, z, r, n, w)
                except NumericalError:
                    skipped += 1
                    continue
                comps.append(comp)
                best = max(best, comp.diameter)
        maxima.append(best)
    if skipped > 0.5 * attempted or min(maxima) <= 0:
        raise InsufficientData(f"{skipped} of {attempted} pullbacks failed")
    lam, window = fit_lambda(depths, maxima)
    return ShrinkReport(
        radius=r,
        depths=depths,
        max_diameter=maxima,
        fitted_lambda=lam,
        omega=list(maxima),
        partial_sums=list(np.cumsum(maxima)),
        verdict=shrink_verdict(lam, maxima),
        fit_window=window,
        skipped=skipped,
        attempted=attempted,
        max_covering_degree=max(c.covering_degree for c in comps),
        max_roundtrip_error=max(c.roundtrip_error / c.base_radius for c in comps),
        components=comps,
    )


def julia_points_near(f, sample, target, radius, count, max_steps=2000):
    """Julia points within `radius` of `target`, by pulling sample points
    along the preimage branch nearest `target` until they arrive."""
    out = []
    for z in sample.points:
        w = complex(z)
        for _ in range(max_steps):
            if chordal_distance(w, target) < radius:
                break
            w = min(preimage_points(f, w), key=lambda p: chordal_distance(p, target))
        if chordal_distance(w, target) < radius:
            out.append(w)
        if len(out) >= count:
            break
    return out


@dataclass
class ModCase:
    z: complex
    R: float
    r: float
    n: int
    w: complex
    ratio: float = None
    mu: int = None
    note: str = ""


def mod_bound_ratio(f, z, R, r, n, w):
    """(diam W' / diam W) / (64 (r/R)^(1/mu)), mu the covering degree of W."""
    if not 0 < r <= R:
        raise ValidationError("need 0 < r <= R")
    outer = ball_component(f, z, R, n, w)
    inner = outer if r == R else ball_component(f, z, r, n, w)
    mu = outer.covering_degree
    return (inner.diameter / outer.diameter) / (64 * (r / R) ** (1 / mu)), mu, outer.diameter


def mod_bound_check(f, cases):
    """Largest ratio over the cases; cases violating diam W < 1 are skipped
    (outside the bound's hypotheses) and marked."""
    best = 0.0
    for case in cases:
        ratio, mu, dw = mod_bound_ratio(f, case.z, case.R, case.r, case.n, case.w)
        case.mu = mu
        if dw >= 1:
            case.note = "diam W >= 1, outside hypotheses"
            continue
        case.ratio = ratio
        best = max(best, ratio)
    return best


def random_mod_cases(f, sample, count, seed, n_max=5, R_range=(0.05, 0.6)):
    """Random (z, R, r, n, w) with z from the sample and r < R < 1."""
    rng = np.random.default_rng(seed)
    pts = np.asarray(sample.points)
    out = []
    for _ in range(count):
        z = complex(pts[rng.integers(len(pts))])
        R = float(rng.uniform(*R_range))
        r = float(R * rng.uniform(0.02, 1.0))
        n = int(rng.integers(1, n_max + 1))
        w = random_preimage_chain(f, z, n, rng)
        out.append(ModCase(z, R, r, n, w))
    return out
