"""Quasi-hyperbolic geometry on grid fields and the regularity verdicts:
John-constant estimates, the Hölder regression, and crosscut continua for
local connectivity.

Throughout, delta is the sampled distance-to-Julia field delta-hat of
`grid.distance_field`, never an exact boundary distance; every estimate is
therefore qualified by grid resolution and sample density.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import (
    ComponentUnresolved,
    DegenerateEndpoints,
    Disconnected,
    InsufficientData,
    LiftDiverged,
    NoAttractor,
    NumericalError,
    PathTouchesBoundary,
    ValidationError,
)
from .pullback import Polyline, _track, max_pairwise_distance
from .ratmap import chart_of, evaluate, from_chart, to_chart
from .sphere import (
    chordal_distance,
    chordal_radius_to_chart,
    rotation_from,
    rotation_to,
    to_sphere,
)

# 8-neighbour offsets in row-major order (the tie-break order)
OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
SUBDIVIDE = 0.2
NEAR_DECILE_SHARE = 0.7
SLOPE_MAX = 5.0
JULIA_NEAR_CELLS = 1.5
MAX_LIFT_DEPTH = 60
MIN_POINTS = 10


@dataclass
class JohnReport:
    component_id: int
    base_point: complex
    samples: int
    epsilon_hat: float
    path_builder: str
    worst_witness: tuple
    builder_counts: dict = dc_field(default_factory=dict)
    failures: int = 0
    paths: list = dc_field(default_factory=list, repr=False)

    def to_dict(self):
        z1, z, ratio = self.worst_witness
        return {
            "component_id": self.component_id,
            "base_point": _pt(self.base_point),
            "samples": self.samples,
            "epsilon_hat": self.epsilon_hat,
            "path_builder": self.path_builder,
            "worst_witness": {"z1": _pt(z1), "z": _pt(z), "ratio": ratio},
            "builder_counts": dict(sorted(self.builder_counts.items())),
            "failures": self.failures,
        }


@dataclass
class HolderReport:
    component_id: int
    base_point: complex
    slope: float
    intercept: float
    max_residual: float
    iqr: float
    points_used: int
    verdict: str
    entry_slope: float = float("nan")
    entry_intercept: float = float("nan")
    slope_max: float = SLOPE_MAX

    def to_dict(self):
        return {
            "component_id": self.component_id,
            "base_point": _pt(self.base_point),
            "slope": self.slope,
            "intercept": self.intercept,
            "max_residual": self.max_residual,
            "iqr": self.iqr,
            "points_used": self.points_used,
            "verdict": self.verdict,
            "slope_max": self.slope_max,
            "entry_time_slope": self.entry_slope,
            "entry_time_intercept": self.entry_intercept,
        }


@dataclass
class Crossing:
    component_id: int
    interval_diameter: float
    continuum_diameter: float
    cells: int


@dataclass
class ContinuumReport:
    a: complex
    b: complex
    theta: float
    continuum_points: np.ndarray
    continuum_diameter: float
    ratio: float
    crossings: int
    details: list = dc_field(default_factory=list)

    def to_dict(self):
        return {
            "a": _pt(self.a),
            "b": _pt(self.b),
            "theta": self.theta,
            "continuum_points": len(self.continuum_points),
            "continuum_diameter": self.continuum_diameter,
            "ratio": self.ratio,
            "crossings": self.crossings,
            "intervals": [
                {
                    "component_id": c.component_id,
                    "interval_diameter": c.interval_diameter,
                    "replacement_diameter": c.continuum_diameter,
                }
                for c in self.details
            ],
        }


def _pt(z):
    z = complex(z)
    if math.isinf(z.real) or math.isinf(z.imag):
        return "inf"
    return [z.real, z.imag]


# --------------------------------------------------------------------------
# quasi-hyperbolic length and distance


def qh_length(polyline, delta, min_delta=0.0):
    """Quasi-hyperbolic length sum |segment| / delta(midpoint).

    Each segment (straight in the chart of its first point) is subdivided
    into equal pieces until every piece is at most SUBDIVIDE times the
    smaller endpoint delta.  Segments are treated independently, so the
    length is additive over concatenation at shared vertices.
    """
    pts = np.asarray(polyline.points, complex)
    dv = np.asarray(delta(pts), float)
    if np.any(dv <= min_delta):
        raise PathTouchesBoundary("path vertex within one cell diagonal of the Julia sample")
    total = 0.0
    segs = list(zip(range(len(pts) - 1), range(1, len(pts))))
    if polyline.closed:
        segs.append((len(pts) - 1, 0))
    for i, j in segs:
        a, b = pts[i], pts[j]
        length = chordal_distance(a, b)
        if length == 0:
            continue
        m = max(1, int(math.ceil(length / (SUBDIVIDE * min(dv[i], dv[j])))))
        inv = chart_of(a)
        ua, ub = to_chart(a, inv), to_chart(b, inv)
        t = np.linspace(0, 1, m + 1)
        nodes = np.array([from_chart(ua + s * (ub - ua), inv) for s in t])
        mids = np.array([from_chart(ua + s * (ub - ua), inv) for s in 0.5 * (t[:-1] + t[1:])])
        pieces = chordal_distance(nodes[:-1], nodes[1:])
        total += float(np.sum(pieces / np.asarray(delta(mids), float)))
    return total


class ComponentGraph:
    """8-neighbour graph of one component with quasi-hyperbolic edge weights
    (chordal distance between centers over the smaller endpoint delta)."""

    def __init__(self, field, component):
        if field.delta_hat is None:
            raise ValidationError("distance_field has not been computed")
        self.field = field
        self.component = component
        self.mask = field.component_id == component
        if not self.mask.any():
            raise ValidationError(f"component {component} is empty")
        N = field.spec.resolution
        self.index = np.full((N, N), -1)
        cells = np.argwhere(self.mask)
        self.cells = cells
        self.index[self.mask] = np.arange(len(cells))
        self.points = field.spec.points()[self.mask]
        dh = field.delta_hat
        X = to_sphere(field.spec.points())
        rows, cols, w = [], [], []
        for di, dj in OFFSETS[4:]:  # each undirected edge once
            src, dst = _shifted(self.mask, di, dj)
            i0, j0 = src
            i1, j1 = dst
            ok = self.mask[i0, j0] & self.mask[i1, j1]
            i0, j0, i1, j1 = i0[ok], j0[ok], i1[ok], j1[ok]
            length = np.sqrt(((X[i0, j0] - X[i1, j1]) ** 2).sum(axis=-1))
            dmin = np.minimum(dh[i0, j0], dh[i1, j1])
            with np.errstate(divide="ignore"):
                weight = np.where(dmin > 0, length / dmin, np.inf)
            good = np.isfinite(weight)
            rows.append(self.index[i0, j0][good])
            cols.append(self.index[i1, j1][good])
            w.append(weight[good])
        rows, cols, w = map(np.concatenate, (rows, cols, w))
        n = len(cells)
        self.graph = sparse.coo_matrix((w, (rows, cols)), shape=(n, n)).tocsr()
        self._trees = {}

    def node(self, cell):
        k = int(self.index[tuple(cell)])
        if k < 0:
            raise ValidationError(f"cell {tuple(cell)} is not in component {self.component}")
        return k

    def tree(self, cell):
        """(distances, predecessors) of the shortest-path tree rooted at cell."""
        k = self.node(cell)
        if k not in self._trees:
            d, pred = dijkstra(self.graph, directed=False, indices=k, return_predecessors=True)
            self._trees[k] = (d, pred)
        return self._trees[k]

    def path_to_root(self, root, cell):
        """Cells from `cell` to `root` along the shortest-path tree."""
        d, pred = self.tree(root)
        k = self.node(cell)
        if not np.isfinite(d[k]):
            raise Disconnected("no grid path inside the component")
        out = [k]
        while pred[out[-1]] >= 0:
            out.append(int(pred[out[-1]]))
        return [tuple(self.cells[i]) for i in out]


def _shifted(mask, di, dj):
    """Index arrays of all (cell, cell + (di, dj)) pairs inside the grid."""
    N = mask.shape[0]
    i = np.arange(max(0, -di), min(N, N - di))
    j = np.arange(max(0, -dj), min(N, N - dj))
    I, J = np.meshgrid(i, j, indexing="ij")
    return (I.ravel(), J.ravel()), (I.ravel() + di, J.ravel() + dj)


def qh_distance(field, z, z0, graph=None):
    """Grid quasi-hyperbolic distance between cells z and z0 of one component."""
    comp = int(field.component_id[tuple(z)])
    if comp < 0 or comp != int(field.component_id[tuple(z0)]):
        raise Disconnected("cells are not in the same labeled component")
    graph = graph if graph is not None and graph.component == comp else ComponentGraph(field, comp)
    d, _ = graph.tree(z0)
    dist = d[graph.node(z)]
    if not np.isfinite(dist):
        raise Disconnected("no grid path inside the component")
    return float(dist)


# --------------------------------------------------------------------------
# John paths


def base_cell(field, component):
    """Cell of an attracting cycle point inside the component, else the
    delta-max cell (first in row-major order)."""
    for cyc in field.attractors:
        for p in cyc.points:
            cell = field.spec.cell_of(p)
            if cell is not None and field.component_id[cell] == component:
                return cell, complex(p), True
    d = np.where(field.component_id == component, field.delta_hat, -1.0)
    k = int(np.argmax(d))
    cell = divmod(k, field.spec.resolution)
    return cell, complex(field.spec.points()[cell]), False


def ascent_pointers(field, component):
    """For every cell, the 8-neighbour in the component with the largest
    delta-hat if it beats the cell's own (-1 otherwise), as a flat index.
    Ties go to the first neighbour in row-major order."""
    N = field.spec.resolution
    mask = field.component_id == component
    d = np.where(mask, field.delta_hat, -np.inf)
    pad = np.pad(d, 1, constant_values=-np.inf)
    stack = np.stack([pad[1 + di : 1 + di + N, 1 + dj : 1 + dj + N] for di, dj in OFFSETS])
    best = np.argmax(stack, axis=0)
    val = np.take_along_axis(stack, best[None], axis=0)[0]
    di = np.array([o[0] for o in OFFSETS])[best]
    dj = np.array([o[1] for o in OFFSETS])[best]
    I, J = np.indices((N, N))
    target = (I + di) * N + (J + dj)
    return np.where(mask & (val > d), target, -1)


def audit(z1, points, deltas):
    """Smallest delta(z) / d(z, z1) over path points z != z1 (capped at 1),
    with the point attaining it."""
    d = chordal_distance(np.asarray(points), z1)
    ok = d > 0
    if not ok.any():
        return 1.0, complex(z1)
    r = np.asarray(deltas)[ok] / d[ok]
    k = int(np.argmin(r))
    return float(min(1.0, r[k])), complex(np.asarray(points)[ok][k])


class JohnContext:
    """Per-component data shared by all John paths: graph, base, pointers,
    and the absorbing balls V used by the dynamic builder."""

    def __init__(self, f, field, component):
        self.f = f
        self.field = field
        self.component = component
        self.graph = ComponentGraph(field, component)
        self.base, self.base_point, self.has_attractor = base_cell(field, component)
        self.pointers = ascent_pointers(field, component)
        self.points = field.spec.points()
        self.balls = absorbing_balls(f, field.attractors)

    # builder (a)
    def ascent_path(self, cell):
        N = self.field.spec.resolution
        k = cell[0] * N + cell[1]
        cells = [cell]
        while self.pointers.flat[k] >= 0:
            k = int(self.pointers.flat[k])
            cells.append(divmod(k, N))
        tail = self.graph.path_to_root(self.base, cells[-1])
        return cells + tail[1:]

    def delta_ascent(self, cell):
        cells = self.ascent_path(cell)
        idx = tuple(np.array(cells).T)
        pts = self.points[idx]
        return pts, self.field.delta_hat[idx]

    # builder (b)
    def dynamic_lift(self, cell, arc_points=33):
        f = self.f
        z1 = complex(self.points[cell])
        if not self.balls:
            raise NoAttractor("no attracting cycle with a verified absorbing ball")
        y, k, p, rv = z1, 0, None, None
        while k <= MAX_LIFT_DEPTH:
            for q, r in self.balls:
                if chordal_distance(y, q) < r:
                    p, rv = q, r
                    break
            if p is not None:
                break
            y = evaluate(f, y)
            k += 1
        if p is None:
            raise LiftDiverged("orbit does not enter an absorbing ball in time")
        rot, unrot = rotation_to(p), rotation_from(p)
        zeta = complex(unrot(y))
        arc = lambda t: complex(rot(zeta * (1 - t)))
        ts = list(np.linspace(0.0, 0.999, arc_points))
        if k == 0:
            lifted = [arc(t) for t in ts]
        else:
            lifted = _track(f, k, arc, ts, z1)
        for z in lifted:
            c = self.field.spec.cell_of(z)
            if c is None or self.field.component_id[c] != self.component:
                raise LiftDiverged("lifted arc leaves the component's cells")
        end = self.field.spec.cell_of(lifted[-1])
        tail = self.graph.path_to_root(self.base, end)
        tail_idx = tuple(np.array(tail).T)
        pts = np.concatenate([np.array(lifted), self.points[tail_idx]])
        deltas = np.concatenate([self.field.delta_at(np.array(lifted)), self.field.delta_hat[tail_idx]])
        return pts, deltas


def absorbing_balls(f, attractors, radii=None):
    """(p, r_V) for each attracting cycle point p: the largest r_V among
    candidates with f^m(circle) inside B(p, r_V), m the period, verified
    on a 64-point circle sample."""
    if radii is None:
        radii = [1.0 * 0.8**j for j in range(40)]
    out = []
    for cyc in attractors:
        for p in cyc.points:
            rot = rotation_to(p)
            for r in radii:
                rho = chordal_radius_to_chart(r)
                circle = rot(rho * np.exp(2j * np.pi * np.arange(64) / 64))
                img = circle
                for _ in range(cyc.period):
                    img = evaluate(f, img)
                if np.all(chordal_distance(img, p) < r):
                    out.append((complex(p), r))
                    break
    return out


def john_path(ctx, cell, builder="best_of_both"):
    """Path from cell to the component base and its audit.

    Returns (points, deltas, ratio, worst_point, builder_used).
    """
    z1 = complex(ctx.points[cell])
    results = []
    if builder in ("delta_ascent", "best_of_both"):
        pts, dl = ctx.delta_ascent(cell)
        results.append((pts, dl, "delta_ascent"))
    if builder in ("dynamic_lift", "best_of_both"):
        try:
            pts, dl = ctx.dynamic_lift(cell)
            results.append((pts, dl, "dynamic_lift"))
        except (NumericalError, ValidationError):
            if builder == "dynamic_lift":
                raise
    best = None
    for pts, dl, name in results:
        ratio, worst = audit(z1, pts, dl)
        if best is None or ratio > best[2]:
            best = (pts, dl, ratio, worst, name)
    return best


def sample_cells(field, component, samples, seed):
    """Seeded starting cells: 70% from the smallest-delta decile of the
    eligible cells (delta-hat above one cell diagonal), the rest uniform."""
    mask = (field.component_id == component) & (field.delta_hat > field.cell_diagonal())
    cells = np.argwhere(mask)
    if len(cells) == 0:
        return []
    rng = np.random.default_rng(seed)
    d = field.delta_hat[mask]
    order = np.argsort(d, kind="stable")
    decile = order[: max(1, len(order) // 10)]
    n_near = min(len(decile), int(round(NEAR_DECILE_SHARE * samples)))
    near = rng.choice(decile, size=n_near, replace=False)
    rest = np.setdiff1d(np.arange(len(cells)), near)
    n_far = min(len(rest), samples - n_near)
    far = rng.choice(rest, size=n_far, replace=False) if n_far > 0 else np.array([], int)
    chosen = np.concatenate([near, far]).astype(int)
    return [tuple(int(v) for v in cells[i]) for i in chosen]


def john_estimate(f, field, component, samples=1000, seed=0, builder="best_of_both", keep_paths=True):
    """epsilon-hat: the smallest audited John ratio over seeded sample paths."""
    if builder not in ("best_of_both", "delta_ascent", "dynamic_lift"):
        raise ValidationError(f"unknown path builder {builder!r}")
    ctx = JohnContext(f, field, component)
    cells = sample_cells(field, component, samples, seed)
    eps, witness = 1.0, (ctx.base_point, ctx.base_point, 1.0)
    counts, failures, stored = {}, 0, []
    for cell in cells:
        try:
            pts, dl, ratio, worst, name = john_path(ctx, cell, builder)
        except (NumericalError, ValidationError):
            failures += 1
            continue
        counts[name] = counts.get(name, 0) + 1
        z1 = complex(ctx.points[cell])
        if keep_paths:
            stored.append((z1, pts, dl))
        if ratio < eps:
            eps, witness = ratio, (z1, worst, ratio)
    ok = sum(counts.values())
    if ok < MIN_POINTS:
        raise InsufficientData(f"only {ok} John paths succeeded")
    return JohnReport(component, ctx.base_point, ok, eps, builder, witness, counts, failures, stored)


def reaudit(report):
    """Recompute epsilon-hat from the stored paths."""
    return min([1.0] + [audit(z1, pts, dl)[0] for z1, pts, dl in report.paths])


# --------------------------------------------------------------------------
# Hölder regression


def entry_times(f, z, balls, max_iter=2000):
    """First n with f^n(z) inside some absorbing ball (max_iter if never)."""
    z = np.asarray(z, complex).copy()
    n = np.full(z.shape, max_iter)
    active = np.ones(z.shape, bool)
    for k in range(max_iter):
        for p, r in balls:
            hit = active & (chordal_distance(z, p) < r)
            n[hit] = k
            active &= ~hit
        if not active.any():
            break
        z[active] = evaluate(f, z[active])
    return n


def holder_check(f, field, component, samples=400, seed=0, slope_max=SLOPE_MAX, strata=10):
    """Regress d_qh(z, z0) on -log delta-hat(z) over cells stratified by log delta.

    holder_consistent when slope <= slope_max and the largest absolute
    residual is at most three interquartile ranges of the d_qh values.
    Also regresses the entry time into the absorbing balls on -log delta.
    """
    graph = ComponentGraph(field, component)
    base, base_pt, _ = base_cell(field, component)
    dist, _ = graph.tree(base)
    mask = (field.component_id == component) & (field.delta_hat > field.cell_diagonal())
    cells = np.argwhere(mask)
    k = graph.index[mask]
    good = np.isfinite(dist[k])
    cells, k = cells[good], k[good]
    if len(cells) < MIN_POINTS or samples < MIN_POINTS:
        raise InsufficientData(f"fewer than {MIN_POINTS} usable cells")
    x = -np.log(field.delta_hat[tuple(cells.T)])
    rng = np.random.default_rng(seed)
    edges = np.quantile(x, np.linspace(0, 1, strata + 1))
    which = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, strata - 1)
    per = max(1, samples // strata)
    chosen = []
    for s in range(strata):
        idx = np.flatnonzero(which == s)
        if len(idx):
            chosen.extend(rng.choice(idx, size=min(per, len(idx)), replace=False))
    chosen = np.array(sorted(chosen))
    if len(chosen) < MIN_POINTS:
        raise InsufficientData(f"fewer than {MIN_POINTS} sampled cells")
    xs, ys = x[chosen], dist[k[chosen]]
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    q1, q3 = np.percentile(ys, [25, 75])
    iqr = float(q3 - q1)
    max_res = float(np.max(np.abs(resid)))
    ok = slope <= slope_max and max_res <= 3 * iqr
    report = HolderReport(
        component,
        base_pt,
        float(slope),
        float(intercept),
        max_res,
        iqr,
        int(len(chosen)),
        "holder_consistent" if ok else "holder_violated_at_resolution",
        slope_max=slope_max,
    )
    balls = absorbing_balls(f, field.attractors)
    if balls:
        n = entry_times(f, field.spec.points()[tuple(cells[chosen].T)], balls)
        keep = n < 2000
        if keep.sum() >= 2:
            es, ei = np.polyfit(xs[keep], n[keep], 1)
            report.entry_slope, report.entry_intercept = float(es), float(ei)
    return report


# --------------------------------------------------------------------------
# crosscuts and local connectivity


def set_diameter(points):
    """Max pairwise chordal distance of a point set, via its chart convex
    hull when the set is large (exact up to chart distortion)."""
    pts = np.asarray(points, complex)
    if len(pts) <= 4096:
        return max_pairwise_distance(pts) if len(pts) > 1 else 0.0
    xy = np.column_stack([pts.real, pts.imag])
    try:
        hull = ConvexHull(xy)
        cand = pts[hull.vertices]
    except QhullError:
        cand = pts
    # chordal and chart distances differ by a smooth factor: keep a margin
    ext = pts[np.unique(np.concatenate([hull.vertices, _extremes(pts)]))] if len(cand) < len(pts) else cand
    return max_pairwise_distance(ext)


def _extremes(pts, k=64):
    """Indices of points extreme in k directions (a hull supplement)."""
    ang = np.exp(-2j * np.pi * np.arange(k) / k)
    proj = (pts[None, :] * ang[:, None]).real
    return np.unique(np.argmax(proj, axis=1))


def _rasterize(spec, a, b):
    """Cells touched by the chart segment [a, b] (supercover by dense
    sampling at a quarter cell), in order, with the sample points."""
    inv = spec.chart == "inverted"
    ua, ub = to_chart(complex(a), inv), to_chart(complex(b), inv)
    m = max(2, int(math.ceil(abs(ub - ua) / (0.25 * spec.step))) + 1)
    t = np.linspace(0, 1, m)
    us = ua + t * (ub - ua)
    pts = np.array([from_chart(u, inv) for u in us])
    cells = [spec.cell_of(z) for z in pts]
    return pts, cells


def crosscut_continuum(f, field, sample, a, b, julia_tol=1e-4):
    """Discrete continuum C in J joining a and b, built from the segment [a, b].

    Segment points with delta-hat below 1.5 local cells form E.  Each
    maximal run of other points inside one component U is a crosscut piece
    I; U minus the rasterized segment is split into its 4-connected pieces,
    the smaller-diameter side D adjacent to I is chosen, and the cells of D
    touching the Julia proxy replace I.  The ratio is diam C / d(a, b).
    """
    a, b = complex(a), complex(b)
    spec = field.spec
    ca, cb = spec.cell_of(a), spec.cell_of(b)
    if ca is None or cb is None:
        raise ValidationError("endpoints must lie inside the grid window")
    theta = chordal_distance(a, b)
    cell_a = float(spec.cell_size()[ca])
    if theta <= 4 * cell_a:
        raise DegenerateEndpoints(f"d(a, b) = {theta:.3g} is within 4 cells")
    da = field.delta_at(np.array([a, b]))
    if np.any(da > julia_tol):
        raise ValidationError("endpoints must lie within 1e-4 of the Julia sample")
    pts, cells = _rasterize(spec, a, b)
    if any(c is None for c in cells):
        raise ValidationError("segment leaves the grid window")
    idx = tuple(np.array(cells).T)
    size = spec.cell_size()[idx]
    near = (field.delta_at(pts) < JULIA_NEAR_CELLS * size) | (field.component_id[idx] < 0)
    comp = field.component_id[idx]
    runs = []
    i = 0
    while i < len(pts):
        if near[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(pts) and not near[j + 1] and comp[j + 1] == comp[i]:
            j += 1
        runs.append((i, j, int(comp[i])))
        i = j + 1
    cut = np.zeros(field.component_id.shape, bool)
    cut[idx] = True
    pieces = [pts[near]]
    details = []
    for i, j, u in runs:
        umask = field.component_id == u
        if umask.sum() < 4:
            raise ComponentUnresolved(f"component {u} has fewer than 4 cells")
        lab, n = ndimage.label(umask & ~cut)
        run_cells = np.zeros_like(cut)
        run_cells[tuple(np.array(cells[i : j + 1]).T)] = True
        touching = ndimage.binary_dilation(run_cells) & (lab > 0)
        sides = sorted(set(lab[touching].tolist()))
        if len(sides) < 2:
            raise ComponentUnresolved(f"segment does not separate component {u} at this resolution")
        best = None
        for s in sides:
            cell_pts = spec.points()[lab == s]
            dia = set_diameter(cell_pts)
            if best is None or dia < best[0]:
                best = (dia, s)
        D = lab == best[1]
        rep = D & _touches_outside(umask, field.delta_hat, spec.cell_size())
        rep_pts = spec.points()[rep]
        if len(rep_pts) == 0:
            raise ComponentUnresolved("chosen side has no Julia-adjacent cells")
        pieces.append(rep_pts)
        details.append(
            Crossing(u, float(chordal_distance(pts[i], pts[j])), float(set_diameter(rep_pts)), int(rep.sum()))
        )
    cont = np.concatenate(pieces + [np.array([a, b])])
    dia = set_diameter(cont)
    return ContinuumReport(a, b, float(theta), cont, float(dia), float(dia / theta), len(details), details)


def _touches_outside(umask, delta_hat, cell):
    """Cells of U with an 8-neighbour outside U (another component or a
    Julia-suspect cell; the window edge does not count), or with delta-hat
    below the Julia-near threshold."""
    pad = np.pad(umask, 1, constant_values=True)
    N = umask.shape[0]
    out = np.zeros_like(umask)
    for di, dj in OFFSETS:
        out |= ~pad[1 + di : 1 + di + N, 1 + dj : 1 + dj + N]
    return umask & (out | (delta_hat < JULIA_NEAR_CELLS * cell))


def random_julia_pairs(field, sample, count, seed, theta_max=0.05, min_cells=4.5):
    """Seeded pairs of sample points with 4.5 local cells < d(a, b) < theta_max,
    both inside the grid window."""
    rng = np.random.default_rng(seed)
    pts = np.asarray(sample.points)
    inside = np.array([field.spec.cell_of(z) is not None for z in pts])
    pts = pts[inside]
    X = to_sphere(pts)
    tree = cKDTree(X)
    out = []
    tries = 0
    while len(out) < count and tries < 50 * count:
        tries += 1
        a = pts[rng.integers(len(pts))]
        lo = min_cells * float(field.spec.cell_size()[field.spec.cell_of(a)])
        if lo >= theta_max:
            continue
        nb = tree.query_ball_point(to_sphere(a), theta_max)
        cand = [k for k in nb if lo < chordal_distance(a, pts[k]) < theta_max]
        if not cand:
            continue
        out.append((complex(a), complex(pts[cand[rng.integers(len(cand))]])))
    return out
