"""Discretized phase space: basins, Fatou-component labels, Julia samples, and
the distance-to-Julia field.

Grids are square and axis-aligned in one chart of the sphere.  Row 0 is the
top row (largest imaginary part) so that image exports need no flipping.  In
the inverted chart a cell with coordinate u stands for the point 1/u; since
z -> 1/z is a chordal isometry, distances are unaffected by the choice.
"""

import re
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import NoAttractor, ValidationError
from .orbits import PARABOLIC, REPELLING, classify_multiplier, detect_cycles
from .ratmap import evaluate, fixed_points, orbit_with_derivative, preimage_points
from .sphere import INF, chordal_distance, is_inf, to_sphere

MAX_ITER = 2000
CONVERGENCE_RADIUS = 1e-6
BURN_IN = 20
PETAL_DEPTH = 20.0
PETAL_CHECK = 16


@dataclass(frozen=True)
class GridSpec:
    chart: str = "standard"
    center: complex = 0j
    half_width: float = 2.0
    resolution: int = 512

    def __post_init__(self):
        if self.chart not in ("standard", "inverted"):
            raise ValidationError(f"unknown chart {self.chart!r}")
        if not self.half_width > 0:
            raise ValidationError("half_width must be positive")
        if int(self.resolution) != self.resolution or self.resolution < 16:
            raise ValidationError("resolution must be an integer >= 16")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "resolution", int(self.resolution))

    @property
    def step(self):
        """Cell side length in chart coordinates."""
        return 2 * self.half_width / self.resolution

    def chart_coords(self):
        """Cell-center chart coordinates, shape (N, N)."""
        N, h = self.resolution, self.step
        idx = np.arange(N) + 0.5
        x = self.center.real - self.half_width + idx * h
        y = self.center.imag + self.half_width - idx * h
        return x[None, :] + 1j * y[:, None]

    def points(self):
        """Cell centers as sphere points, shape (N, N)."""
        u = self.chart_coords()
        if self.chart == "standard":
            return u
        out = np.empty_like(u)
        zero = u == 0
        out[~zero] = 1 / u[~zero]
        out[zero] = INF
        return out

    def cell_size(self):
        """Local chordal side length of each cell, 2h / (1 + |u|^2)."""
        u = self.chart_coords()
        return 2 * self.step / (1 + np.abs(u) ** 2)

    def cell_of(self, z):
        """(row, col) of the cell containing sphere point z, or None."""
        if self.chart == "inverted":
            u = 0j if is_inf(z) else (None if z == 0 else 1 / complex(z))
        else:
            u = None if is_inf(z) else complex(z)
        if u is None:
            return None
        h = self.step
        j = int(np.floor((u.real - self.center.real + self.half_width) / h))
        i = int(np.floor((self.center.imag + self.half_width - u.imag) / h))
        if 0 <= i < self.resolution and 0 <= j < self.resolution:
            return i, j
        return None

    def to_text(self):
        return (
            f"chart = {self.chart}\n"
            f"center = {self.center.real!r} {self.center.imag!r}\n"
            f"half_width = {self.half_width!r}\n"
            f"resolution = {self.resolution}\n"
        )


@dataclass
class GridField:
    spec: GridSpec
    basin_id: np.ndarray
    component_id: np.ndarray
    iter_count: np.ndarray
    delta_hat: np.ndarray = None
    attractors: list = field(default_factory=list)
    sample: "JuliaSample" = None
    _tree: object = field(default=None, repr=False)

    def delta_at(self, z):
        """delta-hat at arbitrary sphere points, from the stored sample."""
        if self._tree is None:
            raise ValidationError("distance_field has not been computed")
        d, _ = self._tree.query(to_sphere(np.asarray(z, complex)))
        return np.minimum(d, 2.0)

    def cell_diagonal(self):
        """Local chordal diagonal of every cell."""
        return np.sqrt(2) * self.spec.cell_size()

    @property
    def n_components(self):
        return int(self.component_id.max()) + 1 if self.component_id.size else 0

    def component_sizes(self):
        """Cell counts indexed by component id."""
        ids = self.component_id[self.component_id >= 0]
        return np.bincount(ids, minlength=self.n_components)

    def largest_components(self, k, basin=None):
        """Ids of the k largest components, ties by smaller id."""
        sizes = self.component_sizes()
        ids = np.arange(len(sizes))
        if basin is not None:
            first = self.component_basins()
            ids = ids[first == basin]
        order = sorted(ids, key=lambda c: (-sizes[c], c))
        return [int(c) for c in order[:k]]

    def component_basins(self):
        """basin_id of every component."""
        out = np.full(self.n_components, -1)
        mask = self.component_id >= 0
        out[self.component_id[mask]] = self.basin_id[mask]
        return out

    def component_at(self, z):
        cell = self.spec.cell_of(z)
        if cell is None:
            return -1
        return int(self.component_id[cell])


# --------------------------------------------------------------------------


def _attractor_points(cycles):
    """Attracting cycle points with their cycle index, position and period."""
    pts, ids, pos, per = [], [], [], []
    for k, cyc in enumerate(cycles):
        if cyc.attracting:
            pts.extend(cyc.points)
            ids.extend([k] * len(cyc.points))
            pos.extend(range(len(cyc.points)))
            per.extend([len(cyc.points)] * len(cyc.points))
    return np.array(pts, complex), np.array(ids, int), np.array(pos, int), np.array(per, int)


def _near_attractor(z, apts, radius):
    """Mask of points within chordal `radius` of some attractor point, and
    which one.  Squared form of the chordal metric, so no square roots."""
    finite = np.isfinite(z)
    zf = np.where(finite, z, 0)
    s = 1 + zf.real**2 + zf.imag**2
    r2 = radius * radius
    hit = np.zeros(z.shape, bool)
    which = np.zeros(z.shape, int)
    for k, a in enumerate(apts):
        if is_inf(a):
            near = ~finite | (4 < r2 * s)
        else:
            diff = zf - a
            near = finite & (4 * (diff.real**2 + diff.imag**2) < r2 * s * (1 + abs(a) ** 2))
        near &= ~hit
        which[near] = k
        hit |= near
    return hit, which


def classify_and_label(f, spec, cycles, max_iter=MAX_ITER, radius=CONVERGENCE_RADIUS):
    """Basin classification of every cell center and 4-connected component labels.

    basin_id is the index into `cycles` of the attracting cycle whose
    points the orbit reaches within `radius`, or -1 (Julia-suspect).
    Components are labeled per basin and attractor phase (the cycle
    position reached, less the iteration count, modulo the period; constant
    on each Fatou component) and then renumbered globally in row-major
    order of their first cell, so labels are deterministic.  The phase
    keeps components that touch at a grid-unresolved pinch point apart.

    Orbits that fall deep into the attracting petal of a multiplier-1
    parabolic point are retired early as Julia-suspect; they could never
    reach an attracting cycle, so only the running time changes.
    """
    N = spec.resolution
    petals = _petals(f, cycles)
    z = spec.points().ravel().copy()
    apts, aids, apos, aper = _attractor_points(cycles)
    basin = np.full(z.size, -1)
    phase = np.zeros(z.size, int)
    iters = np.full(z.size, max_iter)
    active = np.arange(z.size)
    cur = z
    if len(apts):
        for n in range(max_iter + 1):
            hit, which = _near_attractor(cur, apts, radius)
            basin[active[hit]] = aids[which[hit]]
            iters[active[hit]] = n
            phase[active[hit]] = (apos[which[hit]] - n) % aper[which[hit]]
            active, cur = active[~hit], cur[~hit]
            if petals and n % PETAL_CHECK == 0:
                keep = ~_in_petal(cur, petals)
                active, cur = active[keep], cur[keep]
            if not len(active) or n == max_iter:
                break
            cur = evaluate(f, cur)
    basin = basin.reshape(N, N)
    comp = label_components(basin, phase.reshape(N, N))
    return GridField(spec, basin, comp, iters.reshape(N, N), None, [c for c in cycles if c.attracting])


def _petals(f, cycles, h=1e-3):
    """(p, a, R) for finite points of multiplier-1 parabolic cycles, where
    f^k(p + w) = p + w + a w^2 + b w^3 + ... (a, b by central differences).

    In zeta = -1/(a w) the map is zeta + 1 + c / zeta + ..., c = 1 - b/a^2;
    R = max(PETAL_DEPTH, 10 |c|) keeps the c / zeta drift below 1/10.
    """
    out = []
    for cyc in cycles:
        if cyc.kind != PARABOLIC or abs(cyc.multiplier_complex - 1) > 1e-6:
            continue
        for p in cyc.points:
            if is_inf(p):
                continue
            z = p + h * np.array([-2, -1, 0, 1, 2], complex)
            for _ in range(cyc.period):
                z = evaluate(f, z)
            a = (z[3] + z[1] - 2 * z[2]) / (2 * h * h)
            b = (z[4] - 2 * z[3] + 2 * z[1] - z[0]) / (12 * h**3)
            if abs(a) > 1e-6:
                out.append((complex(p), complex(a), max(PETAL_DEPTH, 10 * abs(1 - b / a**2))))
    return out


def _in_petal(z, petals):
    """Points with zeta = -1/(a (z - p)) in the sector Re zeta > R,
    |Im zeta| < Re zeta, where the orbit converges to p."""
    out = np.zeros(z.shape, bool)
    finite = np.isfinite(z)
    for p, a, R in petals:
        w = np.where(finite, z - p, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            zeta = -1 / (a * w)
        out |= finite & (zeta.real > R) & (np.abs(zeta.imag) < zeta.real)
    return out


def label_components(basin, phase=None):
    """4-connected labels of cells sharing basin (and phase, if given),
    numbered row-major from 0."""
    comp = np.full(basin.shape, -1)
    raw = np.zeros(basin.shape, int)
    if phase is None:
        phase = np.zeros(basin.shape, int)
    key = np.where(basin >= 0, basin * (int(phase.max()) + 1) + phase, -1)
    offset = 0
    for b in np.unique(key[key >= 0]):
        lab, n = ndimage.label(key == b)
        raw[lab > 0] = lab[lab > 0] + offset
        offset += n
    if offset == 0:
        return comp
    flat = raw.ravel()
    nz = np.flatnonzero(flat)
    _, first = np.unique(flat[nz], return_index=True)
    order = np.argsort(first)  # raw labels sorted by first row-major cell
    remap = np.full(offset + 1, -1)
    remap[np.unique(flat[nz])[order]] = np.arange(len(order))
    return remap[raw]


# --------------------------------------------------------------------------


@dataclass
class JuliaSample:
    points: np.ndarray
    method: str
    note: str = ""

    def __len__(self):
        return len(self.points)


def repelling_start(f):
    """A repelling periodic point to seed inverse iteration.

    The repelling fixed point with the largest multiplier; when every fixed
    point is non-repelling (z^2 + 1/4, say) the first repelling cycle of
    period <= 6 found by `detect_cycles`.
    """
    best, best_m = None, 0.0
    for z, _ in fixed_points(f):
        inv = is_inf(z) or abs(z) > 1
        _, m, _, _ = orbit_with_derivative(f, z, 1, target_inv=inv)
        if np.isfinite(m) and classify_multiplier(m) == REPELLING and abs(m) > best_m:
            best, best_m = z, abs(m)
    if best is not None:
        return best
    for cyc in detect_cycles(f):
        if cyc.kind == REPELLING:
            return cyc.points[0]
    raise NoAttractor("no repelling cycle of period <= 6 to seed inverse iteration")


def julia_sample(f, count, seed, burn_in=BURN_IN, method="inverse_iteration", field=None):
    """Sample J by random backward orbits, grid boundary cells, or both.

    inverse_iteration: start at a repelling fixed point, step to a
    uniformly random preimage (numpy PCG64 seeded by `seed`), drop the
    first `burn_in` points and keep `count`.  boundary_cells: centers of
    Julia-suspect cells plus midpoints of edges between 4-adjacent cells
    with different labels (requires `field`).  Midpoints rather than cell
    centers keep delta-hat positive on every labeled cell.  mixed: the union of both.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    if method not in ("inverse_iteration", "boundary_cells", "mixed"):
        raise ValidationError(f"unknown sampling method {method!r}")
    parts, notes = [], []
    if method in ("inverse_iteration", "mixed"):
        rng = np.random.default_rng(seed)
        z = repelling_start(f)
        pts = np.empty(count, complex)
        for k in range(burn_in + count):
            pre = preimage_points(f, z)
            z = pre[rng.integers(len(pre))]
            if k >= burn_in:
                pts[k - burn_in] = z
        parts.append(pts)
        notes.append(f"backward orbit from a repelling periodic point, burn-in {burn_in}")
    if method in ("boundary_cells", "mixed"):
        if field is None:
            raise ValidationError("boundary_cells sampling needs a classified field")
        parts.append(boundary_points(field))
        notes.append("Julia-suspect cell centers and component-interface midpoints")
    return JuliaSample(np.concatenate(parts), method, "; ".join(notes))


def boundary_mask(field):
    """Julia-suspect cells plus cells 4-adjacent to a different label."""
    c = field.component_id
    m = c < 0
    diff_v = c[1:, :] != c[:-1, :]
    diff_h = c[:, 1:] != c[:, :-1]
    m[1:, :] |= diff_v
    m[:-1, :] |= diff_v
    m[:, 1:] |= diff_h
    m[:, :-1] |= diff_h
    return m


def boundary_points(field):
    """Julia-suspect cell centers and chart midpoints of label interfaces."""
    c = field.component_id
    spec = field.spec
    u = spec.chart_coords()
    out = [u[c < 0]]
    for a, b, ca, cb in ((u[1:, :], u[:-1, :], c[1:, :], c[:-1, :]), (u[:, 1:], u[:, :-1], c[:, 1:], c[:, :-1])):
        m = (ca != cb) & (ca >= 0) & (cb >= 0)
        out.append(0.5 * (a[m] + b[m]))
    u = np.concatenate(out)
    if spec.chart == "standard":
        return u
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(u == 0, INF, 1 / u)


def distance_field(field, sample, block=8):
    """Fill field.delta_hat with the chordal distance to the nearest sample point.

    Exact, but organized by blocks of `block` x `block` cells: the block
    center c gets a KD-tree query, and since any cell x of the block has
    d(x, y*) <= d(x, c) + delta(c), its nearest sample point y* lies in the
    ball of radius delta(c) + 2 max_x d(x, c) about c.  Only that ball is
    brute-forced.  A plain per-cell query is slow deep inside round
    components, where every sample point is nearly equidistant.
    """
    if len(sample) == 0:
        raise ValidationError("empty Julia sample")
    S = to_sphere(sample.points)
    tree = cKDTree(S)
    N = field.spec.resolution
    X = to_sphere(field.spec.points())
    out = np.empty((N, N))
    for i0 in range(0, N, block):
        for j0 in range(0, N, block):
            xb = X[i0 : i0 + block, j0 : j0 + block]
            pts = xb.reshape(-1, 3)
            c = pts.mean(axis=0)
            c /= np.linalg.norm(c)
            e = np.sqrt(((pts - c) ** 2).sum(axis=1)).max()
            dc, _ = tree.query(c)
            cand = S[tree.query_ball_point(c, dc + 2 * e + 1e-12)]
            # unit vectors: the nearest point maximizes the dot product
            best = cand[np.argmax(pts @ cand.T, axis=1)]
            d = np.sqrt(((pts - best) ** 2).sum(axis=1))
            out[i0 : i0 + block, j0 : j0 + block] = d.reshape(xb.shape[:2])
    field.delta_hat = np.minimum(out, 2.0)
    field.sample = sample
    field._tree = tree
    return field


def sample_tree(sample):
    """KD-tree over the embedded sample, for pointwise delta queries."""
    return cKDTree(to_sphere(sample.points))


def delta_oracle(sample):
    """Callable z -> chordal distance from z (array) to the sample."""
    tree = sample_tree(sample)

    def delta(z):
        d, _ = tree.query(to_sphere(z))
        return np.minimum(d, 2.0)

    return delta


# --------------------------------------------------------------------------
# export


def _palette(n):
    """Fixed hue per component id via the golden-angle sequence."""
    hues = (np.arange(n) * 0.618033988749895) % 1.0
    return np.stack([_hue_channel(hues, s) for s in (0.0, 2 / 3, 1 / 3)], axis=-1)


def _hue_channel(h, shift):
    x = np.abs(((h + shift) % 1.0) * 6 - 3) - 1
    return np.clip(x, 0, 1) * 0.75 + 0.25


def field_rgb(field):
    """uint8 RGB image: hue per component, black for Julia-suspect cells,
    brightness rising with delta_hat when it is available."""
    comp = field.component_id
    n = max(field.n_components, 1)
    rgb = _palette(n)[np.maximum(comp, 0)]
    if field.delta_hat is not None:
        d = field.delta_hat
        scale = np.clip(np.log1p(d / max(float(np.median(d)), 1e-12)) / np.log(2), 0.15, 1.0)
        rgb = rgb * scale[..., None]
    rgb[comp < 0] = 0.0
    return np.round(rgb * 255).astype(np.uint8)


def write_ppm(path, rgb):
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


_PPM_HEADER = re.compile(rb"P6\s+(\d+)\s+(\d+)\s+(\d+)\s")


def read_ppm(path):
    """Inverse of `write_ppm` (8-bit P6, no comments)."""
    with open(path, "rb") as fh:
        data = fh.read()
    m = _PPM_HEADER.match(data)
    if m is None or int(m.group(3)) != 255:
        raise ValidationError("not an 8-bit binary PPM")
    w, h = int(m.group(1)), int(m.group(2))
    # exactly one whitespace byte separates the header from the pixels
    return np.frombuffer(data[m.end() : m.end() + 3 * w * h], np.uint8).reshape(h, w, 3)


def export_field(field, path):
    """Write the PPM image and a sidecar `<path>.grid.txt` with the GridSpec."""
    write_ppm(path, field_rgb(field))
    with open(str(path) + ".grid.txt", "w") as fh:
        fh.write(field.spec.to_text())
