"""Rational maps as data, and the polynomial root finder under everything.

A `RationalMap` stores its numerator and denominator both as trimmed
`Polynomial` objects and as coefficient vectors zero-padded to length
``d + 1``.  The padded pair is the homogeneous form: reversing it gives the
map in the inverted chart u = 1/z, which is how poles and the point at
infinity are handled without special cases.

Iterates are never expanded to coefficient form beyond ``n = 3``
(`iterate_coeffs`); n-step quantities come from repeated evaluation.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import NonConvergence, ValidationError
from .sphere import CHART_SWITCH, INF, chordal_distance, is_inf

CLUSTER_RADIUS = 1e-7
RESIDUAL_TOL = 1e-10
COPRIME_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Polynomial with complex coefficients in ascending degree order."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        nz = np.nonzero(c)[0]
        c = c[: nz[-1] + 1] if len(nz) else c[:1]
        if not np.all(np.isfinite(c)):
            raise ValidationError("polynomial coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs.any() else -1

    @property
    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def __call__(self, z):
        return npoly.polyval(z, self.coeffs)

    def deriv(self):
        return Polynomial(npoly.polyder(self.coeffs) if len(self.coeffs) > 1 else [0])

    def __eq__(self, other):
        return isinstance(other, Polynomial) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())


# --------------------------------------------------------------------------
# root finding


def poly_roots(P, *, maxiter=500):
    """All roots of `P`, as a list of ``(root, multiplicity)`` pairs.

    Aberth-Ehrlich simultaneous iteration with a companion-matrix fallback,
    followed by Newton polishing.  Roots closer than `CLUSTER_RADIUS`, and
    tighter clusters that test as a genuine multiple root, are merged with
    summed multiplicity.  Raises `NonConvergence` if no route reaches the
    residual bound ``root_residual(P, z) <= 1e-10 * ||P||``.
    """
    if not isinstance(P, Polynomial):
        P = Polynomial(P)
    n = P.degree
    if n < 1:
        raise ValidationError("poly_roots needs a polynomial of degree >= 1")
    c = P.coeffs
    nzero = int(np.argmax(c != 0))
    roots = [(0j, nzero)] if nzero else []
    c = c[nzero:]
    m = len(c) - 1
    if m == 0:
        return roots
    scale = float(np.linalg.norm(c))
    if m == 1:
        found = np.array([-c[0] / c[1]])
    elif m == 2:
        found = _quadratic(c)
    else:
        found = _aberth(c, maxiter)
        if found is None or not _acceptable(c, found, scale):
            found = np.roots(c[::-1]).astype(complex)
    found = np.array([_polish(c, z) for z in found])
    merged = _merge_clusters(c, found)
    for z, k in merged:
        res = root_residual(c, z)
        if res > RESIDUAL_TOL * scale:
            raise NonConvergence(f"root {z} has residual {res:.3g}")
    roots.extend(merged)
    roots.sort(key=lambda zk: (round(zk[0].real, 9), round(zk[0].imag, 9)))
    return roots


def root_residual(P, z):
    """|P(z)| measured in the chart where |z| <= 1.

    For |z| > 1 this is |P(z)| / |z|^n, the residual of the reversed
    polynomial at 1/z, so it stays comparable to ||P|| for large roots.
    """
    c = P.coeffs if isinstance(P, Polynomial) else np.asarray(P, complex)
    n = len(c) - 1
    z = complex(z)
    if abs(z) <= 1:
        return abs(npoly.polyval(z, c))
    return abs(npoly.polyval(1 / z, c[::-1]))


def expand_roots(pairs):
    """Flatten ``(root, multiplicity)`` pairs into a list with repeats."""
    return [z for z, k in pairs for _ in range(k)]


def _quadratic(c):
    a0, a1, a2 = c
    disc = np.sqrt(a1 * a1 - 4 * a2 * a0 + 0j)
    # pick the sign that avoids cancellation
    s = -a1 - disc if abs(-a1 - disc) >= abs(-a1 + disc) else -a1 + disc
    if s == 0:
        return np.array([0j, 0j])
    r1 = s / (2 * a2)
    r2 = 2 * a0 / s
    return np.array([r1, r2])


def _abs_eval(c, z):
    return float(np.sum(np.abs(c) * abs(z) ** np.arange(len(c))))


def _acceptable(c, zs, scale):
    for z in zs:
        if not np.isfinite(z):
            return False
        if abs(npoly.polyval(z, c)) > 1e-6 * max(scale, _abs_eval(c, z)):
            return False
    return True


def _aberth(c, maxiter):
    n = len(c) - 1
    a = c / c[-1]
    # initial radius: geometric mean of root moduli, kept away from 0
    r = max(abs(a[0]) ** (1.0 / n), 1e-3)
    z = r * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    dc = npoly.polyder(c)
    for _ in range(maxiter):
        p = npoly.polyval(z, c)
        dp = npoly.polyval(z, dc)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            s = np.sum(1.0 / diff, axis=1)
            w = ratio / (1 - ratio * s)
        bad = ~np.isfinite(w)
        if bad.any():
            w[bad] = 1e-3 * (1 + np.abs(z[bad]))
        z = z - w
        if np.all(np.abs(w) <= 4e-16 * np.maximum(1, np.abs(z))):
            return z
    return z if np.all(np.isfinite(z)) else None


def _polish(c, z, steps=6):
    dc = npoly.polyder(c)
    best = z
    best_res = abs(npoly.polyval(z, c))
    for _ in range(steps):
        d = npoly.polyval(z, dc)
        if d == 0:
            break
        z = z - npoly.polyval(z, c) / d
        res = abs(npoly.polyval(z, c))
        if res < best_res:
            best, best_res = z, res
        else:
            break
    return complex(best)


def _merge_clusters(c, zs):
    """Group nearby roots; merge genuine multiple roots at the refined centre."""
    order = np.lexsort((zs.imag, zs.real))
    zs = zs[order]
    used = np.zeros(len(zs), bool)
    out = []
    for i in range(len(zs)):
        if used[i]:
            continue
        loose = 1e-3 * max(1.0, abs(zs[i]))
        near = [j for j in range(i, len(zs)) if not used[j] and abs(zs[j] - zs[i]) <= loose]
        tight = [j for j in near if abs(zs[j] - zs[i]) <= CLUSTER_RADIUS * max(1.0, abs(zs[i]))]
        group = tight
        if len(near) > len(tight):
            centre = zs[near].mean()
            if _is_multiple_root(c, centre, len(near), np.max(np.abs(zs[near] - centre))):
                group = near
        centre = complex(zs[group].mean())
        k = len(group)
        if k > 1:
            centre = _refine_multiple(c, centre, k)
        used[group] = True
        out.append((centre, k))
    return out


def _is_multiple_root(c, centre, k, spread):
    # a k-fold root perturbed by rounding spreads like (eps * |P| / |P^(k)/k!|)^(1/k)
    dk = npoly.polyder(c, k)
    lead = abs(npoly.polyval(centre, dk)) / math.factorial(k)
    if lead == 0:
        return False
    expected = (1e-15 * _abs_eval(c, centre) / lead) ** (1.0 / k)
    return spread <= 100 * expected


def _refine_multiple(c, z, k):
    # a k-fold root of P is a simple root of P^(k-1)
    d = npoly.polyder(c, k - 1)
    return _polish(d, z, steps=8)


# --------------------------------------------------------------------------
# rational maps


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    location: complex
    multiplicity: int

    @property
    def local_degree(self):
        return self.multiplicity + 1


@dataclass(frozen=True, eq=False)
class RationalMap:
    """The rational map p/q of degree d = max(deg p, deg q) >= 2."""

    num: Polynomial
    den: Polynomial = field(default_factory=lambda: Polynomial([1]))
    name: str = ""

    def __post_init__(self):
        num = self.num if isinstance(self.num, Polynomial) else Polynomial(self.num)
        den = self.den if isinstance(self.den, Polynomial) else Polynomial(self.den)
        if den.degree < 0:
            raise ValidationError("denominator is the zero polynomial")
        d = max(num.degree, den.degree)
        if d < 2:
            raise ValidationError(f"map degree must be at least 2, got {d}")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        p = np.zeros(d + 1, complex)
        q = np.zeros(d + 1, complex)
        p[: len(num.coeffs)] = num.coeffs
        q[: len(den.coeffs)] = den.coeffs
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "degree", d)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        # pure-Python coefficient tuples for the scalar fast paths
        tup = {}
        for key, arr in (("p", p), ("q", q), ("pr", p[::-1]), ("qr", q[::-1])):
            tup[key] = tuple(complex(x) for x in arr)
            tup["d" + key] = tuple(complex(i * x) for i, x in enumerate(arr) if i > 0)
        object.__setattr__(self, "_tup", tup)
        self._check_coprime()

    def _check_coprime(self):
        if self.num.degree < 1 or self.den.degree < 1:
            return
        pr = [z for z, _ in poly_roots(self.num)]
        qr = [z for z, _ in poly_roots(self.den)]
        for a in pr:
            for b in qr:
                if abs(a - b) <= COPRIME_TOL * max(1.0, abs(a)):
                    raise ValidationError(f"numerator and denominator share the root {a}")

    @classmethod
    def from_coeffs(cls, num, den=(1,), name=""):
        return cls(Polynomial(num), Polynomial(den), name)

    @classmethod
    def quadratic(cls, c, name=""):
        """z^2 + c."""
        return cls.from_coeffs([c, 0, 1], name=name)

    @property
    def is_polynomial(self):
        return self.den.degree == 0

    def __call__(self, z):
        return evaluate(self, z)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"RationalMap{label}({format_map(self)})"

    def conjugate_by_inversion(self):
        """The map 1/f(1/u): same dynamics seen in the inverted chart."""
        return RationalMap(Polynomial(self.q[::-1]), Polynomial(self.p[::-1]))


def evaluate(f, z):
    """f(z) on the sphere: poles go to INF, and infinity is handled in the
    inverted chart (also used for |z| > 1e8)."""
    if np.ndim(z) == 0:
        return _eval_scalar(f, complex(z))
    return _eval_array(f, np.asarray(z, dtype=complex))


def _horner(c, z):
    acc = 0j
    for a in reversed(c):
        acc = acc * z + a
    return acc


def _eval_scalar(f, z):
    t = f._tup
    if is_inf(z) or abs(z) > CHART_SWITCH:
        u = 0j if is_inf(z) else 1 / z
        P, Q = _horner(t["pr"], u), _horner(t["qr"], u)
    else:
        P, Q = _horner(t["p"], z), _horner(t["q"], z)
    if Q == 0:
        return INF
    v = P / Q
    if math.isinf(v.real) or math.isinf(v.imag) or v != v:
        return INF
    return v


def _eval_array(f, z):
    inf = is_inf(z)
    big = inf | (np.abs(np.where(inf, 0, z)) > CHART_SWITCH)
    P = np.empty(z.shape, complex)
    Q = np.empty(z.shape, complex)
    small = ~big
    if small.any():
        zz = z[small]
        P[small] = npoly.polyval(zz, f.p)
        Q[small] = npoly.polyval(zz, f.q)
    if big.any():
        with np.errstate(divide="ignore"):
            u = np.where(inf[big], 0, 1 / np.where(inf[big], 1, z[big]))
        P[big] = npoly.polyval(u, f.p[::-1])
        Q[big] = npoly.polyval(u, f.q[::-1])
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v = P / Q
    bad = ~np.isfinite(v)
    v[bad] = INF
    return v


def local_step(f, u, src_inv, dst_inv):
    """One application of f between charts, with its chart derivative.

    `u` is a chart coordinate: z itself (``src_inv=False``) or 1/z.  Returns
    ``(v, dv/du)`` where v is f(z) in the requested target chart.  Returns
    ``(INF, nan)`` when the target chart coordinate is infinite.
    """
    t = f._tup
    if src_inv:
        P, Q = _horner(t["pr"], u), _horner(t["qr"], u)
        dP, dQ = _horner(t["dpr"], u), _horner(t["dqr"], u)
    else:
        P, Q = _horner(t["p"], u), _horner(t["q"], u)
        dP, dQ = _horner(t["dp"], u), _horner(t["dq"], u)
    if dst_inv:
        P, Q, dP, dQ = Q, P, dQ, dP
    if Q == 0:
        return INF, complex("nan")
    return P / Q, (dP * Q - P * dQ) / (Q * Q)


def chart_of(z):
    """True when z is best handled in the inverted chart (|z| > 1)."""
    return is_inf(z) or abs(z) > 1


def to_chart(z, inv):
    if not inv:
        return z
    return 0j if is_inf(z) else (INF if z == 0 else 1 / z)


def from_chart(u, inv):
    return to_chart(u, inv)


def orbit_with_derivative(f, z, n, target_inv=None):
    """f^n(z) and the chart derivative of f^n, charts picked per point.

    The source chart is ``chart_of(z)``; the target chart is
    ``chart_of(f^n(z))`` unless `target_inv` forces it.  Returns
    ``(w, dw_chart, src_inv, dst_inv)`` with w a sphere point; dw_chart is
    nan when the orbit meets an unusable chart value.
    """
    src = chart_of(z)
    u = to_chart(z, src)
    cur_inv = src
    deriv = 1 + 0j
    zk = z
    for k in range(n):
        nxt = _eval_scalar(f, zk)
        last = k == n - 1
        dst = target_inv if (last and target_inv is not None) else chart_of(nxt)
        v, dv = local_step(f, u, cur_inv, dst)
        if is_inf(v):
            return nxt, complex("nan"), src, dst
        deriv *= dv
        u, cur_inv, zk = v, dst, from_chart(v, dst)
    return zk, deriv, src, cur_inv


def critical_points(f):
    """Critical points with multiplicity (order of vanishing of f').

    Finite ones are roots of the Wronskian p'q - pq'; the degree deficiency
    of the Wronskian below 2d - 2 is the multiplicity at infinity.  The
    multiplicities always sum to 2d - 2.
    """
    p, q = f.num.coeffs, f.den.coeffs
    w = npoly.polysub(npoly.polymul(npoly.polyder(p), q), npoly.polymul(p, npoly.polyder(q)))
    w = _trim(np.atleast_1d(w))
    W = Polynomial(w)
    out = []
    if W.degree >= 1:
        out = [CriticalPoint(z, k) for z, k in poly_roots(W)]
    at_inf = 2 * f.degree - 2 - max(W.degree, 0)
    if at_inf > 0:
        out.append(CriticalPoint(INF, at_inf))
    return out


def _trim(c, rel=1e-13):
    c = np.asarray(c, complex)
    if not c.any():
        return c[:1]
    cut = rel * np.max(np.abs(c))
    k = len(c)
    while k > 1 and abs(c[k - 1]) <= cut:
        k -= 1
    return c[:k]


def preimages(f, w):
    """The d solutions of f(z) = w as ``(point, multiplicity)`` pairs."""
    d = f.degree
    if is_inf(w):
        out = [] if f.den.degree < 1 else poly_roots(f.den)
        k = d - f.den.degree
    else:
        r = _trim(f.p - complex(w) * f.q, rel=1e-14)
        out = [] if len(r) < 2 else poly_roots(Polynomial(r))
        k = d - (len(r) - 1)
    if k > 0:
        out = list(out) + [(INF, k)]
    return out


def preimage_points(f, w):
    """`preimages` flattened to a list of d points (with repeats)."""
    return expand_roots(preimages(f, w))


def compose(f, g):
    """Coefficient form of f o g (degrees multiply: keep it shallow)."""
    d = f.degree
    pg, qg = g.num.coeffs, g.den.coeffs
    num = np.zeros(1, complex)
    den = np.zeros(1, complex)
    for i in range(d + 1):
        term = npoly.polymul(npoly.polypow(pg, i), npoly.polypow(qg, d - i))
        num = npoly.polyadd(num, f.p[i] * term)
        den = npoly.polyadd(den, f.q[i] * term)
    return RationalMap(Polynomial(_trim(num, 1e-15)), Polynomial(_trim(den, 1e-15)))


def iterate_coeffs(f, n):
    """Coefficient form of f^n, refused beyond n = 3."""
    if not 1 <= n <= 3:
        raise ValidationError("iterates are only expanded for 1 <= n <= 3")
    g = f
    for _ in range(n - 1):
        g = compose(f, g)
    return g


# --------------------------------------------------------------------------
# text format:  num = a0, a1, ..., an; den = b0, ..., bm


def parse_complex(text):
    """Parse complex literals such as ``-1``, ``0.25``, ``2i``, ``1-0.5i``."""
    s = text.strip().replace(" ", "").replace("i", "j")
    if not s or re.search(r"[^0-9.eE+\-j]", s):
        raise ValidationError(f"bad complex literal {text!r}")
    try:
        return complex(s)
    except ValueError as exc:
        raise ValidationError(f"bad complex literal {text!r}") from exc


def parse_map(text, name=""):
    """Parse ``num = a0, a1, ...; den = b0, ...`` (den optional)."""
    parts = {}
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        if "=" not in chunk:
            raise ValidationError(f"expected 'key = coefficients' in {chunk!r}")
        key, _, vals = chunk.partition("=")
        key = key.strip().lower()
        if key not in ("num", "den") or key in parts:
            raise ValidationError(f"unexpected key {key!r} in map string")
        parts[key] = [parse_complex(v) for v in vals.split(",")]
    if "num" not in parts:
        raise ValidationError("map string needs a 'num' entry")
    return RationalMap(Polynomial(parts["num"]), Polynomial(parts.get("den", [1])), name)


def format_complex(z):
    z = complex(z)
    re_, im = float(f"{z.real:.12g}"), float(f"{z.imag:.12g}")
    if im == 0:
        return f"{re_:.12g}"
    if re_ == 0:
        return f"{im:.12g}i"
    return f"{re_:.12g}{im:+.12g}i"


def format_map(f):
    num = ", ".join(format_complex(c) for c in f.num.coeffs)
    den = ", ".join(format_complex(c) for c in f.den.coeffs)
    return f"num = {num}; den = {den}"


def fixed_points(f):
    """Fixed points of f as (point, multiplicity) pairs."""
    # p - z q = 0, homogeneous degree d + 1
    r = npoly.polysub(np.append(f.p, 0), npoly.polymul([0, 1], f.q))
    r = _trim(r, rel=1e-14)
    out = [] if len(r) < 2 else poly_roots(Polynomial(r))
    k = f.degree + 1 - (len(r) - 1)
    if k > 0:
        out = list(out) + [(INF, k)]
    return out


def distance_to_set(z, points):
    if not len(points):
        return math.inf
    return float(np.min(chordal_distance(z, np.asarray(points, complex))))
