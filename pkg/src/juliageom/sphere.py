"""Riemann-sphere arithmetic.

Points of the extended plane are plain Python/numpy complex numbers.  The
point at infinity has exactly one representation, `INF = complex(inf, 0)`;
`canonical` folds every other non-finite value onto it.  Distances are
chordal: the metric induced by stereographic projection onto the unit
sphere, so the sphere has diameter 2.
"""

import math

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ValidationError

INF = complex(math.inf, 0.0)

# |z| above which evaluation switches to the inverted chart
CHART_SWITCH = 1e8


def is_inf(z):
    """True where `z` is the point at infinity (elementwise for arrays)."""
    if np.ndim(z) == 0:
        z = complex(z)
        return math.isinf(z.real) or math.isinf(z.imag)
    z = np.asarray(z, dtype=complex)
    return np.isinf(z.real) | np.isinf(z.imag)


def canonical(z):
    """Return the canonical sphere point for `z`.

    Infinite values map to `INF`.  NaN is rejected: it never denotes a
    point of the sphere.
    """
    if np.ndim(z) == 0:
        z = complex(z)
        if math.isnan(z.real) or math.isnan(z.imag):
            raise ValidationError("NaN is not a point of the sphere")
        if math.isinf(z.real) or math.isinf(z.imag):
            return INF
        return z
    z = np.array(z, dtype=complex)
    if np.isnan(z).any():
        raise ValidationError("NaN is not a point of the sphere")
    z[is_inf(z)] = INF
    return z


def invert_chart(z):
    """The involution z -> 1/z with 0 <-> infinity."""
    if np.ndim(z) == 0:
        z = complex(z)
        if is_inf(z):
            return 0j
        if z == 0:
            return INF
        return 1.0 / z
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    inf = is_inf(z)
    zero = z == 0
    ok = ~(inf | zero)
    out[ok] = 1.0 / z[ok]
    out[inf] = 0j
    out[zero] = INF
    return out


def chordal_distance(a, b):
    """Chordal distance 2|a-b| / sqrt((1+|a|^2)(1+|b|^2)), broadcasting.

    Ranges over [0, 2]; d(z, inf) = 2 / sqrt(1+|z|^2).
    """
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return _chordal_scalar(complex(a), complex(b))
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    a, b = np.broadcast_arrays(a, b)
    ia, ib = is_inf(a), is_inf(b)
    with np.errstate(invalid="ignore", over="ignore"):
        fa = np.where(ia, 0, a)
        fb = np.where(ib, 0, b)
        d = 2 * np.abs(fa - fb) / (np.hypot(1, np.abs(fa)) * np.hypot(1, np.abs(fb)))
    d = np.where(ia & ~ib, 2 / np.hypot(1, np.abs(fb)), d)
    d = np.where(ib & ~ia, 2 / np.hypot(1, np.abs(fa)), d)
    d = np.where(ia & ib, 0.0, d)
    return np.minimum(d, 2.0)


def _chordal_scalar(a, b):
    ia, ib = is_inf(a), is_inf(b)
    if ia and ib:
        return 0.0
    if ia:
        return 2 / math.hypot(1, abs(b))
    if ib:
        return 2 / math.hypot(1, abs(a))
    return min(2.0, 2 * abs(a - b) / (math.hypot(1, abs(a)) * math.hypot(1, abs(b))))


def to_sphere(z):
    """Stereographic embedding into the unit sphere of R^3, shape (..., 3).

    Euclidean distance between embedded points equals chordal distance, so
    ordinary spatial indices (KD-trees) answer chordal nearest-neighbour
    queries exactly.
    """
    z = np.asarray(z, dtype=complex)
    inf = is_inf(z)
    w = np.where(inf, 0, z)
    r2 = np.abs(w) ** 2
    out = np.stack([2 * w.real / (1 + r2), 2 * w.imag / (1 + r2), (r2 - 1) / (r2 + 1)], axis=-1)
    out[inf] = (0.0, 0.0, 1.0)
    return out


def from_sphere(xyz):
    """Inverse of `to_sphere` (north pole -> INF)."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, h = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (x + 1j * y) / (1 - h)
    z = np.where(h >= 1 - 1e-15, INF, z)
    return z


def rotation_to(z0):
    """Return the chordal isometry R with R(0) = z0, as a callable.

    R(u) = (u + z0) / (1 - conj(z0) u); for z0 = infinity, R(u) = 1/u.
    """
    if is_inf(z0):
        return invert_chart
    z0 = complex(z0)

    def rot(u):
        u = np.asarray(u, dtype=complex)
        den = 1 - np.conj(z0) * u
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (u + z0) / den
        return np.where(den == 0, INF, out)

    return rot


def rotation_from(z0):
    """Inverse of `rotation_to(z0)`: the isometry sending z0 to 0."""
    if is_inf(z0):
        return invert_chart
    z0 = complex(z0)

    def rot(w):
        w = np.asarray(w, dtype=complex)
        inf = is_inf(w)
        wf = np.where(inf, 0, w)
        den = 1 + np.conj(z0) * wf
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (wf - z0) / den
        out = np.where(den == 0, INF, out)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            at_inf = 1 / np.conj(np.complex128(z0)) if z0 != 0 else INF
        if not np.isfinite(at_inf):
            at_inf = INF
        return np.where(inf, at_inf, out)

    return rot


def chordal_radius_to_chart(radius):
    """Euclidean radius about 0 of the chordal ball B(0, radius)."""
    return radius / math.sqrt(4 - radius * radius)


def chordal_circle(center, radius, count):
    """`count` points on the chordal circle {w : d(w, center) = radius}.

    The circle is the image of a Euclidean circle about 0 under the
    isometry sending 0 to `center`.
    """
    if not 0 < radius < 2:
        raise ValidationError(f"chordal radius must lie in (0, 2), got {radius}")
    rho = chordal_radius_to_chart(radius)
    t = 2 * np.pi * np.arange(count) / count
    return rotation_to(center)(rho * np.exp(1j * t))


def spherical_derivative_factor(f, z):
    """|f'(z)| (1+|z|^2) / (1+|f(z)|^2), the derivative in the chordal metric.

    Evaluated through the homogeneous pair (p, q), which stays finite at
    poles; points with |z| > 1 are evaluated in the inverted chart.  Zero
    exactly at critical points.
    """
    scalar = np.ndim(z) == 0
    if scalar and hasattr(f, "_tup"):
        return _factor_scalar(f._tup, complex(z))
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    inf = is_inf(z)
    big = inf | (np.abs(np.where(inf, 0, z)) > 1)
    u = np.where(big, 0, z)
    u[big & ~inf] = 1 / z[big & ~inf]
    out = np.empty(z.shape)
    for mask, (p, q) in ((~big, (f.p, f.q)), (big, (f.p[::-1], f.q[::-1]))):
        if not mask.any():
            continue
        uu = u[mask]
        P, Q, dP, dQ = _pq(p, q, uu)
        w = dP * Q - P * dQ
        out[mask] = np.abs(w) * (1 + np.abs(uu) ** 2) / (np.abs(P) ** 2 + np.abs(Q) ** 2)
    return float(out[0]) if scalar else out


def _pq(p, q, u):
    return (
        npoly.polyval(u, p),
        npoly.polyval(u, q),
        npoly.polyval(u, npoly.polyder(p)),
        npoly.polyval(u, npoly.polyder(q)),
    )


def _horner(c, z):
    acc = 0j
    for a in reversed(c):
        acc = acc * z + a
    return acc


def _factor_scalar(t, z):
    if is_inf(z) or abs(z) > 1:
        u = 0j if is_inf(z) else 1 / z
        keys = ("pr", "qr", "dpr", "dqr")
    else:
        u = z
        keys = ("p", "q", "dp", "dq")
    P, Q, dP, dQ = (_horner(t[k], u) for k in keys)
    w = dP * Q - P * dQ
    return abs(w) * (1 + abs(u) ** 2) / (abs(P) ** 2 + abs(Q) ** 2)
