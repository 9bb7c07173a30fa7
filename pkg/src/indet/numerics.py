"""Numerical kernels: composite Gauss-Legendre quadrature, monotone inversion,
golden-section maximisation and a splittable random stream."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericalError

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Fixed composite Gauss-Legendre rule on [0, 1].

    ``panels`` equal panels are merged with any breakpoints supplied at
    integration time, and every resulting panel carries ``nodes_1d`` nodes.
    2D rules are tensor products of the 1D rule.
    """

    nodes_1d: int = 16
    panels: int = 64
    abs_tol: float = 0.0

    def __post_init__(self):
        if int(self.nodes_1d) < 2:
            raise DomainError(f"nodes_1d must be >= 2, got {self.nodes_1d}")
        if int(self.panels) < 1:
            raise DomainError(f"panels must be >= 1, got {self.panels}")
        if not self.abs_tol >= 0:
            raise DomainError(f"abs_tol must be non-negative, got {self.abs_tol}")

    def as_dict(self):
        return {"nodes_1d": int(self.nodes_1d), "panels": int(self.panels),
                "abs_tol": float(self.abs_tol)}


DEFAULT_QUADRATURE = QuadratureSpec()


@lru_cache(maxsize=32)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_edges(spec=DEFAULT_QUADRATURE, breakpoints=(), lo=0.0, hi=1.0):
    """Uniform panel edges on [lo, hi] merged with the breakpoints inside it."""
    edges = np.linspace(lo, hi, int(spec.panels) + 1)
    if len(breakpoints):
        b = np.asarray(breakpoints, dtype=float)
        b = b[(b > lo) & (b < hi)]
        edges = np.union1d(edges, b)
    # drop panels narrower than rounding noise
    keep = np.concatenate(([True], np.diff(edges) > 1e-15 * max(1.0, hi - lo)))
    edges = edges[keep]
    edges[-1] = hi
    return edges


def nodes_weights_1d(spec=DEFAULT_QUADRATURE, breakpoints=(), lo=0.0, hi=1.0):
    """Nodes and weights of the composite rule on [lo, hi]."""
    t, w = _leggauss(int(spec.nodes_1d))
    edges = panel_edges(spec, breakpoints, lo, hi)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    x = (a + b) * 0.5 + half * t[None, :]
    return x.ravel(), (half * w[None, :]).ravel()


def nodes_weights_2d(spec=DEFAULT_QUADRATURE, breaks_x=(), breaks_y=()):
    """Tensor-product nodes ``(X, Y)`` and weights ``W`` as 2D arrays."""
    x, wx = nodes_weights_1d(spec, breaks_x)
    y, wy = nodes_weights_1d(spec, breaks_y)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return X, Y, np.outer(wx, wy)


def _checked(values, what):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        bad = np.count_nonzero(~np.isfinite(values))
        raise NumericalError(f"{what}: {bad} non-finite quadrature node value(s)")
    return values


def integrate_1d(f, spec=DEFAULT_QUADRATURE, breakpoints=(), lo=0.0, hi=1.0):
    """Composite Gauss-Legendre approximation of the integral of ``f``.

    ``f`` must accept a 1D array of abscissae.

    >>> round(integrate_1d(lambda x: x**2), 15)
    0.333333333333333
    """
    x, w = nodes_weights_1d(spec, breakpoints, lo, hi)
    vals = np.broadcast_to(_checked(f(x), "integrate_1d"), x.shape)
    return float(np.dot(vals, w))


def integrate_2d(f, spec=DEFAULT_QUADRATURE, breaks_x=(), breaks_y=()):
    """Tensor-product rule for ``f(x, y)`` over the unit square."""
    X, Y, W = nodes_weights_2d(spec, breaks_x, breaks_y)
    vals = np.broadcast_to(_checked(f(X, Y), "integrate_2d"), X.shape)
    return float(np.sum(vals * W))


def invert_monotone(F, u, tol=1e-12, lo=0.0, hi=1.0):
    """Generalised inverse ``inf{x : F(x) >= u}`` of a nondecreasing ``F``.

    Vectorised bisection; scalars in, scalar out.  Bisection runs until the
    bracket is below double resolution, so for continuous ``F`` the result
    satisfies ``|F(x) - u| <= tol`` whenever ``F`` is Lipschitz with a
    constant below ``tol / 1e-16``.
    """
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    f_lo = float(np.asarray(F(np.array([lo]))).ravel()[0])
    f_hi = float(np.asarray(F(np.array([hi]))).ravel()[0])
    slack = max(tol, 1e-15)
    if np.any(u < f_lo - slack) or np.any(u > f_hi + slack) or np.any(np.isnan(u)):
        raise DomainError(f"level outside [F({lo}), F({hi})] = [{f_lo}, {f_hi}]")
    a = np.full(u.shape, lo, dtype=float)
    b = np.full(u.shape, hi, dtype=float)
    at_lo = u <= f_lo
    for _ in range(200):
        if np.all(b - a <= 4e-16 * np.maximum(1.0, np.abs(b))):
            break
        m = 0.5 * (a + b)
        below = np.asarray(F(m), dtype=float) < u
        a = np.where(below, m, a)
        b = np.where(below, b, m)
    x = np.where(at_lo, lo, b)
    return float(x[0]) if scalar else x


def maximize_concave_1d(h, bracket, tol=1e-10):
    """Golden-section search for the maximum of a concave ``h`` on ``bracket``.

    Returns ``(argmax, max)``.  The endpoints are compared with the interior
    optimum so that boundary maxima are returned exactly.
    """
    a, b = float(bracket[0]), float(bracket[1])
    if not b >= a:
        raise DomainError(f"empty bracket {bracket}")

    def ev(t):
        v = float(h(t))
        if not np.isfinite(v):
            raise NumericalError(f"non-finite objective at {t}")
        return v

    ha, hb = ev(a), ev(b)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    hc, hd = ev(c), ev(d)
    lo, hi = a, b
    while hi - lo > tol:
        if hc >= hd:
            hi, d, hd = d, c, hc
            c = hi - _INVPHI * (hi - lo)
            hc = ev(c)
        else:
            lo, c, hc = c, d, hd
            d = lo + _INVPHI * (hi - lo)
            hd = ev(d)
    mid = 0.5 * (lo + hi)
    best = max([(ev(mid), mid), (ha, a), (hb, b)])
    return best[1], best[0]


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by ``(seed, stream_id)``.

    Backed by the counter-based Philox generator seeded through
    ``SeedSequence``; substreams are addressed by extending the spawn key, so
    streams can be handed to workers without coordination.
    """

    seed: int
    stream_id: int = 0
    substream: tuple = ()

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= int(v) < 2**64:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def generator(self):
        ss = np.random.SeedSequence(int(self.seed),
                                    spawn_key=(int(self.stream_id), *self.substream))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index):
        return RngStream(self.seed, self.stream_id, (*self.substream, int(index)))

    def split(self, k):
        return [self.child(i) for i in range(k)]

    def as_dict(self):
        return {"seed": int(self.seed), "stream_id": int(self.stream_id),
                "substream": list(self.substream)}


def as_generator(rng):
    """Accept an ``RngStream``, a ``Generator`` or an int seed."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(int(rng)).generator()


def antiderivative(f, breakpoints=(), spec=DEFAULT_QUADRATURE, table_panels=1024):
    """Return ``x -> int_0^x f`` on [0, 1].

    A cumulative table is built on ``table_panels`` panels merged with the
    breakpoints; each query adds one Gauss-Legendre panel from the nearest
    table edge, so piecewise smooth ``f`` aligned with its breakpoints is
    integrated to quadrature accuracy.
    """
    t, w = _leggauss(int(spec.nodes_1d))
    edges = panel_edges(QuadratureSpec(spec.nodes_1d, table_panels), breakpoints)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    vals = _checked(f(((a + b) * 0.5 + half * t[None, :]).ravel()), "antiderivative")
    cum = np.concatenate(([0.0], np.cumsum((vals.reshape(half.shape[0], -1) * w).sum(1) * half[:, 0])))

    def F(x):
        xa = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        flat = xa.ravel()
        i = np.clip(np.searchsorted(edges, flat, side="right") - 1, 0, len(edges) - 2)
        lo = edges[i]
        h = 0.5 * (flat - lo)
        pts = lo[:, None] + h[:, None] * (t[None, :] + 1.0)
        part = (np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape) * w).sum(1) * h
        out = (cum[i] + part).reshape(xa.shape)
        return float(out) if np.ndim(x) == 0 else out

    return F
