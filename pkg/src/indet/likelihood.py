"""Average likelihood, Kullback-Leibler divergence and the CDF sup-metric."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .coupling import BivariateLaw, couple_indetermination, margins_of
from .errors import CompatibilityError, IntegrabilityError
from .margins import check_compatibility
from .numerics import DEFAULT_QUADRATURE, integrate_1d, nodes_weights_2d

ZERO_DENSITY = 1e-300


@dataclass(frozen=True)
class LikelihoodValue:
    value: float
    integrand_max: float

    def __float__(self):
        return self.value


def _square_integrable(law):
    if law.kind == "custom":
        return law.sup_norm is None or math.isfinite(law.sup_norm)
    return law.margin_x.square_integrable and law.margin_y.square_integrable


def _union(*seqs):
    return tuple(sorted(set().union(*map(set, seqs))))


def avg_likelihood(P, Q, spec=DEFAULT_QUADRATURE):
    """``int int pi_P pi_Q`` by tensor Gauss-Legendre quadrature.

    ``avg_likelihood(P, P)`` is the minimal-trade cost ``int int pi_P^2``.
    """
    for law in (P, Q):
        if not _square_integrable(law):
            raise IntegrabilityError(f"{law.kind} law is not square integrable")
    X, Y, W = nodes_weights_2d(spec, _union(P.breaks_x, Q.breaks_x), _union(P.breaks_y, Q.breaks_y))
    vals = np.asarray(P.density(X, Y), dtype=float) * np.asarray(Q.density(X, Y), dtype=float)
    return LikelihoodValue(float(np.sum(vals * W)), float(np.max(vals)))


def avg_likelihood_vs_indet(h, f, g, spec=DEFAULT_QUADRATURE):
    """``L(h, pi+_{f,g}) = int f h_x + int g h_y - 1`` from the margins of ``h``.

    Only 1D quadratures are needed; the dependence structure of ``h`` does not
    enter.
    """
    rep = check_compatibility(f, g)
    if not rep.ok:
        raise CompatibilityError(f"incompatible margins (slack {rep.slack:.3g})", slack=rep.slack)
    hx, hy = margins_of(h)
    for m in (f, g, hx, hy):
        if not m.square_integrable:
            raise IntegrabilityError(f"{m!r} is not square integrable")
    bx = _union(f.quadrature_breaks, hx.quadrature_breaks)
    by = _union(g.quadrature_breaks, hy.quadrature_breaks)
    ix = integrate_1d(lambda x: f._density(x) * hx._density(x), spec, bx)
    iy = integrate_1d(lambda y: g._density(y) * hy._density(y), spec, by)
    return LikelihoodValue(ix + iy - 1.0, max(f.f_max * hx.f_max, g.f_max * hy.f_max))


def _midpoints(breaks, grid):
    e = np.union1d(np.linspace(0.0, 1.0, grid + 1), [b for b in breaks if 0 < b < 1])
    return 0.5 * (e[:-1] + e[1:])


def kl_divergence(P, Q, spec=DEFAULT_QUADRATURE, grid=200):
    """``int log(pi_P / pi_Q) pi_P``; ``inf`` when ``P`` charges a zero of ``Q``.

    Support is checked on the quadrature nodes and on the cell midpoints of a
    ``grid x grid`` lattice refined at breakpoints.  Densities below 1e-300 count as zero.
    """
    bx = _union(P.breaks_x, Q.breaks_x)
    by = _union(P.breaks_y, Q.breaks_y)
    X, Y, W = nodes_weights_2d(spec, bx, by)
    p = np.asarray(P.density(X, Y), dtype=float)
    q = np.asarray(Q.density(X, Y), dtype=float)
    pos = p > ZERO_DENSITY
    if np.any(pos & (q <= ZERO_DENSITY)):
        return math.inf
    # cell midpoints of a lattice refined at breakpoints: isolated zeros on
    # lines or corners carry no mass and must not count as violations
    gx = _midpoints(bx, grid)
    gy = _midpoints(by, grid)
    GX, GY = np.meshgrid(gx, gy, indexing="ij")
    if np.any((np.asarray(P.density(GX, GY)) > ZERO_DENSITY) & (np.asarray(Q.density(GX, GY)) <= ZERO_DENSITY)):
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(pos, p * np.log(np.where(pos, p, 1.0) / np.where(pos, q, 1.0)), 0.0)
    return float(np.sum(integrand * W))


def _ecdf_at(points, xs, ys, strict=False):
    """Fraction of ``points`` in ``[0, x] x [0, y]`` (``<`` when ``strict``)."""
    px, py = points[:, 0], points[:, 1]
    out = np.empty(len(xs))
    step = max(1, 2_000_000 // max(len(px), 1))
    for k in range(0, len(xs), step):
        xa, ya = xs[k:k + step, None], ys[k:k + step, None]
        if strict:
            hit = (px[None, :] < xa) & (py[None, :] < ya)
        else:
            hit = (px[None, :] <= xa) & (py[None, :] <= ya)
        out[k:k + step] = hit.sum(1)
    return out / len(px)


def _ecdf_grid(points, xs, ys):
    ix = np.searchsorted(xs, points[:, 0], side="left")
    iy = np.searchsorted(ys, points[:, 1], side="left")
    keep = (ix < len(xs)) & (iy < len(ys))
    counts = np.zeros((len(xs), len(ys)))
    np.add.at(counts, (ix[keep], iy[keep]), 1.0)
    return counts.cumsum(0).cumsum(1) / len(points)


def rho_distance(P, Q, grid=200):
    """``sup |P([0,x]x[0,y]) - Q([0,x]x[0,y])|`` over a lattice.

    ``P`` may be a law or an :class:`~indet.sampling.EmpiricalSample`; for a
    sample the jumps of its CDF (the sample points, with both one-sided
    values) are examined as well.
    """
    xs = np.linspace(0.0, 1.0, grid)
    ys = xs
    Qg = Q.cdf_grid(xs, ys)
    if isinstance(P, BivariateLaw):
        return float(np.max(np.abs(P.cdf_grid(xs, ys) - Qg)))
    pts = np.asarray(P.points, dtype=float)
    best = float(np.max(np.abs(_ecdf_grid(pts, xs, ys) - Qg)))
    qx = np.asarray(Q.cdf(pts[:, 0], pts[:, 1]), dtype=float)
    best = max(best, float(np.max(np.abs(_ecdf_at(pts, pts[:, 0], pts[:, 1]) - qx))))
    best = max(best, float(np.max(np.abs(_ecdf_at(pts, pts[:, 0], pts[:, 1], strict=True) - qx))))
    return best


def indet_l2(f, g, spec=DEFAULT_QUADRATURE):
    """``L(pi+, pi+)`` computed through the 2D path."""
    p = couple_indetermination(f, g)
    return avg_likelihood(p, p, spec).value
