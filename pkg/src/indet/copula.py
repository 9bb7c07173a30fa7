"""The margin-dependent copula of an indetermination coupling.

For margins with quantiles ``Qf = F^-1`` and ``Qg = G^-1`` the copula is
``C(u, v) = v Qf(u) + u Qg(v) - Qf(u) Qg(v) = uv - (Qf(u) - u)(Qg(v) - v)``.
Two margin pairs share it exactly when their quantile deviations from the
identity are linked by a factor ``lambda`` (and ``1/lambda``).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import (DomainError, MonotonicityError, SingularDensityError)
from .margins import FunctionMargin, Histogram, check_compatibility
from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, integrate_1d, nodes_weights_1d


@dataclass(frozen=True)
class SpecificIndetCopula:
    """Copula extracted from the indetermination coupling of ``(F, G)``."""

    F: object
    G: object

    def __call__(self, u, v):
        qf = np.asarray(self.F.quantile(u), dtype=float)
        qg = np.asarray(self.G.quantile(v), dtype=float)
        out = np.asarray(v) * qf + np.asarray(u) * qg - qf * qg
        return float(out) if out.ndim == 0 else out

    def density(self, u, v):
        """Mixed derivative ``1/g(Qg(v)) + 1/f(Qf(u)) - 1/(f g)``.

        Raises ``SingularDensityError`` where a pulled-back margin density
        vanishes.  Infinite margin densities (power laws at 0) contribute a
        zero reciprocal, so the result stays finite.
        """
        a = np.asarray(self.F.density(self.F.quantile(u)), dtype=float)
        b = np.asarray(self.G.density(self.G.quantile(v)), dtype=float)
        if np.any(a <= 0) or np.any(b <= 0):
            raise SingularDensityError("margin density vanishes at the pulled-back point")
        with np.errstate(divide="ignore"):
            ia, ib = 1.0 / a, 1.0 / b
        out = ib + ia - ia * ib
        return float(out) if out.ndim == 0 else out

    def deviation(self, u, v):
        """``C+(u, v) - uv``."""
        du = np.asarray(self.F.quantile(u)) - np.asarray(u)
        dv = np.asarray(self.G.quantile(v)) - np.asarray(v)
        out = -du * dv
        return float(out) if np.ndim(out) == 0 else out


def copula_eval(cop, u, v):
    return cop(u, v)


def copula_density(cop, u, v):
    return cop.density(u, v)


def copula_grid(cop, n=50):
    """Rows ``(u, v, C_indet, C_indep, difference)`` on an ``n x n`` lattice."""
    t = np.linspace(0.0, 1.0, n)
    U, V = np.meshgrid(t, t, indexing="ij")
    c = np.asarray(cop(U, V))
    ci = U * V
    return np.column_stack([U.ravel(), V.ravel(), c.ravel(), ci.ravel(), (c - ci).ravel()])


# -- shared copulas -----------------------------------------------------------

def lambda_bounds(f, g):
    """``(1 - 1/max f, max g / (max g - 1))``; the upper end is ``inf`` when ``max g <= 1``."""
    lower = 1.0 - 1.0 / f.f_max if f.f_max > 0 else -math.inf
    upper = g.f_max / (g.f_max - 1.0) if g.f_max > 1.0 else math.inf
    if math.isinf(g.f_max):
        upper = 1.0
    return lower, upper


@dataclass(frozen=True)
class LambdaReport:
    exists: bool
    lam: float
    lower: float
    upper: float
    residual: float

    def as_dict(self):
        return {"exists": self.exists, "lambda": self.lam, "lower": self.lower,
                "upper": self.upper, "residual": self.residual}


def lambda_share_test(F, G, R, S, tol=1e-9, grid=200):
    """Decide whether ``(R, S)`` shares the indetermination copula of ``(F, G)``.

    ``lambda`` is the median of the pointwise ratios ``(Qf - x)/(Qr - x)`` over
    grid points with a non-negligible denominator (the ``S`` side is used
    when ``R`` is the identity).  Both linking equations are then checked on
    the whole grid and ``lambda`` against its admissible interval.
    """
    x = (np.arange(grid) + 0.5) / grid
    dF = np.asarray(F.quantile(x)) - x
    dG = np.asarray(G.quantile(x)) - x
    dR = np.asarray(R.quantile(x)) - x
    dS = np.asarray(S.quantile(x)) - x
    lower, upper = lambda_bounds(F, G)
    mr = np.abs(dR) > 1e-8
    mg = np.abs(dG) > 1e-8
    if mr.any():
        lam = float(np.median(dF[mr] / dR[mr]))
    elif mg.any():
        lam = float(np.median(dS[mg] / dG[mg]))
    else:
        lam = 1.0
    if lam > 0 and np.isfinite(lam):
        residual = float(max(np.max(np.abs(dF - lam * dR)), np.max(np.abs(dG - dS / lam))))
    else:
        # no positive factor can link the deviations; report the raw misfit
        residual = float(max(np.max(np.abs(dF)), np.max(np.abs(dG))))
        lam = float("nan")
    exists = bool(residual <= tol and lam > 0 and lower - 1e-12 <= lam <= upper + 1e-12)
    return LambdaReport(exists, lam, lower, upper, residual)


def shared_family(F, G, lam):
    """Margins ``(R, S)`` sharing the indetermination copula of ``(F, G)``.

    ``R^-1(x) = x + (F^-1(x) - x)/lam`` and ``S^-1(y) = y + lam (G^-1(y) - y)``.
    ``lam`` must be positive and inside :func:`lambda_bounds`.
    """
    lam = float(lam)
    lower, upper = lambda_bounds(F, G)
    if lam == 1.0:
        return F, G
    if not lam > 0 or lam < lower - 1e-12 or lam > upper + 1e-12:
        raise DomainError(f"lambda={lam} outside admissible ({max(lower, 0.0)}, {upper})")

    def q_r(u):
        u = np.asarray(u, dtype=float)
        return u + (np.asarray(F.quantile(u)) - u) / lam

    def q_s(v):
        v = np.asarray(v, dtype=float)
        return v + lam * (np.asarray(G.quantile(v)) - v)

    grid = np.linspace(0.0, 1.0, 2001)
    for name, q in (("R", q_r), ("S", q_s)):
        if np.any(np.diff(q(grid)) < -1e-12):
            raise MonotonicityError(f"quantile of {name} decreases for lambda={lam}")

    def recip(v):
        with np.errstate(divide="ignore"):
            return 1.0 / v

    def r_of_f(fv):
        with np.errstate(divide="ignore", invalid="ignore"):
            return lam / (recip(fv) - 1.0 + lam)

    def s_of_g(gv):
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / (1.0 + lam * (recip(gv) - 1.0))

    def bound(fn, v):
        out = float(fn(np.float64(v)))
        return math.inf if out < 0 or not math.isfinite(out) else out

    def make(src, q, conv, role):
        from .numerics import invert_monotone

        def cdf(x):
            return invert_monotone(q, np.asarray(x, dtype=float), tol=1e-12)

        def density(x):
            u = cdf(np.atleast_1d(np.asarray(x, dtype=float)))
            out = conv(np.asarray(src.density(src.quantile(u)), dtype=float))
            return out if np.ndim(x) else float(out[0])

        b = [float(q(np.float64(src.cdf(t)))) for t in src.breakpoints]
        return FunctionMargin(density, cdf, quantile=q,
                              f_min=bound(conv, src.f_min), f_max=bound(conv, src.f_max),
                              breakpoints=b, kind="lambda_shared",
                              info={"lambda": lam, "role": role, "source": src.to_dict()})

    return make(F, q_r, r_of_f, "R"), make(G, q_s, s_of_g, "S")


# -- spread against independence --------------------------------------------

def _crossings(d, n=4097):
    """Abscissae in (0, 1) where ``d`` changes sign, refined by bisection."""
    u = np.linspace(0.0, 1.0, n)
    du = np.asarray(d(u))
    idx = np.nonzero(du[:-1] * du[1:] < 0)[0]
    if not len(idx):
        return np.empty(0)
    a, b = u[idx], u[idx + 1]
    sa = np.sign(du[idx])
    for _ in range(60):
        m = 0.5 * (a + b)
        same = np.sign(np.asarray(d(m))) == sa
        a = np.where(same, m, a)
        b = np.where(same, b, m)
    return 0.5 * (a + b)


def quantile_breaks(m):
    """Panel breaks for integrands built on ``m.quantile``."""
    return tuple(float(v) for v in np.atleast_1d(m.cdf(np.asarray(m.breakpoints, dtype=float))))


def abs_quantile_deviation(m, spec=DEFAULT_QUADRATURE):
    """``int_0^1 |F^-1(u) - u| du`` with panels split at kinks and crossings."""
    def d(u):
        return np.asarray(m.quantile(u), dtype=float) - u

    breaks = set(quantile_breaks(m)) | set(_crossings(d).tolist())
    return integrate_1d(lambda u: np.abs(d(u)), spec, tuple(sorted(breaks)))


def spread_delta1(F, G, spec=DEFAULT_QUADRATURE):
    """L1 distance between the independence copula and ``C+_{F,G}``.

    Uses the factorised form ``int|F^-1 - u| * int|G^-1 - v|``; it never
    exceeds 1/16 on compatible pairs.
    """
    return abs_quantile_deviation(F, spec) * abs_quantile_deviation(G, spec)


def extremal_pair(epsilon):
    """Smoothed maximiser of the spread: mass 1/2 spread on ``[0, eps]`` over a
    uniform background of mass 1/2, for both coordinates."""
    eps = float(epsilon)
    if not 0.0 < eps <= 0.1:
        raise DomainError(f"epsilon must lie in (0, 0.1], got {eps}")
    h = Histogram([0.0, eps, 1.0], [0.5 + 0.5 * eps, 0.5 - 0.5 * eps])
    return h, Histogram(h.edges, h.masses)


def rect_integral(fn, u1, u2, v1, v2, spec=QuadratureSpec(16, 8), breaks_u=(), breaks_v=()):
    """Tensor Gauss-Legendre integral of ``fn(u, v)`` over a rectangle."""
    u, wu = nodes_weights_1d(spec, breaks_u, u1, u2)
    v, wv = nodes_weights_1d(spec, breaks_v, v1, v2)
    U, V = np.meshgrid(u, v, indexing="ij")
    return float(np.sum(np.asarray(fn(U, V)) * np.outer(wu, wv)))


def rect_spread(cop, u1, u2, v1, v2, spec=QuadratureSpec(16, 8)):
    """``int int_rect (C+ - C_indep)``, bounded by 1/16 in absolute value."""
    return rect_integral(lambda u, v: cop(u, v) - u * v, u1, u2, v1, v2, spec,
                         quantile_breaks(cop.F), quantile_breaks(cop.G))


def compatible(F, G):
    return check_compatibility(F, G).ok
