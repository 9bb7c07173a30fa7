"""Bivariate laws on the unit square with prescribed margins.

The central object is the indetermination coupling ``pi+(x, y) = f(x) + g(y) - 1``,
the minimiser of ``int pi^2`` among laws with margins ``(f, g)``.  Independence,
FGM and additive perturbations provide margin-matched comparison laws.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import (CompatibilityError, DomainError, MarginMismatchError,
                     PositivityError)
from .margins import check_compatibility
from .numerics import (DEFAULT_QUADRATURE, QuadratureSpec, _leggauss, antiderivative,
                       integrate_1d, integrate_2d, nodes_weights_1d, panel_edges)

VALIDATION_GRID = 200


@dataclass(frozen=True)
class BivariateLaw:
    """A law on [0, 1]^2 given by its density, CDF and declared margins.

    ``density`` and ``cdf`` take broadcastable arrays ``(x, y)``.
    ``sup_norm`` is an analytic upper bound of the density (``inf`` if
    unbounded, ``None`` if unknown).
    """

    density: object
    cdf: object
    margin_x: object
    margin_y: object
    kind: str
    params: dict = field(default_factory=dict)
    sup_norm: float | None = None
    extra_breaks_x: tuple = ()
    extra_breaks_y: tuple = ()

    def __call__(self, x, y):
        return self.density(x, y)

    @property
    def breaks_x(self):
        return tuple(sorted(set(self.margin_x.quadrature_breaks) | set(self.extra_breaks_x)))

    @property
    def breaks_y(self):
        return tuple(sorted(set(self.margin_y.quadrature_breaks) | set(self.extra_breaks_y)))

    @property
    def bounded(self):
        return self.sup_norm is not None and math.isfinite(self.sup_norm)

    def mass(self, spec=DEFAULT_QUADRATURE):
        return integrate_2d(self.density, spec, self.breaks_x, self.breaks_y)

    def cdf_grid(self, xs, ys, spec=QuadratureSpec(8, 1)):
        """``Pi(xs[i], ys[j])`` on a lattice.

        Closed-form CDFs are evaluated directly; otherwise cell masses between
        lattice lines (and breakpoints) are integrated and accumulated, which is
        exact on the lattice up to quadrature error.
        """
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if self.kind != "custom" or self.params.get("has_cdf"):
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            return np.asarray(self.cdf(X, Y), dtype=float)
        ex = np.union1d(np.concatenate(([0.0], np.clip(xs, 0, 1))), self.breaks_x)
        ey = np.union1d(np.concatenate(([0.0], np.clip(ys, 0, 1))), self.breaks_y)
        t, w = _leggauss(int(spec.nodes_1d))

        def rule(e):
            a, b = e[:-1, None], e[1:, None]
            h = 0.5 * (b - a)
            return ((a + b) * 0.5 + h * t).ravel(), (h * w).ravel()

        x, wx = rule(ex)
        y, wy = rule(ey)
        X, Y = np.meshgrid(x, y, indexing="ij")
        vals = np.asarray(self.density(X, Y), dtype=float) * np.outer(wx, wy)
        k = len(t)
        cells = vals.reshape(len(ex) - 1, k, len(ey) - 1, k).sum(axis=(1, 3))
        cum = np.zeros((len(ex), len(ey)))
        cum[1:, 1:] = cells.cumsum(0).cumsum(1)
        ix = np.searchsorted(ex, np.clip(xs, 0, 1))
        iy = np.searchsorted(ey, np.clip(ys, 0, 1))
        return cum[np.ix_(ix, iy)]

    def validate(self, grid=VALIDATION_GRID, tol=1e-9, spec=DEFAULT_QUADRATURE):
        """Check positivity, total mass and margins; raises on violation."""
        check_positivity(self.density, self.breaks_x, self.breaks_y, grid)
        m = self.mass(spec)
        if abs(m - 1.0) > tol:
            raise DomainError(f"{self.kind} law has mass {m}")
        xs = (np.arange(100) + 0.5) / 100
        mx, my = marginal_densities(self, xs, xs, spec)
        ex = np.max(np.abs(mx - self.margin_x.density(xs)))
        ey = np.max(np.abs(my - self.margin_y.density(xs)))
        if max(ex, ey) > tol:
            raise MarginMismatchError(f"{self.kind} law margins off by {max(ex, ey):.3g}")
        return {"mass": m, "margin_error_x": float(ex), "margin_error_y": float(ey)}


def _validation_points(breaks, grid):
    pts = [np.linspace(0.0, 1.0, grid)]
    b = np.asarray([v for v in breaks if 0.0 < v < 1.0])
    if len(b):
        pts += [b, np.clip(b - 1e-12, 0, 1)]
    return np.unique(np.concatenate(pts))


def check_positivity(density, breaks_x=(), breaks_y=(), grid=VALIDATION_GRID):
    """Raise ``PositivityError`` at the most negative validation node."""
    xs = _validation_points(breaks_x, grid)
    ys = _validation_points(breaks_y, grid)
    # the power-law origin is singular; nudge it inside
    xs[0] = ys[0] = 1e-300
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    with np.errstate(invalid="ignore"):
        vals = np.asarray(density(X, Y), dtype=float)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    k = np.unravel_index(np.argmin(vals), vals.shape)
    if vals[k] < 0:
        pt = (float(xs[k[0]]), float(ys[k[1]]))
        raise PositivityError(f"density {vals[k]:.3g} < 0 at {pt}", point=pt, value=float(vals[k]))
    return float(vals[k])


def couple_indetermination(f, g):
    """The indetermination coupling ``f(x) + g(y) - 1`` of compatible margins."""
    rep = check_compatibility(f, g)
    if not rep.ok:
        raise CompatibilityError(
            f"min f + min g - 1 = {rep.slack:.6g} < 0: no indetermination coupling",
            slack=rep.slack)

    def density(x, y):
        return np.maximum(f.density(x) + g.density(y) - 1.0, 0.0)

    def cdf(x, y):
        x = np.clip(x, 0.0, 1.0)
        y = np.clip(y, 0.0, 1.0)
        return y * f.cdf(x) + x * g.cdf(y) - x * y

    return BivariateLaw(density, cdf, f, g, "indetermination",
                        sup_norm=f.f_max + g.f_max - 1.0)


def couple_independence(f, g):
    """Product density ``f(x) g(y)``."""
    def density(x, y):
        return f.density(x) * g.density(y)

    def cdf(x, y):
        return f.cdf(x) * g.cdf(y)

    return BivariateLaw(density, cdf, f, g, "independence", sup_norm=f.f_max * g.f_max)


def couple_fgm(f, g, theta):
    """Farlie-Gumbel-Morgenstern law with margins ``(f, g)``."""
    theta = float(theta)
    if abs(theta) > 1.0:
        raise DomainError(f"FGM needs |theta| <= 1, got {theta}")

    def density(x, y):
        a = 1.0 - 2.0 * f.cdf(x)
        b = 1.0 - 2.0 * g.cdf(y)
        return f.density(x) * g.density(y) * (1.0 + theta * a * b)

    def cdf(x, y):
        F, G = f.cdf(x), g.cdf(y)
        return F * G * (1.0 + theta * (1.0 - F) * (1.0 - G))

    return BivariateLaw(density, cdf, f, g, "fgm", {"theta": theta},
                        sup_norm=f.f_max * g.f_max * (1.0 + abs(theta)))


def _grid_sup(fn, breaks):
    x = _validation_points(breaks, 2001)
    return float(np.max(np.abs(fn(x))))


def couple_perturbation(base, eps, phi, psi, breaks_x=(), breaks_y=(),
                        phi_sup=None, psi_sup=None, spec=DEFAULT_QUADRATURE):
    """``base + eps * phi(x) psi(y)`` for zero-mean ``phi`` and ``psi``.

    The margins of ``base`` are preserved exactly.  Breakpoints of ``phi``
    and ``psi`` (e.g. ends of their supports) should be supplied so that
    quadrature panels and positivity checks are aligned with them.
    """
    eps = float(eps)
    bx = tuple(sorted(set(base.breaks_x) | set(breaks_x)))
    by = tuple(sorted(set(base.breaks_y) | set(breaks_y)))
    mphi = integrate_1d(phi, spec, bx)
    mpsi = integrate_1d(psi, spec, by)
    if abs(mphi) > 1e-10 or abs(mpsi) > 1e-10:
        raise DomainError(f"perturbation factors must have zero mean (got {mphi:.3g}, {mpsi:.3g})")

    def density(x, y):
        return base.density(x, y) + eps * phi(np.asarray(x, dtype=float)) * psi(np.asarray(y, dtype=float))

    check_positivity(density, bx, by)
    Phi = antiderivative(phi, bx, spec)
    Psi = antiderivative(psi, by, spec)

    def cdf(x, y):
        return base.cdf(x, y) + eps * Phi(x) * Psi(y)

    if phi_sup is None:
        phi_sup = _grid_sup(phi, bx)
    if psi_sup is None:
        psi_sup = _grid_sup(psi, by)
    sup = None if base.sup_norm is None else base.sup_norm + abs(eps) * phi_sup * psi_sup
    return BivariateLaw(density, cdf, base.margin_x, base.margin_y, "perturbation",
                        {"eps": eps, "base": base.kind, "base_law": base, "phi": phi, "psi": psi},
                        sup_norm=sup, extra_breaks_x=tuple(breaks_x), extra_breaks_y=tuple(breaks_y))


def couple_custom(density, margin_x, margin_y, cdf=None, sup_norm=None,
                  breaks_x=(), breaks_y=(), check=True):
    """Wrap a user density with declared margins.

    With ``check`` the declared margins are compared against numerical
    marginals (see :func:`margins_of`).
    """
    params = {"has_cdf": cdf is not None}
    if cdf is None:
        def cdf(x, y):
            return _cdf_by_quadrature(density, x, y, breaks_x, breaks_y)
    law = BivariateLaw(density, cdf, margin_x, margin_y, "custom", params,
                       sup_norm=sup_norm, extra_breaks_x=tuple(breaks_x),
                       extra_breaks_y=tuple(breaks_y))
    if check:
        margins_of(law)
    return law


def _cdf_by_quadrature(density, x, y, breaks_x, breaks_y, n=16, panels=8):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.empty(x.shape)
    for idx in np.ndindex(x.shape):
        xi, yi = float(np.clip(x[idx], 0, 1)), float(np.clip(y[idx], 0, 1))
        if xi == 0.0 or yi == 0.0:
            out[idx] = 0.0
            continue
        spec = QuadratureSpec(n, panels)
        u, wu = nodes_weights_1d(spec, breaks_x, 0.0, xi)
        v, wv = nodes_weights_1d(spec, breaks_y, 0.0, yi)
        U, V = np.meshgrid(u, v, indexing="ij")
        out[idx] = float(np.sum(np.asarray(density(U, V)) * np.outer(wu, wv)))
    return float(out) if out.ndim == 0 else out


def marginal_densities(law, xs, ys, spec=DEFAULT_QUADRATURE):
    """Numerically integrate out the other coordinate at ``xs`` and ``ys``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    ny, wy = nodes_weights_1d(spec, law.breaks_y)
    nx, wx = nodes_weights_1d(spec, law.breaks_x)
    mx = np.asarray(law.density(xs[:, None], ny[None, :])) @ wy
    my = wx @ np.asarray(law.density(nx[:, None], ys[None, :]))
    return mx, my


def margins_of(law, spec=DEFAULT_QUADRATURE, tol=1e-6):
    """Return ``(margin_x, margin_y)``.

    For built-in kinds the stored margins are returned untouched.  For custom
    laws the declared margins are cross-checked against numerical marginals on
    a 100-point grid and a ``MarginMismatchError`` is raised beyond ``tol``.
    """
    if law.kind != "custom":
        return law.margin_x, law.margin_y
    xs = (np.arange(100) + 0.5) / 100
    mx, my = marginal_densities(law, xs, xs, spec)
    err = max(np.max(np.abs(mx - law.margin_x.density(xs))),
              np.max(np.abs(my - law.margin_y.density(xs))))
    if err > tol:
        raise MarginMismatchError(f"declared margins differ from numerical marginals by {err:.3g}")
    return law.margin_x, law.margin_y


def l2_norm_sq(law, spec=DEFAULT_QUADRATURE):
    """``int int pi^2``: the minimal-trade cost of a law."""
    return integrate_2d(lambda x, y: law.density(x, y) ** 2, spec, law.breaks_x, law.breaks_y)


def checkerboard(k=2, amplitude=0.5):
    """Custom density ``1 + a`` / ``1 - a`` alternating on a ``k x k`` board.

    Its margins are uniform whenever ``k`` is even.
    """
    from .margins import Uniform
    edges = tuple(i / k for i in range(1, k))

    def density(x, y):
        i = np.minimum(np.floor(np.asarray(x) * k), k - 1)
        j = np.minimum(np.floor(np.asarray(y) * k), k - 1)
        return 1.0 + amplitude * (1.0 - 2.0 * ((i + j) % 2))

    return couple_custom(density, Uniform(), Uniform(), sup_norm=1.0 + abs(amplitude),
                         breaks_x=edges, breaks_y=edges)
