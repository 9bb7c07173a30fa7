"""Univariate margins on [0, 1] and the compatibility condition.

A margin bundles a density ``f``, its CDF ``F`` and quantile ``F^-1`` together
with exact bounds ``f_min``/``f_max``.  All callables are vectorised over numpy
arrays.  Two margins ``(f, g)`` admit an indetermination coupling when
``f_min + g_min >= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateError, DomainError
from .numerics import DEFAULT_QUADRATURE, integrate_1d, invert_monotone

# Graded panel edges towards a singular endpoint at 0.
_GRADING = tuple(2.0 ** -k for k in range(1, 41))

COMPAT_TOL = 1e-12


def _scalar_out(x, val):
    if np.ndim(x) == 0:
        return float(np.asarray(val).reshape(()))
    return val


class Margin:
    """Base class: a probability law on [0, 1] with a density.

    Subclasses implement ``_density``, ``_cdf`` and, when a closed form is
    available, ``_quantile``.  The default quantile is a vectorised bisection
    on the CDF.
    """

    kind = "abstract"
    f_min: float
    f_max: float
    breakpoints: tuple = ()

    # -- public evaluation -------------------------------------------------
    def density(self, x):
        xa = np.asarray(x, dtype=float)
        return _scalar_out(x, self._density(xa))

    def cdf(self, x):
        xa = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return _scalar_out(x, self._cdf(xa))

    def quantile(self, u):
        ua = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return _scalar_out(u, self._quantile(ua))

    __call__ = density

    def _quantile(self, u):
        return invert_monotone(self._cdf, u, tol=1e-12)

    # -- derived quantities ------------------------------------------------
    @property
    def bounded(self):
        return math.isfinite(self.f_max)

    @property
    def is_uniform(self):
        return self.f_min == 1.0 and self.f_max == 1.0

    @property
    def square_integrable(self):
        return math.isfinite(self.sq_integral())

    @property
    def quadrature_breaks(self):
        """Breakpoints for panel alignment, graded near a singular origin."""
        if not self.bounded:
            return tuple(sorted(set(self.breakpoints) | set(_GRADING)))
        return tuple(self.breakpoints)

    def sq_integral(self, spec=None):
        """``int f^2``; analytic in subclasses, quadrature otherwise."""
        return integrate_1d(lambda x: self._density(x) ** 2,
                            spec or DEFAULT_QUADRATURE, self.quadrature_breaks)

    def mass(self, spec=None):
        return integrate_1d(self._density, spec or DEFAULT_QUADRATURE,
                            self.quadrature_breaks)

    def params(self):
        return {}

    def to_dict(self):
        return {"kind": self.kind, **self.params()}

    def __repr__(self):
        p = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({p})"

    def validate(self, grid=10_000, tol=1e-9, spec=None):
        """Check the margin invariants; returns a dict of diagnostics.

        Raises ``DomainError`` on the first violated invariant.
        """
        mass = self.mass(spec)
        if self.bounded and abs(mass - 1.0) > 1e-10:
            raise DomainError(f"{self!r}: density integrates to {mass}")
        if abs(self._cdf(np.array([0.0]))[0]) > tol or abs(self._cdf(np.array([1.0]))[0] - 1) > tol:
            raise DomainError(f"{self!r}: CDF does not run from 0 to 1")
        x = (np.arange(grid) + 0.5) / grid
        Fx = self._cdf(x)
        if np.any(np.diff(Fx) < -tol):
            raise DomainError(f"{self!r}: CDF decreases")
        fx = self._density(x)
        if np.any(fx < self.f_min - tol) or np.any(fx > self.f_max + tol):
            raise DomainError(f"{self!r}: density leaves [f_min, f_max]")
        return {"mass": mass, "grid_min": float(fx.min()), "grid_max": float(fx.max())}


class Uniform(Margin):
    kind = "uniform"
    f_min = 1.0
    f_max = 1.0

    def _density(self, x):
        return np.ones_like(x)

    def _cdf(self, x):
        return x.copy()

    def _quantile(self, u):
        return u.copy()

    def sq_integral(self, spec=None):
        return 1.0

    def __eq__(self, other):
        return isinstance(other, Uniform)

    __hash__ = object.__hash__


class Power(Margin):
    """``F(x) = x**alpha``, ``f(x) = alpha * x**(alpha - 1)`` with ``0 < alpha <= 1``."""

    kind = "power"

    def __init__(self, alpha):
        alpha = float(alpha)
        if not 0.0 < alpha <= 1.0:
            raise DomainError(f"power margin needs 0 < alpha <= 1, got {alpha}")
        self.alpha = alpha
        self.f_min = alpha
        self.f_max = 1.0 if alpha == 1.0 else math.inf
        self.breakpoints = () if alpha == 1.0 else (0.0,)

    def _density(self, x):
        with np.errstate(divide="ignore"):
            return self.alpha * np.power(x, self.alpha - 1.0)

    def _cdf(self, x):
        return np.power(x, self.alpha)

    def _quantile(self, u):
        return np.power(u, 1.0 / self.alpha)

    def sq_integral(self, spec=None):
        a = self.alpha
        return a * a / (2 * a - 1) if a > 0.5 else math.inf

    def params(self):
        return {"alpha": self.alpha}


class Linear(Margin):
    """``f(x) = 1 + slope * (x - 1/2)`` with ``|slope| <= 2``.

    ``slope=2`` is ``2x``, ``slope=1`` is ``x + 1/2``, ``slope=-1`` is ``3/2 - x``.
    """

    kind = "linear"

    def __init__(self, slope):
        slope = float(slope)
        if abs(slope) > 2.0 + 1e-12:
            raise DomainError(f"linear margin needs |slope| <= 2, got {slope}")
        slope = min(max(slope, -2.0), 2.0)
        self.slope = slope
        self.f_min = 1.0 - abs(slope) / 2
        self.f_max = 1.0 + abs(slope) / 2

    def _density(self, x):
        return 1.0 + self.slope * (x - 0.5)

    def _cdf(self, x):
        return x + 0.5 * self.slope * (x * x - x)

    def _quantile(self, u):
        b = self.slope
        if b == 0.0:
            return u.copy()
        c = 1.0 - b / 2
        disc = np.sqrt(np.maximum(c * c + 2.0 * b * u, 0.0))
        den = c + disc
        with np.errstate(invalid="ignore", divide="ignore"):
            x = np.where(den > 0, 2.0 * u / np.where(den > 0, den, 1.0), 0.0)
        return np.clip(x, 0.0, 1.0)

    def sq_integral(self, spec=None):
        return 1.0 + self.slope ** 2 / 12.0

    def params(self):
        return {"slope": self.slope}


class Histogram(Margin):
    """Right-continuous step density with ``masses[i]`` on ``[edges[i], edges[i+1])``."""

    kind = "histogram"

    def __init__(self, edges, masses, heights=None):
        e = np.asarray(edges, dtype=float)
        m = np.asarray(masses, dtype=float)
        if e.ndim != 1 or len(e) != len(m) + 1 or len(m) < 1:
            raise DomainError("histogram needs len(edges) == len(masses) + 1")
        if e[0] != 0.0 or e[-1] != 1.0 or np.any(np.diff(e) <= 0):
            raise DomainError("histogram edges must increase from 0 to 1")
        if np.any(m < 0) or abs(m.sum() - 1.0) > 1e-12:
            raise DomainError(f"histogram masses must be >= 0 and sum to 1 (sum={m.sum()})")
        self.edges = e
        self.masses = m
        self.heights = m / np.diff(e)
        if heights is not None:
            # exact heights given by the caller; they must agree with the masses
            h = np.asarray(heights, dtype=float)
            if h.shape != self.heights.shape or np.max(np.abs(h - self.heights)) > 1e-9:
                raise DomainError("heights disagree with masses")
            self.heights = h
        self._cum = np.concatenate(([0.0], np.cumsum(m)))
        self._cum[-1] = 1.0
        self.f_min = float(self.heights.min())
        self.f_max = float(self.heights.max())
        self.breakpoints = tuple(float(v) for v in e[1:-1])

    @classmethod
    def from_heights(cls, edges, heights):
        e = np.asarray(edges, dtype=float)
        h = np.asarray(heights, dtype=float)
        m = h * np.diff(e)
        return cls(e, m, heights=h)

    def _bin(self, x):
        return np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.masses) - 1)

    def _density(self, x):
        out = self.heights[self._bin(x)]
        return np.where((x < 0) | (x > 1), 0.0, out)

    def _cdf(self, x):
        i = self._bin(x)
        return np.minimum(self._cum[i] + self.heights[i] * (x - self.edges[i]), 1.0)

    def _quantile(self, u):
        i = np.clip(np.searchsorted(self._cum, u, side="left") - 1, 0, len(self.masses) - 1)
        h = self.heights[i]
        with np.errstate(invalid="ignore", divide="ignore"):
            x = self.edges[i] + np.where(h > 0, (u - self._cum[i]) / np.where(h > 0, h, 1.0), 0.0)
        return np.clip(x, 0.0, 1.0)

    def sq_integral(self, spec=None):
        return float(np.sum(self.heights ** 2 * np.diff(self.edges)))

    def params(self):
        return {"edges": self.edges.tolist(), "masses": self.masses.tolist()}


class Shifted(Margin):
    """Density ``(base - c) / (1 - c)`` for a constant ``c < 1``.

    ``c <= 0`` mixes ``base`` with the uniform law (weight ``1/(1-c)`` on
    ``base``); ``0 < c <= base.f_min`` removes a uniform floor.  Both halves of
    the constructive decomposition are of this form.
    """

    def __init__(self, base, c, kind="shifted", info=None):
        c = float(c)
        if not c < 1.0:
            raise DomainError(f"shift constant must be < 1, got {c}")
        if c > base.f_min + 1e-15:
            raise DomainError(f"shift {c} exceeds base minimum {base.f_min}")
        self.base = base
        self.c = c
        self.kind = kind
        self.info = dict(info or {})
        k = 1.0 - c
        self.f_min = max((base.f_min - c) / k, 0.0)
        self.f_max = (base.f_max - c) / k
        self.breakpoints = tuple(base.breakpoints)

    def _density(self, x):
        return (self.base._density(x) - self.c) / (1.0 - self.c)

    def _cdf(self, x):
        return np.clip((self.base._cdf(x) - self.c * x) / (1.0 - self.c), 0.0, 1.0)

    def sq_integral(self, spec=None):
        b2 = self.base.sq_integral(spec)
        c = self.c
        return (b2 - 2 * c + c * c) / (1 - c) ** 2

    def params(self):
        return {**self.info, "base": self.base.to_dict()}


class FunctionMargin(Margin):
    """Margin from user callables; the quantile falls back to bisection."""

    kind = "custom"

    def __init__(self, density, cdf, quantile=None, f_min=None, f_max=None,
                 breakpoints=(), kind="custom", info=None, sq_integral=None):
        self._d = density
        self._F = cdf
        self._Q = quantile
        self.kind = kind
        self.info = dict(info or {})
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))
        self._sq = sq_integral
        if f_min is None or f_max is None:
            grid = (np.arange(10_000) + 0.5) / 10_000
            pts = np.concatenate((grid, [0.0, 1.0], self.breakpoints))
            vals = np.asarray(density(pts), dtype=float)
            f_min = float(vals.min()) if f_min is None else f_min
            f_max = float(vals.max()) if f_max is None else f_max
        self.f_min = float(f_min)
        self.f_max = float(f_max)

    def _density(self, x):
        return np.asarray(self._d(x), dtype=float)

    def _cdf(self, x):
        return np.asarray(self._F(x), dtype=float)

    def _quantile(self, u):
        if self._Q is not None:
            return np.asarray(self._Q(u), dtype=float)
        return invert_monotone(self._cdf, u, tol=1e-12)

    def sq_integral(self, spec=None):
        if self._sq is not None:
            return float(self._sq)
        return super().sq_integral(spec)

    def params(self):
        return dict(self.info)


# -- compatibility and the constructive decomposition ----------------------

@dataclass(frozen=True)
class CompatibilityReport:
    ok: bool
    slack: float

    def as_dict(self):
        return {"ok": self.ok, "slack": self.slack}


def check_compatibility(mu, nu, tol=COMPAT_TOL):
    """``ok`` iff ``min f + min g >= 1`` (up to ``tol`` of rounding)."""
    slack = float(mu.f_min + nu.f_min - 1.0)
    return CompatibilityReport(ok=bool(slack >= -tol), slack=slack)


def _shift(base, c, kind, info):
    # stay inside a closed family when possible
    if c == 0.0:
        return base
    if isinstance(base, Uniform):
        return Uniform()
    if isinstance(base, Histogram):
        h = np.clip((base.heights - c) / (1.0 - c), 0.0, None)
        m = h * np.diff(base.edges)
        if abs(m.sum() - 1.0) <= 1e-12:
            return Histogram(base.edges, m, heights=h)
        return Histogram(base.edges, m / m.sum())
    if isinstance(base, Linear):
        return Linear(base.slope / (1.0 - c))
    return Shifted(base, c, kind=kind, info=info)


def mix_with_uniform(base, weight, kind="mixture", info=None):
    """``weight * base + (1 - weight)``."""
    weight = float(weight)
    if not 0.0 <= weight <= 1.0:
        raise DomainError(f"mixture weight must lie in [0, 1], got {weight}")
    if weight == 0.0:
        return Uniform()
    return _shift(base, 1.0 - 1.0 / weight, kind, info or {"weight": weight})


def constructive_compose(alpha, r, s):
    """Return ``f = (1-alpha) r + alpha`` and ``g = alpha s + (1-alpha)``.

    The pair always satisfies the compatibility condition.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    f = mix_with_uniform(r, 1.0 - alpha, "constructive",
                         {"alpha": alpha, "role": "f", "component": r.to_dict()})
    g = mix_with_uniform(s, alpha, "constructive",
                         {"alpha": alpha, "role": "g", "component": s.to_dict()})
    return f, g


def constructive_decompose(f, g):
    """Invert :func:`constructive_compose` with ``alpha = min f``.

    Returns ``(alpha, r, s)`` with ``r = (f - alpha)/(1 - alpha)`` and
    ``s = (g - (1 - alpha))/alpha``.
    """
    alpha = float(f.f_min)
    if alpha <= 0.0 or alpha >= 1.0:
        raise DegenerateError(f"min f = {alpha}: the decomposition is degenerate")
    rep = check_compatibility(f, g)
    if not rep.ok:
        from .errors import CompatibilityError
        raise CompatibilityError(f"incompatible margins (slack {rep.slack:.3g})", slack=rep.slack)
    r = _shift(f, alpha, "residual", {"alpha": alpha, "role": "r"})
    s = _shift(g, min(1.0 - alpha, g.f_min), "residual", {"alpha": alpha, "role": "s"})
    return alpha, r, s


# -- general segments -------------------------------------------------------

@dataclass(frozen=True)
class SegmentMargin:
    """A law on ``[lo, hi]`` given by its density and CDF."""

    density: object
    cdf: object
    lo: float
    hi: float
    f_min: float
    f_max: float
    quantile: object = None
    breakpoints: tuple = ()


def stretch(margin, lo, hi):
    """Push a unit-interval margin forward to ``[lo, hi]``."""
    L = hi - lo
    if not L > 0:
        raise DomainError(f"need hi > lo, got [{lo}, {hi}]")
    return SegmentMargin(
        density=lambda x: margin.density((np.asarray(x) - lo) / L) / L,
        cdf=lambda x: margin.cdf((np.asarray(x) - lo) / L),
        quantile=lambda u: lo + L * np.asarray(margin.quantile(u)),
        lo=float(lo), hi=float(hi),
        f_min=margin.f_min / L, f_max=margin.f_max / L,
        breakpoints=tuple(lo + L * b for b in margin.breakpoints),
    )


class Rescaled(Margin):
    """Unit-interval image of a :class:`SegmentMargin` under ``x -> (x-lo)/(hi-lo)``."""

    kind = "affine"

    def __init__(self, seg):
        self.seg = seg
        self.L = seg.hi - seg.lo
        self.f_min = seg.f_min * self.L
        self.f_max = seg.f_max * self.L
        self.breakpoints = tuple((b - seg.lo) / self.L for b in seg.breakpoints)

    def _density(self, x):
        return self.L * np.asarray(self.seg.density(self.seg.lo + self.L * x), dtype=float)

    def _cdf(self, x):
        return np.asarray(self.seg.cdf(self.seg.lo + self.L * x), dtype=float)

    def _quantile(self, u):
        if self.seg.quantile is not None:
            return (np.asarray(self.seg.quantile(u), dtype=float) - self.seg.lo) / self.L
        return super()._quantile(u)

    def params(self):
        return {"lo": self.seg.lo, "hi": self.seg.hi}


@dataclass(frozen=True)
class AffineTransform:
    """The affine map ``[a, A] x [b, B] -> [0, 1]^2``."""

    a: float
    A: float
    b: float
    B: float

    @property
    def jacobian_x(self):
        return 1.0 / (self.A - self.a)

    @property
    def jacobian_y(self):
        return 1.0 / (self.B - self.b)

    @property
    def jacobian(self):
        return self.jacobian_x * self.jacobian_y

    def to_unit(self, x, y):
        return (np.asarray(x) - self.a) / (self.A - self.a), (np.asarray(y) - self.b) / (self.B - self.b)

    def from_unit(self, u, v):
        return self.a + (self.A - self.a) * np.asarray(u), self.b + (self.B - self.b) * np.asarray(v)

    def pull_back(self, unit_density):
        """Density on the original rectangle induced by a unit-square density."""
        def dens(x, y):
            u, v = self.to_unit(x, y)
            return unit_density(u, v) * self.jacobian
        return dens

    def segment_indetermination(self, f_seg, g_seg):
        """``f(x)/(B-b) + g(y)/(A-a) - 1/((A-a)(B-b))`` on the original rectangle."""
        def dens(x, y):
            return (np.asarray(f_seg.density(x)) / (self.B - self.b)
                    + np.asarray(g_seg.density(y)) / (self.A - self.a) - self.jacobian)
        return dens

    def as_dict(self):
        return {"a": self.a, "A": self.A, "b": self.b, "B": self.B,
                "jacobian_x": self.jacobian_x, "jacobian_y": self.jacobian_y}


def rescale_affine(base_f, base_g):
    """Bring margins on ``[a, A]`` and ``[b, B]`` to the unit interval.

    Returns ``(f, g, transform)``; ``transform.pull_back`` of the unit-square
    indetermination density equals ``transform.segment_indetermination``.
    """
    for seg in (base_f, base_g):
        if not seg.hi > seg.lo:
            raise DomainError(f"degenerate segment [{seg.lo}, {seg.hi}]")
    t = AffineTransform(base_f.lo, base_f.hi, base_g.lo, base_g.hi)
    return Rescaled(base_f), Rescaled(base_g), t


# -- named constructions used throughout ------------------------------------

def spike_pair():
    """``f = 3`` on [0, .2) and .5 elsewhere; ``g`` mirrored (.5 then 3 on [.8, 1])."""
    f = Histogram.from_heights([0.0, 0.2, 1.0], [3.0, 0.5])
    g = Histogram.from_heights([0.0, 0.8, 1.0], [0.5, 3.0])
    return f, g


def linear_pair():
    """``f(x) = x + 1/2`` and ``g(y) = 3/2 - y``."""
    return Linear(1.0), Linear(-1.0)
