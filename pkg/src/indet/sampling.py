"""Sampling from margins and couplings.

The indetermination coupling is sampled without rejection.  With
``alpha = min f`` write ``f = (1-alpha) r + alpha`` and ``g = alpha s + (1-alpha)``.
Then

    f(x) + g(y) - 1 = (1-alpha) r(x) * 1 + alpha * 1 * s(y),

a two-component mixture: with probability ``1-alpha`` draw ``X ~ r`` and
``Y`` uniform, otherwise ``X`` uniform and ``Y ~ s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import io
import math

import numpy as np

from .coupling import BivariateLaw
from .errors import DegenerateError, EfficiencyError, IntegrabilityError
from .margins import constructive_decompose
from .numerics import RngStream, as_generator


@dataclass
class EmpiricalSample:
    """``n`` points of [0, 1]^2 with the stream that produced them."""

    points: np.ndarray
    seed: RngStream | None = None
    source: str = ""
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if np.any(self.points < 0) or np.any(self.points > 1):
            raise ValueError("sample points must lie in [0, 1]^2")

    def __len__(self):
        return len(self.points)

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]

    def to_csv(self, path_or_buf=None):
        """Write ``x,y`` rows under a ``#`` header with seed, stream and source."""
        buf = io.StringIO()
        s = self.seed.as_dict() if self.seed is not None else {}
        sub = "/".join(str(i) for i in s.get("substream", []))
        buf.write(f"# seed={s.get('seed', '')} stream={s.get('stream_id', '')} substream={sub}\n")
        buf.write(f"# source={self.source}\n")
        buf.write("x,y\n")
        for x, y in self.points:
            buf.write(f"{float(x)!r},{float(y)!r}\n")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path):
        meta = {}
        with open(path) as fh:
            lines = fh.read().splitlines()
        body = []
        for line in lines:
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
            elif line and line != "x,y":
                body.append([float(t) for t in line.split(",")])
        seed = None
        if meta.get("seed"):
            sub = tuple(int(i) for i in meta.get("substream", "").split("/") if i)
            seed = RngStream(int(meta["seed"]), int(meta.get("stream") or 0), sub)
        return cls(np.array(body), seed, meta.get("source", ""))


def _stream(rng):
    return rng if isinstance(rng, RngStream) else None


def sample_margin(m, n, rng):
    """Inverse-CDF draws ``F^-1(U_i)``."""
    gen = as_generator(rng)
    return np.asarray(m.quantile(gen.random(int(n))), dtype=float)


def _independence_points(f, g, n, gen):
    u = gen.random((int(n), 2))
    return np.column_stack([f.quantile(u[:, 0]), g.quantile(u[:, 1])])


def _indetermination_points(f, g, n, gen):
    try:
        alpha, r, s = constructive_decompose(f, g)
    except DegenerateError:
        # a uniform margin: indetermination equals independence
        return _independence_points(f, g, n, gen), None
    u = gen.random((int(n), 3))
    first = u[:, 0] < 1.0 - alpha
    x = u[:, 1].copy()
    y = u[:, 2].copy()
    x[first] = r.quantile(u[first, 1])
    y[~first] = s.quantile(u[~first, 2])
    return np.column_stack([x, y]), {"alpha": alpha, "first_component": int(first.sum())}


def sample_independence(f, g, n, rng):
    pts = _independence_points(f, g, n, as_generator(rng))
    return EmpiricalSample(pts, _stream(rng), "independence")


def sample_indetermination(f, g, n, rng):
    """Exact sampler for ``pi+ = f(x) + g(y) - 1`` via the constructive mixture."""
    pts, diag = _indetermination_points(f, g, n, as_generator(rng))
    source = "indetermination" if diag else "indetermination(degenerate->independence)"
    return EmpiricalSample(pts, _stream(rng), source, diag or {})


def _fgm_points(f, g, theta, n, gen):
    w = gen.random((int(n), 2))
    u = w[:, 0]
    a = theta * (1.0 - 2.0 * u)
    b = 1.0 + a
    v = 2.0 * w[:, 1] / (b + np.sqrt(np.maximum(b * b - 4.0 * a * w[:, 1], 0.0)))
    return np.column_stack([f.quantile(u), g.quantile(np.clip(v, 0.0, 1.0))])


def _cell_bounds(density, k, sub=5, safety=1.1):
    t = np.linspace(0.0, 1.0, k * (sub - 1) + 1)
    t[0] = 1e-12
    X, Y = np.meshgrid(t, t, indexing="ij")
    vals = np.asarray(density(X, Y), dtype=float)
    vals = np.lib.stride_tricks.sliding_window_view(vals, (sub, sub))[::sub - 1, ::sub - 1]
    return vals.max(axis=(2, 3)) * safety + 1e-12


def _grid_rejection_points(law, n, gen, k=32):
    """Piecewise-constant envelope on a ``k x k`` grid, then accept/reject."""
    bounds = _cell_bounds(law.density, k)
    p = (bounds / bounds.sum()).ravel()
    out = []
    total = proposed = violations = 0
    while total < n:
        m = max(1024, int(1.5 * (n - total) * bounds.mean() + 16))
        cell = gen.choice(len(p), size=m, p=p)
        i, j = np.divmod(cell, k)
        u = gen.random((m, 3))
        x = (i + u[:, 0]) / k
        y = (j + u[:, 1]) / k
        d = np.asarray(law.density(x, y), dtype=float)
        env = bounds.ravel()[cell]
        violations += int(np.count_nonzero(d > env))
        keep = u[:, 2] * env <= d
        out.append(np.column_stack([x[keep], y[keep]]))
        total += int(keep.sum())
        proposed += m
    pts = np.concatenate(out)[:n]
    return pts, {"proposed": proposed, "accepted": total, "envelope_violations": violations}


def _law_points(law, n, gen):
    if law.kind == "indetermination":
        return _indetermination_points(law.margin_x, law.margin_y, n, gen)[0], {}
    if law.kind == "independence":
        return _independence_points(law.margin_x, law.margin_y, n, gen), {}
    if law.kind == "fgm":
        return _fgm_points(law.margin_x, law.margin_y, law.params["theta"], n, gen), {}
    return _grid_rejection_points(law, n, gen)


def sample_law(law, n, rng):
    """Draw ``n`` points from any :class:`BivariateLaw`."""
    pts, diag = _law_points(law, n, as_generator(rng))
    return EmpiricalSample(pts, _stream(rng), law.kind, diag)


def sample_square_density(P, n, rng, max_proposals=10**8):
    """Draws from ``pi^2 / int pi^2`` by rejection from ``P``.

    A proposal ``X ~ P`` with an independent uniform ``U`` is kept iff
    ``pi(X) >= U * ||pi||_inf``.  The acceptance rate estimates
    ``int pi^2 / ||pi||_inf``.
    """
    if not isinstance(P, BivariateLaw) or not P.bounded:
        raise IntegrabilityError("rejection for pi^2 needs a finite analytic sup-norm")
    gen = as_generator(rng)
    sup = float(P.sup_norm)
    n = int(n)
    kept = []
    accepted = proposed = 0
    rate = 0.5
    while accepted < n:
        m = int(min(max(1024, 1.2 * (n - accepted) / max(rate, 1e-3)), 4_000_000))
        pts, _ = _law_points(P, m, gen)
        u = gen.random(m)
        keep = np.asarray(P.density(pts[:, 0], pts[:, 1])) >= u * sup
        kept.append(pts[keep])
        accepted += int(keep.sum())
        proposed += m
        rate = accepted / proposed
        if proposed >= 10**6 and rate < 1e-6:
            raise EfficiencyError(f"acceptance rate {rate:.2g} below 1e-6")
        if proposed >= max_proposals:
            raise EfficiencyError(f"gave up after {proposed} proposals")
    pts = np.concatenate(kept)[:n]
    return EmpiricalSample(pts, _stream(rng), f"square({P.kind})",
                           {"accepted": accepted, "proposed": proposed,
                            "acceptance_rate": accepted / proposed, "sup_norm": sup})


def empirical_measure(sample):
    """``phi -> (1/n) sum phi(W_i)`` for functions of ``(x, y)``."""
    if len(sample) == 0:
        raise ValueError("empty sample")
    x, y = sample.x, sample.y

    def integrate(phi):
        return float(np.mean(np.broadcast_to(np.asarray(phi(x, y), dtype=float), x.shape)))

    return integrate
