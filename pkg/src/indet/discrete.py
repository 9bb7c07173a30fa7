"""Finite-alphabet indetermination: ``pi[u, v] = mu[u]/q + nu[v]/p - 1/(p q)``.

This is the discrete anchor for the continuous constructions: its square sum
(the chance that two independent draws coincide) is minimal among all
couplings with margins ``mu`` and ``nu``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CompatibilityError
from .numerics import RngStream, as_generator

TOL = 1e-12


@dataclass(frozen=True)
class DiscreteCoupling:
    mu: np.ndarray
    nu: np.ndarray
    pi: np.ndarray

    @property
    def p(self):
        return len(self.mu)

    @property
    def q(self):
        return len(self.nu)

    def validate(self, tol=TOL):
        pi = self.pi
        assert pi.shape == (self.p, self.q)
        assert np.all(pi >= -tol), "negative cell"
        assert abs(pi.sum() - 1.0) <= tol
        assert np.max(np.abs(pi.sum(1) - self.mu)) <= tol
        assert np.max(np.abs(pi.sum(0) - self.nu)) <= tol
        return True

    def as_dict(self):
        return {"mu": self.mu.tolist(), "nu": self.nu.tolist(), "pi": self.pi.tolist()}


def _prob_vector(v, name):
    v = np.asarray(v, dtype=float).ravel()
    if v.size < 1 or np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} must be a probability vector")
    return v


def discrete_indetermination(mu, nu):
    """Closed-form coupling; needs ``p min(mu) + q min(nu) >= 1``."""
    mu = _prob_vector(mu, "mu")
    nu = _prob_vector(nu, "nu")
    p, q = len(mu), len(nu)
    pi = mu[:, None] / q + nu[None, :] / p - 1.0 / (p * q)
    u, v = np.unravel_index(np.argmin(pi), pi.shape)
    if pi[u, v] < -TOL:
        slack = p * mu.min() + q * nu.min() - 1.0
        raise CompatibilityError(f"cell ({u}, {v}) is negative: {pi[u, v]:.6g}",
                                 slack=slack, cell=(int(u), int(v)))
    return DiscreteCoupling(mu, nu, np.maximum(pi, 0.0))


def discrete_independence(mu, nu):
    mu = _prob_vector(mu, "mu")
    nu = _prob_vector(nu, "nu")
    return DiscreteCoupling(mu, nu, np.outer(mu, nu))


def matching_probability(c):
    """``sum pi^2``: two independent draws land on the same cell."""
    pi = c.pi if isinstance(c, DiscreteCoupling) else np.asarray(c, dtype=float)
    return float(np.sum(pi * pi))


def _walk(m, steps, gen):
    """Apply ``steps`` random cycle moves in place to the nested list ``m``;
    yields after each move."""
    p, q = len(m), len(m[0])
    rows = gen.integers(0, p, steps)
    rows2 = (rows + gen.integers(1, p, steps)) % p
    cols = gen.integers(0, q, steps)
    cols2 = (cols + gen.integers(1, q, steps)) % q
    frac = gen.random(steps)
    for u, u2, v, v2, w in zip(rows.tolist(), rows2.tolist(), cols.tolist(), cols2.tolist(),
                               frac.tolist()):
        lo = -min(m[u][v], m[u2][v2])
        hi = min(m[u][v2], m[u2][v])
        d = lo + w * (hi - lo)
        m[u][v] += d
        m[u2][v2] += d
        m[u][v2] -= d
        m[u2][v] -= d
        yield m


def swap_walk(pi, steps, gen):
    """Random walk on the transportation polytope by 2x2 cycle moves.

    Each step picks rows ``u != u'`` and columns ``v != v'`` and adds
    ``delta (e_uv + e_u'v' - e_uv' - e_u'v)`` with ``delta`` uniform over the
    range that keeps all four cells nonnegative.  Margins are untouched.
    """
    m = np.array(pi, dtype=float).tolist()
    for _ in _walk(m, int(steps), gen):
        pass
    return np.maximum(np.array(m), 0.0)


def verify_discrete_minimality(mu, nu, trials, rng, tol=TOL):
    """Check that ``trials`` random couplings with margins ``(mu, nu)`` never
    beat the indetermination matching probability.

    The couplings are the successive states of a swap walk started at
    independence (each trial is one move).  For 2x2 margins the polytope is a
    segment and is also swept directly.
    """
    base = discrete_indetermination(mu, nu)
    best = matching_probability(base)
    gen = as_generator(rng)
    p, q = base.p, base.q
    if p < 2 or q < 2:
        return True  # the coupling is unique
    start = np.outer(base.mu, base.nu)
    if p == 2 and q == 2:
        lo = -min(start[0, 0], start[1, 1])
        hi = min(start[0, 1], start[1, 0])
        d = np.linspace(lo, hi, int(trials))
        a, b, c, e = start[0, 0] + d, start[1, 1] + d, start[0, 1] - d, start[1, 0] - d
        if np.min(a * a + b * b + c * c + e * e) < best - tol:
            return False
    for m in _walk(start.tolist(), int(trials), gen):
        if sum(x * x for row in m for x in row) < best - tol:
            return False
    return True


def random_compatible_margins(p, q, rng):
    """Random ``(mu, nu)`` of sizes ``(p, q)`` with ``p min mu + q min nu >= 1``.

    Each vector is the uniform vector pulled toward a Dirichlet draw; the pull
    is capped so that each side keeps at least half of its uniform floor.
    """
    gen = as_generator(rng)
    out = []
    for k in (p, q):
        w = gen.dirichlet(np.ones(k))
        t = gen.uniform(0.0, 1.0)
        # min(mu) >= (1 - t)/k + t min(w) >= (1 - t)/k, so k min(mu) >= 1 - t
        t = min(t, 0.5)
        out.append((1.0 - t) / k + t * w)
    return out[0], out[1]


def discretize_margin(m, bins):
    """Bin masses of a continuous margin on a uniform grid."""
    edges = np.linspace(0.0, 1.0, int(bins) + 1)
    c = np.asarray(m.cdf(edges), dtype=float)
    masses = np.diff(c)
    return masses / masses.sum()


def bridge_value(f, g, bins=200):
    """``p q sum pi^2`` for binned margins, which approaches ``int int (pi+)^2``."""
    c = discrete_indetermination(discretize_margin(f, bins), discretize_margin(g, bins))
    return matching_probability(c) * c.p * c.q
