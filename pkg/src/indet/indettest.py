"""Testing indetermination against independence-like alternatives.

Under H0 the sample comes from ``pi+``; under H1 from a law whose average
likelihood against ``pi_x`` is at least ``l1 = L(pi_x, pi_x)``.  The statistic
``t_n = (1/n) sum pi_x(W_i)`` tends to ``l0 = L(pi_x, pi+)`` under H0 and to at
least ``l1`` under H1.  Its H0 upper tail decays like ``exp(-n I(t))`` where
``I`` is the Legendre transform of the log-MGF of ``Y = pi_x(W)``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math
import multiprocessing as mp

import numpy as np

from .coupling import couple_independence, couple_indetermination
from .errors import CompatibilityError, DegenerateError, DomainError, IntegrabilityError
from .likelihood import avg_likelihood, avg_likelihood_vs_indet
from .margins import check_compatibility
from .numerics import DEFAULT_QUADRATURE, RngStream, nodes_weights_2d
from .sampling import _indetermination_points, _law_points

CHUNK_POINTS = 2_000_000


@dataclass
class TestSetup:
    f: object
    g: object
    pi_plus: object
    pi_times: object
    l0: float
    l1: float
    eta: float
    spec: object = DEFAULT_QUADRATURE
    # distribution of Y = pi_x(W) under pi+: support values and probabilities
    y_values: np.ndarray = field(default=None, repr=False)
    y_probs: np.ndarray = field(default=None, repr=False)

    __test__ = False

    @property
    def sup_times(self):
        """Analytic ``||pi_x||_inf = max f * max g``."""
        return self.f.f_max * self.g.f_max

    @property
    def ess_sup(self):
        """Largest value of ``Y`` charged under H0."""
        return float(self.y_values[-1])

    def as_dict(self):
        return {"l0": self.l0, "l1": self.l1, "eta": self.eta, "sup_times": self.sup_times}


def setup(f, g, spec=DEFAULT_QUADRATURE):
    """Build ``pi+``, ``pi_x`` and the constants ``l0 <= l1``."""
    rep = check_compatibility(f, g)
    if not rep.ok:
        raise CompatibilityError(f"incompatible margins (slack {rep.slack:.3g})", slack=rep.slack)
    if not (f.bounded and g.bounded):
        raise IntegrabilityError("the test needs bounded margin densities")
    if f.is_uniform or g.is_uniform:
        raise DegenerateError("a uniform margin makes H0 and H1 indistinguishable (eta = 0)")
    pp = couple_indetermination(f, g)
    px = couple_independence(f, g)
    l0 = avg_likelihood_vs_indet(px, f, g, spec).value
    l1 = avg_likelihood(px, px, spec).value
    eta = l1 - l0
    if not eta > 1e-14:
        raise DegenerateError(f"eta = {eta:.3g}: hypotheses indistinguishable")
    X, Y, W = nodes_weights_2d(spec, pp.breaks_x, pp.breaks_y)
    y = np.asarray(px.density(X, Y), dtype=float).ravel()
    w = (np.asarray(pp.density(X, Y), dtype=float) * W).ravel()
    keep = w > 0
    vals, inv = np.unique(y[keep], return_inverse=True)
    probs = np.bincount(inv, weights=w[keep])
    probs /= probs.sum()
    return TestSetup(f, g, pp, px, l0, l1, eta, spec, vals, probs)


def statistic(setup, sample):
    """``t_n = (1/n) sum pi_x(W_i)``."""
    pts = np.asarray(sample.points if hasattr(sample, "points") else sample, dtype=float)
    if not len(pts):
        raise ValueError("empty sample")
    return float(np.mean(setup.pi_times.density(pts[:, 0], pts[:, 1])))


def log_mgf(setup, theta):
    """``phi0(theta) = log E_0 exp(theta Y)``, shifted by ``max theta Y`` against overflow."""
    z = float(theta) * setup.y_values
    m = float(np.max(z))
    return m + math.log(float(np.dot(setup.y_probs, np.exp(z - m))))


def _tilted(setup, theta):
    """``(phi0, phi0', phi0'')`` at ``theta`` from one pass over the atoms."""
    y = setup.y_values
    z = float(theta) * y
    m = float(np.max(z))
    e = setup.y_probs * np.exp(z - m)
    s = float(e.sum())
    mean = float(np.dot(e, y)) / s
    var = float(np.dot(e, (y - mean) ** 2)) / s
    return m + math.log(s), mean, var


def tilted_mean(setup, theta):
    """``phi0'(theta)``: mean of ``Y`` under the exponentially tilted law."""
    return _tilted(setup, theta)[1]


@dataclass(frozen=True)
class RatePoint:
    t: float
    rate: float
    theta: float


def rate_point(setup, t, tol=1e-12):
    """``I(t) = sup_theta {t theta - phi0(theta)}`` for ``t >= l0``.

    The bracket starts at ``[0, 8/||pi_x||_inf]`` and doubles until
    ``phi0'`` exceeds ``t``; beyond ``theta = 1e6`` the rate is infinite.
    Inside the bracket the concave objective is maximised by Newton steps on
    ``phi0'(theta) = t``, falling back to bisection when a step leaves it.
    """
    t = float(t)
    if t < setup.l0 - 1e-12:
        raise DomainError(f"one-sided rate defined for t >= l0 = {setup.l0}")
    top = setup.ess_sup
    if t > top * (1 + 1e-15):
        return RatePoint(t, math.inf, math.inf)
    if t >= top:
        # an atom at the top of the support
        return RatePoint(t, -math.log(float(setup.y_probs[-1])), math.inf)
    hi = 8.0 / setup.sup_times
    while tilted_mean(setup, hi) <= t:
        hi *= 2.0
        if hi > 1e6:
            return RatePoint(t, math.inf, math.inf)
    lo, th = 0.0, 0.5 * hi
    for _ in range(200):
        _, mean, var = _tilted(setup, th)
        if mean < t:
            lo = th
        else:
            hi = th
        step = th + (t - mean) / var if var > 0 else 0.5 * (lo + hi)
        if not lo < step < hi:
            step = 0.5 * (lo + hi)
        done = abs(step - th) <= tol * max(th, 1.0)
        th = step
        if done or hi - lo <= tol * max(hi, 1.0):
            break
    return RatePoint(t, max(t * th - log_mgf(setup, th), 0.0), th)


def rate_function(setup, t):
    return rate_point(setup, t).rate


def bahadur_slope(setup):
    """``2 I(l1)``."""
    return 2.0 * rate_function(setup, setup.l1)


@dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    stderr: float
    reps: int
    hits: int
    zero_hits: bool = False

    def as_dict(self):
        return {"p_hat": self.p_hat, "stderr": self.stderr, "reps": self.reps,
                "hits": self.hits, "zero_hits": self.zero_hits}


def _chunk_stats(payload, reps, stream):
    law_kind, f, g, alt, n = payload
    gen = stream.generator()
    if law_kind == "H0":
        pts, _ = _indetermination_points(f, g, n * reps, gen)
    else:
        pts, _ = _law_points(alt, n * reps, gen)
    y = f.density(pts[:, 0]) * g.density(pts[:, 1])
    return np.asarray(y).reshape(reps, n).mean(axis=1)


_PAYLOAD = None


def _init_worker(payload):
    global _PAYLOAD
    _PAYLOAD = payload


def _worker_chunk(job):
    return _chunk_stats(_PAYLOAD, *job)


def simulate_statistic(setup, n, reps, rng, hypothesis="H0", law=None, workers=1):
    """``reps`` independent draws of ``t_n``.

    Replications are grouped in fixed chunks, chunk ``k`` using substream
    ``k`` of ``rng``; results do not depend on ``workers``.  Under ``"H1"``
    samples come from ``law`` (default ``pi_x``).  Workers are forked so that
    laws built from closures need not be picklable.
    """
    n, reps = int(n), int(reps)
    per = max(1, min(reps, CHUNK_POINTS // max(n, 1)))
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    payload = (hypothesis, setup.f, setup.g, law if law is not None else setup.pi_times, n)
    jobs = []
    done = 0
    while done < reps:
        m = min(per, reps - done)
        jobs.append((m, stream.child(len(jobs))))
        done += m
    if workers > 1 and len(jobs) > 1 and "fork" in mp.get_all_start_methods():
        with ProcessPoolExecutor(max_workers=workers, mp_context=mp.get_context("fork"),
                                 initializer=_init_worker, initargs=(payload,)) as ex:
            parts = list(ex.map(_worker_chunk, jobs))
    else:
        parts = [_chunk_stats(payload, *j) for j in jobs]
    return np.concatenate(parts)


def tail_from_draws(draws, t):
    reps = len(draws)
    hits = int(np.count_nonzero(draws >= t))
    if hits == 0:
        return TailEstimate(0.0, 3.0 / reps, reps, 0, True)
    p = hits / reps
    return TailEstimate(p, math.sqrt(p * (1 - p) / reps), reps, hits)


def tail_probability_mc(setup, n, t, reps, rng, workers=1):
    """Monte Carlo ``P_0(t_n >= t)`` from ``reps`` H0 samples of size ``n``.

    With no exceedance the estimate is 0 and ``stderr`` holds the bound ``3/reps``.
    """
    if int(reps) < 1000:
        raise DomainError("tail estimation needs reps >= 1000")
    draws = simulate_statistic(setup, n, reps, rng, "H0", workers=workers)
    return tail_from_draws(draws, float(t))


def separation_radius(setup):
    """Radius ``eps = eta / (2 ||pi_x||_inf)`` of a sup-metric ball around ``pi+``
    whose laws all keep ``int pi_x dP <= l0 + eps ||pi_x||_inf < l1``."""
    eps = setup.eta / (2.0 * setup.sup_times)
    bound = setup.l0 + eps * setup.sup_times
    return {"epsilon": eps, "bound": bound, "separated": bool(bound < setup.l1)}


@dataclass
class TestReport:
    t_n: float
    n: int
    decision: str
    threshold: float
    I_at_threshold: float
    bahadur_slope: float
    l0: float
    l1: float
    eta: float
    I_at_l: float | None = None
    tail: TailEstimate | None = None

    __test__ = False

    def as_dict(self):
        d = {"l0": self.l0, "l1": self.l1, "eta": self.eta, "t_n": self.t_n, "n": self.n,
             "threshold": self.threshold, "decision": self.decision,
             "I_threshold": self.I_at_threshold, "bahadur_slope": self.bahadur_slope,
             "tail": self.tail.as_dict() if self.tail else None}
        if self.I_at_l is not None:
            d["I_l"] = self.I_at_l
        return d


def resolve_threshold(setup, policy):
    if policy in (None, "mid", "midpoint"):
        return 0.5 * (setup.l0 + setup.l1)
    return float(policy)


def run_test(setup, sample, threshold="midpoint", tail_reps=0, rng=None, h1_law=None, workers=1):
    """Decide H0 vs H1 and attach the rate-function summary.

    ``tail_reps > 0`` adds a Monte Carlo estimate of the attained tail
    ``P_0(t_n' >= t_n(sample))``.  With ``h1_law`` the report also carries
    ``I(l)`` for ``l = L(pi_x, h1_law)``.
    """
    tn = statistic(setup, sample)
    thr = resolve_threshold(setup, threshold)
    decision = "reject_H0" if tn >= thr else "accept_H0"
    i_thr = rate_function(setup, thr) if thr >= setup.l0 else 0.0
    tail = None
    if tail_reps:
        tail = tail_probability_mc(setup, len(sample), tn if tn >= setup.l0 else setup.l0,
                                   tail_reps, rng if rng is not None else RngStream(0), workers)
    i_l = None
    if h1_law is not None:
        l = avg_likelihood(setup.pi_times, h1_law, setup.spec).value
        i_l = rate_function(setup, max(l, setup.l0))
    return TestReport(tn, len(sample), decision, thr, i_thr, bahadur_slope(setup),
                      setup.l0, setup.l1, setup.eta, i_l, tail)


def ld_trend(setup, t, ns, reps, rng, workers=1):
    """``-(1/n) log P_0(t_n >= t)`` for each ``n``: the finite-n view of the rate."""
    rows = []
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    for i, n in enumerate(ns):
        est = tail_probability_mc(setup, n, t, reps, stream.child(i), workers)
        rate = -math.log(est.p_hat) / n if est.p_hat > 0 else math.inf
        rows.append({"n": int(n), "p_hat": est.p_hat, "stderr": est.stderr, "empirical_rate": rate})
    return {"t": float(t), "I": rate_function(setup, t), "rows": rows}
