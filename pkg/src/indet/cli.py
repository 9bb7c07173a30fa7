"""Command-line front end.

Every command prints (or writes with ``--output``) a JSON report or a CSV
table.  Both carry the package version, seed and quadrature settings.
Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .copula import (SpecificIndetCopula, copula_grid, lambda_bounds, lambda_share_test,
                     shared_family, spread_delta1)
from .coupling import couple_independence, couple_indetermination
from .discrete import discrete_independence, discrete_indetermination, matching_probability
from .errors import EfficiencyError, IndetError, NumericalError
from .indettest import (bahadur_slope, rate_function, run_test, separation_radius, setup)
from .likelihood import avg_likelihood, avg_likelihood_vs_indet, kl_divergence
from .margins import check_compatibility
from .numerics import DEFAULT_QUADRATURE, RngStream
from .sampling import sample_indetermination, sample_law
from .specs import SpecError, coupling_from_spec, margin_pair_from_spec

COMMANDS = ("check", "couple", "copula", "spread", "likelihood", "sample", "test", "slope",
            "discrete")


class Output:
    """A JSON report or a CSV table plus metadata."""

    def __init__(self, meta, report=None, header=None, rows=None):
        self.meta = meta
        self.report = report
        self.header = header
        self.rows = rows


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return v


def render(out, fmt):
    if fmt == "json" or out.rows is None:
        doc = dict(_clean(out.report or {}))
        doc["meta"] = _clean(out.meta)
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    for k in sorted(out.meta):
        buf.write(f"# {k}={json.dumps(_clean(out.meta[k]), sort_keys=True)}\n")
    buf.write(",".join(out.header) + "\n")
    for row in out.rows:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def _pair(args):
    return margin_pair_from_spec(args.margins)


def _meta(args, **extra):
    d = {"version": __version__, "command": args.command, "seed": args.seed,
         "quadrature": DEFAULT_QUADRATURE.as_dict()}
    d.update(extra)
    return d


def cmd_check(args):
    f, g = _pair(args)
    rep = check_compatibility(f, g)
    return Output(_meta(args), {"ok": rep.ok, "slack": rep.slack, "min_f": f.f_min,
                                "min_g": g.f_min})


def _law(args):
    if args.coupling:
        spec = json.loads(args.coupling) if args.coupling.strip().startswith("{") \
            else {"coupling": args.coupling}
        if isinstance(spec, dict):
            spec.setdefault("margins", args.margins)
            if args.theta is not None:
                spec.setdefault("theta", args.theta)
        return coupling_from_spec(spec)
    f, g = _pair(args)
    return couple_indetermination(f, g)


def cmd_couple(args):
    law = _law(args)
    if args.format == "csv":
        t = (np.arange(args.grid) + 0.5) / args.grid
        X, Y = np.meshgrid(t, t, indexing="ij")
        d = np.asarray(law.density(X, Y))
        c = law.cdf_grid(t, t)
        rows = np.column_stack([X.ravel(), Y.ravel(), d.ravel(), c.ravel()])
        return Output(_meta(args, grid=args.grid), None, ["x", "y", "density", "cdf"], rows)
    diag = law.validate()
    return Output(_meta(args), {"kind": law.kind, "sup_norm": law.sup_norm,
                                "l2": avg_likelihood(law, law).value, "validation": diag})


def cmd_copula(args):
    f, g = _pair(args)
    cop = SpecificIndetCopula(f, g)
    if args.format == "csv":
        return Output(_meta(args, grid=args.grid), None,
                      ["u", "v", "C_indet", "C_indep", "difference"], copula_grid(cop, args.grid))
    rows = copula_grid(cop, args.grid)
    report = {"max_abs_difference": float(np.max(np.abs(rows[:, 4]))),
              "lambda_bounds": list(lambda_bounds(f, g))}
    if args.lam is not None:
        r, s = shared_family(f, g, args.lam)
        report["lambda_test"] = lambda_share_test(f, g, r, s).as_dict()
        report["transfer_compatible"] = check_compatibility(r, s).as_dict()
    return Output(_meta(args, grid=args.grid), report)


def cmd_spread(args):
    f, g = _pair(args)
    return Output(_meta(args), {"delta1": spread_delta1(f, g), "bound": 1.0 / 16.0})


def cmd_likelihood(args):
    f, g = _pair(args)
    law = _law(args) if args.coupling else couple_independence(f, g)
    plus = couple_indetermination(law.margin_x, law.margin_y)
    return Output(_meta(args), {
        "kind": law.kind,
        "L_vs_indet_1d": avg_likelihood_vs_indet(law, law.margin_x, law.margin_y).value,
        "L_vs_indet_2d": avg_likelihood(law, plus).value,
        "L_self": avg_likelihood(law, law).value,
        "L_indet_self": avg_likelihood(plus, plus).value,
        "kl_to_indet": kl_divergence(law, plus)})


def _seed(args):
    return RngStream(int(args.seed))


def cmd_sample(args):
    law = _law(args)
    s = sample_law(law, args.n, _seed(args))
    if args.format == "csv":
        return Output(_meta(args, n=args.n, source=s.source, stream=s.seed.as_dict()),
                      None, ["x", "y"], s.points)
    return Output(_meta(args, n=args.n), {"source": s.source, "n": len(s),
                                          "mean": s.points.mean(0).tolist(),
                                          "diagnostics": s.diagnostics})


def cmd_test(args):
    f, g = _pair(args)
    st = setup(f, g)
    stream = _seed(args)
    if args.hypothesis == "H0":
        sample = sample_indetermination(f, g, args.n, stream.child(0))
    else:
        sample = sample_law(st.pi_times, args.n, stream.child(0))
    thr = "midpoint" if args.threshold in ("mid", "midpoint") else float(args.threshold)
    rep = run_test(st, sample, thr, tail_reps=args.reps, rng=stream.child(1), workers=args.workers)
    d = rep.as_dict()
    d["hypothesis_sampled"] = args.hypothesis
    d["separation"] = separation_radius(st)
    return Output(_meta(args, n=args.n, reps=args.reps), d)


def cmd_slope(args):
    f, g = _pair(args)
    st = setup(f, g)
    if args.format == "csv":
        ts = np.linspace(st.l0, st.ess_sup, args.grid + 1)[:-1]
        rows = [(t, rate_function(st, t)) for t in ts]
        return Output(_meta(args, grid=args.grid), None, ["t", "I"], rows)
    return Output(_meta(args), {"l0": st.l0, "l1": st.l1, "eta": st.eta,
                                "I_l1": rate_function(st, st.l1),
                                "bahadur_slope": bahadur_slope(st)})


def cmd_discrete(args):
    try:
        spec = json.loads(args.margins)
        mu, nu = (spec["mu"], spec["nu"]) if isinstance(spec, dict) else spec
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        raise SpecError("margins", 'expected {"mu": [...], "nu": [...]}') from None
    c = discrete_indetermination(mu, nu)
    if args.format == "csv":
        rows = [(u, v, c.pi[u, v]) for u in range(c.p) for v in range(c.q)]
        return Output(_meta(args), None, ["row", "col", "pi"], rows)
    return Output(_meta(args), {"pi": c.pi, "matching_indetermination": matching_probability(c),
                                "matching_independence":
                                    matching_probability(discrete_independence(mu, nu))})


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}

DEFAULT_MARGINS = {"discrete": '{"mu": [0.6, 0.4], "nu": [0.7, 0.3]}'}


def build_parser():
    p = argparse.ArgumentParser(prog="indet", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    helps = {
        "check": "compatibility of two margins",
        "couple": "build and validate a coupling (CSV: density/CDF grid)",
        "copula": "indetermination copula summary or CSV grid; --lam tests a shared pair",
        "spread": "L1 distance between the indetermination and independence copulas",
        "likelihood": "average likelihoods of a coupling against indetermination",
        "sample": "draw from a coupling (CSV: the sample)",
        "test": "run the indeterminacy test on a simulated sample",
        "slope": "rate function and Bahadur slope (CSV: the rate curve)",
        "discrete": "finite-alphabet indetermination matrix",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name], description=helps[name])
        s.add_argument("--margins", default=DEFAULT_MARGINS.get(name, "spike"),
                       help="pair spec: 'spike', 'power:0.75,power:0.75', 'extremal:1e-4' or JSON")
        s.add_argument("--coupling", default=None,
                       help="indetermination|independence|fgm|perturbation or a JSON spec")
        s.add_argument("--theta", type=float, default=None, help="FGM parameter")
        s.add_argument("--lam", type=float, default=None, help="shared-copula factor")
        s.add_argument("--n", type=int, default=10_000)
        s.add_argument("--reps", type=int, default=0, help="Monte Carlo tail replications")
        s.add_argument("--threshold", default="mid", help="'mid' or a real threshold")
        s.add_argument("--hypothesis", choices=("H0", "H1"), default="H0",
                       help="law of the simulated sample in 'test'")
        s.add_argument("--grid", type=int, default=50)
        s.add_argument("--seed", type=int, default=None, help="defaults to $INDET_SEED, then 0")
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--out", dest="format", choices=("json", "csv"), default="json")
        s.add_argument("--output", default=None, help="write here instead of stdout")
        s.add_argument("--config", default=None, help="JSON file whose keys override flags")
    return p


def _apply_config(args, parser):
    with open(args.config) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError("config", f"invalid JSON ({exc.msg})") from None
    if not isinstance(cfg, dict):
        raise SpecError("config", "expected a JSON object")
    known = vars(args)
    for key, val in cfg.items():
        dest = "format" if key == "out" else key
        if dest not in known or dest in ("command", "config"):
            raise SpecError(f"config.{key}", "unknown field")
        if isinstance(val, (dict, list)):
            val = json.dumps(val)
        setattr(args, dest, val)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.config:
            _apply_config(args, parser)
        if args.seed is None:
            args.seed = int(os.environ.get("INDET_SEED", 0))
        for key in ("n", "grid", "reps", "workers", "seed"):
            setattr(args, key, int(getattr(args, key)))
        if args.n < 1 or args.grid < 2 or args.reps < 0 or args.workers < 1 or args.seed < 0:
            raise SpecError("arguments", "n >= 1, grid >= 2, reps >= 0, workers >= 1, seed >= 0")
        out = HANDLERS[args.command](args)
        text = render(out, args.format)
    except (NumericalError, EfficiencyError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (IndetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
