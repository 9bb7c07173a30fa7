"""Margin and coupling specifications as plain JSON-compatible data.

Margins::

    {"kind": "uniform"}
    {"kind": "power", "alpha": 0.75}
    {"kind": "linear", "slope": 1.0}
    {"kind": "histogram", "edges": [0, 0.2, 1], "masses": [0.6, 0.4]}
    {"kind": "constructive", "alpha": 0.5, "r": M}   # (1 - alpha) r + alpha
    {"kind": "constructive", "alpha": 0.5, "s": M}   # alpha s + (1 - alpha)

Pairs are a list of two margins, a shorthand string such as
``"power:0.75,power:0.75"``, ``"spike"``, ``"linear-pair"`` or
``"extremal:1e-4"``, or ``{"kind": "constructive", "alpha": a, "r": M, "s": M}``.

Couplings::

    {"coupling": "fgm", "margins": PAIR, "theta": 0.5}
    {"coupling": "perturbation", "margins": PAIR, "eps": 1.0,
     "phi": {"freq": 5, "support": [0, 0.2]}, "psi": {"freq": 1}}
"""

from __future__ import annotations

import json

import numpy as np

from .copula import extremal_pair
from .coupling import (couple_fgm, couple_independence, couple_indetermination,
                       couple_perturbation)
from .errors import DomainError
from .margins import (Histogram, Linear, Power, Uniform, constructive_compose,
                      linear_pair, mix_with_uniform, spike_pair)


class SpecError(DomainError):
    """A specification is malformed; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def _num(d, key, where):
    if key not in d:
        raise SpecError(f"{where}.{key}", "missing")
    try:
        return float(d[key])
    except (TypeError, ValueError):
        raise SpecError(f"{where}.{key}", f"not a number: {d[key]!r}") from None


def margin_from_spec(spec, where="margin"):
    if isinstance(spec, str):
        spec = _shorthand_margin(spec, where)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SpecError(where, "expected an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "uniform":
            return Uniform()
        if kind == "power":
            return Power(_num(spec, "alpha", where))
        if kind == "linear":
            return Linear(_num(spec, "slope", where))
        if kind == "histogram":
            for key in ("edges", "masses"):
                if key not in spec:
                    raise SpecError(f"{where}.{key}", "missing")
            return Histogram(spec["edges"], spec["masses"])
        if kind == "constructive":
            alpha = _num(spec, "alpha", where)
            if ("r" in spec) == ("s" in spec):
                raise SpecError(where, "a constructive margin takes exactly one of 'r' or 's'")
            if "r" in spec:
                return mix_with_uniform(margin_from_spec(spec["r"], f"{where}.r"), 1.0 - alpha)
            return mix_with_uniform(margin_from_spec(spec["s"], f"{where}.s"), alpha)
    except SpecError:
        raise
    except (DomainError, ValueError, TypeError) as exc:
        raise SpecError(where, str(exc)) from None
    raise SpecError(f"{where}.kind", f"unknown margin kind {kind!r}")


def _shorthand_margin(text, where):
    name, _, arg = text.strip().partition(":")
    if name == "uniform":
        return {"kind": "uniform"}
    if name in ("power", "linear"):
        if not arg:
            raise SpecError(where, f"{name} needs a parameter, e.g. {name}:0.75")
        return {"kind": name, ("alpha" if name == "power" else "slope"): arg}
    raise SpecError(where, f"unknown margin shorthand {text!r}")


def margin_pair_from_spec(spec, where="margins"):
    """Resolve any pair form to ``(f, g)``."""
    if isinstance(spec, str):
        text = spec.strip()
        if text.startswith(("[", "{")):
            try:
                spec = json.loads(text)
            except json.JSONDecodeError as exc:
                raise SpecError(where, f"invalid JSON ({exc.msg})") from None
        elif text == "spike":
            return spike_pair()
        elif text == "linear-pair":
            return linear_pair()
        elif text.startswith("extremal"):
            _, _, arg = text.partition(":")
            try:
                return extremal_pair(float(arg or 1e-4))
            except ValueError as exc:
                raise SpecError(where, str(exc)) from None
        else:
            parts = [p for p in text.split(",") if p.strip()]
            if len(parts) != 2:
                raise SpecError(where, "expected two comma-separated margins")
            return (margin_from_spec(parts[0], f"{where}[0]"),
                    margin_from_spec(parts[1], f"{where}[1]"))
    if isinstance(spec, dict):
        if spec.get("kind") == "constructive" and "r" in spec and "s" in spec:
            alpha = _num(spec, "alpha", where)
            r = margin_from_spec(spec.get("r"), f"{where}.r")
            s = margin_from_spec(spec.get("s"), f"{where}.s")
            try:
                return constructive_compose(alpha, r, s)
            except DomainError as exc:
                raise SpecError(f"{where}.alpha", str(exc)) from None
        if spec.get("kind") in ("spike", "linear-pair", "extremal"):
            text = spec["kind"] + (f":{spec['epsilon']}" if "epsilon" in spec else "")
            return margin_pair_from_spec(text, where)
        raise SpecError(where, "a single margin object is not a pair")
    if isinstance(spec, (list, tuple)) and len(spec) == 2:
        return (margin_from_spec(spec[0], f"{where}[0]"),
                margin_from_spec(spec[1], f"{where}[1]"))
    raise SpecError(where, "expected a pair of margins")


def cosine_factor(freq, support=(0.0, 1.0)):
    """``cos(2 pi k (x - a)/(b - a))`` on ``[a, b)``, zero elsewhere.

    Integer ``k >= 1`` gives a zero-mean factor bounded by 1.  The support is
    half-open (closed at 1) to line up with right-continuous step margins.
    Returns ``(function, breakpoints)``.
    """
    k = int(freq)
    a, b = (float(v) for v in support)
    if k < 1 or not 0.0 <= a < b <= 1.0:
        raise DomainError("cosine factor needs freq >= 1 and 0 <= a < b <= 1")

    def phi(x):
        x = np.asarray(x, dtype=float)
        inside = (x >= a) & ((x < b) | ((x == b) & (b == 1.0)))
        return np.where(inside, np.cos(2.0 * np.pi * k * (x - a) / (b - a)), 0.0)

    return phi, tuple(v for v in (a, b) if 0.0 < v < 1.0)


def coupling_from_spec(spec, where="coupling"):
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise SpecError(where, f"invalid JSON ({exc.msg})") from None
    if not isinstance(spec, dict) or "coupling" not in spec:
        raise SpecError(where, "expected an object with a 'coupling' field")
    f, g = margin_pair_from_spec(spec.get("margins", "spike"), f"{where}.margins")
    kind = spec["coupling"]
    if kind == "indetermination":
        return couple_indetermination(f, g)
    if kind == "independence":
        return couple_independence(f, g)
    if kind == "fgm":
        return couple_fgm(f, g, _num(spec, "theta", where))
    if kind == "perturbation":
        base_kind = spec.get("base", "indetermination")
        if base_kind == "indetermination":
            base = couple_indetermination(f, g)
        elif base_kind == "independence":
            base = couple_independence(f, g)
        else:
            raise SpecError(f"{where}.base", f"unknown base coupling {base_kind!r}")
        phi, bx = cosine_factor(**_factor(spec, "phi", where))
        psi, by = cosine_factor(**_factor(spec, "psi", where))
        return couple_perturbation(base, _num(spec, "eps", where), phi, psi, bx, by, 1.0, 1.0)
    raise SpecError(f"{where}.coupling", f"unknown coupling {kind!r}")


def _factor(spec, key, where):
    d = spec.get(key)
    if not isinstance(d, dict) or "freq" not in d:
        raise SpecError(f"{where}.{key}", "expected {'freq': k, 'support': [a, b]}")
    return {"freq": d["freq"], "support": d.get("support", (0.0, 1.0))}
