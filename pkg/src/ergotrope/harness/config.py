"""Plain-text experiment configs.

One ``key = value`` pair per line; ``#`` starts a comment. Keys may be
dotted (``potential.g``). Values are Python literals (numbers, strings,
lists, ``None``, ``True``); anything that is not a literal is kept as a
bare string, so ``potential.alpha = golden`` works unquoted.

Every experiment has a fixed schema. Unknown keys, missing required keys
and invalid values are collected and reported together.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Any, Callable

EXPERIMENTS = ("entropy-scaling", "projection-decay", "lyapunov-scan",
               "large-deviation", "maryland-verify", "subshift-stats")

REQUIRED = object()


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid config:\n  " + "\n  ".join(errors))


# validators return the cleaned value or raise ValueError with a message


def _int(lo=None):
    def f(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError("expected an integer")
        if lo is not None and v < lo:
            raise ValueError(f"must be >= {lo}")
        return v
    return f


def _real(positive=False, allow_none=False):
    def f(v):
        if v is None and allow_none:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValueError("expected a finite number")
        if positive and v <= 0:
            raise ValueError("must be > 0")
        return float(v)
    return f


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError("expected True or False")
    return v


def _choice(*opts):
    def f(v):
        if v not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return v
    return f


def _int_list(lo=None, min_len=1):
    def f(v):
        if not isinstance(v, (list, tuple)) or len(v) < min_len:
            raise ValueError(f"expected a list of at least {min_len} integers")
        return [_int(lo)(x) for x in v]
    return f


def _real_list(min_len=1):
    def f(v):
        if not isinstance(v, (list, tuple)) or len(v) < min_len:
            raise ValueError(f"expected a list of at least {min_len} numbers")
        return [_real()(x) for x in v]
    return f


def _optional(fn):
    return lambda v: None if v is None else fn(v)


def _text(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return str(v)
    if not isinstance(v, str):
        raise ValueError("expected text")
    return v


def _matrix(v):
    if not isinstance(v, (list, tuple)) or not v or not all(isinstance(r, (list, tuple)) for r in v):
        raise ValueError("expected a list of rows")
    if any(len(r) != len(v) for r in v):
        raise ValueError("matrix must be square")
    return [[_real()(x) for x in r] for r in v]


POTENTIAL = {
    "potential.family": (_choice("free", "maryland", "almost-mathieu", "sawtooth", "doubling",
                                 "cat", "subshift"), REQUIRED),
    "potential.g": (_real(), 1.0),
    "potential.alpha": (_text, "golden"),
    "potential.dim": (_int(1), 1),
    "potential.xi": (_real(), 1.0),
    "potential.slopes": (_real_list(2), [1.0, 1.0]),
    "potential.P": (_optional(_matrix), None),
    "potential.values": (_optional(_real_list(2)), None),
}

KERNEL = {
    "kernel.type": (_choice("laplacian", "expdecay"), "laplacian"),
    "kernel.amplitude": (_real(positive=True), 1.0),
    "kernel.rate": (_real(positive=True), 1.0),
}

COMMON = {
    "experiment": (_choice(*EXPERIMENTS), None),
    "seed": (_int(0), 0),
    "samples": (_int(1), 64),
    "jobs": (_int(1), 1),
}

SCHEMAS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "entropy-scaling": {
        **COMMON, **POTENTIAL, **KERNEL,
        "eps_f": (_real(), REQUIRED),
        "L": (_int_list(1, 4), REQUIRED),
        "host_margin": (_optional(_int(0)), None),
        "stratified": (_bool, True),
        "thresholds.area_tol": (_real(positive=True), 0.02),
        "thresholds.enhanced_r2": (_real(positive=True), 0.9),
        "thresholds.volume_rel": (_real(positive=True), 0.05),
    },
    "projection-decay": {
        **COMMON, **POTENTIAL, **KERNEL,
        "eps_f": (_real(), REQUIRED),
        "distances": (_int_list(0, 5), list(range(0, 41))),
        "window": (_optional(_real_list(2)), None),
        "host_half": (_optional(_int(1)), None),
        "fit_range": (_real_list(2), [5.0, 40.0]),
        "stratified": (_bool, True),
    },
    "lyapunov-scan": {
        **COMMON, **POTENTIAL,
        "energies": (_real_list(3), REQUIRED),
        "steps": (_int(10), 10_000),
        "gamma_min": (_real(positive=True), 0.05),
    },
    "large-deviation": {
        **COMMON, **POTENTIAL,
        "energy": (_real(), REQUIRED),
        "eps": (_real(positive=True), REQUIRED),
        "n_list": (_int_list(1), [50, 100, 200, 400]),
        "gamma_ref": (_real(allow_none=True), None),
        "subwindows": (_bool, False),
        "ref_steps": (_int(10), 100_000),
    },
    "maryland-verify": {
        **COMMON, **POTENTIAL,
        "omega": (_real(), 0.1),
        "labels": (_int_list(None, 2), [-50, 50]),
        "half_width": (_int(1), 300),
        "quadrature_order": (_int(256), 4096),
    },
    "subshift-stats": {
        **COMMON,
        "P": (_matrix, REQUIRED),
        "word_length": (_int(1), 3),
        "window": (_int(1), 100_000),
        "m_max": (_int(1), 50),
        "distortion_pairs": (_int(1), 1000),
    },
}


@dataclass
class ExperimentConfig:
    experiment: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def echo(self) -> dict:
        return {"experiment": self.experiment, **{k: v for k, v in sorted(self.values.items())}}


def parse_pairs(text: str) -> tuple[dict, list[str]]:
    """Raw ``key -> value`` map plus syntax errors (with line numbers)."""
    out, errors = {}, []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {no}: expected 'key = value'")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            errors.append(f"line {no}: empty key")
            continue
        if key in out:
            errors.append(f"line {no}: duplicate key '{key}'")
            continue
        try:
            out[key] = ast.literal_eval(val)
        except (ValueError, SyntaxError):
            out[key] = val
    return out, errors


def validate_config(text: str, experiment: str | None = None) -> ExperimentConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem."""
    pairs, errors = parse_pairs(text)
    name = experiment or pairs.get("experiment")
    if name not in SCHEMAS:
        raise ConfigError(errors + [f"experiment: unknown or missing experiment {name!r}"])
    if "experiment" in pairs and pairs["experiment"] != name:
        errors.append(f"experiment: config says {pairs['experiment']!r} but {name!r} was requested")
    schema = SCHEMAS[name]
    values = {}
    for key in pairs:
        if key not in schema:
            errors.append(f"{key}: unknown key")
    for key, (check, default) in schema.items():
        if key == "experiment":
            continue
        if key not in pairs:
            if default is REQUIRED:
                errors.append(f"{key}: required")
            else:
                values[key] = default
            continue
        try:
            values[key] = check(pairs[key])
        except ValueError as err:
            errors.append(f"{key}: {err}")
    if not errors:
        errors.extend(_cross_checks(name, values))
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(name, values)


def _cross_checks(name: str, v: dict) -> list[str]:
    errs = []
    fam = v.get("potential.family")
    if fam == "subshift" and v.get("potential.P") is None:
        errs.append("potential.P: required for the subshift family")
    if fam == "subshift" and v.get("potential.values") is None:
        errs.append("potential.values: required for the subshift family")
    if name == "maryland-verify" and fam != "maryland":
        errs.append("potential.family: maryland-verify needs the maryland family")
    if name == "lyapunov-scan":
        lo, hi, cnt = v["energies"]
        if hi <= lo or cnt < 2 or cnt != int(cnt):
            errs.append("energies: expected [lo, hi, count] with lo < hi and count >= 2")
    if name == "entropy-scaling":
        L = v["L"]
        if sorted(set(L)) != L:
            errs.append("L: values must be strictly increasing")
    if name == "maryland-verify" and v["labels"][0] > v["labels"][1]:
        errs.append("labels: expected [first, last] with first <= last")
    return errs


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    with open(path) as fh:
        return validate_config(fh.read(), experiment)
