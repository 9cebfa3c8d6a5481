"""Run configuration: a versioned JSON document, validated field by field."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .sequence_kernel import DEFAULT_CUTOFF_LOG, DEFAULT_INVERSION_TOL, DefiningSequence, make_evaluator
from .spectral_region import SpectrumModel

__all__ = ["SCHEMA_VERSION", "RunConfig", "load_config", "parse_config", "MAX_K", "MAX_N"]

SCHEMA_VERSION = 1
MAX_K = 10_000_000
MAX_N = 10_000

_DEFAULT_GRIDS = {
    "b": {"logspace": [-2, 2, 17]},
    "alpha": {"logspace": [-1, 2, 13]},
    "orbit_alpha": {"logspace": [2, -2, 17]},
    "lambda": {"logspace": [0, 6, 61]},
    "s": [0.25, 0.5, 1.0, 2.0, 4.0],
    "t": [0.5, 1.0, 2.0, 4.0, 8.0],
}
_KNOWN_TOP = {
    "schema_version", "sequence", "evaluator", "spectrum", "grids", "truncation",
    "counterexample", "boundary", "basket", "mode", "output",
}


def _num(value, path: str, *, positive=False, nonneg=False, integer=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if not math.isfinite(value):
        raise ConfigError("must be finite", path)
    if integer and (not float(value).is_integer()):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    if positive and value <= 0:
        raise ConfigError("must be positive", path)
    if nonneg and value < 0:
        raise ConfigError("must be non-negative", path)
    return int(value) if integer else float(value)


def _obj(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"expected an object, got {type(value).__name__}", path)
    return value


def _unknown(d: dict, allowed: set, path: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {extra}", path)


def _grid(spec, path: str, positive: bool = True) -> tuple[float, ...]:
    if isinstance(spec, dict):
        _unknown(spec, {"logspace", "linspace"}, path)
        if len(spec) != 1:
            raise ConfigError("give exactly one of logspace / linspace", path)
        (kind, args), = spec.items()
        if not isinstance(args, list) or len(args) != 3:
            raise ConfigError("expected [start, stop, count]", f"{path}.{kind}")
        lo = _num(args[0], f"{path}.{kind}[0]")
        hi = _num(args[1], f"{path}.{kind}[1]")
        cnt = _num(args[2], f"{path}.{kind}[2]", positive=True, integer=True)
        vals = np.logspace(lo, hi, cnt) if kind == "logspace" else np.linspace(lo, hi, cnt)
        values = tuple(float(v) for v in vals)
    elif isinstance(spec, list):
        values = tuple(_num(v, f"{path}[{i}]") for i, v in enumerate(spec))
    else:
        raise ConfigError("expected a list or {logspace|linspace: [start, stop, count]}", path)
    if not values:
        raise ConfigError("grid is empty", path)
    if positive and any(v <= 0 for v in values):
        raise ConfigError("grid values must be positive", path)
    if not positive and any(v < 0 for v in values):
        raise ConfigError("grid values must be non-negative", path)
    return values


def _sequence(spec, path: str, base: Path | None) -> DefiningSequence:
    d = _obj(spec, path)
    preset = d.get("preset")
    if preset is None:
        raise ConfigError("missing 'preset'", path)
    if preset == "gevrey":
        _unknown(d, {"preset", "beta"}, path)
        return DefiningSequence.gevrey(_num(d.get("beta", 1.0), f"{path}.beta", positive=True))
    if preset in ("factorial", "exp_square", "constant"):
        _unknown(d, {"preset"}, path)
        return getattr(DefiningSequence, preset)()
    if preset == "custom":
        _unknown(d, {"preset", "log_m", "table"}, path)
        if ("log_m" in d) == ("table" in d):
            raise ConfigError("give exactly one of 'log_m' or 'table'", path)
        if "log_m" in d:
            raw = d["log_m"]
            if not isinstance(raw, list):
                raise ConfigError("expected a list of numbers", f"{path}.log_m")
            vals = [_num(v, f"{path}.log_m[{i}]") for i, v in enumerate(raw)]
        else:
            vals = _read_table(d["table"], f"{path}.table", base)
        try:
            return DefiningSequence.custom(vals)
        except ValueError as exc:
            raise ConfigError(str(exc), path) from exc
    raise ConfigError(f"unknown preset {preset!r}", f"{path}.preset")


def _read_table(name, path: str, base: Path | None) -> list[float]:
    """One ``ln m_n`` per line, ``#`` comments allowed."""
    if not isinstance(name, str):
        raise ConfigError("expected a file path", path)
    p = Path(name)
    if not p.is_absolute() and base is not None:
        p = base / p
    try:
        lines = p.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}", path) from exc
    vals = []
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            vals.append(float(text))
        except ValueError:
            raise ConfigError(f"{p}:{lineno}: not a number: {text!r}", path) from None
    return vals


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters; ``raw`` is the normalized document embedded in reports."""

    sequence: DefiningSequence
    evaluator_kind: str
    series_cutoff_log: float
    inversion_tolerance: float
    spectrum_spec: dict
    grids: dict[str, tuple[float, ...]]
    K: int
    N: int
    N_max: int
    counterexample: dict
    boundary: dict
    basket: tuple[str, ...]
    mode: str
    output: str
    raw: dict = field(default_factory=dict)

    def evaluator(self):
        if self.evaluator_kind == "proxy":
            return make_evaluator(self.sequence, "proxy")
        return make_evaluator(self.sequence, "series", series_cutoff_log=self.series_cutoff_log,
                              inversion_tolerance=self.inversion_tolerance)

    def spectrum(self) -> SpectrumModel:
        spec = self.spectrum_spec
        if "points" in spec:
            pts = [complex(re, im) for re, im in spec["points"]]
            return SpectrumModel.from_points(pts, spec.get("real_part_bounded_above", True),
                                             spec.get("conjugate_pairs", False))
        rule = spec["rule"]
        return SpectrumModel.rule_family(
            c=rule["c"], p=rule["p"], q=rule["q"], r0=rule["r0"], K=self.K, scale=rule["scale"],
            conjugate_pairs=spec.get("conjugate_pairs", False),
            real_part_bounded_above=spec.get("real_part_bounded_above"),
        )

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.raw))


def _spectrum(spec, path: str) -> dict:
    d = _obj(spec, path)
    _unknown(d, {"rule", "points", "real_part_bounded_above", "conjugate_pairs"}, path)
    if ("rule" in d) == ("points" in d):
        raise ConfigError("give exactly one of 'rule' or 'points'", path)
    out: dict[str, Any] = {}
    for flag in ("real_part_bounded_above", "conjugate_pairs"):
        if flag in d and d[flag] is not None:
            if not isinstance(d[flag], bool):
                raise ConfigError("expected true/false", f"{path}.{flag}")
            out[flag] = d[flag]
    if "points" in d:
        pts = d["points"]
        if not isinstance(pts, list) or not pts:
            raise ConfigError("expected a non-empty list of [re, im] pairs", f"{path}.points")
        norm = []
        for i, pr in enumerate(pts):
            if not isinstance(pr, list) or len(pr) != 2:
                raise ConfigError("expected [re, im]", f"{path}.points[{i}]")
            norm.append([_num(pr[0], f"{path}.points[{i}][0]"), _num(pr[1], f"{path}.points[{i}][1]")])
        out["points"] = norm
        return out
    r = _obj(d["rule"], f"{path}.rule")
    _unknown(r, {"c", "p", "q", "r0", "scale"}, f"{path}.rule")
    scale = r.get("scale", "power")
    if scale not in ("power", "log"):
        raise ConfigError("must be 'power' or 'log'", f"{path}.rule.scale")
    out["rule"] = {
        "c": _num(r.get("c", 1.0), f"{path}.rule.c"),
        "p": _num(r.get("p", 1.0), f"{path}.rule.p", nonneg=True),
        "q": _num(r.get("q", 1.0), f"{path}.rule.q", positive=True),
        "r0": _num(r.get("r0", 0.0), f"{path}.rule.r0"),
        "scale": scale,
    }
    return out


def parse_config(doc: Any, base: Path | None = None) -> RunConfig:
    """Validate a decoded JSON document (or a report that embeds one under ``config``)."""
    d = _obj(doc, "<root>")
    if "config" in d and "schema_version" not in d:
        d = _obj(d["config"], "config")
    if "schema_version" not in d:
        raise ConfigError("missing", "schema_version")
    if d["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported version {d['schema_version']!r} (expected {SCHEMA_VERSION})", "schema_version")
    _unknown(d, _KNOWN_TOP, "<root>")

    seq = _sequence(d.get("sequence", {"preset": "gevrey", "beta": 2.0}), "sequence", base)

    ev = _obj(d.get("evaluator", {}), "evaluator")
    _unknown(ev, {"kind", "series_cutoff_log", "inversion_tolerance"}, "evaluator")
    kind = ev.get("kind", "series")
    if kind not in ("series", "proxy"):
        raise ConfigError("must be 'series' or 'proxy'", "evaluator.kind")
    cutoff = _num(ev.get("series_cutoff_log", DEFAULT_CUTOFF_LOG), "evaluator.series_cutoff_log", positive=True)
    tol = _num(ev.get("inversion_tolerance", DEFAULT_INVERSION_TOL), "evaluator.inversion_tolerance", positive=True)

    spectrum = _spectrum(d.get("spectrum", {"rule": {"c": 1.0, "p": 0.6, "q": 1.0}}), "spectrum")

    g = _obj(d.get("grids", {}), "grids")
    _unknown(g, set(_DEFAULT_GRIDS), "grids")
    grids = {}
    for name, default in _DEFAULT_GRIDS.items():
        grids[name] = _grid(g.get(name, default), f"grids.{name}", positive=name != "lambda")

    tr = _obj(d.get("truncation", {}), "truncation")
    _unknown(tr, {"K", "N", "N_max"}, "truncation")
    K = _num(tr.get("K", 100_000), "truncation.K", positive=True, integer=True)
    N = _num(tr.get("N", 200), "truncation.N", positive=True, integer=True)
    N_max = _num(tr.get("N_max", 64), "truncation.N_max", positive=True, integer=True)
    if K > MAX_K:
        raise ConfigError(f"must not exceed {MAX_K}", "truncation.K")
    if not 16 <= N <= MAX_N:
        raise ConfigError(f"must lie in [16, {MAX_N}]", "truncation.N")
    if not 16 <= N_max <= MAX_N:
        raise ConfigError(f"must lie in [16, {MAX_N}]", "truncation.N_max")

    ce = _obj(d.get("counterexample", {}), "counterexample")
    _unknown(ce, {"mode", "b", "K", "r0", "threshold"}, "counterexample")
    ce_mode = ce.get("mode", "unbounded-re")
    if ce_mode not in ("bounded-re", "unbounded-re"):
        raise ConfigError("must be 'bounded-re' or 'unbounded-re'", "counterexample.mode")
    counter = {
        "mode": ce_mode,
        "b": _num(ce.get("b", 1.0), "counterexample.b", positive=True),
        "K": _num(ce.get("K", 10_000), "counterexample.K", positive=True, integer=True),
        "r0": _num(ce.get("r0", 0.0), "counterexample.r0"),
        "threshold": _num(ce.get("threshold", 1e6), "counterexample.threshold", positive=True),
    }
    if not 10 <= counter["K"] <= MAX_K:
        raise ConfigError(f"must lie in [10, {MAX_K}]", "counterexample.K")

    bd = _obj(d.get("boundary", {}), "boundary")
    _unknown(bd, {"a", "b", "im_range", "n_points"}, "boundary")
    boundary = {
        "a": _num(bd.get("a", 0.0), "boundary.a"),
        "b": _num(bd.get("b", 1.0), "boundary.b", nonneg=True),
        "im_range": _num(bd.get("im_range", 10.0), "boundary.im_range", positive=True),
        "n_points": _num(bd.get("n_points", 201), "boundary.n_points", integer=True),
    }
    if boundary["n_points"] < 2:
        raise ConfigError("must be at least 2", "boundary.n_points")

    bk = d.get("basket", ["inv_square", "exp", "inv"])
    if not isinstance(bk, list) or not bk or any(v not in ("inv_square", "exp", "inv") for v in bk):
        raise ConfigError("expected a non-empty subset of ['inv_square', 'exp', 'inv']", "basket")

    mode = d.get("mode", "beurling")
    if not isinstance(mode, str) or mode.lower() not in ("roumieu", "beurling"):
        raise ConfigError("must be 'roumieu' or 'beurling'", "mode")
    output = d.get("output", "carleman_out")
    if not isinstance(output, str) or not output:
        raise ConfigError("expected a directory path", "output")

    raw = {
        "schema_version": SCHEMA_VERSION,
        "sequence": seq.to_dict(),
        "evaluator": {"kind": kind, "series_cutoff_log": cutoff, "inversion_tolerance": tol},
        "spectrum": spectrum,
        "grids": {k: list(v) for k, v in grids.items()},
        "truncation": {"K": K, "N": N, "N_max": N_max},
        "counterexample": counter,
        "boundary": boundary,
        "basket": list(bk),
        "mode": mode.lower(),
        "output": output,
    }
    return RunConfig(seq, kind, cutoff, tol, spectrum, grids, K, N, N_max, counter, boundary,
                     tuple(bk), mode.lower(), output, raw)


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(doc, p.parent)
