"""Experiment configuration, orchestration and result emission.

A config is a JSON object; see the README for the full grammar. Parsing
validates the structure with a JSON schema, resolves shorthand parameter
values (``{"bsc": p}``, ``{"uniform": k}``, ``{"identity": k}``,
``{"hamming": k}``) and checks every kernel row before anything runs.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, fields

import jsonschema
import numpy as np

from . import scenarios as sc
from .bounds import admn_rate_check, pdcf_joint, pdcf_rate, theorem_bound
from .codec import run_monte_carlo
from .errors import ParseError, SchemaError
from .exp_process import verify_eprl, verify_pml
from .finite_prob import JointDist, Kernel
from .network import (AuxStructure, ErrorSet, NetworkSpec, Node, NodeAux, Ref, build_ideal_joint,
                      error_probability_ideal, validate)

ROW_TOL = 1e-9
TASKS = ("simulate", "bound", "verify-pml", "verify-eprl", "rate")

_REF = {"oneOf": [
    {"type": "string", "pattern": "^[XY][0-9]+$"},
    {"type": "object", "required": ["var"], "additionalProperties": False,
     "properties": {"var": {"type": "string", "pattern": "^[XY][0-9]+$"},
                    "radix": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    "index": {"type": "integer", "minimum": 0}}},
]}
_NAMES = {"type": "array", "items": {"type": "string", "pattern": "^[XYU][0-9]+$"}}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": sorted(sc.BUILDERS)},
                "params": {"type": "object"},
                "n": {"type": "integer", "minimum": 1},
                "name": {"type": "string"},
                "inline": {
                    "type": "object",
                    "required": ["nodes", "aux"],
                    "additionalProperties": False,
                    "properties": {
                        "nodes": {"type": "array", "minItems": 1, "items": {
                            "type": "object", "required": ["x_size", "y_size", "channel"],
                            "additionalProperties": False,
                            "properties": {"x_size": {"type": "integer", "minimum": 1},
                                           "y_size": {"type": "integer", "minimum": 1},
                                           "channel": {}, "parents": _NAMES}}},
                        "aux": {"type": "array", "items": {
                            "type": "object", "required": ["u_size", "aux_kernel", "out_kernel"],
                            "additionalProperties": False,
                            "properties": {"u_size": {"type": "integer", "minimum": 1},
                                           "aux_kernel": {}, "out_kernel": {},
                                           "aux_parents": _NAMES, "out_parents": _NAMES,
                                           "decode": {"type": "array", "items": {"type": "integer"}},
                                           "d_unique": {"type": "integer", "minimum": 0}}}},
                        "error_set": {
                            "type": "object", "required": ["kind"],
                            "properties": {
                                "kind": {"enum": ["empty", "full", "message-mismatch", "distortion-threshold",
                                                  "function-mismatch", "custom-table"]},
                                "pairs": {"type": "array", "items": {"type": "array", "items": _REF,
                                                                     "minItems": 2, "maxItems": 2}},
                                "source": _REF, "recon": _REF,
                                "args": {"type": "array", "items": _REF},
                                "refs": {"type": "array", "items": _REF},
                                "f": {}, "d": {}, "D": {"type": "number"}, "table": {}}},
                    },
                },
            },
            "oneOf": [{"required": ["preset"]}, {"required": ["inline"]}],
        },
        "task": {"enum": list(TASKS)},
        "trials": {"type": "integer"},
        "seed": {"type": "integer", "minimum": 0},
        "method": {"enum": ["exact", "mc"]},
        "bound_trials": {"type": "integer", "minimum": 2},
        "atom_cap": {"type": "integer", "minimum": 1},
        "output": {"type": "string"},
        "format": {"enum": ["csv", "json"]},
        "sweep": {"type": "object", "required": ["param", "values"], "additionalProperties": False,
                  "properties": {"param": {"type": "string"}, "values": {"type": "array", "minItems": 1}}},
        "verify": {"type": "object", "required": ["P"], "additionalProperties": False,
                   "properties": {"P": {}, "Q": {}, "q": {}, "v": {}}},
    },
}


@dataclass
class ExperimentConfig:
    scenario: dict | None = None
    task: str = "simulate"
    trials: int = 10**5
    seed: int = 0
    method: str = "exact"
    bound_trials: int = 10**6
    atom_cap: int | None = None
    output: str | None = None
    format: str = "csv"
    sweep: dict | None = None
    verify: dict | None = None

    def plan(self) -> list:
        """Sweep points as ``(param, value)`` pairs, or a single ``None`` point."""
        if not self.sweep:
            return [None]
        return [(self.sweep["param"], v) for v in self.sweep["values"]]


@dataclass
class ResultRow:
    scenario: str
    params: str
    trials: int | None
    empirical_error: float | None
    ci_low: float | None
    ci_high: float | None
    ideal_error: float | None
    bound: float | None
    method: str
    margin: float | None
    seed: int
    walltime_ms: float


HEADER = tuple(f.name for f in fields(ResultRow))


# -- parameter resolution --------------------------------------------------------

def resolve_value(v, path: str = ""):
    """Expand shorthand parameter values into arrays."""
    if isinstance(v, dict):
        if len(v) != 1:
            raise SchemaError(path, f"unknown parameter object {sorted(v)}")
        (key, arg), = v.items()
        if key == "bsc":
            p = float(arg)
            if not 0 <= p <= 1:
                raise SchemaError(path, "bsc crossover must lie in [0, 1]")
            return np.array([[1 - p, p], [p, 1 - p]])
        if key == "uniform":
            return np.full(int(arg), 1.0 / int(arg))
        if key == "identity":
            return np.eye(int(arg))
        if key == "hamming":
            return 1.0 - np.eye(int(arg))
        raise SchemaError(path, f"unknown shorthand {key!r}")
    if isinstance(v, list):
        try:
            return np.asarray(v, dtype=float)
        except ValueError as exc:
            raise SchemaError(path, f"not a rectangular numeric array: {exc}") from None
    return v


def check_rows(table, path: str, atol: float = ROW_TOL):
    t = np.asarray(table, dtype=float)
    if np.any(t < 0):
        raise SchemaError(path, "negative probability")
    sums = t.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1) > atol)
    if bad.size:
        row = tuple(int(i) for i in bad[0])
        raise SchemaError(path, f"row {list(row)} sums to {float(sums[row]):.12g}, not 1")
    return t


_INT_PARAMS = {"x_func", "z_func", "xr_func", "f", "L", "L1", "L2", "J"}


def _preset_params(raw: dict, path: str) -> dict:
    out = {}
    for k, v in raw.items():
        val = resolve_value(v, f"{path}.{k}")
        kind = sc._LIFT.get(k)
        if kind == "kernel":
            check_rows(val, f"{path}.{k}")
        elif kind == "pmf":
            a = np.asarray(val, dtype=float)
            if np.any(a < 0) or abs(a.sum() - 1) > ROW_TOL:
                raise SchemaError(f"{path}.{k}", f"total mass {float(a.sum()):.12g}, not 1")
        if k in _INT_PARAMS:
            a = np.asarray(val)
            if np.any(a != np.round(a)):
                raise SchemaError(f"{path}.{k}", "must be integer valued")
            val = a.astype(np.int64) if a.ndim else int(a)
        out[k] = val
    return out


def _ref(r) -> Ref:
    if isinstance(r, str):
        return Ref(r)
    return Ref(r["var"], tuple(r.get("radix", ())), int(r.get("index", 0)))


def _inline_error_set(es: dict, path: str) -> ErrorSet:
    kind = es["kind"]
    try:
        if kind == "empty":
            return ErrorSet.empty()
        if kind == "full":
            return ErrorSet.full()
        if kind == "message-mismatch":
            return ErrorSet.message_mismatch([(_ref(a), _ref(b)) for a, b in es["pairs"]])
        if kind == "distortion-threshold":
            return ErrorSet.distortion(_ref(es["source"]), _ref(es["recon"]), es["d"], es.get("D", 0.0))
        if kind == "function-mismatch":
            return ErrorSet.function_mismatch([_ref(a) for a in es["args"]], es["f"], _ref(es["recon"]),
                                              es["d"], es.get("D", 0.0))
        return ErrorSet.custom([_ref(r) for r in es["refs"]], es["table"])
    except KeyError as exc:
        raise SchemaError(f"{path}.{exc.args[0]}", "required for this error-set kind") from None


def _inline_kernel(v, path: str) -> Kernel:
    t = check_rows(resolve_value(v, path), path)
    return Kernel.from_table(t, atol=ROW_TOL)


def build_inline(inl: dict, path: str = "scenario.inline"):
    nodes, auxes = [], []
    for k, nd in enumerate(inl["nodes"]):
        p = f"{path}.nodes[{k}]"
        nodes.append(Node(nd["x_size"], nd["y_size"], _inline_kernel(nd["channel"], p + ".channel"),
                          tuple(nd.get("parents", ()))))
    for k, ax in enumerate(inl["aux"]):
        p = f"{path}.aux[{k}]"
        auxes.append(NodeAux(ax["u_size"], _inline_kernel(ax["aux_kernel"], p + ".aux_kernel"),
                             _inline_kernel(ax["out_kernel"], p + ".out_kernel"),
                             tuple(ax.get("aux_parents", ())), tuple(ax.get("out_parents", ())),
                             tuple(ax.get("decode", ())), ax.get("d_unique", 0)))
    es = inl.get("error_set", {"kind": "empty"})
    return NetworkSpec(nodes), AuxStructure(auxes), _inline_error_set(es, f"{path}.error_set")


# -- parsing ------------------------------------------------------------------------

def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config; raises :class:`ParseError` or :class:`SchemaError`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft7Validator(SCHEMA)
    errs = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errs:
        e = errs[0]
        path = ".".join(str(p) if not isinstance(p, int) else f"[{p}]" for p in e.absolute_path)
        raise SchemaError(path.replace(".[", "[") or "<root>", e.message)
    cfg = ExperimentConfig(**raw)
    check_config(cfg)
    return cfg


def check_config(cfg: ExperimentConfig) -> None:
    """Semantic checks that the schema cannot express; builds the scenario once."""
    if cfg.task == "simulate" and cfg.trials < 1:
        raise SchemaError("trials", "simulate needs trials >= 1")
    if cfg.task in ("verify-pml", "verify-eprl"):
        if cfg.trials < 1:
            raise SchemaError("trials", "verification needs trials >= 1")
        if not cfg.verify:
            raise SchemaError("verify", f"task {cfg.task} needs a verify block")
        if cfg.task == "verify-pml" and "Q" not in cfg.verify:
            raise SchemaError("verify.Q", "required for verify-pml")
        if cfg.task == "verify-eprl" and "q" not in cfg.verify:
            raise SchemaError("verify.q", "required for verify-eprl")
        return
    if cfg.scenario is None:
        raise SchemaError("scenario", f"task {cfg.task} needs a scenario")
    for point in cfg.plan():
        build_scenario(cfg, point)


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- scenario construction -----------------------------------------------------------

@dataclass
class Built:
    name: str
    params: dict
    spec: NetworkSpec
    aux: AuxStructure
    error_set: ErrorSet
    bundle: sc.ScenarioBundle | None = None


def build_scenario(cfg: ExperimentConfig, point=None) -> Built:
    s = cfg.scenario
    n = s.get("n", 1)
    if "inline" in s:
        if point is not None:
            raise SchemaError("sweep.param", "sweeps need a preset scenario")
        spec, aux, e = build_inline(s["inline"])
        diag = validate(spec, aux, e, cfg.atom_cap)
        if diag:
            raise SchemaError("scenario.inline", "; ".join(diag))
        return Built(s.get("name", "inline"), {}, spec, aux, e)
    raw = dict(s.get("params", {}))
    if point is not None:
        key, val = point
        if key == "n":
            n = int(val)
        else:
            raw[key] = val
    params = _preset_params(raw, "scenario.params")
    builder = sc.BUILDERS[s["preset"]]
    try:
        bundle = builder(**params)
        if n > 1:
            bundle = sc.nfold(bundle, n, cfg.atom_cap)
    except TypeError as exc:
        raise SchemaError("scenario.params", str(exc)) from None
    except (ValueError, IndexError) as exc:
        raise SchemaError("scenario.params", str(exc)) from None
    diag = validate(bundle.spec, bundle.aux, bundle.error_set, cfg.atom_cap)
    if diag:
        raise SchemaError("scenario", "; ".join(diag))
    shown = {k: v for k, v in bundle.params.items() if not isinstance(v, np.ndarray)}
    shown.setdefault("n", n)
    return Built(s.get("name", bundle.name), shown, bundle.spec, bundle.aux, bundle.error_set, bundle)


# -- running ---------------------------------------------------------------------------

def _round12(v):
    if isinstance(v, float) and math.isfinite(v):
        return float(f"{v:.12g}")
    if isinstance(v, dict):
        return {k: _round12(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round12(x) for x in v]
    return v


def _params_text(p: dict) -> str:
    return json.dumps(_round12(p), sort_keys=True, separators=(",", ":"))


def _now():
    return time.perf_counter()


def _ms(t0) -> float:
    return round((time.perf_counter() - t0) * 1000.0, 3)


def _bound(cfg: ExperimentConfig, ij, e):
    return theorem_bound(ij, e, cfg.method, cfg.bound_trials, cfg.seed)


def _run_point(cfg: ExperimentConfig, point) -> tuple[list, bool]:
    t0 = _now()
    if cfg.task in ("verify-pml", "verify-eprl"):
        return _run_verify(cfg, t0)
    b = build_scenario(cfg, point)
    pt = dict(b.params)
    if point is not None:
        pt[point[0]] = point[1]
    ij = build_ideal_joint(b.spec, b.aux, cfg.atom_cap)
    if cfg.task == "bound":
        rep = _bound(cfg, ij, b.error_set)
        return [ResultRow(b.name, _params_text(pt), rep.trials or None, None, None, None,
                          error_probability_ideal(ij, b.error_set), rep.value, rep.method, None, cfg.seed,
                          _ms(t0))], False
    if cfg.task == "simulate":
        mc = run_monte_carlo(b.spec, b.aux, b.error_set, cfg.seed, cfg.trials, ij=ij, cap=cfg.atom_cap)
        rep = _bound(cfg, ij, b.error_set)
        bound = rep.ci[1] if rep.method == "mc" else rep.value
        margin = bound - mc.actual.point
        bad = (mc.actual.ci_low > bound or margin < -3 * mc.actual.halfwidth or mc.dominance_violations > 0)
        return [ResultRow(b.name, _params_text(pt), cfg.trials, mc.actual.point, mc.actual.ci_low,
                          mc.actual.ci_high, mc.ideal_exact, rep.value, rep.method, margin, cfg.seed,
                          _ms(t0))], bad
    # rate
    rows = []
    if b.bundle is not None and b.bundle.kind == "pdcf":
        r = pdcf_rate(pdcf_joint(b.bundle, cfg.atom_cap))
        pt["feasible"] = r.feasible
        rows.append(ResultRow(b.name, _params_text(pt), None, None, None, None, None, r.rate, "pdcf-rate",
                              None, cfg.seed, _ms(t0)))
        return rows, False
    for m in admn_rate_check(ij):
        q = dict(pt, i=m.i, j=m.j, lhs=m.lhs, rhs=m.rhs, strict=m.strict)
        rows.append(ResultRow(b.name, _params_text(q), None, None, None, None, None, m.margin, "admn-margin",
                              None, cfg.seed, _ms(t0)))
    return rows, False


def _run_verify(cfg: ExperimentConfig, t0) -> tuple[list, bool]:
    v = cfg.verify
    P = resolve_value(v["P"], "verify.P")
    if cfg.task == "verify-pml":
        rep = verify_pml(P, resolve_value(v["Q"], "verify.Q"), cfg.trials, cfg.seed)
    else:
        q = np.asarray(resolve_value(v["q"], "verify.q"), dtype=float)
        rep = verify_eprl(P, JointDist.from_array(q, normalize=True), v.get("v", 0), cfg.trials, cfg.seed)
    rows = []
    for r in rep.rows:
        rows.append(ResultRow(cfg.task, _params_text({"u": r.element, "count": r.count}), cfg.trials, r.mean,
                              r.ci_low, r.ci_high, None, r.bound, "mc", r.bound - r.mean, cfg.seed, _ms(t0)))
    return rows, not rep.ok


def run(cfg: ExperimentConfig) -> tuple[list, int]:
    """Execute every sweep point; returns ``(rows, exit code)``."""
    rows, violated = [], False
    for point in cfg.plan():
        r, bad = _run_point(cfg, point)
        rows.extend(r)
        violated |= bad
    return rows, 2 if violated else 0


# -- emission ----------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.12g}"
    return str(v)


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([_fmt(getattr(r, h)) for h in HEADER])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            return None
        return float(f"{v:.12g}")
    return v


def to_json(rows) -> str:
    return json.dumps([{k: _json_value(v) for k, v in asdict(r).items()} for r in rows], indent=1) + "\n"


def emit(rows, fmt: str = "csv", path: str | None = None) -> str:
    """Serialize rows; writes to ``path`` when given and returns the text."""
    if not rows:
        raise ValueError("no rows to emit")
    text = to_csv(rows) if fmt == "csv" else to_json(rows)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def strip_walltime_csv(text: str) -> str:
    """CSV with the wall-time column blanked, for reproducibility comparisons."""
    out = []
    for line in text.splitlines():
        out.append(line.rsplit(",", 1)[0])
    return "\n".join(out)

