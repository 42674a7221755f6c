"""JSON run configuration: schema validation and round-trip serialization.

A config is a single JSON document.  Matrices are row-major nested arrays;
the nonlinear drift is the tanh ridge term list.  Unknown keys anywhere in
the document are rejected before any computation runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .holder import ScalarField
from .operators import DriftField, DriftTerm, OperatorSpec

__all__ = ["RunConfig", "parse_config", "load_config", "field_from_config", "config_to_dict"]

_OPERATOR_KEYS = {"n", "p_tilde", "Q0", "A", "drift"}
_DRIFT_KEYS = {"i", "c", "a", "b"}
_FIELD_KEYS = {"type", "value", "w", "amplitude", "box"}

# every command parameter the CLI understands; anything else is a typo
_PARAM_KEYS = {
    "t",
    "t_grid",
    "s_grid",
    "x",
    "seed",
    "threads",
    "budget",
    "n_paths",
    "steps",
    "lambda",
    "theta",
    "gamma",
    "q",
    "method",
    "field",
    "fields",
    "paths_per_node",
    "tol",
    "dump_paths",
}
_TOP_KEYS = {"operator"} | _PARAM_KEYS


def _reject_unknown(d, allowed, where):
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")


def _require(d, key, where):
    if key not in d:
        raise ConfigError(f"missing required key '{key}' in {where}")
    return d[key]


def _matrix(value, where, shape=None):
    try:
        m = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where} is not a numeric matrix: {exc}") from None
    if m.ndim != 2:
        raise ConfigError(f"{where} must be a nested (row-major) array")
    if shape is not None and m.shape != shape:
        raise ConfigError(f"{where} must have shape {shape}, got {m.shape}")
    return m


def operator_from_config(doc) -> OperatorSpec:
    if not isinstance(doc, dict):
        raise ConfigError("'operator' must be an object")
    _reject_unknown(doc, _OPERATOR_KEYS, "operator")
    n = _require(doc, "n", "operator")
    p = _require(doc, "p_tilde", "operator")
    if not (isinstance(n, int) and isinstance(p, int) and 1 <= p <= n):
        raise ConfigError("operator requires integers 1 <= p_tilde <= n")
    Q0 = _matrix(_require(doc, "Q0", "operator"), "operator.Q0", (p, p))
    A = _matrix(_require(doc, "A", "operator"), "operator.A", (n, n))
    terms = []
    for j, td in enumerate(doc.get("drift", [])):
        where = f"operator.drift[{j}]"
        if not isinstance(td, dict):
            raise ConfigError(f"{where} must be an object")
        _reject_unknown(td, _DRIFT_KEYS, where)
        a = np.array(_require(td, "a", where), dtype=float)
        if a.shape != (n,):
            raise ConfigError(f"{where}.a must have length {n}")
        terms.append(
            DriftTerm(
                i=int(_require(td, "i", where)),
                c=float(_require(td, "c", where)),
                a=a,
                b=float(td.get("b", 0.0)),
            )
        )
    try:
        return OperatorSpec(n=n, p_tilde=p, Q0=Q0, A=A, F=DriftField(terms))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def field_from_config(doc, n) -> ScalarField:
    """Scalar fields from their JSON encoding: const or cosine."""
    if not isinstance(doc, dict):
        raise ConfigError("field must be an object")
    _reject_unknown(doc, _FIELD_KEYS, "field")
    kind = _require(doc, "type", "field")
    box = None
    if "box" in doc:
        box = _matrix(doc["box"], "field.box", (n, 2))
    if kind == "const":
        return ScalarField.constant(float(_require(doc, "value", "field")), n, box=box)
    if kind == "cos":
        w = np.array(_require(doc, "w", "field"), dtype=float)
        if w.shape != (n,):
            raise ConfigError(f"field.w must have length {n}")
        return ScalarField.cosine(w, amplitude=float(doc.get("amplitude", 1.0)), box=box)
    raise ConfigError(f"unknown field type '{kind}'")


def _field_to_dict(f: ScalarField):
    if hasattr(f, "wave_vector"):
        return {"type": "cos", "w": list(map(float, f.wave_vector)), "amplitude": f.amplitude}
    if f.label.startswith("const("):
        return {"type": "const", "value": float(f.label[6:-1])}
    raise ConfigError(f"field '{f.label}' has no JSON encoding")


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: the operator plus validated command parameters."""

    operator: OperatorSpec
    params: dict

    def param(self, key, default=None):
        return self.params.get(key, default)

    def require(self, key):
        if key not in self.params:
            raise ConfigError(f"this command requires config key '{key}'")
        return self.params[key]


def parse_config(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config")
    operator = operator_from_config(_require(doc, "operator", "config"))
    params = {k: v for k, v in doc.items() if k != "operator"}
    for key in ("seed", "threads", "budget", "n_paths", "steps", "paths_per_node"):
        if key in params:
            if not isinstance(params[key], int) or params[key] < 0:
                raise ConfigError(f"'{key}' must be a non-negative integer")
    for key in ("t", "lambda", "theta", "gamma", "q", "tol"):
        if key in params and not isinstance(params[key], (int, float)):
            raise ConfigError(f"'{key}' must be a number")
    for key in ("t_grid", "s_grid", "x"):
        if key in params:
            arr = np.array(params[key], dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise ConfigError(f"'{key}' must be a non-empty flat array")
            params[key] = [float(v) for v in arr]
    if "method" in params and params["method"] not in ("direct", "girsanov"):
        raise ConfigError("'method' must be 'direct' or 'girsanov'")
    if "field" in params:
        params["field"] = field_from_config(params["field"], operator.n)
    if "fields" in params:
        params["fields"] = [field_from_config(d, operator.n) for d in params["fields"]]
    return RunConfig(operator=operator, params=params)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_config(doc)


def config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of parse_config up to semantic equality."""
    spec = cfg.operator
    out = {
        "operator": {
            "n": spec.n,
            "p_tilde": spec.p_tilde,
            "Q0": [[float(v) for v in row] for row in spec.Q0],
            "A": [[float(v) for v in row] for row in spec.A],
            "drift": [
                {"i": t.i, "c": t.c, "a": [float(v) for v in t.a], "b": t.b}
                for t in spec.F.terms
            ],
        }
    }
    for k, v in cfg.params.items():
        if k == "field":
            out[k] = _field_to_dict(v)
        elif k == "fields":
            out[k] = [_field_to_dict(f) for f in v]
        else:
            out[k] = v
    return out
