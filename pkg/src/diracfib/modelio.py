"""Model and gauge file formats: versioned JSON, schema-validated.

Three model kinds share one envelope:

* ``triple`` — split chart plus (connection, omega, pi) coefficient
  expressions; the native serialization of a Dirac triple;
* ``poisson_graph`` / ``presymplectic_graph`` — a bivector or 2-form on
  the total chart, analyzed through its pointwise graph;
* ``gauge`` — Lie algebra data, principal connection chart, Hamiltonian
  action; the input of the coupling construction.

All numbers are decimal; all coefficient entries are strings in the
expression grammar.  Sparse entries use ``{"pair": [i, j], "expr": "..."}``
with 0-based indices (base indices for omega, fiber indices for pi, total
indices for graph coefficients).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from . import expr as ex
from .chart import Chart
from .fibration import FibrationChart, Loop
from .dirac import DiracTriple, GraphFamily, graph_of_poisson, graph_of_presymplectic
from .gauge import LieAlgebraData, PrincipalConnectionChart, HamiltonianAction

__all__ = [
    "ModelSchemaError", "TripleModel", "GraphModel", "GaugeModel",
    "load_model", "parse_model", "triple_to_model_dict", "parse_loop_spec",
]


class ModelSchemaError(ValueError):
    """The document does not validate against the model file schema."""


_CHART_SCHEMA = {
    "type": "object",
    "required": ["coords", "domain"],
    "properties": {
        "coords": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "domain": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "number"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
    },
    "additionalProperties": False,
}

_ENTRIES_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["pair", "expr"],
        "properties": {
            "pair": {"type": "array", "items": {"type": "integer", "minimum": 0},
                     "minItems": 2, "maxItems": 2},
            "expr": {"type": "string"},
        },
        "additionalProperties": False,
    },
}

_EXPR_MATRIX_SCHEMA = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "string"}},
}

_LOOP_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["circle", "rectangle", "components"]},
        "center": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "radius": {"type": "number"},
        "corner": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "width": {"type": "number"},
        "height": {"type": "number"},
        "exprs": {"type": "array", "items": {"type": "string"}},
    },
}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["version", "kind"],
    "properties": {
        "version": {"const": 1},
        "kind": {"enum": ["triple", "poisson_graph", "presymplectic_graph", "gauge"]},
        "base": _CHART_SCHEMA,
        "fiber": _CHART_SCHEMA,
        "connection": _EXPR_MATRIX_SCHEMA,
        "omega": _ENTRIES_SCHEMA,
        "pi": _ENTRIES_SCHEMA,
        "coefficients": _ENTRIES_SCHEMA,
        "loops": {"type": "object", "additionalProperties": _LOOP_SCHEMA},
        "lie_algebra": {
            "type": "object",
            "required": ["dim", "structure_constants"],
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "structure_constants": {"type": "array"},
            },
        },
        "action": {
            "type": "object",
            "required": ["generators", "moments"],
            "properties": {
                "generators": _EXPR_MATRIX_SCHEMA,
                "moments": {"type": "array", "items": {"type": "string"}},
            },
        },
    },
}


@dataclass
class TripleModel:
    model_id: str
    fib: FibrationChart
    triple: DiracTriple
    loops: dict[str, Loop]


@dataclass
class GraphModel:
    model_id: str
    fib: FibrationChart
    graph: GraphFamily


@dataclass
class GaugeModel:
    model_id: str
    lie: LieAlgebraData
    connection: PrincipalConnectionChart
    action: HamiltonianAction
    loops: dict[str, Loop]


def _chart_from(doc: dict) -> Chart:
    coords = tuple(doc["coords"])
    domain = tuple((float(lo), float(hi)) for lo, hi in doc["domain"])
    return Chart(coords, domain)


def _entries_to_dict(entries, increasing: bool = True) -> dict:
    out = {}
    for item in entries or []:
        i, j = item["pair"]
        if increasing and not i < j:
            raise ModelSchemaError(f"entry pair {item['pair']} must be strictly increasing")
        if (i, j) in out:
            raise ModelSchemaError(f"duplicate entry for pair {item['pair']}")
        out[(i, j)] = item["expr"]
    return out


def parse_loop_spec(base: Chart, spec: dict) -> Loop:
    kind = spec["type"]
    if kind == "circle":
        return Loop.circle(base, spec["center"], float(spec["radius"]))
    if kind == "rectangle":
        return Loop.rectangle(base, spec["corner"], float(spec["width"]), float(spec["height"]))
    if kind == "components":
        return Loop(base, list(spec["exprs"]))
    raise ModelSchemaError(f"unknown loop type {kind!r}")


def _matrix_entries(matrix, rows: int, cols: int, what: str) -> dict:
    if matrix is None:
        return {}
    if len(matrix) != rows or any(len(r) != cols for r in matrix):
        raise ModelSchemaError(f"{what} must be a {rows}x{cols} matrix of expressions")
    out = {}
    for i, row in enumerate(matrix):
        for j, text in enumerate(row):
            if text.strip() not in ("0", "0.0"):
                out[(i, j)] = text
    return out


def parse_model(doc: dict, model_id: str = "user_model"):
    """Validate and instantiate a model document."""
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ModelSchemaError(f"model file invalid: {err.message}") from None
    kind = doc["kind"]
    try:
        if kind == "triple":
            return _parse_triple(doc, model_id)
        if kind in ("poisson_graph", "presymplectic_graph"):
            return _parse_graph(doc, model_id)
        return _parse_gauge(doc, model_id)
    except (ex.ExprError, ValueError) as err:
        if isinstance(err, ModelSchemaError):
            raise
        raise ModelSchemaError(f"model file invalid: {err}") from None


def _require(doc: dict, *fields: str):
    missing = [f for f in fields if f not in doc]
    if missing:
        raise ModelSchemaError(f"model file invalid: missing {', '.join(missing)}")


def _parse_triple(doc: dict, model_id: str) -> TripleModel:
    _require(doc, "base", "fiber")
    base = _chart_from(doc["base"])
    fiber = _chart_from(doc["fiber"])
    fib = FibrationChart(base, fiber)
    gamma = _matrix_entries(doc.get("connection"), base.dim, fiber.dim, "connection")
    triple = DiracTriple(fib, gamma,
                         _entries_to_dict(doc.get("omega")),
                         _entries_to_dict(doc.get("pi")))
    loops = {name: parse_loop_spec(base, spec) for name, spec in (doc.get("loops") or {}).items()}
    return TripleModel(model_id, fib, triple, loops)


def _parse_graph(doc: dict, model_id: str) -> GraphModel:
    _require(doc, "base", "fiber", "coefficients")
    base = _chart_from(doc["base"])
    fiber = _chart_from(doc["fiber"])
    fib = FibrationChart(base, fiber)
    coeffs = _entries_to_dict(doc["coefficients"])
    if doc["kind"] == "poisson_graph":
        graph = graph_of_poisson(fib, coeffs)
    else:
        graph = graph_of_presymplectic(fib, coeffs)
    return GraphModel(model_id, fib, graph)


def _parse_gauge(doc: dict, model_id: str) -> GaugeModel:
    _require(doc, "base", "fiber", "lie_algebra", "connection", "action")
    base = _chart_from(doc["base"])
    fiber = _chart_from(doc["fiber"])
    lie = LieAlgebraData.from_array(doc["lie_algebra"]["structure_constants"])
    if lie.dim != doc["lie_algebra"]["dim"]:
        raise ModelSchemaError("lie_algebra dim does not match its structure constants")
    conn = PrincipalConnectionChart(
        base, _matrix_entries(doc["connection"], base.dim, lie.dim, "connection"), lie.dim)
    gens = _matrix_entries(doc["action"]["generators"], lie.dim, fiber.dim, "generators")
    moments = list(doc["action"]["moments"])
    if len(moments) != lie.dim:
        raise ModelSchemaError("need one moment component per algebra dimension")
    action = HamiltonianAction(fiber, _entries_to_dict(doc.get("pi")), gens, moments)
    loops = {name: parse_loop_spec(base, spec) for name, spec in (doc.get("loops") or {}).items()}
    return GaugeModel(model_id, lie, conn, action, loops)


def load_model(path: str | Path, model_id: str | None = None):
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise ModelSchemaError(f"not valid JSON: {err}") from None
    return parse_model(doc, model_id or p.stem)


def _chart_to_dict(chart: Chart) -> dict:
    return {"coords": list(chart.coord_names),
            "domain": [[lo, hi] for lo, hi in chart.domain]}


def triple_to_model_dict(triple: DiracTriple) -> dict:
    """Serialize a triple as a model document (pretty-printed expressions)."""
    fib = triple.fib
    connection = [[ex.pretty(triple.connection.entry(i, a)) for a in range(fib.m)]
                  for i in range(fib.n)]
    omega = [{"pair": [i, j], "expr": ex.pretty(e)} for (i, j), e in sorted(triple.omega.items())]
    pi = [{"pair": [a, b], "expr": ex.pretty(e)} for (a, b), e in sorted(triple.pi.items())]
    return {
        "version": 1,
        "kind": "triple",
        "base": _chart_to_dict(fib.base),
        "fiber": _chart_to_dict(fib.fiber),
        "connection": connection,
        "omega": omega,
        "pi": pi,
    }
