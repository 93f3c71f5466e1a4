"""Check / couple / holonomy runs over catalog entries and model files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import DEFAULT_SEED, catalog_get, catalog_ids
from .dirac import DiracTriple, integrability_report
from .fibration import HolonomyProbe, Loop, parallel_transport, holonomy_poisson_residual
from .gauge import build_coupling
from .modelio import (GaugeModel, GraphModel, ModelSchemaError, TripleModel,
                      load_model, parse_model, triple_to_model_dict)

__all__ = ["RunConfig", "resolve_model", "run_check", "run_couple", "run_holonomy",
           "report_to_text"]


@dataclass
class RunConfig:
    samples: int = 500
    seed: int = DEFAULT_SEED
    tolerance: float = 1e-6
    step: float = 1e-3
    fmt: str = "text"

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("sample count must be at least 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.step <= 0:
            raise ValueError("integrator step must be positive")


def resolve_model(spec: str):
    """A catalog id or a path to a model file -> (model, expected or None)."""
    if spec in catalog_ids():
        entry = catalog_get(spec)
        return parse_model(entry.payload, spec), entry.expected
    path = Path(spec)
    if not path.exists():
        raise ModelSchemaError(
            f"{spec!r} is neither a catalog id ({', '.join(catalog_ids())}) nor a file")
    return load_model(path), None


def _triple_of(model) -> DiracTriple:
    if isinstance(model, TripleModel):
        return model.triple
    if isinstance(model, GaugeModel):
        return build_coupling(model.connection, model.lie, model.action)
    raise ModelSchemaError("this operation needs a triple or gauge model")


def run_check(model, cfg: RunConfig, expected: dict | None = None) -> tuple[dict, int]:
    """Integrability (or graph degeneracy) report plus the exit code.

    Exit 0 means: the verdict matches the catalog expectation, or, for user
    models, the check passed outright.
    """
    if isinstance(model, GraphModel):
        rng = np.random.default_rng(cfg.seed)
        pts = model.fib.total.sample(cfg.samples, rng)
        cls = model.graph.classify(pts)
        report = {
            "version": 1,
            "model_id": model.model_id,
            "kind": model.graph.kind + "_graph",
            "seed": cfg.seed,
            "samples": cfg.samples,
            "fiber_nondegenerate": cls["fiber_nondegenerate"],
            "n_degenerate": cls["n_degenerate"],
            "intersection_dim_max": cls["intersection_dim_max"],
            "intersection_dim_min": cls["intersection_dim_min"],
            "verdict": "fiber_nondegenerate" if cls["fiber_nondegenerate"] else "fiber_degenerate",
        }
        if expected is None:
            code = 0 if cls["fiber_nondegenerate"] else 1
        else:
            ok = cls["fiber_nondegenerate"] == expected["fiber_nondegenerate"]
            if "all_points_degenerate" in expected:
                ok = ok and ((cls["n_degenerate"] == cfg.samples)
                             == expected["all_points_degenerate"])
            code = 0 if ok else 1
        return report, code

    triple = _triple_of(model)
    rep = integrability_report(triple, samples=cfg.samples, seed=cfg.seed,
                               tolerance=cfg.tolerance, model_id=model.model_id)
    doc = rep.to_dict()
    if expected is None:
        code = 0 if rep.verdict == "dirac" else 1
    else:
        code = 0 if rep.passes() == expected else 1
    return doc, code


def run_couple(model, cfg: RunConfig, out_path: str | None = None) -> tuple[dict, int]:
    """Build the coupling triple of a gauge model; optionally write it out."""
    if not isinstance(model, GaugeModel):
        raise ModelSchemaError("couple needs a gauge model")
    triple = build_coupling(model.connection, model.lie, model.action)
    doc = triple_to_model_dict(triple)
    written = None
    if out_path:
        Path(out_path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        written = str(out_path)
    rep = integrability_report(triple, samples=cfg.samples, seed=cfg.seed,
                               tolerance=cfg.tolerance, model_id=model.model_id)
    result = {
        "version": 1,
        "model_id": model.model_id,
        "written_to": written,
        "triple": doc,
        "report": rep.to_dict(),
    }
    return result, 0 if rep.verdict == "dirac" else 1


def run_holonomy(model, loop: Loop, cfg: RunConfig, fiber_count: int = 5) -> tuple[dict, int]:
    """Transport fiber samples around a base loop and report residuals."""
    triple = _triple_of(model)
    fib = triple.fib
    rng = np.random.default_rng(cfg.seed)
    probe = HolonomyProbe(loop, step=cfg.step)
    probe.fiber_points = probe.resolved_fiber_points(fib.fiber, rng, fiber_count)
    result = parallel_transport(probe, triple.connection)
    reverse = parallel_transport(
        HolonomyProbe(loop.reversed(), step=cfg.step, fiber_points=result.end),
        triple.connection)
    residual = holonomy_poisson_residual(probe, triple.connection, triple.pi_field())
    report = {
        "version": 1,
        "model_id": model.model_id,
        "seed": cfg.seed,
        "step": cfg.step,
        "n_fiber_points": int(probe.fiber_points.shape[0]),
        "max_displacement": float(np.max(np.linalg.norm(result.end - result.start, axis=1))),
        "reverse_error": float(np.max(np.abs(reverse.end - result.start))),
        "poisson_residual_max": residual["max_residual"],
        "poisson_residual_mean": residual["mean_residual"],
    }
    return report, 0


def report_to_text(doc: dict) -> str:
    """Stable plain-text rendering of any report dictionary."""
    lines = []
    for key, value in doc.items():
        if key == "conditions":
            lines.append("conditions:")
            for name, st in value.items():
                lines.append(
                    f"  {name}: max={st['max']!r} mean={st['mean']!r} "
                    f"n={st['n']} pass={st['pass']}")
        elif key in ("triple",):
            lines.append(f"{key}: <model document, {len(json.dumps(value))} bytes>")
        else:
            lines.append(f"{key}: {value!r}")
    return "\n".join(lines)
