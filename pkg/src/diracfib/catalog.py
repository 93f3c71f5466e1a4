"""Built-in example models with frozen expected verdicts.

Expected verdicts were computed once with the brute-force obstruction
tensor (direct Courant-bracket evaluation on generator sections, no
component formulas) and frozen here; the test suite re-derives them the
same way, so the component formulas and the report pipeline are both
checked against an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dirac import CONDITION_NAMES

__all__ = ["CatalogEntry", "catalog_list", "catalog_get", "catalog_ids", "DEFAULT_SEED"]

DEFAULT_SEED = 42

_HOPF_A = [["-x2/(1 + x1^2 + x2^2)"], ["x1/(1 + x1^2 + x2^2)"]]
_SU2STAR_PI = [
    {"pair": [0, 1], "expr": "y3"},
    {"pair": [0, 2], "expr": "-y2"},
    {"pair": [1, 2], "expr": "y1"},
]


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    description: str
    payload: dict                  # model document in the file format
    expected: dict                 # condition name -> bool, or graph expectations

    @property
    def kind(self) -> str:
        return self.payload["kind"]


def _all_pass() -> dict:
    return {name: True for name in CONDITION_NAMES}


def _fails(*names: str) -> dict:
    out = _all_pass()
    for name in names:
        out[name] = False
    return out


_ENTRIES = [
    CatalogEntry(
        id="trivial_product",
        description="Flat product bundle with a constant symplectic fiber; the model case with all four conditions holding.",
        payload={
            "version": 1, "kind": "triple",
            "base": {"coords": ["x1", "x2"], "domain": [[-1, 1], [-1, 1]]},
            "fiber": {"coords": ["y1", "y2"], "domain": [[-1, 1], [-1, 1]]},
            "connection": [["0", "0"], ["0", "0"]],
            "omega": [],
            "pi": [{"pair": [0, 1], "expr": "1"}],
            "loops": {"small_circle": {"type": "circle", "center": [0.0, 0.0], "radius": 0.1}},
        },
        expected=_all_pass(),
    ),
    CatalogEntry(
        id="r3_counterexample",
        description="Bivector x ∂y∧∂z over projection to x: fibers are not mutually Poisson-diffeomorphic and the graph is fiber-degenerate at every point.",
        payload={
            "version": 1, "kind": "poisson_graph",
            "base": {"coords": ["x"], "domain": [[-1, 1]]},
            "fiber": {"coords": ["y", "z"], "domain": [[-1, 1], [-1, 1]]},
            "coefficients": [{"pair": [1, 2], "expr": "x"}],
        },
        expected={"fiber_nondegenerate": False, "all_points_degenerate": True},
    ),
    CatalogEntry(
        id="presymplectic_block",
        description="Graph of the split symplectic form dx1∧dx2 + dy1∧dy2; fiber non-degenerate, extracts to the flat block triple.",
        payload={
            "version": 1, "kind": "presymplectic_graph",
            "base": {"coords": ["x1", "x2"], "domain": [[-1, 1], [-1, 1]]},
            "fiber": {"coords": ["y1", "y2"], "domain": [[-1, 1], [-1, 1]]},
            "coefficients": [{"pair": [0, 1], "expr": "1"}, {"pair": [2, 3], "expr": "1"}],
        },
        expected={"fiber_nondegenerate": True, "all_points_degenerate": False},
    ),
    CatalogEntry(
        id="hopf_s2",
        description="Circle-bundle connection in the stereographic chart coupled to rotations of a symplectic 2-sphere fiber (inverse area form, height moment).",
        payload={
            "version": 1, "kind": "gauge",
            "base": {"coords": ["x1", "x2"], "domain": [[-0.8, 0.8], [-0.8, 0.8]]},
            "fiber": {"coords": ["y1", "y2"], "domain": [[-0.9, 0.9], [-0.9, 0.9]]},
            "lie_algebra": {"dim": 1, "structure_constants": [[[0]]]},
            "connection": _HOPF_A,
            "pi": [{"pair": [0, 1], "expr": "(1 + y1^2 + y2^2)^2/4"}],
            "action": {
                "generators": [["-y2", "y1"]],
                "moments": ["(y1^2 + y2^2 - 1)/(y1^2 + y2^2 + 1)"],
            },
        },
        expected=_all_pass(),
    ),
    CatalogEntry(
        id="hopf_su2star",
        description="Circle-bundle connection coupled to rotations of the linear Poisson fiber on 3-space (axis coordinate y3 as moment).",
        payload={
            "version": 1, "kind": "gauge",
            "base": {"coords": ["x1", "x2"], "domain": [[-0.8, 0.8], [-0.8, 0.8]]},
            "fiber": {"coords": ["y1", "y2", "y3"], "domain": [[-1, 1], [-1, 1], [-1, 1]]},
            "lie_algebra": {"dim": 1, "structure_constants": [[[0]]]},
            "connection": _HOPF_A,
            "pi": _SU2STAR_PI,
            "action": {
                "generators": [["y2", "-y1", "0"]],
                "moments": ["y3"],
            },
            "loops": {"small_circle": {"type": "circle", "center": [0.0, 0.0], "radius": 0.1}},
        },
        expected=_all_pass(),
    ),
    CatalogEntry(
        id="perturbed_nonpoisson",
        description="Hamiltonian rotation connection plus a quadratic shear that no transport can preserve: fails exactly the transport condition, with genuinely non-Poisson loop holonomy.",
        payload={
            "version": 1, "kind": "triple",
            "base": {"coords": ["x1", "x2"], "domain": [[-1, 1], [-1, 1]]},
            "fiber": {"coords": ["y1", "y2"], "domain": [[-2, 2], [-2, 2]]},
            "connection": [["-x2*y2 + 2*y1^2", "x2*y1"], ["0", "0"]],
            "omega": [{"pair": [0, 1], "expr": "(y1^2 + y2^2)/2"}],
            "pi": [{"pair": [0, 1], "expr": "1"}],
            "loops": {"probe": {"type": "circle", "center": [0.0, 0.0], "radius": 0.3}},
        },
        expected=_fails("transport_preserves_pi"),
    ),
    CatalogEntry(
        id="broken_curvature_identity",
        description="Curved connection with zero horizontal form: curvature is not Hamiltonian-valued, so only the curvature identity fails.",
        payload={
            "version": 1, "kind": "triple",
            "base": {"coords": ["x1", "x2"], "domain": [[-1, 1], [-1, 1]]},
            "fiber": {"coords": ["y1", "y2"], "domain": [[-1, 1], [-1, 1]]},
            "connection": [["x2", "0"], ["0", "0"]],
            "omega": [],
            "pi": [{"pair": [0, 1], "expr": "1"}],
        },
        expected=_fails("curvature_identity"),
    ),
    CatalogEntry(
        id="broken_closedness",
        description="Flat bundle over a 3-dimensional base with a non-closed base 2-form: only the closedness condition fails (vacuous on 2-dimensional bases).",
        payload={
            "version": 1, "kind": "triple",
            "base": {"coords": ["x1", "x2", "x3"], "domain": [[-1, 1], [-1, 1], [-1, 1]]},
            "fiber": {"coords": ["y1", "y2"], "domain": [[-1, 1], [-1, 1]]},
            "connection": [["0", "0"], ["0", "0"], ["0", "0"]],
            "omega": [{"pair": [0, 1], "expr": "x3"}],
            "pi": [{"pair": [0, 1], "expr": "1"}],
        },
        expected=_fails("horizontal_form_closed"),
    ),
    CatalogEntry(
        id="su2star_so3_coupling",
        description="Non-abelian rotation-algebra coupling on the linear Poisson fiber; exercises the quadratic curvature term end to end.",
        payload={
            "version": 1, "kind": "gauge",
            "base": {"coords": ["x1", "x2"], "domain": [[-0.8, 0.8], [-0.8, 0.8]]},
            "fiber": {"coords": ["y1", "y2", "y3"], "domain": [[-1, 1], [-1, 1], [-1, 1]]},
            "lie_algebra": {
                "dim": 3,
                "structure_constants": [
                    [[0, 0, 0], [0, 0, 1], [0, -1, 0]],
                    [[0, 0, -1], [0, 0, 0], [1, 0, 0]],
                    [[0, 1, 0], [-1, 0, 0], [0, 0, 0]],
                ],
            },
            "connection": [["0", "0", "x2"], ["1", "0", "0"]],
            "pi": _SU2STAR_PI,
            "action": {
                "generators": [["0", "y3", "-y2"], ["-y3", "0", "y1"], ["y2", "-y1", "0"]],
                "moments": ["y1", "y2", "y3"],
            },
        },
        expected=_all_pass(),
    ),
]


def catalog_list() -> list[CatalogEntry]:
    return list(_ENTRIES)


def catalog_ids() -> list[str]:
    return [e.id for e in _ENTRIES]


def catalog_get(entry_id: str) -> CatalogEntry:
    for e in _ENTRIES:
        if e.id == entry_id:
            return e
    raise KeyError(f"no catalog entry {entry_id!r}")
