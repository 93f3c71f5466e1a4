"""Fiber non-degenerate (almost) Dirac structures on a fibration chart.

A triple (Γ, ω, π) — connection coefficients, horizontal 2-form values on
lifts, vertical bivector — determines the maximal isotropic subbundle

    L = span{ (ṽ_i, i_{ṽ_i} ω̃) } ∪ span{ (Σ_a π^{ab} ∂y_a, η_b) },

where ω̃ extends ω by zero on the vertical bundle and η_b = dy_b − Γ_i^b dx^i
spans the annihilator of the horizontal distribution.  The module computes
the Courant-bracket obstruction tensor both directly (t_direct) and through
closed component formulas (t_components), extracts triples back out of
pointwise subspaces, and produces integrability reports for the four
closedness conditions.  Sign conventions are documented in
docs/conventions.md; the t_direct/t_components agreement property is the
end-to-end validation of every convention at once.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .chart import (
    Chart, TensorField, FORM, MULTIVECTOR,
    exterior_derivative, lie_bracket, lie_derivative, schouten_square,
    interior_product, pairing, add as field_add, sub as field_sub, scale,
    increasing_indices, sort_sign,
)
from .fibration import FibrationChart, ConnectionCoeffs, coordinate_lift, curvature
from .jets import Jet

__all__ = [
    "DiracTriple", "Section", "PointSubspace", "IntegrabilityReport",
    "DegeneracyError", "SectionNotInLError", "BlendError",
    "section_hlift", "section_vform", "pairing_plus", "pairing_minus",
    "courant_bracket", "t_direct", "t_components",
    "assemble", "assemble_basis", "fiber_nondegeneracy", "extract_triple",
    "graph_of_poisson", "graph_of_presymplectic", "GraphFamily",
    "integrability_report", "blend_triples", "d_gamma_values", "d_gamma_koszul_values",
    "CONDITION_NAMES", "TripleSamples", "triple_samples_of", "principal_angles",
    "generator_section", "generator_combinations",
]

ISOTROPY_TOL = 1e-12
RANK_REL_EPS = 1e-9
SECTION_IN_L_TOL = 1e-9
DEFAULT_CONDITION_TOL = 1e-6
WEIGHT_SUM_TOL = 1e-12

CONDITION_NAMES = (
    "vertical_poisson",          # [π, π] = 0
    "transport_preserves_pi",    # L_ṽ π = 0 for all base directions
    "horizontal_form_closed",    # d_Γ ω = 0
    "curvature_identity",        # Ω_Γ(v1,v2) = −π♯(d ω(ṽ1,ṽ2))
)


class DegeneracyError(RuntimeError):
    """A pointwise subspace failed fiber non-degeneracy during extraction."""


class SectionNotInLError(ValueError):
    """A section handed to the obstruction tensor does not take values in L."""


class BlendError(ValueError):
    pass


# ---------------------------------------------------------------------------
# the triple

class DiracTriple:
    """Connection coefficients, horizontal 2-form and vertical bivector.

    ``gamma`` maps (base index i, fiber index a) to Γ_i^a; ``omega`` maps
    base pairs (i, j), i < j, to ω(ṽ_i, ṽ_j); ``pi`` maps fiber pairs
    (a, b), a < b, to π(η_a, η_b).  Missing entries are zero.  All
    coefficients are expressions over the total chart.
    """

    def __init__(self, fib: FibrationChart, gamma: dict, omega: dict, pi: dict):
        self.fib = fib
        self.connection = ConnectionCoeffs(fib, gamma)
        total = fib.total
        self.omega = {}
        for (i, j), e in omega.items():
            if not (0 <= i < j < fib.n):
                raise ValueError(f"omega key {(i, j)} is not an increasing base pair")
            self.omega[(i, j)] = total.parse(e) if isinstance(e, str) else e
        self.pi = {}
        for (a, b), e in pi.items():
            if not (0 <= a < b < fib.m):
                raise ValueError(f"pi key {(a, b)} is not an increasing fiber pair")
            self.pi[(a, b)] = total.parse(e) if isinstance(e, str) else e

    @property
    def gamma(self) -> dict:
        return self.connection.gamma

    def omega_tilde(self) -> TensorField:
        """ω extended by zero on V: coefficients sit on dx^i ∧ dx^j."""
        return TensorField(self.fib.total, FORM, 2, dict(self.omega))

    def pi_field(self) -> TensorField:
        n = self.fib.n
        coeffs = {(n + a, n + b): e for (a, b), e in self.pi.items()}
        return TensorField(self.fib.total, MULTIVECTOR, 2, coeffs)

    def eta(self, a: int) -> TensorField:
        """η_a = dy_a − Γ_i^a dx^i, the a-th horizontal annihilator form."""
        coeffs = {(self.fib.n + a,): ex.ONE}
        for i in range(self.fib.n):
            e = self.connection.gamma.get((i, a))
            if e is not None:
                coeffs[(i,)] = ex.neg(e)
        return TensorField(self.fib.total, FORM, 1, coeffs)

    def lift(self, i: int) -> TensorField:
        return coordinate_lift(self.connection, i)

    # pointwise coefficient arrays -----------------------------------------

    def arrays(self, points, order: int = 0):
        """(Γ, ω, π) jets as index dictionaries at the given points."""
        g = self.connection.evaluate(points, order)
        w = self.omega_tilde().evaluate(points, order)
        p = self.pi_field().evaluate(points, order)
        return g, w, p


# ---------------------------------------------------------------------------
# sections of TM ⊕ T*M and the Courant bracket

@dataclass
class Section:
    """A pair (vector field, 1-form) on the total chart."""

    X: TensorField
    alpha: TensorField

    def __post_init__(self):
        if not (self.X.variance == MULTIVECTOR and self.X.degree == 1):
            raise ValueError("section vector part must be a vector field")
        if not (self.alpha.variance == FORM and self.alpha.degree == 1):
            raise ValueError("section form part must be a 1-form")
        if self.X.chart != self.alpha.chart:
            raise ValueError("section parts live on different charts")

    def values(self, points) -> np.ndarray:
        """Stacked (X | alpha) values, shape (N, 2*dim)."""
        d = self.X.chart.dim
        jx = self.X.evaluate(points, 0)
        ja = self.alpha.evaluate(points, 0)
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.zeros((pts.shape[0], 2 * d))
        for i in range(d):
            out[:, i] = np.atleast_1d(jx[(i,)].value)
            out[:, d + i] = np.atleast_1d(ja[(i,)].value)
        return out

    def scaled_by(self, f: TensorField) -> "Section":
        from .chart import scalar_multiply
        return Section(scalar_multiply(f, self.X), scalar_multiply(f, self.alpha))


def section_hlift(triple: DiracTriple, i: int) -> Section:
    """Generator s_{ṽ_i} = (ṽ_i, i_{ṽ_i} ω̃) ∈ Γ(L)."""
    lift = triple.lift(i)
    return Section(lift, interior_product(lift, triple.omega_tilde()))


def section_vform(triple: DiracTriple, a: int) -> Section:
    """Generator s_{η_a} = (Σ_l π^{la} ∂y_l, η_a) ∈ Γ(L)."""
    fib = triple.fib
    n, m = fib.n, fib.m
    pi_field = triple.pi_field()
    dim = fib.total.dim

    def fn(points, order):
        jp = pi_field.evaluate(points, order)
        shape = np.asarray(points, dtype=np.float64).shape[:-1]
        out = {}
        for i in range(n):
            out[(i,)] = Jet.constant(0.0, dim, order, shape)
        for l in range(m):
            sign, key = sort_sign((n + l, n + a))
            if sign == 0:
                out[(n + l,)] = Jet.constant(0.0, dim, order, shape)
            else:
                jet = jp[key]
                out[(n + l,)] = jet if sign == 1 else -jet
        return out

    X = TensorField(fib.total, MULTIVECTOR, 1, fn)
    return Section(X, triple.eta(a))


def pairing_plus(s1: Section, s2: Section, points) -> np.ndarray:
    """⟨(X,α),(Y,β)⟩₊ = ½(α(Y) + β(X)) at the given points."""
    f = scale(0.5, field_add(pairing(s1.alpha, s2.X), pairing(s2.alpha, s1.X)))
    return np.atleast_1d(f.evaluate(points, 0)[()].value)


def pairing_minus(s1: Section, s2: Section, points) -> np.ndarray:
    """⟨(X,α),(Y,β)⟩₋ = ½(α(Y) − β(X)) at the given points."""
    f = _minus_pairing_field(s1, s2)
    return np.atleast_1d(f.evaluate(points, 0)[()].value)


def _minus_pairing_field(s1: Section, s2: Section) -> TensorField:
    return scale(0.5, field_sub(pairing(s1.alpha, s2.X), pairing(s2.alpha, s1.X)))


def courant_bracket(s1: Section, s2: Section) -> Section:
    """⟦(X,α),(Y,β)⟧ = ([X,Y], L_X β − L_Y α + d⟨(X,α),(Y,β)⟩₋)."""
    X = lie_bracket(s1.X, s2.X)
    alpha = field_add(
        field_sub(lie_derivative(s1.X, s2.alpha), lie_derivative(s2.X, s1.alpha)),
        exterior_derivative(_minus_pairing_field(s1, s2)),
    )
    return Section(X, alpha)


# ---------------------------------------------------------------------------
# pointwise subspaces

@dataclass
class PointSubspace:
    """A basis of L at a point: rows are (tangent | cotangent) pairs."""

    point: np.ndarray
    basis: np.ndarray        # (d, 2d)
    n: int
    m: int

    @property
    def dim(self) -> int:
        return self.n + self.m

    def gram_plus(self) -> np.ndarray:
        d = self.dim
        X = self.basis[:, :d]
        A = self.basis[:, d:]
        return 0.5 * (A @ X.T + X @ A.T)


def assemble_basis(triple: DiracTriple, points) -> np.ndarray:
    """Assembled L-bases at a batch of points, shape (N, n+m, 2(n+m))."""
    fib = triple.fib
    n, m, d = fib.n, fib.m, fib.n + fib.m
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    N = pts.shape[0]
    g, w, p = triple.arrays(pts, 0)
    B = np.zeros((N, d, 2 * d))
    for i in range(n):
        B[:, i, i] = 1.0
        for a in range(m):
            B[:, i, n + a] = np.atleast_1d(g[(i, a)].value)
        for j in range(n):
            sign, key = sort_sign((i, j))
            if sign != 0:
                B[:, i, d + j] = sign * np.atleast_1d(w[key].value)
    for b in range(m):
        row = n + b
        for l in range(m):
            sign, key = sort_sign((n + l, n + b))
            if sign != 0:
                B[:, row, n + l] = sign * np.atleast_1d(p[key].value)
        B[:, row, d + n + b] = 1.0
        for i in range(n):
            B[:, row, d + i] = -np.atleast_1d(g[(i, b)].value)
    return B


def assemble(triple: DiracTriple, point) -> PointSubspace:
    """L at a point as in eq. L = graph(π) ⊕ graph(ω); isotropy is checked."""
    pt = np.asarray(point, dtype=np.float64)
    B = assemble_basis(triple, pt[None, :])[0]
    sub = PointSubspace(pt, B, triple.fib.n, triple.fib.m)
    gram = np.max(np.abs(sub.gram_plus()))
    if gram > ISOTROPY_TOL:
        raise AssertionError(f"assembled basis is not isotropic: Gram residual {gram:.3e}")
    return sub


def _rank(mat: np.ndarray) -> int:
    if mat.size == 0:
        return 0
    norms = np.linalg.norm(mat, axis=1)
    norms[norms == 0.0] = 1.0
    sv = np.linalg.svd(mat / norms[:, None], compute_uv=False)
    if sv.size == 0:
        return 0
    return int(np.sum(sv > RANK_REL_EPS * sv[0]))


def fiber_nondegeneracy(sub: PointSubspace) -> tuple[bool, int]:
    """Dimension of L ∩ (V ⊕ V⁰); fiber non-degenerate iff it is zero."""
    n, m, d = sub.n, sub.m, sub.dim
    C = np.zeros((d, 2 * d))
    for a in range(m):
        C[a, n + a] = 1.0
    for i in range(n):
        C[m + i, d + i] = 1.0
    rb = _rank(sub.basis)
    rc = _rank(C)
    rstack = _rank(np.vstack([sub.basis, C]))
    inter = rb + rc - rstack
    return inter == 0, inter


# ---------------------------------------------------------------------------
# extraction: subspaces -> triple samples

@dataclass
class TripleSamples:
    """Pointwise numeric (Γ, ω, π) recovered from subspaces."""

    points: np.ndarray       # (N, d)
    gamma: np.ndarray        # (N, n, m)
    omega: np.ndarray        # (N, n, n), antisymmetric
    pi: np.ndarray           # (N, m, m), antisymmetric


def extract_triple(subspace_at, fib: FibrationChart, points) -> TripleSamples:
    """Recover (Γ, ω, π) from a pointwise family of subspaces.

    ``subspace_at`` maps a point to a :class:`PointSubspace`.  Horizontal
    data comes from the pairs (X, α) ∈ L with α ∈ V⁰ normalized to
    dp(X) = ∂x_i; vertical data from pairs with X ∈ V and form part
    normalized against dy_b.  Raises :class:`DegeneracyError` where the
    defining linear systems are singular.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n, m, d = fib.n, fib.m, fib.n + fib.m
    N = pts.shape[0]
    gamma = np.zeros((N, n, m))
    omega = np.zeros((N, n, n))
    pi = np.zeros((N, m, m))
    for k in range(N):
        sub = subspace_at(pts[k])
        B = sub.basis
        # columns: X-dx (n), X-dy (m), alpha-dx (n), alpha-dy (m)
        sel = np.concatenate([B[:, :n], B[:, d + n:]], axis=1)  # constraints matrix (d, d)
        # horizontal pairs: alpha-dy = 0, X-dx = e_i
        try:
            for i in range(n):
                rhs = np.zeros(d)
                rhs[i] = 1.0
                z = np.linalg.solve(sel.T, rhs)
                pair = z @ B
                gamma[k, i, :] = pair[n:d]
                omega[k, i, :] = pair[d: d + n]
            # vertical pairs: X-dx = 0, alpha-dy = e_b
            for b in range(m):
                rhs = np.zeros(d)
                rhs[n + b] = 1.0
                z = np.linalg.solve(sel.T, rhs)
                pair = z @ B
                pi[k, :, b] = pair[n:d]
        except np.linalg.LinAlgError:
            raise DegeneracyError(f"subspace at {pts[k]} is fiber-degenerate") from None
        omega[k] = 0.5 * (omega[k] - omega[k].T)
        pi[k] = 0.5 * (pi[k] - pi[k].T)
    return TripleSamples(points=pts, gamma=gamma, omega=omega, pi=pi)


def triple_samples_of(triple: DiracTriple, points) -> TripleSamples:
    """The coefficient arrays of an expression triple, for comparisons."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n, m = triple.fib.n, triple.fib.m
    N = pts.shape[0]
    g, w, p = triple.arrays(pts, 0)
    gamma = np.zeros((N, n, m))
    omega = np.zeros((N, n, n))
    pi = np.zeros((N, m, m))
    for (i, a), jet in g.items():
        gamma[:, i, a] = np.atleast_1d(jet.value)
    for (i, j), jet in w.items():
        if j < n:
            omega[:, i, j] = np.atleast_1d(jet.value)
            omega[:, j, i] = -np.atleast_1d(jet.value)
    for (na, nb), jet in p.items():
        if na >= n:
            a, b = na - n, nb - n
            pi[:, a, b] = np.atleast_1d(jet.value)
            pi[:, b, a] = -np.atleast_1d(jet.value)
    return TripleSamples(points=pts, gamma=gamma, omega=omega, pi=pi)


def principal_angles(B1: np.ndarray, B2: np.ndarray) -> np.ndarray:
    """Principal angles between the row spans of two bases.

    Uses the sine characterization (singular values of (I − P1)Q2), which
    stays accurate for near-identical subspaces where arccos would floor
    out around 1e-8.
    """
    q1, _ = np.linalg.qr(B1.T)
    q2, _ = np.linalg.qr(B2.T)
    resid = q2 - q1 @ (q1.T @ q2)
    sv = np.linalg.svd(resid, compute_uv=False)
    return np.arcsin(np.clip(sv, 0.0, 1.0))


# ---------------------------------------------------------------------------
# graphs of global structures

def _coeff_dict(chart: Chart, coeffs: dict) -> dict:
    out = {}
    for (a, b), e in coeffs.items():
        if not (0 <= a < b < chart.dim):
            raise ValueError(f"{(a, b)} is not an increasing index pair")
        out[(a, b)] = chart.parse(e) if isinstance(e, str) else e
    return out


class GraphFamily:
    """Pointwise L from the graph of a global bivector or 2-form."""

    def __init__(self, fib: FibrationChart, field: TensorField, kind: str):
        self.fib = fib
        self.field = field
        self.kind = kind  # "poisson" or "presymplectic"

    def matrix(self, point) -> np.ndarray:
        d = self.fib.total.dim
        jets = self.field.evaluate(np.asarray(point, dtype=np.float64), 0)
        M = np.zeros((d, d))
        for (a, b), jet in jets.items():
            M[a, b] = jet.value
            M[b, a] = -jet.value
        return M

    def subspace(self, point) -> PointSubspace:
        d = self.fib.total.dim
        M = self.matrix(point)
        B = np.zeros((d, 2 * d))
        if self.kind == "poisson":
            # rows (Π(·, dz_A), dz_A): the second-slot graph map, under which
            # the extracted vertical bivector recovers Π's fiber data with
            # its sign and ω_L coincides with Π on V⁰ via the induced map
            B[:, :d] = M.T
            B[:, d:] = np.eye(d)
        else:
            # rows (e_A, i_{e_A}Ω) = (e_A, Ω(e_A, ·))
            B[:, :d] = np.eye(d)
            B[:, d:] = M
        return PointSubspace(np.asarray(point, dtype=np.float64), B, self.fib.n, self.fib.m)

    def classify(self, points) -> dict:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        dims = []
        for k in range(pts.shape[0]):
            ok, dim = fiber_nondegeneracy(self.subspace(pts[k]))
            dims.append(dim)
        dims = np.array(dims)
        return {
            "kind": self.kind,
            "n_points": int(pts.shape[0]),
            "n_degenerate": int(np.sum(dims > 0)),
            "fiber_nondegenerate": bool(np.all(dims == 0)),
            "intersection_dim_max": int(dims.max()),
            "intersection_dim_min": int(dims.min()),
        }

    def extract(self, points) -> TripleSamples:
        return extract_triple(self.subspace, self.fib, points)


def graph_of_poisson(fib: FibrationChart, coeffs: dict) -> GraphFamily:
    """Graph of a total-chart bivector Π: rows (Π(dz_A, ·), dz_A)."""
    field = TensorField(fib.total, MULTIVECTOR, 2, _coeff_dict(fib.total, coeffs))
    return GraphFamily(fib, field, "poisson")


def graph_of_presymplectic(fib: FibrationChart, coeffs: dict) -> GraphFamily:
    """Graph of a total-chart 2-form Ω: rows (e_A, Ω(e_A, ·))."""
    field = TensorField(fib.total, FORM, 2, _coeff_dict(fib.total, coeffs))
    return GraphFamily(fib, field, "presymplectic")


# ---------------------------------------------------------------------------
# the obstruction tensor

def _section_in_l_check(triple: DiracTriple, sections, points):
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    B = assemble_basis(triple, pts)
    for s in sections:
        W = s.values(pts)
        for k in range(pts.shape[0]):
            w = W[k]
            z, *_ = np.linalg.lstsq(B[k].T, w, rcond=None)
            resid = np.linalg.norm(B[k].T @ z - w)
            scale_ = max(1.0, float(np.linalg.norm(w)))
            if resid / scale_ > SECTION_IN_L_TOL:
                raise SectionNotInLError(
                    f"section value at {pts[k]} is {resid:.3e} away from L")


def t_direct(triple: DiracTriple, s1: Section, s2: Section, s3: Section,
             points, check_in_l: bool = True) -> np.ndarray:
    """T_L(s1,s2,s3) = ⟨⟦s1,s2⟧, s3⟩₊ evaluated directly."""
    if check_in_l:
        _section_in_l_check(triple, (s1, s2, s3), points)
    return pairing_plus(courant_bracket(s1, s2), s3, points)


def _covector_values(field: TensorField, points, d: int) -> np.ndarray:
    jets = field.evaluate(points, 0)
    N = np.atleast_2d(np.asarray(points, dtype=np.float64)).shape[0]
    out = np.zeros((N, d))
    for i in range(d):
        out[:, i] = np.atleast_1d(jets[(i,)].value)
    return out


def _contract_full(jets: dict, arg_values: list[np.ndarray]) -> np.ndarray:
    """Contract a degree-k antisymmetric field with k degree-1 value arrays."""
    k = len(arg_values)
    N = arg_values[0].shape[0]
    total = np.zeros(N)
    for I, jet in jets.items():
        if len(I) != k:
            raise ValueError("degree mismatch in contraction")
        M = np.empty((N, k, k))
        for r, vec in enumerate(arg_values):
            for c, idx in enumerate(I):
                M[:, r, c] = vec[:, idx]
        total += np.atleast_1d(jet.value) * np.linalg.det(M)
    return total


def _antisym_matrix(jets: dict, d: int, N: int) -> np.ndarray:
    M = np.zeros((N, d, d))
    for (a, b), jet in jets.items():
        M[:, a, b] = np.atleast_1d(jet.value)
        M[:, b, a] = -np.atleast_1d(jet.value)
    return M


def t_components(triple: DiracTriple, generators, points) -> np.ndarray:
    """T_L on canonical generators via the closed component formulas.

    ``generators`` is a triple of ("h", i) for s_{ṽ_i} or ("v", a) for
    s_{η_a}.  The four cases (by the number of horizontal generators):

      3h:      ½ (dω̃)(ṽ_i, ṽ_j, ṽ_k)
      2h, 1v:  ½ (η_c(Ω_Γ(ṽ_i, ṽ_j)) + π(d ω(ṽ_i, ṽ_j), η_c))
      1h, 2v:  −½ (L_{ṽ_i} π)(η_b, η_c)
      3v:      −¼ [π, π](η_a, η_b, η_c)

    Values agree with :func:`t_direct` on the same generators; that
    agreement is the master validation of all sign conventions.
    """
    gens = list(generators)
    if len(gens) != 3:
        raise ValueError("t_components takes exactly three generators")
    for kind, _ in gens:
        if kind not in ("h", "v"):
            raise ValueError(f"generator kind {kind!r} not recognized")
    if len(set(gens)) < 3:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.zeros(pts.shape[0])

    # sort to (h..., v...) with ascending indices, tracking the permutation sign
    sign = 1
    for i in range(1, 3):
        j = i
        while j > 0 and _gen_key(gens[j]) < _gen_key(gens[j - 1]):
            gens[j], gens[j - 1] = gens[j - 1], gens[j]
            sign = -sign
            j -= 1

    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    fib = triple.fib
    d = fib.total.dim
    n_h = sum(1 for kind, _ in gens if kind == "h")
    pi_field = triple.pi_field()

    if n_h == 3:
        (_, i), (_, j), (_, k) = gens
        dw = exterior_derivative(triple.omega_tilde())
        lifts = [_covector_values(triple.lift(t), pts, d) for t in (i, j, k)]
        val = 0.5 * _contract_full(dw.evaluate(pts, 0), lifts)
    elif n_h == 2:
        (_, i), (_, j), (_, c) = gens
        v1 = TensorField.vector(fib.base, {i: ex.ONE})
        v2 = TensorField.vector(fib.base, {j: ex.ONE})
        omega_curv = curvature(triple.connection, v1, v2)
        eta_c = _covector_values(triple.eta(c), pts, d)
        curv_vals = _covector_values(omega_curv, pts, d)
        first = np.einsum("nd,nd->n", eta_c, curv_vals)
        w_ij = pairing(interior_product(triple.lift(i), triple.omega_tilde()), triple.lift(j))
        dw_ij = _covector_values(exterior_derivative(w_ij), pts, d)
        P = _antisym_matrix(pi_field.evaluate(pts, 0), d, pts.shape[0])
        second = np.einsum("na,nab,nb->n", dw_ij, P, eta_c)
        val = 0.5 * (first + second)
    elif n_h == 1:
        (_, i), (_, b), (_, c) = gens
        lpi = lie_derivative(triple.lift(i), pi_field)
        eta_b = _covector_values(triple.eta(b), pts, d)
        eta_c = _covector_values(triple.eta(c), pts, d)
        val = -0.5 * _contract_full(lpi.evaluate(pts, 0), [eta_b, eta_c])
    else:
        (_, a), (_, b), (_, c) = gens
        sq = schouten_square(pi_field)
        etas = [_covector_values(triple.eta(t), pts, d) for t in (a, b, c)]
        val = -0.25 * _contract_full(sq.evaluate(pts, 0), etas)
    return sign * val


def _gen_key(gen):
    kind, idx = gen
    return (0 if kind == "h" else 1, idx)


def generator_section(triple: DiracTriple, gen) -> Section:
    kind, idx = gen
    return section_hlift(triple, idx) if kind == "h" else section_vform(triple, idx)


def generator_combinations(fib: FibrationChart):
    """All increasing generator triples of the four component cases."""
    hs = [("h", i) for i in range(fib.n)]
    vs = [("v", a) for a in range(fib.m)]
    combos = []
    combos.extend(itertools.combinations(vs, 3))
    for h in hs:
        combos.extend((h,) + pair for pair in itertools.combinations(vs, 2))
    for pair in itertools.combinations(hs, 2):
        combos.extend(pair + (v,) for v in vs)
    combos.extend(itertools.combinations(hs, 3))
    return combos


# ---------------------------------------------------------------------------
# d_Γ: the horizontal differential, two equivalent forms

def d_gamma_values(triple: DiracTriple, points) -> dict:
    """(d ω̃)(ṽ_i, ṽ_j, ṽ_k) on increasing base triples (restriction form)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d = triple.fib.total.dim
    dw = exterior_derivative(triple.omega_tilde()).evaluate(pts, 0)
    lifts = [_covector_values(triple.lift(i), pts, d) for i in range(triple.fib.n)]
    out = {}
    for (i, j, k) in increasing_indices(triple.fib.n, 3):
        out[(i, j, k)] = _contract_full(dw, [lifts[i], lifts[j], lifts[k]])
    return out


def d_gamma_koszul_values(triple: DiracTriple, points) -> dict:
    """Koszul form over lifts: Σ_cyc ṽ_i(ω(ṽ_j, ṽ_k)); brackets of lifts are
    vertical and ω̃ kills them, so no bracket terms survive."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    w = triple.omega_tilde()
    out = {}
    scalars = {}

    def w_field(i, j):
        if (i, j) not in scalars:
            scalars[(i, j)] = pairing(interior_product(triple.lift(i), w), triple.lift(j))
        return scalars[(i, j)]

    for (i, j, k) in increasing_indices(triple.fib.n, 3):
        total = np.zeros(pts.shape[0])
        for (a, bc) in ((i, (j, k)), (j, (k, i)), (k, (i, j))):
            deriv = pairing(triple.lift(a), exterior_derivative(w_field(*bc)))
            total += np.atleast_1d(deriv.evaluate(pts, 0)[()].value)
        out[(i, j, k)] = total
    return out


# ---------------------------------------------------------------------------
# integrability report

@dataclass
class ConditionStats:
    max: float
    mean: float
    n: int
    passed: bool

    def to_dict(self) -> dict:
        return {"max": self.max, "mean": self.mean, "n": self.n, "pass": self.passed}


@dataclass
class IntegrabilityReport:
    model_id: str
    seed: int
    tolerance: float
    samples: int
    conditions: dict[str, ConditionStats]
    verdict: str

    def passes(self) -> dict[str, bool]:
        return {name: st.passed for name, st in self.conditions.items()}

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "model_id": self.model_id,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "conditions": {k: v.to_dict() for k, v in self.conditions.items()},
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _vee(jet_value):
    return np.atleast_1d(jet_value)


def integrability_report(triple: DiracTriple, samples: int = 500, seed: int = 42,
                         tolerance: float = DEFAULT_CONDITION_TOL,
                         model_id: str = "user_model") -> IntegrabilityReport:
    """Residuals of the four closedness conditions at seeded sample points.

    Residuals are computed from coefficient jets directly (independent of
    both t_direct and t_components):

      vertical_poisson:        max |[π,π]^{abc}|
      transport_preserves_pi:  max |(L_{ṽ_i} π)^{bc}|
      horizontal_form_closed:  max |(dω̃)(ṽ_i, ṽ_j, ṽ_k)|
      curvature_identity:      max |Ω_ij^c + Σ_a ∂y_a(ω_ij) π^{ac}|
    """
    fib = triple.fib
    n, m = fib.n, fib.m
    rng = np.random.default_rng(seed)
    pts = fib.total.sample(samples, rng)
    N = pts.shape[0]
    g, w, p = triple.arrays(pts, 1)

    def vtilde(jet, i):
        # ṽ_i(f) from a jet of f: ∂x_i f + Σ_a Γ_i^a ∂y_a f
        out = jet.grad[i].copy()
        for a in range(m):
            out += _vee(g[(i, a)].value) * jet.grad[n + a]
        return out

    def pcomp(a, b):
        sign, key = sort_sign((n + a, n + b))
        if sign == 0:
            return np.zeros(N)
        return sign * _vee(p[key].value)

    def pgrad(a, b, l):
        # ∂y_l π^{ab}
        sign, key = sort_sign((n + a, n + b))
        if sign == 0:
            return np.zeros(N)
        return sign * p[key].grad[n + l]

    def wcomp(i, j):
        sign, key = sort_sign((i, j))
        if sign == 0:
            return np.zeros(N)
        return sign * _vee(w[key].value)

    # condition: vertical_poisson
    res_i = np.zeros(N)
    for (a, b, c) in itertools.combinations(range(m), 3):
        acc = np.zeros(N)
        for l in range(m):
            acc += (pcomp(l, a) * pgrad(b, c, l)
                    + pcomp(l, b) * pgrad(c, a, l)
                    + pcomp(l, c) * pgrad(a, b, l))
        res_i = np.maximum(res_i, np.abs(2.0 * acc))

    # condition: transport_preserves_pi
    res_ii = np.zeros(N)
    for i in range(n):
        for (b, c) in itertools.combinations(range(m), 2):
            acc = vtilde(p[(n + b, n + c)], i)
            for a in range(m):
                acc -= pcomp(a, c) * g[(i, b)].grad[n + a]
                acc -= pcomp(b, a) * g[(i, c)].grad[n + a]
            res_ii = np.maximum(res_ii, np.abs(acc))

    # condition: horizontal_form_closed
    res_iii = np.zeros(N)
    for (i, j, k) in itertools.combinations(range(n), 3):
        acc = vtilde(w[(j, k)], i) - vtilde(w[(i, k)], j) + vtilde(w[(i, j)], k)
        res_iii = np.maximum(res_iii, np.abs(acc))

    # condition: curvature_identity
    res_iv = np.zeros(N)
    for (i, j) in itertools.combinations(range(n), 2):
        for c in range(m):
            curv = vtilde(g[(j, c)], i) - vtilde(g[(i, c)], j)
            acc = curv.copy()
            for a in range(m):
                acc += w[(i, j)].grad[n + a] * pcomp(a, c)
            res_iv = np.maximum(res_iv, np.abs(acc))

    stats = {}
    for name, res in zip(CONDITION_NAMES, (res_i, res_ii, res_iii, res_iv)):
        stats[name] = ConditionStats(
            max=float(np.max(res)) if N else 0.0,
            mean=float(np.mean(res)) if N else 0.0,
            n=N,
            passed=bool(np.max(res) < tolerance) if N else True,
        )
    verdict = "dirac" if all(s.passed for s in stats.values()) else "not_dirac"
    return IntegrabilityReport(model_id=model_id, seed=seed, tolerance=tolerance,
                               samples=samples, conditions=stats, verdict=verdict)


# ---------------------------------------------------------------------------
# partition-of-unity blending

def blend_triples(weights, triples: list[DiracTriple],
                  check_samples: int = 64, seed: int = 0) -> DiracTriple:
    """Blend triples sharing π with base partition-of-unity weights.

    Γ = Σ ρ_i Γ_i and ω = Σ ρ_i ω_i with ρ_i pulled back from the base;
    requires Σ ρ_i = 1 on the base domain and structurally equal π.
    """
    if len(weights) != len(triples) or not triples:
        raise BlendError("need one weight per triple")
    fib = triples[0].fib
    base = fib.base
    ws = [base.parse(w) if isinstance(w, str) else w for w in weights]
    for w in ws:
        extra = ex.variables(w) - set(base.coord_names)
        if extra:
            raise BlendError(f"weights must be base functions; found {sorted(extra)}")
    for t in triples[1:]:
        if t.fib != fib:
            raise BlendError("triples live on different fibration charts")
        if t.pi != triples[0].pi:
            raise BlendError("triples do not share the same vertical bivector")
    rng = np.random.default_rng(seed)
    pts = base.sample(check_samples, rng)
    total = np.zeros(pts.shape[0])
    for w in ws:
        from .jets import eval_jet
        total += np.atleast_1d(eval_jet(w, base.coord_names, pts, 0).value)
    if np.max(np.abs(total - 1.0)) > WEIGHT_SUM_TOL:
        raise BlendError(f"weights do not sum to 1 (max deviation {np.max(np.abs(total - 1.0)):.3e})")

    gamma: dict = {}
    omega: dict = {}
    for w, t in zip(ws, triples):
        for key, e in t.connection.gamma.items():
            term = ex.mul(w, e)
            gamma[key] = term if key not in gamma else ex.add(gamma[key], term)
        for key, e in t.omega.items():
            term = ex.mul(w, e)
            omega[key] = term if key not in omega else ex.add(omega[key], term)
    return DiracTriple(fib, gamma, omega, dict(triples[0].pi))
