"""Tensor calculus on a single coordinate chart.

Differential forms and multivector fields are stored through their
components on strictly increasing multi-indices; the fully antisymmetric
array is reconstructed on demand.  Coefficients evaluate to jets, so every
derived field (exterior derivative, Lie bracket/derivative, Schouten
square, contractions) is computed by exact forward-mode differentiation of
its parents — a derived coefficient of order q consumes parent jets of
order q+1.

Conventions (see docs/conventions.md):

* determinant pairing: ``(dx^i ∧ dx^j)(e_k, e_l) = δ^i_k δ^j_l − δ^i_l δ^j_k``,
  and dually for multivectors;
* interior products contract the first slot; ``sharp(π, α) = π(α, ·)``;
* ``schouten_square(π)(df, dg, dh) = 2·({{f,g},h} + {{g,h},f} + {{h,f},g})``
  with ``{f,g} = π(df, dg)``, so it vanishes exactly when π is Poisson.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import expr as ex
from .jets import Jet, eval_jet

__all__ = [
    "Chart", "TensorField", "ChartMismatchError", "DegreeMismatchError",
    "exterior_derivative", "lie_bracket", "lie_derivative", "schouten_square",
    "interior_product", "sharp", "wedge", "pairing", "add", "sub", "scale",
    "scalar_multiply", "increasing_indices", "sort_sign",
]

FORM = "form"
MULTIVECTOR = "multivector"


class ChartMismatchError(ValueError):
    pass


class DegreeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    """Ordered coordinate names with a rectangular sampling domain."""

    coord_names: tuple[str, ...]
    domain: tuple[tuple[float, float], ...]

    def __post_init__(self):
        names = self.coord_names
        if len(set(names)) != len(names):
            raise ValueError("coordinate names must be unique")
        for name in names:
            if name in ex.FUNCTIONS:
                raise ValueError(f"coordinate name {name!r} shadows a function")
        if len(self.domain) != len(names):
            raise ValueError("domain must give one interval per coordinate")
        for lo, hi in self.domain:
            if not lo < hi:
                raise ValueError("domain intervals must be non-degenerate")

    @property
    def dim(self) -> int:
        return len(self.coord_names)

    def index(self, name: str) -> int:
        return self.coord_names.index(name)

    def sample(self, n: int, rng) -> np.ndarray:
        """n seeded-uniform points in the domain box, shape (n, dim)."""
        if isinstance(rng, (int, np.integer)):
            rng = np.random.default_rng(rng)
        lo = np.array([d[0] for d in self.domain])
        hi = np.array([d[1] for d in self.domain])
        return lo + (hi - lo) * rng.random((n, self.dim))

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        lo = np.array([d[0] for d in self.domain])
        hi = np.array([d[1] for d in self.domain])
        return np.all((pts >= lo) & (pts <= hi), axis=-1)

    def parse(self, source: str) -> ex.Expr:
        return ex.parse(source, self.coord_names)


def increasing_indices(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(dim), degree))


def sort_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...] | None]:
    """Permutation sign mapping idx to increasing order; sign 0 on repeats."""
    lst = list(idx)
    sign = 1
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j] < lst[j - 1]:
            lst[j], lst[j - 1] = lst[j - 1], lst[j]
            sign = -sign
            j -= 1
    for i in range(len(lst) - 1):
        if lst[i] == lst[i + 1]:
            return 0, None
    return sign, tuple(lst)


CoeffSource = Mapping[tuple[int, ...], ex.Expr] | Callable[[np.ndarray, int], dict]


class TensorField:
    """Antisymmetric tensor field of one variance and degree on a chart.

    ``source`` is either a sparse mapping {increasing index: Expr} (missing
    entries are zero) or a callable ``(points, order) -> {index: Jet}``
    producing jets for all increasing indices.
    """

    def __init__(self, chart: Chart, variance: str, degree: int, source: CoeffSource):
        if variance not in (FORM, MULTIVECTOR):
            raise ValueError(f"variance must be {FORM!r} or {MULTIVECTOR!r}")
        if not 0 <= degree <= chart.dim:
            raise DegreeMismatchError(f"degree {degree} out of range for dim {chart.dim}")
        self.chart = chart
        self.variance = variance
        self.degree = degree
        self.indices = increasing_indices(chart.dim, degree)
        if isinstance(source, Mapping):
            for idx in source:
                if tuple(idx) not in self.indices:
                    raise ValueError(f"{idx} is not an increasing multi-index of length {degree}")
            self._exprs = {tuple(k): v for k, v in source.items()}
            self._fn = None
        else:
            self._exprs = None
            self._fn = source

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def zero(chart: Chart, variance: str, degree: int) -> "TensorField":
        return TensorField(chart, variance, degree, {})

    @staticmethod
    def scalar(chart: Chart, e: ex.Expr | str) -> "TensorField":
        if isinstance(e, str):
            e = chart.parse(e)
        return TensorField(chart, FORM, 0, {(): e})

    @staticmethod
    def vector(chart: Chart, components: Mapping[int, ex.Expr | str]) -> "TensorField":
        coeffs = {}
        for i, e in components.items():
            coeffs[(i,)] = chart.parse(e) if isinstance(e, str) else e
        return TensorField(chart, MULTIVECTOR, 1, coeffs)

    @staticmethod
    def one_form(chart: Chart, components: Mapping[int, ex.Expr | str]) -> "TensorField":
        coeffs = {}
        for i, e in components.items():
            coeffs[(i,)] = chart.parse(e) if isinstance(e, str) else e
        return TensorField(chart, FORM, 1, coeffs)

    @property
    def exprs(self) -> dict | None:
        """The backing Exprs, if this field is expression-backed."""
        return self._exprs

    def promote(self, chart: Chart) -> "TensorField":
        """Reinterpret an expression-backed field on a larger chart."""
        if self._exprs is None:
            raise ValueError("only expression-backed fields can be promoted")
        mapping = [chart.index(name) for name in self.chart.coord_names]
        coeffs = {}
        for idx, e in self._exprs.items():
            new_idx = tuple(mapping[i] for i in idx)
            sign, sorted_idx = sort_sign(new_idx) if idx else (1, ())
            if sign == 0:
                raise ValueError("promotion produced a repeated index")
            coeffs[sorted_idx] = e if sign == 1 else ex.neg(e)
        return TensorField(chart, self.variance, self.degree, coeffs)

    # -- evaluation -----------------------------------------------------------

    def evaluate(self, points, order: int = 0) -> dict[tuple[int, ...], Jet]:
        """Jets of every increasing-index coefficient at the given points."""
        pts = np.asarray(points, dtype=np.float64)
        if self._fn is not None:
            out = self._fn(pts, order)
            missing = [idx for idx in self.indices if idx not in out]
            if missing:
                shape = pts.shape[:-1]
                for idx in missing:
                    out[idx] = Jet.constant(0.0, self.chart.dim, order, shape)
            return out
        shape = pts.shape[:-1]
        out = {}
        for idx in self.indices:
            e = self._exprs.get(idx)
            if e is None:
                out[idx] = Jet.constant(0.0, self.chart.dim, order, shape)
            else:
                out[idx] = eval_jet(e, self.chart.coord_names, pts, order)
        return out

    def values(self, points) -> dict[tuple[int, ...], np.ndarray]:
        return {idx: j.value for idx, j in self.evaluate(points, 0).items()}

    def component(self, jets: dict, idx: Sequence[int]):
        """Fully antisymmetric component from increasing-index jets."""
        sign, key = sort_sign(idx)
        if sign == 0:
            jet = next(iter(jets.values()))
            return Jet.constant(0.0, self.chart.dim, jet.order, jet.value.shape)
        jet = jets[key]
        return jet if sign == 1 else -jet

    def _require_same_chart(self, other: "TensorField"):
        if self.chart is not other.chart and self.chart != other.chart:
            raise ChartMismatchError("fields live on different charts")


def _component(jets: dict, idx, dim: int, order: int, shape):
    sign, key = sort_sign(idx)
    if sign == 0:
        return Jet.constant(0.0, dim, order, shape)
    jet = jets[key]
    return jet if sign == 1 else -jet


# ---------------------------------------------------------------------------
# pointwise algebra on fields

def add(a: TensorField, b: TensorField) -> TensorField:
    a._require_same_chart(b)
    if a.variance != b.variance or a.degree != b.degree:
        raise DegreeMismatchError("can only add fields of equal variance and degree")

    def fn(points, order):
        ja = a.evaluate(points, order)
        jb = b.evaluate(points, order)
        return {idx: ja[idx] + jb[idx] for idx in a.indices}

    return TensorField(a.chart, a.variance, a.degree, fn)


def sub(a: TensorField, b: TensorField) -> TensorField:
    a._require_same_chart(b)
    if a.variance != b.variance or a.degree != b.degree:
        raise DegreeMismatchError("can only subtract fields of equal variance and degree")

    def fn(points, order):
        ja = a.evaluate(points, order)
        jb = b.evaluate(points, order)
        return {idx: ja[idx] - jb[idx] for idx in a.indices}

    return TensorField(a.chart, a.variance, a.degree, fn)


def scale(c: float, t: TensorField) -> TensorField:
    def fn(points, order):
        return {idx: j.scaled(c) for idx, j in t.evaluate(points, order).items()}

    return TensorField(t.chart, t.variance, t.degree, fn)


def scalar_multiply(f: TensorField, t: TensorField) -> TensorField:
    """Multiply by a scalar field (degree-0)."""
    f._require_same_chart(t)
    if f.degree != 0:
        raise DegreeMismatchError("multiplier must be a scalar field")

    def fn(points, order):
        jf = f.evaluate(points, order)[()]
        return {idx: jf * j for idx, j in t.evaluate(points, order).items()}

    return TensorField(t.chart, t.variance, t.degree, fn)


# ---------------------------------------------------------------------------
# exterior derivative

def exterior_derivative(w: TensorField) -> TensorField:
    """d on forms: (dw)_{j0<..<jk} = sum_s (-1)^s d_{j_s} w_{J minus s}."""
    if w.variance != FORM:
        raise DegreeMismatchError("exterior derivative applies to forms")
    if w.degree >= w.chart.dim:
        raise DegreeMismatchError("exterior derivative of a top-degree form")
    chart = w.chart

    def fn(points, order):
        parent = w.evaluate(points, order + 1)
        out = {}
        for J in increasing_indices(chart.dim, w.degree + 1):
            total = None
            for s, j in enumerate(J):
                rest = J[:s] + J[s + 1:]
                term = parent[rest].derivative(j)
                if s % 2 == 1:
                    term = -term
                total = term if total is None else total + term
            out[J] = total
        return out

    return TensorField(chart, FORM, w.degree + 1, fn)


# ---------------------------------------------------------------------------
# Lie bracket and Lie derivative

def lie_bracket(x: TensorField, y: TensorField) -> TensorField:
    """[X,Y]^i = X^j d_j Y^i - Y^j d_j X^i."""
    x._require_same_chart(y)
    if not (x.variance == y.variance == MULTIVECTOR and x.degree == y.degree == 1):
        raise DegreeMismatchError("lie_bracket takes two vector fields")
    chart = x.chart

    def fn(points, order):
        jx = x.evaluate(points, order + 1)
        jy = y.evaluate(points, order + 1)
        out = {}
        for i in range(chart.dim):
            total = None
            for j in range(chart.dim):
                term = (jx[(j,)].truncated(order) * jy[(i,)].derivative(j)
                        - jy[(j,)].truncated(order) * jx[(i,)].derivative(j))
                total = term if total is None else total + term
            out[(i,)] = total
        return out

    return TensorField(chart, MULTIVECTOR, 1, fn)


def lie_derivative(x: TensorField, t: TensorField) -> TensorField:
    """Lie derivative of a form or multivector field along a vector field."""
    x._require_same_chart(t)
    if not (x.variance == MULTIVECTOR and x.degree == 1):
        raise DegreeMismatchError("first argument must be a vector field")
    chart = t.chart
    dim = chart.dim
    covariant = t.variance == FORM

    def fn(points, order):
        jx = x.evaluate(points, order + 1)
        jt = t.evaluate(points, order + 1)
        shape = np.asarray(points, dtype=np.float64).shape[:-1]
        out = {}
        for I in t.indices:
            total = None
            for j in range(dim):
                term = jx[(j,)].truncated(order) * jt[I].derivative(j)
                total = term if total is None else total + term
            for s in range(len(I)):
                for j in range(dim):
                    comp = _component(jt, I[:s] + (j,) + I[s + 1:], dim, order + 1, shape)
                    if covariant:
                        term = comp.truncated(order) * jx[(j,)].derivative(I[s])
                        total = total + term
                    else:
                        term = comp.truncated(order) * jx[(I[s],)].derivative(j)
                        total = total - term
            out[I] = total if total is not None else Jet.constant(0.0, dim, order, shape)
        return out

    return TensorField(chart, t.variance, t.degree, fn)


# ---------------------------------------------------------------------------
# Schouten square of a bivector

def schouten_square(pi: TensorField) -> TensorField:
    """[π,π] as a trivector; zero exactly when {f,g} = π(df,dg) is Poisson.

    Components: [π,π]^{abc} = 2 sum_l (π^{la} d_l π^{bc} + π^{lb} d_l π^{ca}
    + π^{lc} d_l π^{ab}).
    """
    if not (pi.variance == MULTIVECTOR and pi.degree == 2):
        raise DegreeMismatchError("schouten_square takes a bivector field")
    chart = pi.chart
    dim = chart.dim

    def fn(points, order):
        jets = pi.evaluate(points, order + 1)
        shape = np.asarray(points, dtype=np.float64).shape[:-1]
        out = {}
        for (a, b, c) in increasing_indices(dim, 3):
            total = None
            for l in range(dim):
                for (p, qr) in ((a, (b, c)), (b, (c, a)), (c, (a, b))):
                    left = _component(jets, (l, p), dim, order + 1, shape).truncated(order)
                    right = _component(jets, qr, dim, order + 1, shape).derivative(l)
                    term = left * right
                    total = term if total is None else total + term
            out[(a, b, c)] = total.scaled(2.0)
        return out

    return TensorField(chart, MULTIVECTOR, 3, fn)


# ---------------------------------------------------------------------------
# contractions

def interior_product(x: TensorField, t: TensorField) -> TensorField:
    """First-slot contraction: i_X w for forms, i_α T for multivectors."""
    x._require_same_chart(t)
    if x.degree != 1:
        raise DegreeMismatchError("contraction argument must have degree 1")
    if t.degree == 0:
        raise DegreeMismatchError("cannot contract a degree-0 field")
    if x.variance == t.variance:
        raise DegreeMismatchError("contraction pairs opposite variances")
    chart = t.chart
    dim = chart.dim

    def fn(points, order):
        jx = x.evaluate(points, order)
        jt = t.evaluate(points, order)
        shape = np.asarray(points, dtype=np.float64).shape[:-1]
        out = {}
        for J in increasing_indices(dim, t.degree - 1):
            total = None
            for j in range(dim):
                comp = _component(jt, (j,) + J, dim, order, shape)
                term = jx[(j,)] * comp
                total = term if total is None else total + term
            out[J] = total
        return out

    return TensorField(chart, t.variance, t.degree - 1, fn)


def sharp(pi: TensorField, alpha: TensorField) -> TensorField:
    """π♯(α) = π(α, ·): a vector field, with α in the first slot."""
    if not (pi.variance == MULTIVECTOR and pi.degree == 2):
        raise DegreeMismatchError("sharp takes a bivector field")
    if not (alpha.variance == FORM and alpha.degree == 1):
        raise DegreeMismatchError("sharp contracts a 1-form")
    return interior_product(alpha, pi)


def pairing(alpha: TensorField, x: TensorField) -> TensorField:
    """α(X) as a scalar field."""
    if not (alpha.variance == FORM and alpha.degree == 1
            and x.variance == MULTIVECTOR and x.degree == 1):
        raise DegreeMismatchError("pairing takes a 1-form and a vector field")
    return interior_product(x, alpha)


def wedge(a: TensorField, b: TensorField) -> TensorField:
    """Wedge product of two fields of the same variance."""
    a._require_same_chart(b)
    if a.variance != b.variance:
        raise DegreeMismatchError("wedge requires equal variance")
    k, l = a.degree, b.degree
    if k + l > a.chart.dim:
        raise DegreeMismatchError("wedge degree exceeds chart dimension")
    chart = a.chart

    def fn(points, order):
        ja = a.evaluate(points, order)
        jb = b.evaluate(points, order)
        shape = np.asarray(points, dtype=np.float64).shape[:-1]
        out = {}
        for M in increasing_indices(chart.dim, k + l):
            total = None
            for positions in itertools.combinations(range(k + l), k):
                S = tuple(M[p] for p in positions)
                T = tuple(M[p] for p in range(k + l) if p not in positions)
                # shuffle sign: parity of moving S-positions to the front
                sign = 1
                for rank, p in enumerate(positions):
                    sign *= (-1) ** (p - rank)
                term = ja[S] * jb[T]
                if sign == -1:
                    term = -term
                total = term if total is None else total + term
            out[M] = total if total is not None else Jet.constant(0.0, chart.dim, order, shape)
        return out

    return TensorField(chart, a.variance, k + l, fn)
