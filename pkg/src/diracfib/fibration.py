"""Locally trivial fibrations in a product chart.

Split coordinates (base x, fiber y), Ehresmann connections given by
coefficient expressions, horizontal lifts, curvature, and numerical
parallel transport along base loops with a classical fixed-step 4th-order
integrator.  Charts are bounded boxes, so the lifting property is replaced
by domain-escape detection: an integration that leaves the box raises
:class:`DomainEscapeError` rather than pretending completeness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .chart import Chart, TensorField, MULTIVECTOR, lie_bracket, sub as field_sub
from .jets import Jet, eval_jet

__all__ = [
    "FibrationChart", "ConnectionCoeffs", "Loop", "HolonomyProbe",
    "TransportResult", "DomainEscapeError", "StepSizeError",
    "horizontal_lift", "coordinate_lift", "curvature",
    "parallel_transport", "holonomy_poisson_residual",
]

LOOP_CLOSURE_TOL = 1e-12
DEFAULT_STEP = 1e-3


class DomainEscapeError(RuntimeError):
    """A horizontal-lift trajectory left the chart's domain box."""


class StepSizeError(RuntimeError):
    """Step-halving disagreement exceeded the requested tolerance."""


class FibrationChart:
    """Product chart base × fiber; the vertical bundle is span(∂y)."""

    def __init__(self, base: Chart, fiber: Chart):
        overlap = set(base.coord_names) & set(fiber.coord_names)
        if overlap:
            raise ValueError(f"base and fiber coordinate names overlap: {sorted(overlap)}")
        self.base = base
        self.fiber = fiber
        self.total = Chart(base.coord_names + fiber.coord_names, base.domain + fiber.domain)
        self.n = base.dim
        self.m = fiber.dim

    def __eq__(self, other):
        return (isinstance(other, FibrationChart)
                and self.base == other.base and self.fiber == other.fiber)

    def __hash__(self):
        return hash((self.base, self.fiber))

    def base_part(self, points) -> np.ndarray:
        return np.asarray(points)[..., : self.n]

    def fiber_part(self, points) -> np.ndarray:
        return np.asarray(points)[..., self.n:]


class ConnectionCoeffs:
    """Connection coefficients Γ_i^a; the lift of ∂x_i is ∂x_i + Γ_i^a ∂y_a."""

    def __init__(self, fib: FibrationChart, gamma: dict[tuple[int, int], ex.Expr | str]):
        self.fib = fib
        self.gamma = {}
        for (i, a), e in gamma.items():
            if not (0 <= i < fib.n and 0 <= a < fib.m):
                raise ValueError(f"connection index ({i},{a}) out of range")
            self.gamma[(i, a)] = fib.total.parse(e) if isinstance(e, str) else e

    def entry(self, i: int, a: int) -> ex.Expr:
        return self.gamma.get((i, a), ex.ZERO)

    def evaluate(self, points, order: int = 0) -> dict[tuple[int, int], Jet]:
        """Jets of all Γ_i^a on the total chart."""
        pts = np.asarray(points, dtype=np.float64)
        names = self.fib.total.coord_names
        shape = pts.shape[:-1]
        out = {}
        for i in range(self.fib.n):
            for a in range(self.fib.m):
                e = self.gamma.get((i, a))
                if e is None:
                    out[(i, a)] = Jet.constant(0.0, self.fib.total.dim, order, shape)
                else:
                    out[(i, a)] = eval_jet(e, names, pts, order)
        return out

    @staticmethod
    def flat(fib: FibrationChart) -> "ConnectionCoeffs":
        return ConnectionCoeffs(fib, {})


def horizontal_lift(v: TensorField, conn: ConnectionCoeffs) -> TensorField:
    """Unique horizontal lift of a base vector field: ṽ = v^i(∂x_i + Γ_i^a ∂y_a).

    Rejects fields whose coefficients involve fiber coordinates: lifts are
    defined for base vector fields only.
    """
    fib = conn.fib
    if not (v.variance == MULTIVECTOR and v.degree == 1):
        raise ValueError("horizontal_lift takes a vector field")
    if v.chart == fib.base:
        v = v.promote(fib.total)
    elif v.chart != fib.total:
        raise ValueError("vector field lives on a different chart")
    if v.exprs is None:
        raise ValueError("horizontal_lift takes an expression-backed base field")
    fiber_names = set(fib.fiber.coord_names)
    for idx, e in v.exprs.items():
        if idx[0] >= fib.n:
            raise ValueError("field has components along the fiber; not a base field")
        if ex.variables(e) & fiber_names:
            raise ValueError("field coefficients depend on fiber coordinates")
    n, m = fib.n, fib.m
    total = fib.total

    def fn(points, order):
        jv = v.evaluate(points, order)
        jg = conn.evaluate(points, order)
        out = {}
        for i in range(n):
            out[(i,)] = jv[(i,)]
        for a in range(m):
            acc = None
            for i in range(n):
                term = jv[(i,)] * jg[(i, a)]
                acc = term if acc is None else acc + term
            out[(n + a,)] = acc
        return out

    return TensorField(total, MULTIVECTOR, 1, fn)


def coordinate_lift(conn: ConnectionCoeffs, i: int) -> TensorField:
    """The lift ṽ_i = ∂x_i + Γ_i^a ∂y_a as a field on the total chart."""
    fib = conn.fib
    coeffs = {(i,): ex.ONE}
    for a in range(fib.m):
        e = conn.gamma.get((i, a))
        if e is not None:
            coeffs[(fib.n + a,)] = e
    return TensorField(fib.total, MULTIVECTOR, 1, coeffs)


def curvature(conn: ConnectionCoeffs, v1: TensorField, v2: TensorField) -> TensorField:
    """Curvature Ω(v1,v2) = [ṽ1, ṽ2] − lift([v1, v2]); always vertical."""
    fib = conn.fib
    if v1.chart != fib.base or v2.chart != fib.base:
        raise ValueError("curvature takes base vector fields")
    lift1 = horizontal_lift(v1, conn)
    lift2 = horizontal_lift(v2, conn)
    base_bracket = lie_bracket(v1, v2)

    # [v1,v2] has Expr-free (derived) coefficients, so lift it pointwise
    n, m = fib.n, fib.m

    def lifted_bracket(points, order):
        jb = base_bracket.evaluate(fib.base_part(points), order)
        jg = conn.evaluate(points, order)
        dim = fib.total.dim
        out = {}
        for i in range(n):
            bj = jb[(i,)]
            out[(i,)] = Jet(order, dim, bj.value,
                            _pad_grad(bj, n, dim, order),
                            _pad_hess(bj, n, dim, order))
        for a in range(m):
            acc = None
            for i in range(n):
                term = out[(i,)] * jg[(i, a)]
                acc = term if acc is None else acc + term
            out[(n + a,)] = acc
        return out

    lifted = TensorField(fib.total, MULTIVECTOR, 1, lifted_bracket)
    return field_sub(lie_bracket(lift1, lift2), lifted)


def _pad_grad(jet: Jet, n: int, dim: int, order: int):
    if order < 1:
        return None
    g = np.zeros((dim,) + jet.value.shape)
    g[:n] = jet.grad
    return g


def _pad_hess(jet: Jet, n: int, dim: int, order: int):
    if order < 2:
        return None
    h = np.zeros((dim, dim) + jet.value.shape)
    h[:n, :n] = jet.hess
    return h


# ---------------------------------------------------------------------------
# loops and parallel transport

class Loop:
    """A closed base curve γ: [0,1] → base chart with Expr components of t."""

    def __init__(self, base: Chart, components: list[ex.Expr | str]):
        if len(components) != base.dim:
            raise ValueError("loop needs one component per base coordinate")
        self.base = base
        self.components = [ex.parse(c, ["t"]) if isinstance(c, str) else c for c in components]
        start = self.point(0.0)
        end = self.point(1.0)
        if np.max(np.abs(start - end)) > LOOP_CLOSURE_TOL:
            raise ValueError("loop is not closed: gamma(0) != gamma(1)")

    def point(self, t: float) -> np.ndarray:
        return np.array([eval_jet(c, ["t"], [t], 0).value for c in self.components])

    def point_and_velocity(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        jets = [eval_jet(c, ["t"], [t], 1) for c in self.components]
        return (np.array([j.value for j in jets]),
                np.array([j.partial(0) for j in jets]))

    def reversed(self) -> "Loop":
        one_minus_t = ex.Sub(ex.ONE, ex.Var("t"))
        return Loop(self.base, [_substitute_t(c, one_minus_t) for c in self.components])

    @staticmethod
    def circle(base: Chart, center, radius: float) -> "Loop":
        if base.dim != 2:
            raise ValueError("circle loops require a 2-dimensional base")
        cx, cy = center
        tau = 2.0 * math.pi
        t = ex.Var("t")
        comps = [
            ex.add(ex.Num(float(cx)), ex.mul(ex.Num(float(radius)), ex.Call("cos", (ex.mul(ex.Num(tau), t),)))),
            ex.add(ex.Num(float(cy)), ex.mul(ex.Num(float(radius)), ex.Call("sin", (ex.mul(ex.Num(tau), t),)))),
        ]
        return Loop(base, comps)

    @staticmethod
    def rectangle(base: Chart, corner, width: float, height: float) -> "Loop":
        """Smooth parametrization of a rectangle-like closed curve.

        Uses a rounded (superellipse-style) path through the rectangle's
        bounding box so the transport ODE keeps a smooth right-hand side.
        """
        if base.dim != 2:
            raise ValueError("rectangle loops require a 2-dimensional base")
        x0, y0 = corner
        cx, cy = x0 + width / 2.0, y0 + height / 2.0
        tau = 2.0 * math.pi
        t = ex.Var("t")
        cos_t = ex.Call("cos", (ex.mul(ex.Num(tau), t),))
        sin_t = ex.Call("sin", (ex.mul(ex.Num(tau), t),))
        # x = cx + (w/2)*cos^3, y = cy + (h/2)*sin^3: closed, C^1, axis-aligned extents
        comps = [
            ex.add(ex.Num(cx), ex.mul(ex.Num(width / 2.0), ex.Pow(cos_t, 3))),
            ex.add(ex.Num(cy), ex.mul(ex.Num(height / 2.0), ex.Pow(sin_t, 3))),
        ]
        return Loop(base, comps)


def _substitute_t(e: ex.Expr, replacement: ex.Expr) -> ex.Expr:
    if isinstance(e, ex.Var):
        return replacement
    if isinstance(e, ex.Num):
        return e
    if isinstance(e, ex.Neg):
        return ex.Neg(_substitute_t(e.arg, replacement))
    if isinstance(e, ex.Add):
        return ex.Add(_substitute_t(e.left, replacement), _substitute_t(e.right, replacement))
    if isinstance(e, ex.Sub):
        return ex.Sub(_substitute_t(e.left, replacement), _substitute_t(e.right, replacement))
    if isinstance(e, ex.Mul):
        return ex.Mul(_substitute_t(e.left, replacement), _substitute_t(e.right, replacement))
    if isinstance(e, ex.Div):
        return ex.Div(_substitute_t(e.left, replacement), _substitute_t(e.right, replacement))
    if isinstance(e, ex.Pow):
        return ex.Pow(_substitute_t(e.base, replacement), e.exponent)
    if isinstance(e, ex.Call):
        return ex.Call(e.fn, tuple(_substitute_t(a, replacement) for a in e.args))
    raise TypeError(f"not an expression node: {e!r}")


@dataclass
class HolonomyProbe:
    """A loop, an integrator step, and the fiber points to transport."""

    loop: Loop
    step: float = DEFAULT_STEP
    fiber_points: np.ndarray | None = None

    def resolved_fiber_points(self, fiber: Chart, rng=None, count: int = 5) -> np.ndarray:
        if self.fiber_points is not None:
            return np.atleast_2d(np.asarray(self.fiber_points, dtype=np.float64))
        if rng is None:
            rng = np.random.default_rng(0)
        lo = np.array([d[0] for d in fiber.domain])
        hi = np.array([d[1] for d in fiber.domain])
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        # keep probes away from the boundary so short loops cannot escape
        return mid + 0.5 * half * (2.0 * rng.random((count, fiber.dim)) - 1.0)


@dataclass
class TransportResult:
    start: np.ndarray        # (N, m)
    end: np.ndarray          # (N, m)
    jacobian: np.ndarray | None   # (N, m, m) pushforward d(end)/d(start)
    step: float
    step_estimate: float | None   # max disagreement against a halved step


def _transport_rhs(conn: ConnectionCoeffs, want_jacobian: bool):
    fib = conn.fib
    n, m = fib.n, fib.m

    def rhs(gamma_val, gamma_dot, y, jac):
        pts = np.concatenate([np.broadcast_to(gamma_val, y.shape[:1] + (n,)), y], axis=1)
        jets = conn.evaluate(pts, 1 if want_jacobian else 0)
        dy = np.zeros_like(y)
        for a in range(m):
            for i in range(n):
                dy[:, a] += jets[(i, a)].value * gamma_dot[i]
        if not want_jacobian:
            return dy, None
        # variational equation: dJ/dt = D J, D[a,b] = γ̇^i ∂Γ_i^a/∂y^b
        N = y.shape[0]
        D = np.zeros((N, m, m))
        for a in range(m):
            for i in range(n):
                if gamma_dot[i] == 0.0:
                    continue
                g = jets[(i, a)].grad  # (n+m, N)
                D[:, a, :] += gamma_dot[i] * g[n:].T
        dJ = np.einsum("nab,nbc->nac", D, jac)
        return dy, dJ

    return rhs


def _integrate(conn: ConnectionCoeffs, loop: Loop, y0: np.ndarray, step: float,
               want_jacobian: bool):
    fib = conn.fib
    n_steps = max(1, round(1.0 / step))
    h = 1.0 / n_steps
    rhs = _transport_rhs(conn, want_jacobian)
    y = np.array(y0, dtype=np.float64)
    N, m = y.shape
    J = np.repeat(np.eye(m)[None, :, :], N, axis=0) if want_jacobian else None

    # the loop itself must stay inside the base box
    for t in np.linspace(0.0, 1.0, 65):
        if not fib.base.contains(loop.point(t)[None, :])[0]:
            raise DomainEscapeError("loop leaves the base domain box")

    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def loop_at(t):
        key = round(t / (h / 2.0))
        if key not in cache:
            cache[key] = loop.point_and_velocity(t)
        return cache[key]

    def f(t, y, J):
        gv, gd = loop_at(t)
        return rhs(gv, gd, y, J)

    for k in range(n_steps):
        t = k * h
        k1, kJ1 = f(t, y, J)
        k2, kJ2 = f(t + h / 2.0, y + (h / 2.0) * k1, None if J is None else J + (h / 2.0) * kJ1)
        k3, kJ3 = f(t + h / 2.0, y + (h / 2.0) * k2, None if J is None else J + (h / 2.0) * kJ2)
        k4, kJ4 = f(t + h, y + h * k3, None if J is None else J + h * kJ3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if J is not None:
            J = J + (h / 6.0) * (kJ1 + 2.0 * kJ2 + 2.0 * kJ3 + kJ4)
        if not np.all(fib.fiber.contains(y)):
            raise DomainEscapeError(f"transport left the fiber domain box at t={t + h:.6f}")
    return y, J


def parallel_transport(probe: HolonomyProbe, conn: ConnectionCoeffs,
                       with_jacobian: bool = False,
                       step_check_tol: float | None = None) -> TransportResult:
    """Transport fiber points around the probe's loop.

    With ``step_check_tol`` set, the integration is repeated at half the
    step; a disagreement above the tolerance raises :class:`StepSizeError`.
    """
    fib = conn.fib
    y0 = probe.resolved_fiber_points(fib.fiber)
    end, J = _integrate(conn, probe.loop, y0, probe.step, with_jacobian)
    estimate = None
    if step_check_tol is not None:
        end_half, _ = _integrate(conn, probe.loop, y0, probe.step / 2.0, False)
        estimate = float(np.max(np.abs(end - end_half)))
        if estimate > step_check_tol:
            raise StepSizeError(
                f"step {probe.step} too coarse: halving disagreement {estimate:.3e}")
    return TransportResult(start=y0, end=end, jacobian=J, step=probe.step,
                           step_estimate=estimate)


def holonomy_poisson_residual(probe: HolonomyProbe, conn: ConnectionCoeffs,
                              pi: TensorField) -> dict:
    """Componentwise residual of (φ_γ)_*π − π over the probe's fiber points.

    The pushforward uses the transported Jacobian: (φ_*π)^{ab}(φ(y)) =
    J^a_c J^b_d π^{cd}(y).  Near-zero residual over small contractible
    loops characterizes Poisson connections.
    """
    fib = conn.fib
    if pi.chart == fib.total:
        eval_chart_points = lambda y: np.concatenate(
            [np.broadcast_to(probe.loop.point(0.0), (y.shape[0], fib.n)), y], axis=1)
    elif pi.chart == fib.fiber:
        eval_chart_points = lambda y: y
    else:
        raise ValueError("bivector lives on an unrelated chart")

    result = parallel_transport(probe, conn, with_jacobian=True)
    m = fib.m

    def pi_matrix(y):
        jets = pi.evaluate(eval_chart_points(y), 0)
        off = 0 if pi.chart == fib.fiber else fib.n
        P = np.zeros((y.shape[0], m, m))
        for (a, b), jet in jets.items():
            pa, pb = a - off, b - off
            if pa < 0 or pb < 0:
                if np.any(jet.value != 0.0):
                    raise ValueError("bivector has non-vertical components")
                continue
            P[:, pa, pb] = jet.value
            P[:, pb, pa] = -jet.value
        return P

    P0 = pi_matrix(result.start)
    P1 = pi_matrix(result.end)
    pushed = np.einsum("nac,ncd,nbd->nab", result.jacobian, P0, result.jacobian)
    residual = np.abs(pushed - P1)
    displacement = np.linalg.norm(result.end - result.start, axis=1)
    return {
        "max_residual": float(np.max(residual)),
        "mean_residual": float(np.mean(residual)),
        "max_displacement": float(np.max(displacement)),
        "n_fiber_points": int(result.start.shape[0]),
        "step": probe.step,
    }
