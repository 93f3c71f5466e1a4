"""Forward-mode jets: function values with exact partial derivatives.

A :class:`Jet` carries the value of a function together with its first and
(when ``order >= 2``) second partial derivatives with respect to the chart
coordinates, propagated by the product/chain rules — never by finite
differences.  Jets are truncated at order 2; asking for derivatives beyond
the carried order raises :class:`OrderExceededError` instead of returning
garbage.

Evaluation is batched: a jet's ``value`` has shape ``()`` for a single
point or ``(N,)`` for N points; ``grad`` prepends one coordinate axis,
``hess`` two.  All operations are pure, deterministic and safe to share
across threads.
"""

from __future__ import annotations

import numpy as np

from . import expr as ex

__all__ = ["Jet", "OrderExceededError", "EvalDomainError", "eval_jet", "MAX_ORDER"]

MAX_ORDER = 2


class OrderExceededError(RuntimeError):
    """A derivative beyond the jet's carried order was requested."""


class EvalDomainError(ValueError):
    """A point left the domain of a primitive function (log, sqrt, division)."""


class Jet:
    __slots__ = ("order", "dim", "value", "grad", "hess")

    def __init__(self, order: int, dim: int, value, grad=None, hess=None):
        self.order = order
        self.dim = dim
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = grad
        self.hess = hess

    # -- constructors -------------------------------------------------------

    @staticmethod
    def constant(value, dim: int, order: int, shape=()) -> "Jet":
        v = np.broadcast_to(np.asarray(value, dtype=np.float64), shape).copy()
        g = np.zeros((dim,) + shape) if order >= 1 else None
        h = np.zeros((dim, dim) + shape) if order >= 2 else None
        return Jet(order, dim, v, g, h)

    @staticmethod
    def coordinate(i: int, value, dim: int, order: int) -> "Jet":
        v = np.asarray(value, dtype=np.float64)
        g = h = None
        if order >= 1:
            g = np.zeros((dim,) + v.shape)
            g[i] = 1.0
        if order >= 2:
            h = np.zeros((dim, dim) + v.shape)
        return Jet(order, dim, v, g, h)

    # -- accessors -----------------------------------------------------------

    def partial(self, i: int):
        if self.order < 1:
            raise OrderExceededError("jet carries no first derivatives")
        return self.grad[i]

    def partial2(self, i: int, j: int):
        if self.order < 2:
            raise OrderExceededError("jet carries no second derivatives")
        return self.hess[i, j]

    def derivative(self, i: int) -> "Jet":
        """The jet of the i-th partial derivative (order drops by one)."""
        if self.order < 1:
            raise OrderExceededError("jet carries no first derivatives")
        g = self.hess[i] if self.order >= 2 else None
        return Jet(self.order - 1, self.dim, self.grad[i], g, None)

    def truncated(self, order: int) -> "Jet":
        """View this jet at a lower order."""
        if order > self.order:
            raise OrderExceededError(f"jet of order {self.order} cannot supply order {order}")
        return Jet(order, self.dim,
                   self.value,
                   self.grad if order >= 1 else None,
                   self.hess if order >= 2 else None)

    # -- arithmetic ----------------------------------------------------------

    def _like(self, value, grad, hess) -> "Jet":
        return Jet(self.order, self.dim, value, grad, hess)

    def __add__(self, other: "Jet") -> "Jet":
        g = self.grad + other.grad if self.order >= 1 else None
        h = self.hess + other.hess if self.order >= 2 else None
        return self._like(self.value + other.value, g, h)

    def __sub__(self, other: "Jet") -> "Jet":
        g = self.grad - other.grad if self.order >= 1 else None
        h = self.hess - other.hess if self.order >= 2 else None
        return self._like(self.value - other.value, g, h)

    def __neg__(self) -> "Jet":
        g = -self.grad if self.order >= 1 else None
        h = -self.hess if self.order >= 2 else None
        return self._like(-self.value, g, h)

    def __mul__(self, other: "Jet") -> "Jet":
        f, g = self, other
        v = f.value * g.value
        gr = he = None
        if self.order >= 1:
            gr = f.grad * g.value + f.value * g.grad
        if self.order >= 2:
            cross = f.grad[:, None] * g.grad[None, :]
            he = f.hess * g.value + f.value * g.hess + cross + np.swapaxes(cross, 0, 1)
        return self._like(v, gr, he)

    def scaled(self, c: float) -> "Jet":
        g = self.grad * c if self.order >= 1 else None
        h = self.hess * c if self.order >= 2 else None
        return self._like(self.value * c, g, h)

    def reciprocal(self) -> "Jet":
        if np.any(self.value == 0.0):
            raise EvalDomainError("division by zero")
        inv = 1.0 / self.value
        gr = he = None
        if self.order >= 1:
            gr = -self.grad * inv * inv
        if self.order >= 2:
            outer = self.grad[:, None] * self.grad[None, :]
            he = (2.0 * outer * inv - self.hess) * inv * inv
        return self._like(inv, gr, he)

    def __truediv__(self, other: "Jet") -> "Jet":
        return self * other.reciprocal()

    def powi(self, n: int) -> "Jet":
        if n == 0:
            return Jet.constant(1.0, self.dim, self.order, self.value.shape)
        if n < 0 and np.any(self.value == 0.0):
            raise EvalDomainError("zero raised to a negative power")
        v = self.value ** n
        gr = he = None
        if self.order >= 1:
            c1 = n * self.value ** (n - 1)
            gr = c1 * self.grad
        if self.order >= 2:
            he = c1 * self.hess
            if n != 1:
                c2 = n * (n - 1) * self.value ** (n - 2)
                he = he + c2 * (self.grad[:, None] * self.grad[None, :])
        return self._like(v, gr, he)

    # -- chain rule helpers ---------------------------------------------------

    def _chain(self, v, d1, d2) -> "Jet":
        gr = he = None
        if self.order >= 1:
            gr = d1 * self.grad
        if self.order >= 2:
            he = d1 * self.hess + d2 * (self.grad[:, None] * self.grad[None, :])
        return self._like(v, gr, he)

    def sin(self) -> "Jet":
        s, c = np.sin(self.value), np.cos(self.value)
        return self._chain(s, c, -s)

    def cos(self) -> "Jet":
        s, c = np.sin(self.value), np.cos(self.value)
        return self._chain(c, -s, -c)

    def tan(self) -> "Jet":
        t = np.tan(self.value)
        d1 = 1.0 + t * t
        return self._chain(t, d1, 2.0 * t * d1)

    def exp(self) -> "Jet":
        e = np.exp(self.value)
        return self._chain(e, e, e)

    def log(self) -> "Jet":
        if np.any(self.value <= 0.0):
            raise EvalDomainError("log of a non-positive value")
        inv = 1.0 / self.value
        return self._chain(np.log(self.value), inv, -inv * inv)

    def sqrt(self) -> "Jet":
        if np.any(self.value < 0.0) or (self.order >= 1 and np.any(self.value == 0.0)):
            raise EvalDomainError("sqrt outside its smooth domain")
        r = np.sqrt(self.value)
        d1 = 0.5 / r if self.order >= 1 else None
        d2 = -0.25 / (r * self.value) if self.order >= 2 else None
        gr = he = None
        if self.order >= 1:
            gr = d1 * self.grad
        if self.order >= 2:
            he = d1 * self.hess + d2 * (self.grad[:, None] * self.grad[None, :])
        return self._like(r, gr, he)


def _atan2(y: Jet, x: Jet) -> Jet:
    r2 = x.value * x.value + y.value * y.value
    if y.order >= 1 and np.any(r2 == 0.0):
        raise EvalDomainError("atan2 derivatives undefined at the origin")
    v = np.arctan2(y.value, x.value)
    gr = he = None
    if y.order >= 1:
        fy = x.value / r2
        fx = -y.value / r2
        gr = fy * y.grad + fx * x.grad
    if y.order >= 2:
        r4 = r2 * r2
        fyy = -2.0 * x.value * y.value / r4
        fyx = (y.value * y.value - x.value * x.value) / r4
        fxx = 2.0 * x.value * y.value / r4
        oy = y.grad[:, None] * y.grad[None, :]
        ox = x.grad[:, None] * x.grad[None, :]
        oyx = y.grad[:, None] * x.grad[None, :]
        he = (fy * y.hess + fx * x.hess
              + fyy * oy + fxx * ox + fyx * (oyx + np.swapaxes(oyx, 0, 1)))
    return Jet(y.order, y.dim, v, gr, he)


def eval_jet(e: ex.Expr, coords, points, order: int) -> Jet:
    """Evaluate an expression to a jet at one point or a batch of points.

    ``points`` has shape ``(dim,)`` or ``(N, dim)``; the resulting jet's
    value has shape ``()`` or ``(N,)`` accordingly.
    """
    if order > MAX_ORDER:
        raise OrderExceededError(f"jets are truncated at order {MAX_ORDER}, requested {order}")
    if order < 0:
        raise ValueError("order must be non-negative")
    pts = np.asarray(points, dtype=np.float64)
    dim = len(coords)
    if pts.shape[-1] != dim:
        raise ValueError(f"point dimension {pts.shape[-1]} != coordinate count {dim}")
    index = {name: i for i, name in enumerate(coords)}
    shape = pts.shape[:-1]

    def walk(node: ex.Expr) -> Jet:
        if isinstance(node, ex.Num):
            return Jet.constant(node.value, dim, order, shape)
        if isinstance(node, ex.Var):
            i = index[node.name]
            return Jet.coordinate(i, pts[..., i], dim, order)
        if isinstance(node, ex.Neg):
            return -walk(node.arg)
        if isinstance(node, ex.Add):
            return walk(node.left) + walk(node.right)
        if isinstance(node, ex.Sub):
            return walk(node.left) - walk(node.right)
        if isinstance(node, ex.Mul):
            return walk(node.left) * walk(node.right)
        if isinstance(node, ex.Div):
            return walk(node.left) / walk(node.right)
        if isinstance(node, ex.Pow):
            return walk(node.base).powi(node.exponent)
        if isinstance(node, ex.Call):
            if node.fn == "atan2":
                return _atan2(walk(node.args[0]), walk(node.args[1]))
            arg = walk(node.args[0])
            return getattr(arg, node.fn)()
        raise TypeError(f"not an expression node: {node!r}")

    return walk(e)
