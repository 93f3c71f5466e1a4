"""Chart-level calculus of fiber non-degenerate Dirac structures on Poisson fibrations."""

from .expr import parse, pretty, ExprError, DslSyntaxError, UnknownIdentifierError, ArityError
from .jets import Jet, eval_jet, OrderExceededError, EvalDomainError
from .chart import Chart, TensorField

__all__ = [
    "parse", "pretty", "ExprError", "DslSyntaxError", "UnknownIdentifierError",
    "ArityError", "Jet", "eval_jet", "OrderExceededError", "EvalDomainError",
    "Chart", "TensorField",
]

__version__ = "0.1.0"
