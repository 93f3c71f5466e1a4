import numpy as np
import pytest

from diracfib.chart import Chart
from diracfib.fibration import FibrationChart
from diracfib.dirac import DiracTriple


@pytest.fixture
def chart3():
    return Chart(("x", "y", "z"), ((-1, 1), (-1, 1), (-1, 1)))


@pytest.fixture
def fib22():
    base = Chart(("x1", "x2"), ((-1, 1), (-1, 1)))
    fiber = Chart(("y1", "y2"), ((-1, 1), (-1, 1)))
    return FibrationChart(base, fiber)


@pytest.fixture
def fib23():
    base = Chart(("x1", "x2"), ((-1, 1), (-1, 1)))
    fiber = Chart(("y1", "y2", "y3"), ((-1, 1), (-1, 1), (-1, 1)))
    return FibrationChart(base, fiber)


@pytest.fixture
def messy_triple(fib23):
    """A generic fiber non-degenerate triple that is deliberately not Dirac."""
    return DiracTriple(
        fib23,
        gamma={(0, 0): "x2*y1 + y2", (0, 1): "sin(x1)*y3", (1, 0): "y1*y2",
               (1, 2): "x1 + y3^2"},
        omega={(0, 1): "x1*y1 + y2^2 + cos(x2)"},
        pi={(0, 1): "1 + y3", (0, 2): "y1*x1", (1, 2): "y2 - x2"},
    )


def central_diff(f, point, i, h=1e-5):
    """Central finite difference of a scalar callable along coordinate i."""
    p1 = np.array(point, dtype=float)
    p2 = np.array(point, dtype=float)
    p1[i] += h
    p2[i] -= h
    return (f(p1) - f(p2)) / (2.0 * h)


def second_diff(f, point, i, j, h=1e-5):
    if i == j:
        p1 = np.array(point, dtype=float)
        p2 = np.array(point, dtype=float)
        p1[i] += h
        p2[i] -= h
        return (f(p1) - 2.0 * f(np.array(point, dtype=float)) + f(p2)) / (h * h)
    pp = np.array(point, dtype=float); pp[i] += h; pp[j] += h
    pm = np.array(point, dtype=float); pm[i] += h; pm[j] -= h
    mp = np.array(point, dtype=float); mp[i] -= h; mp[j] += h
    mm = np.array(point, dtype=float); mm[i] -= h; mm[j] -= h
    return (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h)


def rel_err(got, want):
    return abs(got - want) / max(1.0, abs(want))
