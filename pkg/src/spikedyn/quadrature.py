"""Quadrature rules used throughout the package.

Everything here is built on Gauss-Legendre nodes from numpy. The graded
composite rules put geometrically shrinking panels next to the end points,
which is where the integrands of the dynamics vary on the shortest scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights on an interval."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "gauss_legendre"

    def __post_init__(self):
        if self.kind not in ("gauss_legendre", "trapezoid"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if self.nodes.shape != self.weights.shape:
            raise ValueError("nodes and weights must have the same shape")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    """n-point Gauss-Legendre rule mapped to [a, b]."""
    if n < 1:
        raise ValueError("need at least one node")
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return QuadratureRule(0.5 * (a + b) + half * x, half * w, "gauss_legendre")


def trapezoid(n: int, a: float, b: float) -> QuadratureRule:
    """Closed trapezoid rule with n >= 2 equally spaced nodes on [a, b]."""
    if n < 2:
        raise ValueError("trapezoid rule needs at least two nodes")
    x = np.linspace(a, b, n)
    w = np.full(n, (b - a) / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return QuadratureRule(x, w, "trapezoid")


def panels_to_rule(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule over consecutive panels given by edges."""
    x, w = _leggauss(order)
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_levels(length: float, finest: float = 1e-3, ratio: float = 2.0) -> int:
    """Number of geometric levels needed to go from length/2 down to finest."""
    if length <= 2 * finest:
        return 1
    return int(np.ceil(np.log(0.5 * length / finest) / np.log(ratio)))


def graded_edges(a: float, b: float, levels: int, ratio: float = 2.0,
                 both_ends: bool = True) -> np.ndarray:
    """Panel edges on [a, b] refined geometrically toward a (and b).

    The edges scale linearly with b - a for a fixed number of levels, so two
    nearby intervals get rules that differ only by a smooth stretch.
    """
    length = b - a
    if both_ends:
        fr = 0.5 * ratio ** (-np.arange(levels, dtype=float))[::-1]
        left = a + length * np.concatenate(([0.0], fr))
        right = b - length * fr[::-1][1:]
        return np.concatenate((left, right, [b]))
    fr = ratio ** (-np.arange(levels + 1, dtype=float))[::-1]
    return a + length * np.concatenate(([0.0], fr))


def graded_rule(a: float, b: float, levels: int, order: int = 20,
                ratio: float = 2.0, both_ends: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on graded panels; see graded_edges."""
    if b <= a:
        return np.zeros(0), np.zeros(0)
    return panels_to_rule(graded_edges(a, b, levels, ratio, both_ends), order)


def adaptive_gauss(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                   tol: float = 1e-12, order: int = 20, max_depth: int = 50,
                   initial_panels: int = 1) -> float:
    """Adaptive composite Gauss-Legendre integration with an absolute tolerance.

    A panel is accepted when its one-panel estimate agrees with the sum over
    its two halves to within the tolerance share proportional to its width.
    """
    if b == a:
        return 0.0
    x, w = _leggauss(order)

    def panel(lo, hi):
        half = 0.5 * (hi - lo)
        return half * float(np.dot(w, f(0.5 * (lo + hi) + half * x)))

    edges = np.linspace(a, b, initial_panels + 1)
    stack = [(lo, hi, panel(lo, hi), 0) for lo, hi in zip(edges[:-1], edges[1:])]
    total = 0.0
    span = abs(b - a)
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = panel(lo, mid), panel(mid, hi)
        if abs(left + right - whole) <= tol * abs(hi - lo) / span or depth >= max_depth:
            total += left + right
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    return total
