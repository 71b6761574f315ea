"""Contour-discretized solver for the limiting integro-differential system.

The generating functions Q(z), P(z), R(z) are carried at M points on a circle
|z| = rho enclosing the spectrum. The overlaps are contour integrals,

    q = -(1/2 pi i) \\oint Q(z) dz,    p1 = -(1/2 pi i) \\oint z P(z) dz,

evaluated with the trapezoid rule, which converges geometrically for these
periodic analytic integrands.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergenceError, DomainError
from .semicircle import g_sc
from .theory import ScenarioParams


@dataclass(frozen=True)
class ContourGrid:
    """M equally spaced points on the circle of radius rho."""

    radius: float = 2.5
    margin: float = 0.4
    num_points: int = 256

    def __post_init__(self):
        if not self.margin > 0:
            raise DomainError("margin must be positive")
        if not self.radius > 2.0 + self.margin:
            raise DomainError(f"radius must exceed 2 + margin = {2.0 + self.margin}")
        if self.num_points < 64 or self.num_points % 2:
            raise DomainError("need an even number of contour points, at least 64")

    @property
    def points(self) -> np.ndarray:
        M = self.num_points
        z = self.radius * np.exp(2j * np.pi * np.arange(M) / M)
        # make the grid exactly closed under conjugation: z_{M-j} = conj(z_j)
        z[0] = self.radius
        z[M // 2] = -self.radius
        z[M // 2 + 1:] = np.conj(z[1:M // 2][::-1])
        return z


class ImaginaryResidueWarning(RuntimeWarning):
    pass


def contour_sum(values: np.ndarray, z: np.ndarray, power: int) -> complex:
    """-(1/2 pi i) \\oint z^power v(z) dz by the trapezoid rule on a circle."""
    # dz = i z dtheta and dtheta = 2 pi / M
    return complex(-np.mean(z ** (power + 1) * values))


def contour_integral(values, grid: ContourGrid, power: int = 0,
                     imag_tol: float = 1e-8) -> float:
    """Real part of -(1/2 pi i) \\oint z^power v(z) dz; warns on an imaginary residue."""
    z = grid.points
    values = np.asarray(values, dtype=complex)
    if values.shape != z.shape:
        raise DomainError("values must be aligned with the grid points")
    total = contour_sum(values, z, power)
    if abs(total.imag) > imag_tol:
        warnings.warn(f"contour integral has imaginary part {total.imag:.3e}",
                      ImaginaryResidueWarning, stacklevel=2)
    return total.real


@dataclass
class IDEState:
    Q: np.ndarray
    P: np.ndarray
    R: np.ndarray
    q: float
    p1: float
    tau: float


def init_state(params: ScenarioParams, grid: ContourGrid) -> IDEState:
    z = grid.points
    G = g_sc(z)
    Q = params.alpha * G
    P = G.copy()
    q = contour_sum(Q, z, 0).real
    p1 = contour_sum(P, z, 1).real
    return IDEState(Q, P, G, q, p1, 0.0)


def solve_ide(params: ScenarioParams, grid: Optional[ContourGrid] = None,
              tau_max: float = 5.0, dt: float = 1e-3,
              tau_out=None) -> list[IDEState]:
    """Classical RK4 on the coupled system

        dQ/dtau      = q R + (z Q + q)/sqrt(lam) - (q^2 + p1/sqrt(lam)) Q
        (1/2) dP/dtau = q Q + (z P + 1)/sqrt(lam) - (q^2 + p1/sqrt(lam)) P

    with q and p1 recomputed from the contour at every stage. States are
    returned at the output times (params.tau_grid when tau_out is None, or
    just tau_max when that is empty); each output time is rounded to the
    nearest step.
    """
    grid = grid or ContourGrid()
    if not 0 < dt <= 1e-2:
        raise DomainError("dt must lie in (0, 1e-2]")
    if not 0 <= tau_max <= 100:
        raise DomainError("tau_max must lie in [0, 100]")
    if tau_out is None:
        tau_out = params.tau_grid or (tau_max,)
    out_steps = sorted({int(round(t / dt)) for t in tau_out if t <= tau_max + 0.5 * dt})

    z = grid.points
    sl = math.sqrt(params.lam)
    state = init_state(params, grid)
    R = state.R
    z1, z2 = z, z * z

    def overlaps(Q, P):
        q = -np.mean(z1 * Q).real
        p1 = -np.mean(z2 * P).real
        return q, p1

    def rhs(Q, P):
        q, p1 = overlaps(Q, P)
        f = q * q + p1 / sl
        dQ = q * R + (z * Q + q) / sl - f * Q
        dP = 2.0 * (q * Q + (z * P + 1.0) / sl - f * P)
        return dQ, dP

    Q, P = state.Q, state.P
    states: list[IDEState] = []
    n_steps = out_steps[-1] if out_steps else 0
    next_out = 0
    for step in range(n_steps + 1):
        if next_out < len(out_steps) and step == out_steps[next_out]:
            q, p1 = overlaps(Q, P)
            states.append(IDEState(Q.copy(), P.copy(), R, q, p1, step * dt))
            next_out += 1
        if step == n_steps:
            break
        k1Q, k1P = rhs(Q, P)
        k2Q, k2P = rhs(Q + 0.5 * dt * k1Q, P + 0.5 * dt * k1P)
        k3Q, k3P = rhs(Q + 0.5 * dt * k2Q, P + 0.5 * dt * k2P)
        k4Q, k4P = rhs(Q + dt * k3Q, P + dt * k3P)
        Q = Q + (dt / 6.0) * (k1Q + 2.0 * k2Q + 2.0 * k3Q + k4Q)
        P = P + (dt / 6.0) * (k1P + 2.0 * k2P + 2.0 * k3P + k4P)
        q, p1 = overlaps(Q, P)
        if not (abs(q) <= 1.01 and math.isfinite(p1)):
            raise DivergenceError(
                f"IDE left the admissible region at tau={(step + 1) * dt:.4g} "
                f"(q={q:.4g}, p1={p1:.4g}); reduce dt or refine the contour")
    return states


def ide_curve(params: ScenarioParams, tau_grid, grid: Optional[ContourGrid] = None,
              dt: float = 1e-3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(tau, q, p1) arrays from solve_ide on the requested grid."""
    tau_grid = np.asarray(tau_grid, dtype=float)
    states = solve_ide(params, grid, float(tau_grid.max()), dt, tau_out=tau_grid)
    return (np.array([s.tau for s in states]), np.array([s.q for s in states]),
            np.array([s.p1 for s in states]))


@dataclass
class StationaryBranch:
    """A solution (q_inf, p1_inf) of the stationary equations.

    p1_inf is a float, or a (low, high) pair for a continuum of solutions.
    """

    q_inf: float
    p1_inf: object
    attainable: bool
    condition: str


def stationary_solutions(lam: float) -> list[StationaryBranch]:
    if not lam > 0:
        raise DomainError("lambda must be positive")
    sl = math.sqrt(lam)
    branches = [
        StationaryBranch(0.0, (-2.0, 2.0), True,
                         "q=0 with |p1|<=2; reached from alpha=0 where the flow does not move"),
        StationaryBranch(0.0, (2.0, math.inf), False,
                         "q=0 with |p1|>2; solves the equations but is not reached by the flow"),
    ]
    if lam >= 1:
        q = math.sqrt(1.0 - 1.0 / lam)
        for sgn in (1.0, -1.0):
            branches.append(StationaryBranch(
                sgn * q, 2.0 / sl, True,
                "lam>=1: q^2 = 1 - 1/lam, p1 = 2/sqrt(lam); reached from alpha of the same sign"))
    else:
        q2 = (1.0 / lam) * (1.0 / lam - 1.0)
        p1 = sl + 1.0 / sl - sl * q2
        for sgn in (1.0, -1.0):
            branches.append(StationaryBranch(
                sgn * math.sqrt(q2), p1, False,
                "lam<1: q^2 = (1/lam)(1/lam - 1); not reached, the flow tends to q=0"))
    return branches


def stationary_fields(lam: float, q: float, p1: float, z: np.ndarray):
    """Q_inf, P_inf solving the stationary equations pointwise for given (q, p1)."""
    sl = math.sqrt(lam)
    pole = sl * q * q + p1
    G = g_sc(z)
    Q = q * (sl * G + 1.0) / (pole - z)
    P = q * q * sl * (sl * G + 1.0) / (pole - z) ** 2 + 1.0 / (pole - z)
    return Q, P


def stationary_residual(lam: float, q: float, p1: float, num_points: int = 64,
                        radius: Optional[float] = None) -> float:
    """Max pointwise residual of the two stationary equations on a contour.

    The contour is widened past the pole sqrt(lam) q^2 + p1 when needed.
    """
    sl = math.sqrt(lam)
    pole = abs(sl * q * q + p1)
    if radius is None:
        radius = max(2.5, pole + 1.0)
    grid = ContourGrid(radius, min(0.4, 0.5 * (radius - 2.0)), num_points)
    z = grid.points
    Q, P = stationary_fields(lam, q, p1, z)
    G = g_sc(z)
    coef = z / sl - q * q - p1 / sl
    r1 = q * (G + 1.0 / sl) + coef * Q
    r2 = q * Q + 1.0 / sl + coef * P
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


def stationary_self_consistency(lam: float, q: float, p1: float,
                                num_points: int = 4096,
                                radius: Optional[float] = None) -> tuple[float, float]:
    """Gaps q - (-\\oint Q) and p1 - (-\\oint z P) for the stationary fields.

    By default the circle passes between the support [-2, 2] and the pole
    z0 = sqrt(lam) q^2 + p1 (when z0 > 2), which is how the branch conditions
    are derived. On that contour the q-equation reduces to
    1 = -sqrt(lam) g_sc(z0): it holds on the lam >= 1 branch but gives lam = 1
    on the lam < 1 branch, which is why that branch cannot be a limit point.
    """
    sl = math.sqrt(lam)
    pole = sl * q * q + p1
    if radius is None:
        radius = 0.5 * (2.0 + pole) if pole > 2.0 + 1e-9 else 2.5
    grid = ContourGrid(radius, 0.5 * (radius - 2.0), num_points)
    z = grid.points
    Q, P = stationary_fields(lam, q, p1, z)
    return (q - contour_sum(Q, z, 0).real, p1 - contour_sum(P, z, 1).real)
