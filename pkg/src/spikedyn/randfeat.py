"""Gradient-flow risk of the second layer of a random-feature model.

Model: inputs x uniform on the sphere of radius sqrt(d), labels y = <x, beta> + eps,
features z_j = sigma(<x, theta_j>/sqrt(d)). With H = Z^T Z/d, b = Z^T Y/d and
lam_star = lam psi1 psi2, the risk

    R(a) = |Y - Z a|^2/(2n) + (lam_star/(2 psi2)) |a|^2
         = C_Y - (1/psi2) (q0 - (p1 + lam_star p0)/2),   q0 = <a,b>, p0 = |a|^2, p1 = <a,Ha>

decreases along da/dt = b - (H + lam_star) a. Averaged over a0 with
E a0 a0^T = I, everything is a finite sum over the eigenpairs (mu_i, v_i)
of H with kappa_i = mu_i + lam_star and weights w_i = <v_i, b>^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import DomainError
from .matrices import stream

ACTIVATIONS = {
    "tanh": np.tanh,
    "relu": lambda u: np.maximum(u, 0.0),
    "identity": lambda u: u,
}

# kappa below this is treated as zero: (1 - exp(-t k))/k -> t
_ZERO_RATE = 1e-12


@dataclass(frozen=True)
class RFConfig:
    d: int = 50
    psi1: float = 1.0
    psi2: float = 1.5
    lam: float = 0.1
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        if self.d < 4:
            raise DomainError("d must be at least 4")
        if not (self.psi1 > 0 and self.psi2 > 0):
            raise DomainError("psi1 and psi2 must be positive")
        if not self.lam >= 0:
            raise DomainError("ridge lambda must be non-negative")
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")

    @property
    def N(self) -> int:
        return max(1, math.ceil(self.psi1 * self.d - 1e-9))

    @property
    def n(self) -> int:
        return max(1, math.ceil(self.psi2 * self.d - 1e-9))

    @property
    def lambda_star(self) -> float:
        # ratios of the realized integer sizes keep the finite-d identities exact
        return self.lam * (self.N / self.d) * (self.n / self.d)


@dataclass
class RFInstance:
    config: RFConfig
    X: np.ndarray
    Y: np.ndarray
    beta: np.ndarray
    Theta: np.ndarray
    Z: np.ndarray
    H: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    b: np.ndarray  # Z^T Y/d in the eigenbasis
    r_weights: np.ndarray
    C_Y: float

    @property
    def psi2_eff(self) -> float:
        return self.X.shape[0] / self.config.d


@dataclass
class RFSpectralMeasures:
    """Point-mass measures at the eigenvalues mu_i.

    p0 has unit masses. r has the instance-exact masses <v_i, b>^2 and
    r_averaged the label-averaged masses used when beta and eps are integrated out.
    """

    atoms: np.ndarray
    p0_mass: np.ndarray
    r_mass: np.ndarray
    r_averaged: np.ndarray

    def stieltjes(self, z: complex, which: str = "r") -> complex:
        """sum_i mass_i/(mu_i - z)."""
        mass = {"r": self.r_mass, "p0": self.p0_mass, "r_averaged": self.r_averaged}[which]
        return complex(np.sum(mass / (self.atoms - z)))


@dataclass
class RFCurve:
    t: np.ndarray
    q0: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    risk: np.ndarray


def _sphere_rows(rng: np.random.Generator, rows: int, dim: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((rows, dim))
    return radius * g / np.linalg.norm(g, axis=1, keepdims=True)


def build_instance(config: RFConfig, label_noise_in_average: bool = True
                   ) -> tuple[RFInstance, RFSpectralMeasures]:
    """Sample X, beta, eps, Theta, form Z and H, and eigendecompose H.

    The averaged weights are E <v_i, Z^T Y/d>^2 over beta uniform on the unit
    sphere (E beta beta^T = I/d) and standard normal noise, which gives
    v_i^T Z^T (X X^T/d) Z v_i / d^3 + mu_i/d; the second term can be switched off.
    """
    d, N, n = config.d, config.N, config.n
    rng = stream(config.seed, d, N, n)
    X = _sphere_rows(rng, n, d, math.sqrt(d))
    beta = _sphere_rows(rng, 1, d, 1.0)[0]
    eps = rng.standard_normal(n)
    Y = X @ beta + eps
    Theta = _sphere_rows(rng, N, d, math.sqrt(d))
    Z = ACTIVATIONS[config.activation](X @ Theta.T / math.sqrt(d))
    if not np.all(np.isfinite(Z)):
        raise ArithmeticError("feature matrix has non-finite entries")
    H = Z.T @ Z / d
    mu, V = linalg.eigh(H)
    b = V.T @ (Z.T @ Y / d)
    ZV = Z @ V
    averaged = np.sum((X.T @ ZV) ** 2, axis=0) / d ** 3
    if label_noise_in_average:
        averaged = averaged + mu / d
    instance = RFInstance(config, X, Y, beta, Theta, Z, H, mu, V, b, b * b,
                          float(Y @ Y / (2.0 * n)))
    measures = RFSpectralMeasures(mu, np.ones(N), b * b, averaged)
    return instance, measures


def _phi(kappa: np.ndarray, t: float) -> np.ndarray:
    """(1 - exp(-t kappa))/kappa with the kappa -> 0 limit t."""
    small = np.abs(kappa) < _ZERO_RATE
    safe = np.where(small, 1.0, kappa)
    return np.where(small, t, -np.expm1(-t * safe) / safe)


def _rates(mu: np.ndarray, weights: np.ndarray, lambda_star: float) -> np.ndarray:
    kappa = mu + lambda_star
    bad = (kappa <= -_ZERO_RATE) & (weights != 0)
    if np.any(bad):
        raise ArithmeticError("negative rate mu_i + lambda_star with nonzero weight")
    return kappa


def rf_risk_curve(instance: RFInstance, measures: RFSpectralMeasures,
                  lambda_star: Optional[float] = None, t_grid=(0.0,),
                  weights: str = "r") -> RFCurve:
    """a0-averaged q0, p0, p1 and risk as sums over the spectral atoms.

    q0(t) = sum w phi,  p0 = sum e^{-2 t k} + sum w phi^2,  p1 likewise with mu,
    risk(t) = C_Y + (1/(2 psi2)) [sum k e^{-2 t k} - sum w (1 - e^{-2 t k})/k],
    where k = mu + lambda_star and phi = (1 - e^{-t k})/k.
    """
    if lambda_star is None:
        lambda_star = instance.config.lambda_star
    mu = measures.atoms
    w = {"r": measures.r_mass, "r_averaged": measures.r_averaged}[weights]
    kappa = _rates(mu, w, lambda_star)
    psi2 = instance.psi2_eff
    t_grid = np.asarray(t_grid, dtype=float)
    q0, p0, p1, risk = (np.empty_like(t_grid) for _ in range(4))
    for j, t in enumerate(t_grid):
        ph = _phi(kappa, t)
        decay = np.exp(-2.0 * t * kappa)
        q0[j] = np.sum(w * ph)
        p0[j] = np.sum(measures.p0_mass * decay) + np.sum(w * ph * ph)
        p1[j] = np.sum(mu * measures.p0_mass * decay) + np.sum(mu * w * ph * ph)
        risk[j] = instance.C_Y + (np.sum(kappa * measures.p0_mass * decay)
                                  - np.sum(w * _phi(2.0 * kappa, t) * 2.0)) / (2.0 * psi2)
    return RFCurve(t_grid, q0, p0, p1, risk)


def risk_from_overlaps(instance: RFInstance, q0, p0, p1, lambda_star: float):
    """C_Y - (1/psi2)(q0 - (p1 + lambda_star p0)/2)."""
    return instance.C_Y - (np.asarray(q0) - 0.5 * (np.asarray(p1) + lambda_star * np.asarray(p0))) / instance.psi2_eff


def rf_risk_direct(instance: RFInstance, a: np.ndarray, lambda_star: float) -> float:
    """|Y - Z a|^2/(2n) + (lambda_star/(2 psi2)) |a|^2 from the raw matrices."""
    n = instance.X.shape[0]
    res = instance.Y - instance.Z @ a
    return float(res @ res / (2.0 * n) + lambda_star * (a @ a) / (2.0 * instance.psi2_eff))


def rf_flow_exact(instance: RFInstance, lambda_star: float, a0: np.ndarray,
                  t: float) -> tuple[np.ndarray, float]:
    """Closed-form a_t of da/dt = b - (H + lambda_star) a and its risk."""
    V = instance.eigvecs
    kappa = instance.eigvals + lambda_star
    c0 = V.T @ a0
    ct = np.exp(-t * kappa) * c0 + _phi(kappa, t) * instance.b
    at = V @ ct
    q0 = float(ct @ instance.b)
    p0 = float(ct @ ct)
    p1 = float(ct @ (instance.eigvals * ct))
    risk = float(risk_from_overlaps(instance, q0, p0, p1, lambda_star))
    return at, risk


def rf_flow_rk4(instance: RFInstance, lambda_star: float, a0: np.ndarray,
                t: float, dt: float = 1e-3) -> np.ndarray:
    """RK4 integration of the flow in the original coordinates."""
    H, n, d = instance.H, instance.X.shape[0], instance.config.d
    bvec = instance.Z.T @ instance.Y / d

    def f(a):
        return bvec - H @ a - lambda_star * a

    a = np.array(a0, dtype=float)
    steps = int(round(t / dt))
    for _ in range(steps):
        k1 = f(a)
        k2 = f(a + 0.5 * dt * k1)
        k3 = f(a + 0.5 * dt * k2)
        k4 = f(a + dt * k3)
        a = a + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return a


def ridge_solution(instance: RFInstance, lam: Optional[float] = None) -> np.ndarray:
    """argmin of the regularized risk: (Z^T Z + (n N/d) lam I)^{-1} Z^T Y."""
    cfg = instance.config
    lam = cfg.lam if lam is None else lam
    n, N = instance.Z.shape
    A = instance.Z.T @ instance.Z + (n * N / cfg.d) * lam * np.eye(N)
    return linalg.solve(A, instance.Z.T @ instance.Y, assume_a="pos")


def rf_expectation_identity(instance: RFInstance, measures: RFSpectralMeasures,
                            lambda_star: Optional[float] = None, t_grid=(0.0, 0.5, 1.0, 5.0)) -> float:
    """Max gap between the spectral curve and the a0-average of the exact flow.

    The average uses E a0 a0^T = I: with c_t = e^{-tk} c0 + phi b,
    E c_t c_t^T has diagonal e^{-2tk} + phi^2 b^2, which is evaluated in the
    original coordinates through the matrices themselves.
    """
    if lambda_star is None:
        lambda_star = instance.config.lambda_star
    V, mu = instance.eigvecs, instance.eigvals
    kappa = mu + lambda_star
    bvec = instance.Z.T @ instance.Y / instance.config.d
    curve = rf_risk_curve(instance, measures, lambda_star, t_grid)
    worst = 0.0
    for j, t in enumerate(np.asarray(t_grid, dtype=float)):
        # mean of a_t and covariance of a_t in the original basis
        mean = V @ (_phi(kappa, t) * instance.b)
        E = V @ np.diag(np.exp(-t * kappa)) @ V.T
        second = E @ E.T + np.outer(mean, mean)
        q0 = float(mean @ bvec)
        p0 = float(np.trace(second))
        p1 = float(np.sum(instance.H * second))
        risk = float(risk_from_overlaps(instance, q0, p0, p1, lambda_star))
        gaps = (q0 - curve.q0[j], p0 - curve.p0[j], p1 - curve.p1[j], risk - curve.risk[j])
        worst = max(worst, max(abs(g) for g in gaps))
    return worst


@dataclass
class MCRisk:
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray


def rf_flow_mc(instance: RFInstance, lambda_star: Optional[float] = None, t_grid=(0.0,),
               num_draws: int = 200, seed: int = 0) -> MCRisk:
    """Mean and standard error of the risk over a0 uniform on the sphere of radius sqrt(N)."""
    if num_draws < 2:
        raise DomainError("need at least two draws")
    if lambda_star is None:
        lambda_star = instance.config.lambda_star
    N = instance.eigvals.size
    rng = stream(seed, N, num_draws)
    t_grid = np.asarray(t_grid, dtype=float)
    A0 = _sphere_rows(rng, num_draws, N, math.sqrt(N))
    risks = np.array([[rf_flow_exact(instance, lambda_star, a0, t)[1] for t in t_grid]
                      for a0 in A0])
    return MCRisk(t_grid, risks.mean(axis=0), risks.std(axis=0, ddof=1) / math.sqrt(num_draws))


def stieltjes_density(measures: RFSpectralMeasures, u: np.ndarray, eps: float = 1e-3,
                      which: str = "p0") -> np.ndarray:
    """(1/pi) Im sum_i mass_i/(mu_i - u - i eps): the smoothed spectral density.

    With the transform convention int dmu(s)/(s - z), the density is
    +(1/pi) Im S(u + i eps).
    """
    mass = {"r": measures.r_mass, "p0": measures.p0_mass, "r_averaged": measures.r_averaged}[which]
    z = np.asarray(u, dtype=float)[:, None] + 1j * eps
    return (np.sum(mass[None, :] / (measures.atoms[None, :] - z), axis=1)).imag / np.pi
