"""Closed-form overlap, cost and asymptotics of the limiting gradient flow.

Notation. With c = 1 + 1/lam, s = 2/sqrt(lam) and kappa = (1 - 1/sqrt(lam))^2 = c - s,

    g(tau) = exp(-c tau) q_hat(tau) = alpha [1 - (1/lam) int_0^tau exp(-kappa u) m(u) du]
    h(tau) = exp(-2 c tau) p_hat(tau)

where m = m_lambda_scaled. The overlap is q_bar = q_hat / sqrt(p_hat) = g / sqrt(h).

For lam < 1 both g and h decay exponentially (g like exp(-kappa tau)), so the
bar_q route works with a second rescaling exp(-r tau) q_hat with r = s in that
regime; the ratio is unchanged and stays representable up to tau ~ 1e4 and
beyond. The rescaled overlap comes from the cancellation-free angular form

    g(tau) = alpha (1 - 1/lam) [lam > 1]
             + (2 alpha/(pi lam)) int_0^pi exp(-(c - s cos t) tau) sin^2 t / (c - s cos t) dt,

in which c - s cos t = kappa + 2 s sin^2(t/2) is evaluated without subtraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .quadrature import adaptive_gauss, graded_levels, graded_rule
from .semicircle import bessel_i0e, bessel_i1e, g_sc, m_lambda_scaled

# finite-difference step for the log-derivative of p_hat
FD_STEP = 1e-4
RICHARDSON_TOL = 1e-5


@dataclass(frozen=True)
class ScenarioParams:
    """Signal-to-noise ratio lam, initial overlap alpha and an output time grid."""

    lam: float
    alpha: float
    tau_grid: tuple = ()

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError(f"lambda must be positive and finite, got {self.lam}")
        if not abs(self.alpha) <= 1:
            raise DomainError(f"alpha must lie in [-1, 1], got {self.alpha}")
        grid = tuple(float(t) for t in self.tau_grid)
        if grid:
            if grid[0] < 0:
                raise DomainError("time grid must start at tau >= 0")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise DomainError("time grid must be strictly increasing")
        object.__setattr__(self, "tau_grid", grid)


@dataclass(frozen=True)
class _Rates:
    lam: float
    sqrt_lam: float
    c: float
    s: float
    kappa: float
    r: float  # rescaling rate used internally for the overlap

    @classmethod
    def of(cls, lam: float) -> "_Rates":
        sl = math.sqrt(lam)
        s = 2.0 / sl
        c = 1.0 + 1.0 / lam
        kappa = (1.0 - 1.0 / sl) ** 2
        return cls(lam, sl, c, s, kappa, c if lam >= 1 else s)


@dataclass
class CostPoint:
    cost: float
    p1_bar: float
    degraded: bool = False


@dataclass
class TheoryCurve:
    tau: np.ndarray
    q_bar: np.ndarray
    cost: np.ndarray
    p1_bar: np.ndarray
    degraded: np.ndarray = field(default=None)


@dataclass
class ScaledDynamics:
    """Scaled q_hat and p_hat together with F'(tau) = q_bar^2 + p1_bar/sqrt(lam)."""

    g: Callable[[float], float]
    h: Callable[[float], float]
    F_rate: Callable[[float], float]


@dataclass
class AsymptoteReport:
    regime: str
    tau: float
    predicted: Callable[[float], float]
    value: float
    psi: Optional[float] = None
    phi: Optional[float] = None
    A: Optional[float] = None


@lru_cache(maxsize=1)
def _angle_rule() -> tuple[np.ndarray, np.ndarray]:
    # panels on [0, pi] halving toward 0, where the large-tau mass sits
    return graded_rule(0.0, math.pi, levels=30, order=20, both_ends=False)


def _angular_terms(rates: _Rates):
    t, w = _angle_rule()
    half = np.sin(0.5 * t) ** 2
    den = rates.kappa + 2.0 * rates.s * half
    return half, w * np.sin(t) ** 2 / den, den


def _overlap_rescaled(rates: _Rates, alpha: float, u) -> np.ndarray:
    """exp(-r u) q_hat(u) from the angular form."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    half, wt, den = _angular_terms(rates)
    # exponent of exp(-r u) q_hat: -(den - (c - r)) u, c - r is 0 or kappa
    decay = den if rates.r == rates.c else 2.0 * rates.s * half
    integral = np.exp(-np.outer(u, decay)) @ wt
    out = (2.0 * alpha / (math.pi * rates.lam)) * integral
    if rates.lam > 1:
        out = out + alpha * (1.0 - 1.0 / rates.lam)
    return out


def _overlap_transient(rates: _Rates, alpha: float, tau: float) -> float:
    """(g(tau) - alpha (1 - 1/lam)) exp(kappa tau) for lam > 1, cancellation free."""
    half, wt, _ = _angular_terms(rates)
    integral = float(np.exp(-2.0 * rates.s * half * tau) @ wt)
    return (2.0 * alpha / (math.pi * rates.lam)) * integral


def _kernel(rates: _Rates, x: np.ndarray) -> np.ndarray:
    # exp(-(r - s) x) m(x); r - s is kappa for lam >= 1 and 0 otherwise
    m = m_lambda_scaled(rates.lam, x)
    if rates.r == rates.s:
        return m
    return np.exp(-(rates.r - rates.s) * x) * m


def _levels_for(tau: float) -> int:
    return graded_levels(tau, finest=1e-3)


def _p_rescaled(rates: _Rates, alpha: float, tau: float, levels: int,
                overlap: Optional[Callable] = None) -> float:
    """exp(-2 r tau) p_hat(tau) by graded tensor Gauss-Legendre."""
    first = float(_kernel(rates, np.array([2.0 * tau]))[0])
    if tau == 0.0 or alpha == 0.0:
        return first
    x, w = graded_rule(0.0, tau, levels, order=20)
    if overlap is None:
        gx = _overlap_rescaled(rates, alpha, x)
    else:
        gx = overlap(x)
    wg = w * gx
    second = 2.0 * alpha * float(wg @ _kernel(rates, 2.0 * tau - x))
    # symmetric in (x_i, x_j): diagonal plus twice the strict upper triangle
    i, j = np.triu_indices(x.size, 1)
    diag = _kernel(rates, 2.0 * tau - 2.0 * x)
    upper = _kernel(rates, 2.0 * tau - x[i] - x[j])
    third = float(wg * wg @ diag) + 2.0 * float((wg[i] * wg[j]) @ upper)
    return first + second + third


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not (tau >= 0 and math.isfinite(tau)):
        raise DomainError(f"tau must be finite and non-negative, got {tau}")
    return tau


def hat_q_scaled(params: ScenarioParams, tau: float) -> float:
    """exp(-(1+1/lam) tau) q_hat(tau) from the time-domain integral.

    The integral of exp(-kappa u) m(u) is done by adaptive composite
    Gauss-Legendre with absolute tolerance 1e-12.
    """
    tau = _check_tau(tau)
    rates = _Rates.of(params.lam)
    if tau == 0.0:
        return float(params.alpha)

    def f(u):
        return np.exp(-rates.kappa * u) * m_lambda_scaled(params.lam, u)

    panels = max(1, int(math.ceil(tau)))
    integral = adaptive_gauss(f, 0.0, tau, tol=1e-12, initial_panels=min(panels, 200))
    return params.alpha * (1.0 - integral / params.lam)


def hat_q_angular(params: ScenarioParams, tau: float) -> float:
    """Same quantity as hat_q_scaled, evaluated from the angular form."""
    tau = _check_tau(tau)
    rates = _Rates.of(params.lam)
    val = float(_overlap_rescaled(rates, params.alpha, [tau])[0])
    if rates.r != rates.c:
        val *= math.exp(-rates.kappa * tau)
    return val


def hat_p_scaled(params: ScenarioParams, tau: float) -> float:
    """exp(-2(1+1/lam) tau) p_hat(tau).

    For lam < 1 this decays like exp(-2 kappa tau) and underflows for very
    large tau; bar_q does not go through this function for that reason.
    """
    tau = _check_tau(tau)
    rates = _Rates.of(params.lam)
    val = _p_rescaled(rates, params.alpha, tau, _levels_for(tau))
    if rates.r != rates.c:
        val *= math.exp(-2.0 * rates.kappa * tau)
    return val


def bar_q(params: ScenarioParams, tau: float) -> float:
    """Limiting overlap q_hat/sqrt(p_hat) at time tau."""
    tau = _check_tau(tau)
    rates = _Rates.of(params.lam)
    if params.alpha == 0.0:
        return 0.0
    num = float(_overlap_rescaled(rates, params.alpha, [tau])[0])
    den = _p_rescaled(rates, params.alpha, tau, _levels_for(tau))
    return num / math.sqrt(den)


def bar_q_lambda1(alpha: float, tau: float) -> float:
    """Overlap at lam = 1 where q_hat = alpha (I_0(2 tau) + I_1(2 tau))."""
    tau = _check_tau(tau)
    if not abs(alpha) <= 1:
        raise DomainError("alpha must lie in [-1, 1]")
    if alpha == 0.0:
        return 0.0
    rates = _Rates.of(1.0)

    def overlap(u):
        return alpha * (bessel_i0e(2.0 * u) + bessel_i1e(2.0 * u))

    num = float(overlap(np.array([tau]))[0])
    den = _p_rescaled(rates, alpha, tau, _levels_for(tau), overlap=overlap)
    return num / math.sqrt(den)


def _half_log_rate(rates: _Rates, alpha: float, tau: float) -> tuple[float, bool]:
    """(1/2) d/dtau ln p_hat with Richardson-refined finite differences."""
    h = FD_STEP
    levels = _levels_for(tau)

    def lnp(t):
        return math.log(_p_rescaled(rates, alpha, t, levels))

    if tau >= 2 * h:
        d1 = (lnp(tau + h) - lnp(tau - h)) / (2 * h)
        d2 = (lnp(tau + 2 * h) - lnp(tau - 2 * h)) / (4 * h)
    else:
        f0, f1, f2, f4 = lnp(tau), lnp(tau + h), lnp(tau + 2 * h), lnp(tau + 4 * h)
        d1 = (-3 * f0 + 4 * f1 - f2) / (2 * h)
        d2 = (-3 * f0 + 4 * f2 - f4) / (4 * h)
    rich = (4 * d1 - d2) / 3
    degraded = abs(rich - d1) > 2 * RICHARDSON_TOL
    return rates.r + 0.5 * rich, degraded


def cost_and_p1(params: ScenarioParams, tau: float) -> CostPoint:
    """Limiting cost 1 - (1/2) d ln p_hat/dtau and p1_bar = <theta, H theta>/n."""
    tau = _check_tau(tau)
    if tau == 0.0:
        # p1_bar(0) = 0 for a deterministic start in the limit
        return CostPoint(1.0 - params.alpha ** 2, 0.0, False)
    rates = _Rates.of(params.lam)
    rate, degraded = _half_log_rate(rates, params.alpha, tau)
    q = bar_q(params, tau)
    return CostPoint(1.0 - rate, rates.sqrt_lam * (rate - q * q), degraded)


def noiseless_q(alpha: float, tau: float) -> float:
    """Overlap for lam = infinity: alpha (alpha^2 + (1 - alpha^2) exp(-2 tau))^(-1/2)."""
    tau = _check_tau(tau)
    return alpha / math.sqrt(alpha * alpha + (1.0 - alpha * alpha) * math.exp(-2.0 * tau))


def scaled_dynamics(params: ScenarioParams) -> ScaledDynamics:
    rates = _Rates.of(params.lam)

    def rate(t):
        if t == 0.0:
            return params.alpha ** 2
        return _half_log_rate(rates, params.alpha, _check_tau(t))[0]

    return ScaledDynamics(
        g=lambda t: hat_q_angular(params, t),
        h=lambda t: hat_p_scaled(params, t),
        F_rate=rate,
    )


def theory_curve(params: ScenarioParams, tau_grid=None) -> TheoryCurve:
    """Overlap, cost and p1_bar on a time grid."""
    grid = np.asarray(params.tau_grid if tau_grid is None else tau_grid, dtype=float)
    q = np.empty_like(grid)
    cost = np.empty_like(grid)
    p1 = np.empty_like(grid)
    flags = np.zeros(grid.shape, dtype=bool)
    for i, t in enumerate(grid):
        q[i] = bar_q(params, t)
        cp = cost_and_p1(params, t)
        cost[i], p1[i], flags[i] = cp.cost, cp.p1_bar, cp.degraded
    return TheoryCurve(grid, q, cost, p1, flags)


def _sign(x: float) -> float:
    return math.copysign(1.0, x) if x != 0 else 0.0


def asymptote(params: ScenarioParams, tau: float) -> AsymptoteReport:
    """Large-time law of the overlap in the regime selected by lam.

    lam > 1: the limit sign(alpha) sqrt(1 - 1/lam) plus its tau^{-3/2} exp(-kappa tau)
    correction, together with the diagnostics psi, phi and A which should all
    be asymptotically equivalent. lam < 1: a tau^{-3/4} power law. lam = 1:
    (2/(pi tau))^{1/4}.
    """
    tau = _check_tau(tau)
    if tau <= 0:
        raise DomainError("asymptotes need tau > 0")
    lam, alpha = params.lam, params.alpha
    rates = _Rates.of(lam)
    sgn = _sign(alpha)
    if lam > 1:
        limit = math.sqrt(1.0 - 1.0 / lam)
        pref = 1.0 / (2.0 * math.sqrt(math.pi) * lam ** 0.25 * limit * rates.kappa)

        def predicted(t):
            return sgn * (limit + pref * t ** -1.5 * math.exp(-rates.kappa * t))

        growth = math.exp(rates.kappa * tau)
        psi = abs(alpha) * limit * (bar_q(params, tau) - sgn * limit) * growth
        phi = _overlap_transient(rates, alpha, tau)
        A = alpha * tau ** -1.5 / (2.0 * math.sqrt(math.pi) * lam ** 0.25 * rates.kappa)
        return AsymptoteReport("super_critical", tau, predicted, predicted(tau), psi, phi, A)
    if lam < 1:
        a2 = alpha * alpha
        spread = 1.0 - a2 + a2 / (lam * (1.0 / rates.sqrt_lam - 1.0) ** 2)
        pref = alpha * (2.0 / math.pi) ** 0.25 / (lam ** 0.625 * rates.kappa * math.sqrt(spread))

        def predicted(t):
            return pref * t ** -0.75

        return AsymptoteReport("sub_critical", tau, predicted, predicted(tau))

    def predicted(t):
        return sgn * (2.0 / (math.pi * t)) ** 0.25

    return AsymptoteReport("critical", tau, predicted, predicted(tau))


def watson_overlap(lam: float, alpha: float, tau: float) -> float:
    """Leading large-tau form of exp(-(1+1/lam) tau) q_hat(tau) for lam < 1."""
    rates = _Rates.of(lam)
    return (alpha * tau ** -1.5 * math.exp(-rates.kappa * tau)
            / (2.0 * math.sqrt(math.pi) * lam ** 0.25 * rates.kappa))


def k_lambda(lam: float, tol: float = 1e-8) -> float:
    """Double integral of exp(-(1+1/lam)(x+y)) M_lam(x+y) over the positive quadrant.

    Truncated to [0, T]^2 with T chosen so the neglected mass is below tol.
    """
    if not lam > 1:
        raise DomainError("K_lambda is finite only for lam > 1")
    rates = _Rates.of(lam)
    kappa = rates.kappa
    T = 40.0 / kappa
    # neglected part: two strips beyond T, each bounded by the 1D tail
    tail = 2.0 * math.exp(-kappa * T) * (T / kappa + 1.0 / kappa ** 2) * m_lambda_scaled(lam, T)
    if tail > tol:
        raise ArithmeticError(f"truncation error {tail:.2e} exceeds tolerance {tol:.1e}")
    x, w = graded_rule(0.0, T, graded_levels(2 * T, finest=1e-3), order=20, both_ends=False)
    total = 0.0
    # row blocks keep the kernel matrix small for very long ranges
    for start in range(0, x.size, 256):
        xs = x[start:start + 256]
        arg = xs[:, None] + x[None, :]
        f = np.exp(-kappa * arg) * m_lambda_scaled(lam, arg)
        total += float(w[start:start + 256] @ f @ w)
    return total


def laplace_overlap(lam: float, alpha: float, p: float) -> float:
    """Closed form of int_0^inf exp(-p tau) q_hat(tau) dtau for p > 1 + 1/lam."""
    rates = _Rates.of(lam)
    if not p > rates.c:
        raise DomainError("need p > 1 + 1/lam")
    G = g_sc(complex(p * rates.sqrt_lam, 0.0)).real
    return alpha * (1.0 + G / rates.sqrt_lam) / (p - rates.c)
