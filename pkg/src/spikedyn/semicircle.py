"""Semicircle law: density, Stieltjes transform, moment generating function.

The moment generating function reduces to a modified Bessel function,

    M_lam(tau) = int mu_sc(s) exp(s tau / sqrt(lam)) ds = (sqrt(lam)/tau) I_1(2 tau / sqrt(lam)),

and it grows like exp(2 tau / sqrt(lam)). Downstream code only ever needs the
scaled form exp(-2 tau / sqrt(lam)) M_lam(tau), which lies in (0, 1].
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .quadrature import QuadratureRule, gauss_legendre

# Largest x for which exp(x) is representable in double precision.
_EXP_MAX = 709.78

# Power series and asymptotic expansion switch over at this argument.
_SERIES_CUTOFF = 15.0
_SERIES_TERMS = 40
_ASYMPTOTIC_TERMS = 40


def mu_sc(s):
    """Semicircle density (1/2pi) sqrt(4 - s^2) on [-2, 2], zero elsewhere."""
    s = np.asarray(s, dtype=float)
    out = np.sqrt(np.clip(4.0 - s * s, 0.0, None)) / (2.0 * np.pi)
    return out if out.ndim else float(out)


def semicircle_rule(num_nodes: int = 512) -> QuadratureRule:
    """Rule for int f(s) mu_sc(s) ds after the substitution s = 2 cos(theta).

    The returned nodes are the s values, the weights already include the
    density (2/pi) sin^2(theta), so the endpoint square roots never appear.
    """
    base = gauss_legendre(num_nodes, 0.0, np.pi)
    theta = base.nodes
    return QuadratureRule(2.0 * np.cos(theta), base.weights * (2.0 / np.pi) * np.sin(theta) ** 2)


def semicircle_expectation(f, num_nodes: int = 512) -> float:
    """int f(s) mu_sc(s) ds via the cosine substitution."""
    return semicircle_rule(num_nodes).integrate(f)


def g_sc(z):
    """Stieltjes transform int mu_sc(s)/(s - z) ds = (-z + sqrt(z-2) sqrt(z+2))/2.

    The product of principal square roots picks the branch with
    Im g > 0 on the upper half plane and g ~ -1/z at infinity. Real
    arguments strictly inside (-2, 2) lie on the cut and raise DomainError;
    the end points are allowed since the transform extends continuously there.
    """
    z_arr = np.asarray(z, dtype=complex)
    on_cut = (z_arr.imag == 0.0) & (np.abs(z_arr.real) < 2.0)
    if np.any(on_cut):
        raise DomainError("g_sc is undefined on the open support (-2, 2)")
    # (-z + w)/2 rewritten as -2/(z + w), w = sqrt(z-2) sqrt(z+2); the sum
    # z + w never cancels on this branch, so large |z| stays accurate.
    w = np.sqrt(z_arr - 2.0) * np.sqrt(z_arr + 2.0)
    out = -2.0 / (z_arr + w)
    return out if out.ndim else complex(out)


def _bessel_series_scaled(nu: int, x: np.ndarray) -> np.ndarray:
    # sum_k (x/2)^(2k+nu) / (k! (k+nu)!), multiplied by exp(-x)
    y = 0.25 * x * x
    term = (0.5 * x) ** nu / math.factorial(nu)
    total = term.copy()
    for k in range(1, _SERIES_TERMS):
        term = term * y / (k * (k + nu))
        total += term
    return total * np.exp(-x)


def _bessel_asymptotic_scaled(nu: int, x: np.ndarray) -> np.ndarray:
    # exp(-x) I_nu(x) ~ (2 pi x)^(-1/2) sum_k (-1)^k a_k(nu) / x^k
    # Terms shrink faster for larger x, so the cut-off picked at min(x)
    # (first growing or negligible term) is valid for every entry.
    mu = 4.0 * nu * nu
    x_min = float(np.min(x))
    term_min = 1.0
    factors = []
    for k in range(1, _ASYMPTOTIC_TERMS):
        factor = -(mu - (2 * k - 1) ** 2) / (8.0 * k)
        nxt = term_min * factor / x_min
        if abs(nxt) >= abs(term_min) or abs(nxt) <= 1e-17:
            break
        factors.append(factor)
        term_min = nxt
    inv = 1.0 / x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for factor in factors:
        term = term * (factor * inv)
        total += term
    return total / np.sqrt(2.0 * np.pi * x)


def bessel_i_scaled(nu: int, x):
    """exp(-x) I_nu(x) for nu in {0, 1} and x >= 0. Never overflows."""
    if nu not in (0, 1):
        raise DomainError("only orders 0 and 1 are provided")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or not np.all(np.isfinite(x_arr)):
        raise DomainError("argument must be finite and non-negative")
    flat = x_arr.ravel()
    out = np.empty_like(flat)
    small = flat < _SERIES_CUTOFF
    if small.any():
        out[small] = _bessel_series_scaled(nu, flat[small])
    if (~small).any():
        out[~small] = _bessel_asymptotic_scaled(nu, flat[~small])
    out = out.reshape(x_arr.shape)
    return out if out.ndim else float(out)


def bessel_i0e(x):
    """exp(-x) I_0(x)."""
    return bessel_i_scaled(0, x)


def bessel_i1e(x):
    """exp(-x) I_1(x)."""
    return bessel_i_scaled(1, x)


def bessel_i1(x):
    """I_1(x). Raises OverflowError once the value leaves double range."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr > _EXP_MAX):
        raise OverflowError("I_1(x) overflows for x > 709.78; use bessel_i1e")
    out = bessel_i1e(x_arr) * np.exp(x_arr)
    return out if np.ndim(out) else float(out)


def m_lambda_scaled(lam: float, tau):
    """exp(-2 tau/sqrt(lam)) M_lam(tau), bounded in (0, 1].

    Near tau = 0 the ratio 2 I_1(y)/y is summed directly from its series,
    so no division by a small argument takes place.
    """
    if lam <= 0:
        raise DomainError("lambda must be positive")
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise DomainError("tau must be non-negative")
    y = 2.0 * tau_arr / math.sqrt(lam)
    flat = y.ravel()
    out = np.empty_like(flat)
    small = flat < _SERIES_CUTOFF
    if small.any():
        ys = flat[small]
        q = 0.25 * ys * ys
        term = np.ones_like(ys)
        total = np.ones_like(ys)
        for k in range(1, _SERIES_TERMS):
            term = term * q / (k * (k + 1))
            total += term
        out[small] = total * np.exp(-ys)
    if (~small).any():
        yl = flat[~small]
        out[~small] = 2.0 * _bessel_asymptotic_scaled(1, yl) / yl
    out = out.reshape(y.shape)
    return out if out.ndim else float(out)


def m_lambda(lam: float, tau):
    """M_lam(tau) = (sqrt(lam)/tau) I_1(2 tau/sqrt(lam)); M_lam(0) = 1."""
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(2.0 * tau_arr / math.sqrt(lam) > _EXP_MAX):
        raise OverflowError("M_lambda overflows here; use m_lambda_scaled")
    out = m_lambda_scaled(lam, tau_arr) * np.exp(2.0 * tau_arr / math.sqrt(lam))
    return out if np.ndim(out) else float(out)


def m_lambda_quadrature(lam: float, tau: float, num_nodes: int = 512) -> float:
    """M_lam(tau) by direct quadrature of int mu_sc(s) exp(s tau/sqrt(lam)) ds."""
    if lam <= 0 or tau < 0:
        raise DomainError("need lambda > 0 and tau >= 0")
    a = tau / math.sqrt(lam)
    return semicircle_expectation(lambda s: np.exp(a * s), num_nodes)


def laplace_m_lambda(lam: float, p: float) -> float:
    """int_0^inf exp(-p tau) M_lam(tau) dtau = -sqrt(lam) g_sc(p sqrt(lam))."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    edge = 2.0 / math.sqrt(lam)
    if not p > edge:
        raise DomainError(f"Laplace transform of M_lambda needs p > {edge}")
    # p sqrt(lam) can round to just below 2 when p is within an ulp of the edge
    z = max(p * math.sqrt(lam), 2.0)
    return float((-math.sqrt(lam) * g_sc(complex(z, 0.0))).real)
