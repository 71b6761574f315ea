"""Projected gradient descent on the sphere of radius sqrt(n) for the spiked model.

Time is measured in tau units, which corresponds to a learning rate eta = n.
One step moves along the unprojected gradient and then rescales back onto
the sphere:

    theta'  = theta + dt (q theta_star + H theta / sqrt(lam))      (= theta + dt Y theta / n)
    theta'' = sqrt(n) theta' / ||theta'||
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DivergenceError, DomainError
from .matrices import ENSEMBLES, stream, wigner_matrix


@dataclass(frozen=True)
class SimConfig:
    n: int = 1000
    lam: float = 2.0
    alpha: float = 0.1
    dt: float = 0.1
    steps: int = 100
    runs: int = 100
    ensemble: str = "gaussian_goe"
    base_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("n must be at least 2")
        if not self.lam > 0:
            raise DomainError("lambda must be positive")
        if not abs(self.alpha) <= 1:
            raise DomainError("alpha must lie in [-1, 1]")
        if not self.dt > 0 or self.steps < 0 or self.runs < 1:
            raise DomainError("need dt > 0, steps >= 0 and runs >= 1")
        if self.ensemble not in ENSEMBLES:
            raise DomainError(f"unknown ensemble {self.ensemble!r}")

    @property
    def tau_max(self) -> float:
        return self.dt * self.steps


@dataclass
class RunTrace:
    tau: np.ndarray
    q: np.ndarray
    p1: np.ndarray
    cost: np.ndarray
    mse: np.ndarray
    norm_drift: float


@dataclass
class EnsembleStats:
    tau: np.ndarray
    q_quantiles: tuple
    cost_quantiles: tuple
    p1_quantiles: tuple


def init_vectors(n: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """theta0 = sqrt(n)(alpha e1 + sqrt(1 - alpha^2) e2) and theta_star = sqrt(n) e1."""
    if not abs(alpha) <= 1:
        raise DomainError("alpha must lie in [-1, 1]")
    if n < 2:
        raise DomainError("n must be at least 2")
    root = math.sqrt(n)
    theta0 = np.zeros(n)
    theta0[0] = root * alpha
    theta0[1] = root * math.sqrt(1.0 - alpha * alpha)
    star = np.zeros(n)
    star[0] = root
    return theta0, star


def gd_step(theta: np.ndarray, Y_apply: Callable[[np.ndarray], np.ndarray],
            n: int, dt: float) -> np.ndarray:
    """One gradient step of size dt (tau units) followed by projection.

    Y_apply must return Y theta / n, i.e. q theta_star + H theta / sqrt(lam).
    """
    moved = theta + dt * Y_apply(theta)
    norm = np.linalg.norm(moved)
    if norm == 0.0:
        raise DivergenceError("gradient step produced the zero vector")
    return (math.sqrt(n) / norm) * moved


def simulate_run(config: SimConfig, run_index: int) -> RunTrace:
    n, sl = config.n, math.sqrt(config.lam)
    H = wigner_matrix(n, config.ensemble,
                      stream(config.base_seed, run_index, ENSEMBLES.index(config.ensemble)))
    theta, star = init_vectors(n, config.alpha)
    star_H_star = float(star @ H @ star) / n
    base = 1.0 + star_H_star / sl

    def Y_apply(th):
        return (star @ th / n) * star + (H @ th) / sl

    steps = config.steps
    q = np.empty(steps + 1)
    p1 = np.empty(steps + 1)
    mse = np.empty(steps + 1)
    drift = 0.0
    for k in range(steps + 1):
        if k:
            theta = gd_step(theta, Y_apply, n, config.dt)
        q[k] = star @ theta / n
        p1[k] = theta @ (H @ theta) / n
        diff = theta - star
        mse[k] = diff @ diff / n
        drift = max(drift, abs(theta @ theta / n - 1.0))
        if not (np.isfinite(q[k]) and np.isfinite(p1[k])):
            raise DivergenceError(f"non-finite state at step {k}")
    cost = base - (q * q + p1 / sl)
    tau = config.dt * np.arange(steps + 1)
    return RunTrace(tau, q, p1, cost, mse, drift)


def _quantiles(rows: np.ndarray) -> tuple:
    p10, p50, p90 = np.quantile(rows, [0.1, 0.5, 0.9], axis=0)
    return p10, p50, p90


def ensemble(config: SimConfig, threads: Optional[int] = None,
             return_runs: bool = False):
    """Pointwise p10/p50/p90 of q, cost and p1 over runs 0..runs-1."""
    if config.runs < 2:
        raise DomainError("an ensemble needs at least two runs")
    threads = threads or os.cpu_count() or 1
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            traces = list(pool.map(lambda i: simulate_run(config, i), range(config.runs)))
    else:
        traces = [simulate_run(config, i) for i in range(config.runs)]
    q = np.array([t.q for t in traces])
    cost = np.array([t.cost for t in traces])
    p1 = np.array([t.p1 for t in traces])
    stats = EnsembleStats(traces[0].tau, _quantiles(q), _quantiles(cost), _quantiles(p1))
    return (stats, traces) if return_runs else stats
