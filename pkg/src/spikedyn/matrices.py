"""Wigner noise sampling, resolvent probes and local-law concentration sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import DomainError, SingularSystemError
from .ide import ContourGrid
from .semicircle import g_sc

ENSEMBLES = ("gaussian_goe", "rademacher")


def stream(*key: int) -> np.random.Generator:
    """Independent generator for an integer key such as (seed, n, trial)."""
    return np.random.default_rng(np.random.SeedSequence([int(k) & (2**64 - 1) for k in key]))


@dataclass
class NoiseInstance:
    """Symmetric noise H = xi/sqrt(n) with cached spectrum."""

    n: int
    ensemble: str
    seed: int
    matrix: np.ndarray
    _eigvals: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def eigvals(self) -> np.ndarray:
        if self._eigvals is None:
            self._eigvals = linalg.eigvalsh(self.matrix)
        return self._eigvals


def wigner_matrix(n: int, ensemble: str, rng: np.random.Generator) -> np.ndarray:
    """xi/sqrt(n) with E xi_ij^2 = 1 off the diagonal and 2 on it."""
    if ensemble == "gaussian_goe":
        a = rng.standard_normal((n, n))
        xi = (a + a.T) / math.sqrt(2.0)
    elif ensemble == "rademacher":
        a = rng.integers(0, 2, size=(n, n)).astype(float) * 2.0 - 1.0
        xi = np.triu(a, 1)
        xi = xi + xi.T
        xi[np.diag_indices(n)] = math.sqrt(2.0) * np.diag(a)
    else:
        raise DomainError(f"unknown ensemble {ensemble!r}; choose from {ENSEMBLES}")
    return xi / math.sqrt(n)


def sample_wigner(n: int, ensemble: str = "gaussian_goe", seed: int = 0) -> NoiseInstance:
    """Deterministic in (n, ensemble, seed)."""
    if n < 2:
        raise DomainError("n must be at least 2")
    tag = ENSEMBLES.index(ensemble) if ensemble in ENSEMBLES else -1
    if tag < 0:
        raise DomainError(f"unknown ensemble {ensemble!r}; choose from {ENSEMBLES}")
    H = wigner_matrix(n, ensemble, stream(seed, n, tag))
    return NoiseInstance(n, ensemble, seed, H)


def spectrum_in_interval(noise: NoiseInstance, delta: float) -> bool:
    """True iff every eigenvalue lies in [-2 - delta, 2 + delta]."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    ev = noise.eigvals
    return bool(ev[0] >= -2.0 - delta and ev[-1] <= 2.0 + delta)


def semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + x * np.sqrt(4.0 - x * x) / (4.0 * np.pi) + np.arcsin(0.5 * x) / np.pi


def ks_distance(eigvals: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance between an empirical spectrum and mu_sc."""
    ev = np.sort(np.asarray(eigvals, dtype=float))
    n = ev.size
    F = semicircle_cdf(ev)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


@dataclass(frozen=True)
class ResolventProbe:
    u: np.ndarray
    v: np.ndarray
    z: complex

    def __post_init__(self):
        for name in ("u", "v"):
            vec = getattr(self, name)
            if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
                raise DomainError(f"probe vector {name} must have unit norm")


def resolvent_element(noise: NoiseInstance, probe: ResolventProbe) -> complex:
    """<u, (H - z)^{-1} v> by a dense LU solve, with a residual check."""
    z = complex(probe.z)
    dist = np.min(np.abs(noise.eigvals - z))
    if dist < 1e-12:
        raise SingularSystemError(f"z={z} lies within 1e-12 of an eigenvalue")
    A = noise.matrix.astype(complex) - z * np.eye(noise.n)
    v = np.asarray(probe.v, dtype=complex)
    x = linalg.solve(A, v)
    resid = np.linalg.norm(A @ x - v)
    if resid > 1e-10:
        raise SingularSystemError(f"resolvent solve residual {resid:.2e} exceeds 1e-10")
    return complex(np.dot(np.asarray(probe.u, dtype=complex), x))


@dataclass
class ConcentrationReport:
    n_values: list
    sup_errors: list  # one array of per-trial sups per n
    quantiles: list  # (p10, p50, p90) per n

    def median(self, n: int) -> float:
        return self.quantiles[self.n_values.index(n)][1]


def _sup_deviation(H: np.ndarray, z: np.ndarray, pair_kind: str) -> float:
    # one eigendecomposition gives <u, R(z) v> at every contour point at once
    w, V = linalg.eigh(H)
    a = V[0]
    b = V[1] if pair_kind == "uv_orthogonal" else V[0]
    overlap = 0.0 if pair_kind == "uv_orthogonal" else 1.0
    elem = ((a * b)[None, :] / (w[None, :] - z[:, None])).sum(axis=1)
    return float(np.max(np.abs(elem - overlap * g_sc(z))))


def concentration_sweep(n_values, trials: int, contour: Optional[ContourGrid] = None,
                        pair_kind: str = "uv_equal", ensemble: str = "gaussian_goe",
                        seed: int = 0, executor=None) -> ConcentrationReport:
    """Sup over the contour of |<u,R(z)v> - <u,v> g_sc(z)| for u, v in {e1, e2}.

    Every (n, trial) pair draws its own matrix from stream(seed, n, trial), so
    results do not depend on scheduling.
    """
    if pair_kind not in ("uv_equal", "uv_orthogonal"):
        raise DomainError("pair_kind must be uv_equal or uv_orthogonal")
    if max(n_values) > 4000:
        raise DomainError("n is capped at 4000")
    contour = contour or ContourGrid(2.5, 0.4, 64)
    z = contour.points

    def one(n, t):
        H = wigner_matrix(n, ensemble, stream(seed, n, t))
        return _sup_deviation(H, z, pair_kind)

    n_values = [int(n) for n in n_values]
    sups, quants = [], []
    for n in n_values:
        if executor is None:
            vals = [one(n, t) for t in range(trials)]
        else:
            vals = list(executor.map(lambda t, n=n: one(n, t), range(trials)))
        arr = np.array(vals)
        sups.append(arr)
        quants.append(tuple(float(v) for v in np.quantile(arr, [0.1, 0.5, 0.9])))
    return ConcentrationReport(n_values, sups, quants)
