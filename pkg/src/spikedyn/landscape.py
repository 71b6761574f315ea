"""Critical points of the spherical spiked cost and their Hessian signatures."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DomainError
from .matrices import NoiseInstance


@dataclass
class LandscapeReport:
    eigvals: np.ndarray
    top_overlap: float
    max_gradient_residual: float
    top_min_hessian: float
    saddle_count: int
    degenerate: bool

    @property
    def strict_saddle(self) -> bool:
        n = self.eigvals.size
        return self.top_min_hessian >= -1e-8 and self.saddle_count == n - 1


def landscape_check(noise: NoiseInstance, lam: float, theta_star: np.ndarray,
                    tol: float = 1e-8) -> LandscapeReport:
    """Verify that every eigenvector of A = (sqrt(lam)/n) theta* theta*^T + H is critical,
    that the top one is a local minimum of -<x, A x> on the sphere and that all
    others are strict saddles.
    """
    n = noise.n
    if n > 400:
        raise DomainError("dense landscape check is limited to n <= 400")
    theta_star = np.asarray(theta_star, dtype=float)
    A = (math.sqrt(lam) / n) * np.outer(theta_star, theta_star) + noise.matrix
    w, V = linalg.eigh(A)
    degenerate = bool(np.min(np.diff(w)) < 1e-10) if n > 1 else False
    if degenerate:
        warnings.warn("eigenvalue gap below 1e-10; critical points are not isolated",
                      RuntimeWarning, stacklevel=2)
    AV = A @ V
    # covariant gradient of x -> <x, A x> at unit x is 2 (A x - <x, A x> x)
    rayleigh = np.einsum("ij,ij->j", V, AV)
    grad = 2.0 * (AV - V * rayleigh[None, :])
    max_residual = float(np.max(np.linalg.norm(grad, axis=0)))
    # Hessian of -<x, A x> restricted to the tangent space at v_i is
    # proportional to V_perp^T (a_i I - A) V_perp with V_perp spanning v_i^perp
    D = V.T @ AV
    D = 0.5 * (D + D.T)
    top = n - 1
    keep = np.arange(n) != top
    H_top = rayleigh[top] * np.eye(n - 1) - D[np.ix_(keep, keep)]
    top_min = float(linalg.eigvalsh(H_top)[0])
    saddles = 0
    for i in range(n - 1):
        # the diagonal bounds the smallest eigenvalue from above
        diag = rayleigh[i] - np.delete(np.diag(D), i)
        if diag.min() < -tol:
            saddles += 1
    overlap = abs(float(V[:, top] @ theta_star)) / math.sqrt(n)
    return LandscapeReport(w, overlap, max_residual, top_min, saddles, degenerate)
