"""Gaussian (RBF) kernel matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from robustkbr.errors import InvalidArgumentError


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel ``k(x, x') = exp(-gamma * ||x - x'||^2)``.

    ``gamma`` relates to the bandwidth by ``gamma = 1 / (2 sigma^2)``.
    """

    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidArgumentError(f"gamma must be finite and > 0, got {self.gamma}")

    @classmethod
    def from_sigma(cls, sigma):
        return cls(1.0 / (2.0 * sigma * sigma))


def as_matrix(X, name="X"):
    """Return ``X`` as a finite 2-D float array; 1-D input is one feature per row."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return arr


def _sq_dists(A, B):
    # per-pair differences: exact zeros on coincident rows, exact symmetry
    return cdist(A, B, "sqeuclidean")


def gram(X, spec: KernelSpec) -> np.ndarray:
    """Symmetric N x N kernel matrix of the rows of ``X``."""
    X = as_matrix(X)
    if X.shape[0] < 1:
        raise InvalidArgumentError("X must have at least one row")
    return np.exp(-spec.gamma * _sq_dists(X, X))


def cross(Xa, Xb, spec: KernelSpec) -> np.ndarray:
    """M x N matrix with entries ``exp(-gamma ||Xa_i - Xb_j||^2)``."""
    Xa = as_matrix(Xa, "Xa")
    Xb = as_matrix(Xb, "Xb")
    if Xa.shape[1] != Xb.shape[1]:
        raise InvalidArgumentError(
            f"feature dimension mismatch: {Xa.shape[1]} vs {Xb.shape[1]}"
        )
    return np.exp(-spec.gamma * _sq_dists(Xa, Xb))
