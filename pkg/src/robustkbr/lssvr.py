"""Least-squares support vector regression and its IRLS variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from robustkbr import irls
from robustkbr.data import Dataset
from robustkbr.errors import InvalidArgumentError, NumericalFailureError
from robustkbr.irls import FitTrace, Init, IrlsConfig
from robustkbr.kernel import KernelSpec, as_matrix, cross, gram
from robustkbr.weights import WeightSpec


@dataclass(frozen=True)
class SvrModel:
    """Dual-form LS-SVR model ``f(x) = sum_i alpha_i k(x, x_i) + bias``."""

    train_inputs: np.ndarray
    alpha: np.ndarray
    bias: float
    kernel: KernelSpec
    C: float

    @property
    def coef(self):
        return self.alpha

    def predict(self, X):
        return predict_svr(self, X)


def _check_C(C):
    if not (np.isfinite(C) and C > 0):
        raise InvalidArgumentError(f"C must be finite and > 0, got {C}")


def solve_weighted_system(K, Y, Vdiag):
    """Solve the bordered LS-SVR system ``[[0, 1^T], [1, K + diag(Vdiag)]] [b; alpha] = [0; Y]``.

    The bias row is eliminated against the symmetric positive-definite block
    ``A = K + diag(Vdiag)``: with ``A eta = 1`` and ``A nu = Y``,
    ``b = 1^T nu / 1^T eta`` and ``alpha = nu - b eta``.  One Cholesky factorization
    serves both right-hand sides.

    Returns ``(alpha, bias)``.
    """
    K = np.asarray(K, dtype=float)
    Y = np.asarray(Y, dtype=float).ravel()
    Vdiag = np.asarray(Vdiag, dtype=float).ravel()
    n = Y.shape[0]
    if K.shape != (n, n) or Vdiag.shape != (n,):
        raise InvalidArgumentError(f"shape mismatch: K {K.shape}, Y {Y.shape}, Vdiag {Vdiag.shape}")
    if not np.all(np.isfinite(Vdiag)) or np.any(Vdiag <= 0):
        raise InvalidArgumentError("Vdiag entries must be finite and > 0")

    A = K.copy()
    A[np.diag_indices(n)] += Vdiag
    try:
        factor = cho_factor(A, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise NumericalFailureError(
            f"K + V is not numerically positive definite (N={n}, min Vdiag={Vdiag.min():.3e}): {exc}"
        ) from exc
    rhs = np.column_stack([np.ones(n), Y])
    sol = cho_solve(factor, rhs, check_finite=False)
    eta, nu = sol[:, 0], sol[:, 1]
    bias = nu.sum() / eta.sum()
    alpha = nu - bias * eta

    resid = np.concatenate([[alpha.sum()], bias + A @ alpha - Y])
    scale = np.linalg.norm(Y) + np.abs(A).max() * np.abs(alpha).sum() + abs(bias)
    if not np.all(np.isfinite(resid)) or np.linalg.norm(resid) > 1e-6 * max(scale, 1e-300):
        raise NumericalFailureError(
            f"bordered solve inaccurate: residual {np.linalg.norm(resid):.3e}, "
            f"min Vdiag {Vdiag.min():.3e}, N={n}"
        )
    return alpha, float(bias)


def _validate(data: Dataset, C):
    _check_C(C)
    if data.n_samples < 2:
        raise InvalidArgumentError("LS-SVR needs at least two samples")


def fit_lssvr(data: Dataset, C, kernel: KernelSpec) -> SvrModel:
    """Plain LS-SVR: the bordered system with ``V = I / C``."""
    _validate(data, C)
    K = gram(data.features, kernel)
    alpha, bias = solve_weighted_system(K, data.targets, np.full(data.n_samples, 1.0 / C))
    return SvrModel(data.features.copy(), alpha, bias, kernel, float(C))


def fit_irls_svr(data: Dataset, C, kernel: KernelSpec, cfg: IrlsConfig | None = None):
    """IRLS-SVR.

    Each step recomputes the training residuals ``xi``, sets
    ``Vdiag_i = 1 / (C v(xi_i))`` and re-solves the bordered system.  Stops when
    ``||alpha_k - alpha_{k+1}||^2 < cfg.tol`` or after ``cfg.max_iter`` solves.

    Returns ``(model, trace)``.
    """
    cfg = cfg or IrlsConfig()
    _validate(data, C)
    X, y = data.features, data.targets
    K = gram(X, kernel)
    n = data.n_samples

    def make(alpha, bias):
        return SvrModel(X.copy(), alpha, bias, kernel, float(C))

    if cfg.init is Init.UNWEIGHTED:
        start = make(*solve_weighted_system(K, y, np.full(n, 1.0 / C)))
    else:
        start = make(np.zeros(n), 0.0)

    def solve(v):
        return make(*solve_weighted_system(K, y, 1.0 / (C * v)))

    return irls.run(
        y, C, cfg, start,
        fitted=lambda m: K @ m.alpha + m.bias,
        sq_norm=lambda m: float(m.alpha @ K @ m.alpha),
        solve=solve,
    )


def predict_svr(model: SvrModel, X):
    X = as_matrix(X)
    if X.shape[1] != model.train_inputs.shape[1]:
        raise InvalidArgumentError(
            f"expected {model.train_inputs.shape[1]} features, got {X.shape[1]}"
        )
    return cross(X, model.train_inputs, model.kernel) @ model.alpha + model.bias


def kkt_residual(model: SvrModel, data: Dataset, weight_spec: WeightSpec):
    """``max_i |alpha_i - C v(xi_i) xi_i|`` at the model's own residuals.

    Zero exactly at a self-consistent fixed point of the reweighting.
    """
    xi = data.targets - predict_svr(model, data.features)
    v = irls.sample_weights(weight_spec, xi)
    return float(np.max(np.abs(model.alpha - model.C * v * xi)))


__all__ = [
    "SvrModel",
    "FitTrace",
    "IrlsConfig",
    "solve_weighted_system",
    "fit_lssvr",
    "fit_irls_svr",
    "predict_svr",
    "kkt_residual",
]
