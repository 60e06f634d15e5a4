"""Regularized extreme learning machine and its IRLS variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import expit

from robustkbr import irls
from robustkbr.data import Dataset
from robustkbr.errors import InvalidArgumentError, NumericalFailureError
from robustkbr.irls import Init, IrlsConfig
from robustkbr.kernel import as_matrix

ACTIVATIONS = ("logistic",)


@dataclass(frozen=True)
class ElmModel:
    """Single-hidden-layer network with frozen random hidden parameters.

    ``hidden_weights`` is L x n (one row per hidden node), ``hidden_biases``
    has length L and ``beta`` holds the trained output weights.
    """

    hidden_weights: np.ndarray
    hidden_biases: np.ndarray
    beta: np.ndarray
    C: float
    seed: int
    activation: str = "logistic"

    @property
    def coef(self):
        return self.beta

    @property
    def n_hidden(self):
        return self.hidden_weights.shape[0]

    def predict(self, X):
        return predict_elm(self, X)


def init_hidden(L, n, seed):
    """Hidden-layer parameters drawn i.i.d. uniform on ``[-1, 1]``.

    Uses ``numpy.random.default_rng(seed)``; weights (L x n) are drawn first,
    then the L biases.
    """
    if int(L) != L or L < 1 or int(n) != n or n < 1:
        raise InvalidArgumentError("L and n must be positive integers")
    rng = np.random.default_rng(seed)
    W = rng.uniform(-1.0, 1.0, size=(int(L), int(n)))
    b = rng.uniform(-1.0, 1.0, size=int(L))
    return W, b


def hidden_output(params, X):
    """H with ``H[i, j] = sigmoid(a_j . x_i + b_j)``.

    ``params`` is an :class:`ElmModel` or a ``(hidden_weights, hidden_biases)`` pair.
    """
    if isinstance(params, ElmModel):
        W, b = params.hidden_weights, params.hidden_biases
    else:
        W, b = params
    W = np.atleast_2d(np.asarray(W, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    X = as_matrix(X)
    if X.shape[1] != W.shape[1]:
        raise InvalidArgumentError(f"expected {W.shape[1]} features, got {X.shape[1]}")
    return expit(X @ W.T + b)


def solve_output_weights(H, Y, d, C):
    """Minimize ``||beta||^2 / 2 + (C / 2) sum_i d_i (y_i - h_i beta)^2``.

    For N >= L this is ``(I/C + H^T D H) beta = H^T D Y``.  For N < L the
    equivalent dual form ``beta = H^T (D^{-1}/C + H H^T)^{-1} Y`` is used, which
    is ``H^T (I/C + D H H^T)^{-1} D Y`` rearranged into a symmetric system.
    Both are solved by Cholesky.
    """
    H = np.asarray(H, dtype=float)
    Y = np.asarray(Y, dtype=float).ravel()
    d = np.asarray(d, dtype=float).ravel()
    N, L = H.shape
    if Y.shape[0] != N or d.shape[0] != N:
        raise InvalidArgumentError("H, Y and weights disagree in length")
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise InvalidArgumentError("sample weights must be finite and > 0")
    try:
        if N < L:
            A = H @ H.T
            A[np.diag_indices(N)] += 1.0 / (C * d)
            u = cho_solve(cho_factor(A, lower=True, check_finite=False), Y, check_finite=False)
            beta = H.T @ u
        else:
            A = H.T @ (d[:, None] * H)
            A[np.diag_indices(L)] += 1.0 / C
            beta = cho_solve(cho_factor(A, lower=True, check_finite=False), H.T @ (d * Y),
                             check_finite=False)
    except LinAlgError as exc:
        raise NumericalFailureError(f"ELM output-weight factorization failed (N={N}, L={L}): {exc}") from exc
    if not np.all(np.isfinite(beta)):
        raise NumericalFailureError("ELM output weights are not finite")
    return beta


def _validate(data, C, L):
    if not (np.isfinite(C) and C > 0):
        raise InvalidArgumentError(f"C must be finite and > 0, got {C}")
    if int(L) != L or L < 1:
        raise InvalidArgumentError("L must be a positive integer")


def fit_elm(data: Dataset, C, L, seed=0) -> ElmModel:
    """Regularized ELM (unit sample weights)."""
    _validate(data, C, L)
    W, b = init_hidden(L, data.n_features, seed)
    H = hidden_output((W, b), data.features)
    beta = solve_output_weights(H, data.targets, np.ones(data.n_samples), C)
    return ElmModel(W, b, beta, float(C), int(seed))


def fit_irls_elm(data: Dataset, C, L, seed=0, cfg: IrlsConfig | None = None):
    """IRLS-ELM: reweight the output-weight solve with ``D = diag(v(xi))``.

    Returns ``(model, trace)``.
    """
    cfg = cfg or IrlsConfig()
    _validate(data, C, L)
    y = data.targets
    W, b = init_hidden(L, data.n_features, seed)
    H = hidden_output((W, b), data.features)

    def make(beta):
        return ElmModel(W, b, beta, float(C), int(seed))

    if cfg.init is Init.UNWEIGHTED:
        start = make(solve_output_weights(H, y, np.ones(data.n_samples), C))
    else:
        start = make(np.zeros(H.shape[1]))

    return irls.run(
        y, C, cfg, start,
        fitted=lambda m: H @ m.beta,
        sq_norm=lambda m: float(m.beta @ m.beta),
        solve=lambda v: make(solve_output_weights(H, y, v, C)),
    )


def predict_elm(model: ElmModel, X):
    return hidden_output(model, X) @ model.beta
