"""Iteratively reweighted least squares driver shared by the SVR and ELM fitters.

Each iteration takes the residuals of the current model, turns them into
per-sample weights ``v(xi)`` and solves one weighted least-squares problem.
The driver records an audit trail (:class:`FitTrace`) including the
regularized risk

    R = ||w||^2 / (N C) + mean(rho(xi))

whose monotone decrease is the descent property of the iteration: the weighted
step minimizes a quadratic majorizer of ``R`` whenever ``v`` is non-increasing
in ``|xi|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from robustkbr.errors import InvalidArgumentError, NumericalFailureError
from robustkbr.weights import WeightSpec, loss, weight

# Upper clamp on sample weights.  Only the Laplace family reaches it (v -> inf
# at zero residual); everything else is bounded well below.
WEIGHT_CEILING = 1e8


class Init(str, Enum):
    UNWEIGHTED = "unweighted"
    ZERO = "zero"


class StopReason(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class IrlsConfig:
    """Iteration controls.

    ``max_iter`` bounds the number of reweighted solves; the loop stops early
    once the squared change of the coefficient vector drops below ``tol``.
    ``init="unweighted"`` starts from the ordinary (unit-weight) solution,
    ``init="zero"`` from the all-zero model.
    """

    max_iter: int = 50
    tol: float = 1e-6
    weight_spec: WeightSpec = field(default_factory=lambda: WeightSpec.sigmoid(1.0))
    init: Init = Init.UNWEIGHTED

    def __post_init__(self):
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidArgumentError("max_iter must be a positive integer")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise InvalidArgumentError("tol must be finite and > 0")
        object.__setattr__(self, "init", Init(self.init))

    def to_dict(self):
        return {"max_iter": self.max_iter, "tol": self.tol,
                "weight_spec": self.weight_spec.to_dict(), "init": self.init.value}


@dataclass(frozen=True)
class IterationRecord:
    residuals: np.ndarray  # xi^(k), residuals of the model entering step k
    weights: np.ndarray  # v(xi^(k)) as used by the solve
    risk: float  # R of the model entering step k
    delta: float  # ||theta_{k+1} - theta_k||^2


@dataclass(frozen=True)
class FitTrace:
    records: tuple
    final_residuals: np.ndarray
    final_weights: np.ndarray
    final_risk: float
    reason: StopReason

    @property
    def n_iter(self):
        return len(self.records)

    @property
    def risks(self):
        """Risk before every step followed by the risk of the returned model."""
        return np.array([r.risk for r in self.records] + [self.final_risk])

    @property
    def weights(self):
        """(n_iter + 1) x N matrix: weights at every iterate including the final one."""
        return np.vstack([r.weights for r in self.records] + [self.final_weights])

    @property
    def deltas(self):
        return np.array([r.delta for r in self.records])


def sample_weights(spec: WeightSpec, residuals):
    return np.minimum(weight(spec, residuals), WEIGHT_CEILING)


def regularized_risk(spec: WeightSpec, residuals, sq_norm, C):
    n = residuals.shape[0]
    return float(sq_norm / (n * C) + np.mean(loss(spec, residuals)))


def run(y, C, cfg: IrlsConfig, theta0, fitted, sq_norm, solve):
    """Drive the reweighting loop.

    Parameters
    ----------
    y : targets.
    theta0 : starting parameter vector (what the stopping rule differences).
    fitted : ``theta -> predictions on the training inputs``.
    sq_norm : ``theta -> ||w||^2`` of the model.
    solve : ``weights -> theta`` for one weighted least-squares problem.

    Returns ``(theta, trace)``.
    """
    spec = cfg.weight_spec
    theta = theta0
    xi = y - fitted(theta)
    records = []
    reason = StopReason.MAX_ITER
    for _ in range(cfg.max_iter):
        v = sample_weights(spec, xi)
        risk = regularized_risk(spec, xi, sq_norm(theta), C)
        new = solve(v)
        delta = float(np.sum((new.coef - theta.coef) ** 2))
        if not math.isfinite(delta):
            raise NumericalFailureError(
                f"IRLS step {len(records)} produced non-finite coefficients"
            )
        records.append(IterationRecord(xi, v, risk, delta))
        theta = new
        xi = y - fitted(theta)
        if delta < cfg.tol:
            reason = StopReason.CONVERGED
            break
    trace = FitTrace(
        records=tuple(records),
        final_residuals=xi,
        final_weights=sample_weights(spec, xi),
        final_risk=regularized_risk(spec, xi, sq_norm(theta), C),
        reason=reason,
    )
    return theta, trace
