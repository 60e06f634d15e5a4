from types import SimpleNamespace

import numpy as np
import pytest

from robustkbr.errors import InvalidArgumentError, NumericalFailureError
from robustkbr.irls import (
    WEIGHT_CEILING, IrlsConfig, StopReason, regularized_risk, run, sample_weights,
)
from robustkbr.weights import Family, WeightSpec


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        IrlsConfig(max_iter=0)
    with pytest.raises(InvalidArgumentError):
        IrlsConfig(tol=0.0)
    with pytest.raises(ValueError):
        IrlsConfig(init="random")


def test_config_round_trip():
    d = IrlsConfig(max_iter=7, init="zero").to_dict()
    assert d["max_iter"] == 7 and d["init"] == "zero"
    assert d["weight_spec"]["family"] == "sigmoid"


def test_laplace_weights_capped():
    w = sample_weights(WeightSpec(Family.LAPLACE), np.array([0.0, 1e-12, 1.0]))
    assert w[0] == WEIGHT_CEILING and w[1] == WEIGHT_CEILING and w[2] == 0.5


def test_risk_formula():
    spec = WeightSpec.gauss()
    r = np.array([1.0, -2.0])
    assert regularized_risk(spec, r, sq_norm=3.0, C=0.5) == pytest.approx(3.0 / 1.0 + 2.5)


def _scalar_problem(solution):
    """Toy driver: 'solve' ignores weights and returns a fixed sequence of parameters."""
    it = iter(solution)
    return dict(
        fitted=lambda th: np.zeros(2),
        sq_norm=lambda th: float(th.coef @ th.coef),
        solve=lambda v: SimpleNamespace(coef=np.asarray(next(it), float)),
    )


def test_stops_on_tolerance():
    prob = _scalar_problem([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    theta, trace = run(np.ones(2), 1.0, IrlsConfig(max_iter=10, tol=1e-6),
                       SimpleNamespace(coef=np.zeros(2)), **prob)
    assert trace.reason is StopReason.CONVERGED
    assert trace.n_iter == 2
    np.testing.assert_array_equal(trace.deltas, [1.0, 0.0])
    assert len(trace.risks) == 3


def test_non_finite_step_aborts():
    prob = _scalar_problem([[np.nan, 0.0]])
    with pytest.raises(NumericalFailureError):
        run(np.ones(2), 1.0, IrlsConfig(), SimpleNamespace(coef=np.zeros(2)), **prob)
