"""Empirical robustness diagnostics: sensitivity curves, weight trajectories, fit comparisons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from robustkbr.data import Dataset
from robustkbr.errors import InvalidArgumentError, RobustKBRError
from robustkbr.evaluation import metrics
from robustkbr.irls import FitTrace

DEFAULT_GRID_SIZE = 401


@dataclass(frozen=True)
class SensitivityCurve:
    """``values = n * (f_with(grid) - f_without(grid))`` for the added point ``contaminant``."""

    grid: np.ndarray
    values: np.ndarray
    contaminant: tuple
    n: int

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.values)))

    def area(self):
        """Trapezoidal area under ``|SC|`` (1-D grids only)."""
        if self.grid.ndim != 1:
            raise InvalidArgumentError("area is defined for one-dimensional grids")
        return float(np.trapezoid(np.abs(self.values), self.grid))


class FitFailure(RobustKBRError):
    """A fit inside a diagnostic failed; ``which`` names the fit."""

    def __init__(self, which, cause):
        super().__init__(f"{which} fit failed: {cause}")
        self.which = which
        self.cause = cause


def default_grid(data: Dataset, size=DEFAULT_GRID_SIZE):
    if data.n_features != 1:
        raise InvalidArgumentError("a default grid needs one-dimensional inputs; pass grid explicitly")
    x = data.features[:, 0]
    return np.linspace(x.min(), x.max(), size)


def sensitivity_curve(train: Dataset, z, fitter, grid=None) -> SensitivityCurve:
    """Sensitivity of ``fitter`` to adding the point ``z = (z_x, z_y)`` to ``train``.

    ``fitter`` maps a :class:`Dataset` to a model with a ``predict`` method.
    The scale factor is ``n = |train| + 1``, the size of the contaminated set.
    """
    zx, zy = z
    zx = np.atleast_1d(np.asarray(zx, dtype=float)).ravel()
    if zx.shape[0] != train.n_features:
        raise InvalidArgumentError(
            f"contaminant has {zx.shape[0]} features, training data has {train.n_features}"
        )
    grid = default_grid(train) if grid is None else np.asarray(grid, dtype=float)
    with_z = train.with_point(zx, zy)

    try:
        f_with = fitter(with_z).predict(grid)
    except RobustKBRError as exc:
        raise FitFailure("contaminated (train + z)", exc) from exc
    try:
        f_without = fitter(train).predict(grid)
    except RobustKBRError as exc:
        raise FitFailure("clean (train only)", exc) from exc

    n = train.n_samples + 1
    values = n * (np.asarray(f_with) - np.asarray(f_without))
    if not np.all(np.isfinite(values)):
        raise FitFailure("sensitivity", "non-finite curve values")
    point = (float(zx[0]) if zx.size == 1 else tuple(float(t) for t in zx), float(zy))
    return SensitivityCurve(grid, values, point, n)


def outlier_sensitivity(data: Dataset, index, fitter, grid=None) -> SensitivityCurve:
    """Sensitivity curve of the sample ``index`` of ``data`` against the rest."""
    if not 0 <= index < data.n_samples:
        raise InvalidArgumentError(f"index {index} out of range for {data.n_samples} samples")
    rest = data.subset([i for i in range(data.n_samples) if i != index])
    x = data.features[index]
    return sensitivity_curve(rest, (x, data.targets[index]), fitter,
                             default_grid(data) if grid is None else grid)


def weight_trajectory(trace: FitTrace, indices) -> dict:
    """Map each index to its weight ``v(xi_i^(k))`` at every iterate ``k = 0..n_iter``."""
    W = trace.weights
    n = W.shape[1]
    out = {}
    for i in indices:
        if int(i) != i or not 0 <= i < n:
            raise InvalidArgumentError(f"index {i} out of range for {n} samples")
        out[int(i)] = W[:, int(i)].copy()
    return out


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    rmse: float
    mae: float
    mre: float


def compare_fits(models, test: Dataset):
    """One row of test metrics per ``(label, model)`` pair."""
    rows = []
    for label, model in models:
        m = metrics(test.targets, model.predict(test.features))
        rows.append(ComparisonRow(str(label), m.rmse, m.mae, m.mre))
    return rows
