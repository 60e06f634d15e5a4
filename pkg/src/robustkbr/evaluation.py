"""Error metrics, k-fold cross-validation and grid search."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from robustkbr.data import Dataset, fit_scaler, inject_outliers
from robustkbr.elm import fit_elm, fit_irls_elm
from robustkbr.errors import InvalidArgumentError, RobustKBRError
from robustkbr.irls import IrlsConfig
from robustkbr.kernel import KernelSpec
from robustkbr.lssvr import fit_irls_svr, fit_lssvr
from robustkbr.weights import Family, WeightSpec

MRE_ZERO_TOL = 1e-12


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricSet:
    rmse: float
    mae: float
    mre: float
    mre_excluded_count: int

    def as_tuple(self):
        return (self.rmse, self.mae, self.mre)


def metrics(y_true, y_pred) -> MetricSet:
    """RMSE, MAE and MRE; MRE skips targets with ``|y| <= 1e-12`` and reports how many."""
    y = np.asarray(y_true, dtype=float).ravel()
    p = np.asarray(y_pred, dtype=float).ravel()
    if y.shape != p.shape:
        raise InvalidArgumentError(f"length mismatch: {y.size} targets vs {p.size} predictions")
    if y.size == 0:
        raise InvalidArgumentError("metrics need at least one sample")
    err = y - p
    rmse = math.sqrt(float(np.mean(err * err)))
    mae = float(np.mean(np.abs(err)))
    keep = np.abs(y) > MRE_ZERO_TOL
    mre = float(np.mean(np.abs(err[keep] / y[keep]))) if keep.any() else 0.0
    # guard against rounding putting rmse a hair under mae
    return MetricSet(max(rmse, mae), mae, mre, int(y.size - keep.sum()))


# ---------------------------------------------------------------------------
# model configurations
# ---------------------------------------------------------------------------

MODEL_KINDS = ("lssvr", "wlssvr", "irls-svr", "elm", "welm", "irls-elm")
_SVR_KINDS = ("lssvr", "wlssvr", "irls-svr")


@dataclass(frozen=True)
class FitterConfig:
    """Everything needed to fit one model deterministically.

    ``wlssvr`` and ``welm`` are the single-pass weighted baselines: one
    reweighted solve started from the unweighted fit.  ELM hidden size is
    ``hidden`` if given, otherwise ``round(hidden_frac * N_train)`` (at least 1).
    """

    kind: str
    C: float = 1.0
    gamma: float = 1.0
    lam: float = 1.0
    hidden: int | None = None
    hidden_frac: float = 0.2
    seed: int = 0
    max_iter: int = 50
    tol: float = 1e-6
    family: str = "sigmoid"
    family_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidArgumentError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if not (0 < self.hidden_frac <= 1):
            raise InvalidArgumentError("hidden_frac must lie in (0, 1]")

    @property
    def is_svr(self):
        return self.kind in _SVR_KINDS

    def weight_spec(self):
        if Family(self.family) is Family.SIGMOID:
            return WeightSpec(Family.SIGMOID, dict(self.family_params, lam=self.lam))
        return WeightSpec(Family(self.family), dict(self.family_params))

    def irls_config(self):
        single = self.kind in ("wlssvr", "welm")
        return IrlsConfig(max_iter=1 if single else self.max_iter, tol=self.tol,
                          weight_spec=self.weight_spec())

    def n_hidden(self, n_train):
        if self.hidden is not None:
            return int(self.hidden)
        return max(1, int(math.floor(self.hidden_frac * n_train + 0.5)))

    def fit_with_trace(self, data: Dataset):
        """Returns ``(model, trace)``; ``trace`` is ``None`` for unweighted kinds."""
        if self.kind == "lssvr":
            return fit_lssvr(data, self.C, KernelSpec(self.gamma)), None
        if self.kind in _SVR_KINDS:
            return fit_irls_svr(data, self.C, KernelSpec(self.gamma), self.irls_config())
        L = self.n_hidden(data.n_samples)
        if self.kind == "elm":
            return fit_elm(data, self.C, L, self.seed), None
        return fit_irls_elm(data, self.C, L, self.seed, self.irls_config())

    def __call__(self, data: Dataset):
        return self.fit_with_trace(data)[0]

    def params(self):
        out = {"C": self.C}
        if self.is_svr:
            out["gamma"] = self.gamma
        else:
            out["hidden"] = self.hidden
            out["hidden_frac"] = self.hidden_frac
        if self.kind not in ("lssvr", "elm"):
            out["lambda"] = self.lam
        return out

    def to_dict(self):
        return {
            "kind": self.kind, "C": self.C, "gamma": self.gamma, "lambda": self.lam,
            "hidden": self.hidden, "hidden_frac": self.hidden_frac, "seed": self.seed,
            "max_iter": self.max_iter, "tol": self.tol, "family": self.family,
            "family_params": dict(self.family_params),
        }


# ---------------------------------------------------------------------------
# cross-validation
# ---------------------------------------------------------------------------

def kfold_indices(N, k, seed):
    """Seeded permutation of ``0..N-1`` cut into ``k`` folds whose sizes differ by at most one."""
    if int(N) != N or int(k) != k:
        raise InvalidArgumentError("N and k must be integers")
    if k < 2 or k > N:
        raise InvalidArgumentError(f"need 2 <= k <= N, got k={k}, N={N}")
    perm = np.random.default_rng(seed).permutation(int(N))
    return [np.sort(f) for f in np.array_split(perm, int(k))]


class FoldFailure(RobustKBRError):
    def __init__(self, repeat, fold, cause):
        super().__init__(f"fit failed on repeat {repeat}, fold {fold}: {cause}")
        self.repeat = repeat
        self.fold = fold
        self.cause = cause


@dataclass(frozen=True)
class CVResult:
    """Per-fold metrics plus two summaries.

    ``mean``/``sd_folds`` pool every fold of every repeat; ``sd_repeats`` is
    the spread of the per-repeat mean across repeats (0 for a single repeat).
    Each summary is ordered ``(rmse, mae, mre)``.
    """

    folds: tuple  # (repeat, fold, MetricSet)
    mean: tuple
    sd_folds: tuple
    sd_repeats: tuple
    outliers: tuple = ()  # (repeat, fold, original indices contaminated in that training split)

    @property
    def rmse(self):
        return self.mean[0]


def repeat_seeds(seed, repeats):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(repeats)]


def cross_validate(config, data: Dataset, k=10, seed=0, repeats=1, scaling=None,
                   contaminate=None) -> CVResult:
    """Repeated k-fold cross-validation of ``config`` (a :class:`FitterConfig` or any fitter).

    ``scaling="train"`` fits a unit-interval scaler on each training split and
    applies it to the held-out fold; ``None`` uses the data as given.
    ``contaminate=(fraction, factor)`` corrupts the labels of each training
    split with :func:`inject_outliers`; held-out folds stay clean.
    """
    if repeats < 1:
        raise InvalidArgumentError("repeats must be >= 1")
    if scaling not in (None, "train"):
        raise InvalidArgumentError(f"unknown scaling mode {scaling!r}")
    rows, flagged = [], []
    for r, rs in enumerate(repeat_seeds(seed, repeats)):
        folds = kfold_indices(data.n_samples, k, rs)
        dirt_seeds = repeat_seeds(rs, len(folds))
        for f, test_idx in enumerate(folds):
            train_idx = np.sort(np.concatenate([folds[j] for j in range(len(folds)) if j != f]))
            train, test = data.subset(train_idx), data.subset(test_idx)
            if contaminate is not None:
                fraction, factor = contaminate
                train = inject_outliers(train, fraction, factor, dirt_seeds[f])
                local = train.provenance["outlier_indices"]
                flagged.append((r, f, tuple(int(train_idx[i]) for i in local)))
            if scaling == "train":
                sp = fit_scaler(train)
                train, test = sp.apply(train, "train"), sp.apply(test, "train")
            try:
                model = config(train)
                pred = model.predict(test.features)
            except RobustKBRError as exc:
                raise FoldFailure(r, f, exc) from exc
            rows.append((r, f, metrics(test.targets, pred)))
    table = np.array([m.as_tuple() for _, _, m in rows])
    per_rep = np.array([table[[i for i, row in enumerate(rows) if row[0] == r]].mean(axis=0)
                        for r in range(repeats)])
    sd_rep = per_rep.std(axis=0, ddof=1) if repeats > 1 else np.zeros(3)
    return CVResult(
        folds=tuple(rows),
        mean=tuple(float(v) for v in table.mean(axis=0)),
        sd_folds=tuple(float(v) for v in table.std(axis=0, ddof=1)),
        sd_repeats=tuple(float(v) for v in sd_rep),
        outliers=tuple(flagged),
    )


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------

def _positive_list(name, values, upper=None):
    vals = [float(v) for v in values]
    if not vals:
        raise InvalidArgumentError(f"{name} must be non-empty")
    for v in vals:
        if not (math.isfinite(v) and v > 0) or (upper is not None and v > upper):
            raise InvalidArgumentError(f"{name} contains invalid value {v}")
    return tuple(vals)


@dataclass(frozen=True)
class GridSpec:
    C_values: tuple = tuple(2.0 ** i for i in range(-4, 9))
    gamma_values: tuple = tuple(2.0 ** i for i in range(-3, 4))
    lambda_values: tuple = tuple(2.0 ** i for i in range(-3, 4))
    L_fractions: tuple = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5)

    def __post_init__(self):
        object.__setattr__(self, "C_values", _positive_list("C_values", self.C_values))
        object.__setattr__(self, "gamma_values", _positive_list("gamma_values", self.gamma_values))
        object.__setattr__(self, "lambda_values", _positive_list("lambda_values", self.lambda_values))
        object.__setattr__(self, "L_fractions", _positive_list("L_fractions", self.L_fractions, 1.0))

    def cells(self, base: FitterConfig):
        """Configurations in tie-break order: C, then gamma, then lambda, then L."""
        gammas = sorted(self.gamma_values) if base.is_svr else [base.gamma]
        lams = sorted(self.lambda_values) if base.kind not in ("lssvr", "elm") else [base.lam]
        fracs = [base.hidden_frac] if base.is_svr else sorted(self.L_fractions)
        for C, g, lam, frac in itertools.product(sorted(self.C_values), gammas, lams, fracs):
            yield replace(base, C=C, gamma=g, lam=lam, hidden=None if not base.is_svr else base.hidden,
                          hidden_frac=frac)

    def to_dict(self):
        return {"C_values": list(self.C_values), "gamma_values": list(self.gamma_values),
                "lambda_values": list(self.lambda_values), "L_fractions": list(self.L_fractions)}


@dataclass(frozen=True)
class GridCell:
    config: FitterConfig
    rmse: float
    mae: float
    mre: float
    error: str | None = None


@dataclass(frozen=True)
class GridResult:
    best: FitterConfig
    cells: tuple

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kind", "C", "gamma", "lambda", "hidden_frac", "rmse", "mae", "mre", "error"])
            for c in self.cells:
                cfg = c.config
                w.writerow([cfg.kind, repr(cfg.C), repr(cfg.gamma), repr(cfg.lam),
                            repr(cfg.hidden_frac), repr(c.rmse), repr(c.mae), repr(c.mre),
                            c.error or ""])


def grid_search(base: FitterConfig, grid: GridSpec, data: Dataset, k=10, seed=0,
                repeats=1, scaling=None) -> GridResult:
    """Exhaustive search minimizing mean CV RMSE.

    Cells are visited in tie-break order, so the first minimum found wins ties.
    A cell whose fit fails scores infinite RMSE.
    """
    cells = []
    for cfg in grid.cells(base):
        try:
            res = cross_validate(cfg, data, k, seed, repeats, scaling)
            cells.append(GridCell(cfg, *res.mean))
        except RobustKBRError as exc:
            cells.append(GridCell(cfg, math.inf, math.inf, math.inf, str(exc)))
    if not cells:
        raise InvalidArgumentError("grid is empty")
    best = min(range(len(cells)), key=lambda i: (cells[i].rmse, i))
    return GridResult(cells[best].config, tuple(cells))
