"""Datasets: synthetic generators, noise and outlier injection, CSV ingestion, scaling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from robustkbr.errors import DataParseError, InvalidArgumentError
from robustkbr.kernel import as_matrix


@dataclass(frozen=True)
class Dataset:
    """Feature matrix, targets and a JSON-serializable provenance record."""

    features: np.ndarray
    targets: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        X = as_matrix(self.features, "features")
        y = np.asarray(self.targets, dtype=float).ravel()
        if X.shape[0] < 1:
            raise InvalidArgumentError("dataset must contain at least one sample")
        if y.shape[0] != X.shape[0]:
            raise InvalidArgumentError(
                f"{X.shape[0]} feature rows but {y.shape[0]} targets"
            )
        if not np.all(np.isfinite(y)):
            raise InvalidArgumentError("targets contain non-finite values")
        outliers = self.provenance.get("outlier_indices")
        if outliers is not None:
            idx = np.asarray(outliers, dtype=int)
            if idx.size and (idx.min() < 0 or idx.max() >= y.size or np.unique(idx).size != idx.size):
                raise InvalidArgumentError("outlier indices must be distinct and in range")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "provenance", dict(self.provenance))

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def __len__(self):
        return self.n_samples

    def subset(self, indices, **provenance):
        idx = np.asarray(indices, dtype=int)
        prov = {k: v for k, v in self.provenance.items() if k != "outlier_indices"}
        prov.update(provenance)
        old = self.provenance.get("outlier_indices")
        if old:
            # re-express flagged samples in the subset's own indexing
            pos = {int(j): i for i, j in enumerate(idx)}
            prov["outlier_indices"] = sorted(pos[j] for j in old if j in pos)
        return Dataset(self.features[idx], self.targets[idx], prov)

    def with_point(self, x, y):
        """Copy with one extra sample appended at the end."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        if x.shape[1] != self.n_features:
            raise InvalidArgumentError(
                f"point has {x.shape[1]} features, dataset has {self.n_features}"
            )
        return Dataset(
            np.vstack([self.features, x]),
            np.append(self.targets, float(y)),
            self.provenance,
        )


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise model.

    ``kind`` is ``"gaussian"`` (``loc`` = mean, ``scale`` = standard deviation),
    ``"laplace"`` (``loc``, ``scale``) or ``"chisq"`` (``dof`` degrees of freedom).
    Chi-squared draws are added raw (mean ``dof``) unless ``center`` is set.
    """

    kind: str
    loc: float = 0.0
    scale: float = 1.0
    dof: int = 4
    seed: int = 0
    center: bool = False

    def __post_init__(self):
        if self.kind not in ("gaussian", "laplace", "chisq"):
            raise InvalidArgumentError(f"unknown noise kind {self.kind!r}")
        if self.kind in ("gaussian", "laplace") and not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidArgumentError("noise scale must be finite and > 0")
        if self.kind == "chisq" and (int(self.dof) != self.dof or self.dof < 1):
            raise InvalidArgumentError("chi-squared dof must be a positive integer")

    @classmethod
    def gaussian(cls, mean=0.0, sd=0.3, seed=0):
        return cls("gaussian", loc=mean, scale=sd, seed=seed)

    @classmethod
    def laplace(cls, location=0.0, scale=1.0, seed=0):
        return cls("laplace", loc=location, scale=scale, seed=seed)

    @classmethod
    def chisq(cls, dof=4, seed=0, center=False):
        return cls("chisq", dof=int(dof), seed=seed, center=center)

    def to_dict(self):
        return {"kind": self.kind, "loc": self.loc, "scale": self.scale,
                "dof": self.dof, "seed": self.seed, "center": self.center}


def draw_noise(n, spec: NoiseSpec):
    """``n`` i.i.d. draws from ``spec`` (seeded)."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "gaussian":
        return spec.loc + spec.scale * rng.standard_normal(n)
    if spec.kind == "laplace":
        # inverse CDF on the open interval (0, 1)
        u = rng.random(n)
        u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u) - 0.5
        return spec.loc - spec.scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    e = (rng.standard_normal((n, int(spec.dof))) ** 2).sum(axis=1)
    return e - spec.dof if spec.center else e


def add_noise(y, spec: NoiseSpec):
    y = np.asarray(y, dtype=float)
    return y + draw_noise(y.shape[0], spec)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def sinc(x):
    """sin(x)/x with the removable singularity filled (sinc(0) = 1)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(x == 0.0, 1.0, np.sin(x) / x)


def gen_sinc(n_train=500, n_test=300, seed=0, noise: NoiseSpec | None = None, low=-10.0, high=10.0):
    """Sinc regression benchmark.

    Inputs are uniform on ``[low, high]``.  Noise, if given, is added to the
    training targets only; the test set is always clean.
    """
    if n_train < 1 or n_test < 1:
        raise InvalidArgumentError("sample counts must be >= 1")
    rng = np.random.default_rng(seed)
    x_tr = rng.uniform(low, high, n_train)
    x_te = rng.uniform(low, high, n_test)
    y_tr = sinc(x_tr)
    prov = {"source": "sinc", "seed": int(seed), "range": [low, high]}
    if noise is not None:
        y_tr = add_noise(y_tr, noise)
        prov["noise"] = noise.to_dict()
    train = Dataset(x_tr[:, None], y_tr, dict(prov, split="train"))
    test = Dataset(x_te[:, None], sinc(x_te), {"source": "sinc", "seed": int(seed), "split": "test"})
    return train, test


def _curve_test1(z):
    return np.sin(z) * np.cos(z * z)


def _curve_test2(z):
    return 15.0 * (z * z - 1.0) ** 2 * z ** 4 * np.exp(-z)


# Two 1-D curves on [-1, 1] with hand-placed outliers.
CURVE_TESTS = {
    "test1": (_curve_test1, [(-0.8, -5.0), (0.8, 5.0)]),
    "test2": (_curve_test2, [(0.0, 5.0), (0.1, 5.0), (0.7, 5.0), (0.8, 5.0)]),
}


def gen_curve_test(test_id, n_clean=100):
    """Clean equispaced samples of a test curve plus its outliers.

    Returns ``(clean, outliers, func)`` where ``clean`` is a :class:`Dataset`,
    ``outliers`` a list of ``(x, y)`` pairs and ``func`` the noise-free curve.
    """
    if test_id not in CURVE_TESTS:
        raise InvalidArgumentError(f"unknown test id {test_id!r}; expected one of {sorted(CURVE_TESTS)}")
    func, outliers = CURVE_TESTS[test_id]
    z = np.linspace(-1.0, 1.0, n_clean)
    clean = Dataset(z[:, None], func(z), {"source": test_id, "n_clean": n_clean})
    return clean, list(outliers), func


def with_outliers(data: Dataset, points):
    """Append ``(x, y)`` points and flag them as outliers in the provenance."""
    X = np.vstack([data.features] + [np.atleast_1d(np.asarray(x, float))[None, :] for x, _ in points])
    y = np.concatenate([data.targets, [float(t) for _, t in points]])
    prev = list(data.provenance.get("outlier_indices", []))
    new = list(range(data.n_samples, data.n_samples + len(points)))
    return Dataset(X, y, dict(data.provenance, outlier_indices=prev + new))


def inject_outliers(data: Dataset, fraction=0.2, factor=10.0, seed=0):
    """Multiply the targets of a random ``fraction`` of samples by ``factor``.

    Exactly ``round(fraction * N)`` (half rounds up) distinct indices are
    drawn uniformly without replacement and recorded in the provenance.
    """
    if not (0.0 <= fraction <= 1.0):
        raise InvalidArgumentError("fraction must lie in [0, 1]")
    n = data.n_samples
    count = int(math.floor(fraction * n + 0.5))
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=count, replace=False)) if count else np.array([], dtype=int)
    y = data.targets.copy()
    y[idx] = y[idx] * factor
    prov = dict(data.provenance)
    prov.update(
        outlier_indices=[int(i) for i in idx],
        contamination={"fraction": fraction, "factor": factor, "seed": int(seed)},
    )
    return Dataset(data.features.copy(), y, prov)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def load_csv(path, target_column=-1, header=False):
    """Read a numeric comma-separated file.

    Features are all non-target columns in file order.  ``target_column`` is a
    column index (negative counts from the end) or, with ``header=True``, a
    column name.  Cells are plain decimal floats; quoting is not supported.

    Raises
    ------
    OSError
        The file cannot be read.
    DataParseError
        Empty file, ragged rows, unknown column, or a non-numeric cell.  The
        message and the ``row``/``column`` attributes give 1-based positions.
    """
    path = Path(path)
    text = path.read_text()
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise DataParseError(f"{path}: file is empty")

    names = None
    if header:
        names = [c.strip() for c in lines[0][1].split(",")]
        lines = lines[1:]
        if not lines:
            raise DataParseError(f"{path}: no data rows after header")

    width = len(names) if names else len(lines[0][1].split(","))
    rows = []
    for lineno, ln in lines:
        cells = ln.split(",")
        if len(cells) != width:
            raise DataParseError(
                f"{path}: row {lineno} has {len(cells)} columns, expected {width}", row=lineno
            )
        row = []
        for j, cell in enumerate(cells):
            try:
                val = float(cell.strip())
            except ValueError:
                raise DataParseError(
                    f"{path}: non-numeric cell {cell.strip()!r} at row {lineno}, column {j + 1}",
                    row=lineno, column=j + 1,
                ) from None
            if not math.isfinite(val):
                raise DataParseError(
                    f"{path}: non-finite cell at row {lineno}, column {j + 1}", row=lineno, column=j + 1
                )
            row.append(val)
        rows.append(row)
    table = np.array(rows, dtype=float)

    if isinstance(target_column, str) and not target_column.lstrip("-").isdigit():
        if names is None:
            raise DataParseError("target column given by name but header=False")
        if target_column not in names:
            raise DataParseError(f"{path}: no column named {target_column!r}")
        t = names.index(target_column)
    else:
        t = int(target_column)
        if not -width <= t < width:
            raise DataParseError(f"{path}: target column {t} out of range for {width} columns")
        t %= width
    if width < 2:
        raise DataParseError(f"{path}: need at least one feature column besides the target")

    keep = [j for j in range(width) if j != t]
    prov = {"source": str(path), "target_column": t}
    if names:
        prov["columns"] = names
    return Dataset(table[:, keep], table[:, t], prov)


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaleParams:
    """Per-column min-max transform to ``[0, 1]``.

    Constant columns map to 0.5 and are listed in ``constant``.  When targets
    were scaled too, ``target_min``/``target_range`` are set.
    """

    mins: np.ndarray
    ranges: np.ndarray
    constant: np.ndarray
    target_min: float | None = None
    target_range: float | None = None

    def transform(self, X):
        X = as_matrix(X)
        safe = np.where(self.constant, 1.0, self.ranges)
        out = (X - self.mins) / safe
        return np.where(self.constant, 0.5, out)

    def inverse(self, Xs):
        Xs = as_matrix(Xs)
        return np.where(self.constant, self.mins, Xs * self.ranges + self.mins)

    def transform_targets(self, y):
        y = np.asarray(y, dtype=float)
        if self.target_min is None:
            return y
        return (y - self.target_min) / self.target_range

    def inverse_targets(self, ys):
        ys = np.asarray(ys, dtype=float)
        if self.target_min is None:
            return ys
        return ys * self.target_range + self.target_min

    def apply(self, data: Dataset, mode="global"):
        prov = dict(data.provenance, scaling={"kind": "unit", "mode": mode,
                                              "targets": self.target_min is not None})
        return Dataset(self.transform(data.features), self.transform_targets(data.targets), prov)

    def to_dict(self):
        return {
            "mins": self.mins.tolist(),
            "ranges": self.ranges.tolist(),
            "constant_columns": [int(j) for j in np.flatnonzero(self.constant)],
            "target_min": self.target_min,
            "target_range": self.target_range,
        }


def fit_scaler(data: Dataset, scale_targets=False) -> ScaleParams:
    X = data.features
    mins = X.min(axis=0)
    ranges = X.max(axis=0) - mins
    constant = ranges == 0
    t_min = t_rng = None
    if scale_targets:
        t_min = float(data.targets.min())
        t_rng = float(data.targets.max() - t_min) or 1.0
    return ScaleParams(mins, ranges, constant, t_min, t_rng)


def scale_unit_interval(data: Dataset, scale_targets=False):
    """Min-max scale every feature column to ``[0, 1]``.

    Returns the scaled dataset and the :class:`ScaleParams` needed to apply the
    identical transform to other splits.
    """
    params = fit_scaler(data, scale_targets)
    return params.apply(data), params
