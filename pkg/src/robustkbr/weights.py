"""M-estimator loss / gradient / weight catalog.

Every family is described by three functions of the residual ``x``:

* ``loss``      rho(x), with rho(0) = 0
* ``gradient``  psi(x) = d rho / dx
* ``weight``    v(x) = psi(x) / (2 x), the IRLS sample weight

The factor 2 in the weight follows the convention where the Gaussian row is
``rho = x**2, psi = 2x, v = 1``.  At ``x = 0`` the weight is the continuous
limit of ``psi(x) / (2x)`` (``psi'(0) / 2``), so that ``v`` stays continuous.

All functions accept scalars or arrays.  Odd/even symmetry is enforced by
evaluating on ``|x|`` and restoring the sign, so ``weight(-x) == weight(x)``
and ``gradient(-x) == -gradient(x)`` hold bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from robustkbr.errors import InvalidArgumentError

__all__ = [
    "Family",
    "WeightSpec",
    "ConditionReport",
    "gradient",
    "weight",
    "raw_weight",
    "loss",
    "check_conditions",
]

_LN2 = math.log(2.0)


class Family(str, Enum):
    GAUSS = "gauss"
    LAPLACE = "laplace"
    HUBER = "huber"
    HAMPEL = "hampel"
    TUKEY = "tukey"
    ANDREW = "andrew"
    WELSCH = "welsch"
    SIGMOID = "sigmoid"


# Conventional tuning constants, used when a parameter is omitted.
DEFAULT_PARAMS: dict[Family, dict[str, float]] = {
    Family.GAUSS: {},
    Family.LAPLACE: {},
    Family.HUBER: {"k": 1.345},
    Family.HAMPEL: {"a": 2.0, "b": 4.0, "c": 8.0},
    Family.TUKEY: {"k": 4.685},
    Family.ANDREW: {"k": 1.339 * math.pi},
    Family.WELSCH: {"k": 2.985},
    Family.SIGMOID: {"lam": 1.0},
}


@dataclass(frozen=True)
class WeightSpec:
    """One member of an M-estimator family.

    Parameters
    ----------
    family : Family or str
        Family name, e.g. ``"sigmoid"`` or ``Family.HUBER``.
    params : mapping
        Family parameters.  Huber/Tukey/Andrew/Welsch take ``k``, Hampel takes
        ``a <= b <= c`` and the sigmoid-induced family takes ``lam``.  Missing
        entries fall back to :data:`DEFAULT_PARAMS`.
    weight_floor : float
        Lower clamp applied by :func:`weight`.  Downstream solvers divide by the
        weight, so the default keeps redescending families finite.
    """

    family: Family
    params: Mapping[str, float] = field(default_factory=dict)
    weight_floor: float = 1e-8

    def __post_init__(self):
        try:
            fam = Family(self.family)
        except ValueError:
            raise InvalidArgumentError(f"unknown weight family {self.family!r}") from None
        object.__setattr__(self, "family", fam)

        merged = dict(DEFAULT_PARAMS[fam])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise InvalidArgumentError(
                f"unexpected parameters {sorted(unknown)} for family {fam.value}"
            )
        merged.update({k: float(v) for k, v in self.params.items()})
        for name, value in merged.items():
            if not (math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{fam.value}: parameter {name} must be > 0, got {value}")
        if fam is Family.HAMPEL and not (merged["a"] <= merged["b"] <= merged["c"]):
            raise InvalidArgumentError("hampel parameters must satisfy a <= b <= c")
        if not (math.isfinite(self.weight_floor) and self.weight_floor >= 0):
            raise InvalidArgumentError("weight_floor must be finite and >= 0")
        object.__setattr__(self, "params", merged)

    @classmethod
    def sigmoid(cls, lam, weight_floor=1e-8):
        return cls(Family.SIGMOID, {"lam": lam}, weight_floor)

    @classmethod
    def gauss(cls):
        return cls(Family.GAUSS)

    def to_dict(self):
        return {"family": self.family.value, "params": dict(self.params),
                "weight_floor": self.weight_floor}

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], d.get("params", {}), d.get("weight_floor", 1e-8))

    def gradient(self, x):
        return gradient(self, x)

    def weight(self, x):
        return weight(self, x)

    def loss(self, x):
        return loss(self, x)


# ---------------------------------------------------------------------------
# per-family kernels on a = |x| >= 0
# ---------------------------------------------------------------------------

def _psi_abs(spec, a):
    p = spec.params
    fam = spec.family
    if fam is Family.GAUSS:
        return 2.0 * a
    if fam is Family.LAPLACE:
        return np.where(a > 0, 1.0, 0.0)
    if fam is Family.HUBER:
        return np.minimum(a, p["k"])
    if fam is Family.HAMPEL:
        ha, hb, hc = p["a"], p["b"], p["c"]
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = ha * (hc - a) / (hc - hb)
        return np.select([a <= ha, a <= hb, a <= hc], [a, ha, tail], 0.0)
    if fam is Family.TUKEY:
        k = p["k"]
        return np.where(a <= k, a * (1.0 - (a / k) ** 2) ** 2, 0.0)
    if fam is Family.ANDREW:
        k = p["k"]
        return np.where(a <= k, k * np.sin(np.pi * a / k), 0.0)
    if fam is Family.WELSCH:
        k = p["k"]
        return a * np.exp(-0.5 * (a / k) ** 2)
    lam = p["lam"]
    # lam / (1 + exp(-lam a)) - lam / 2 == (lam / 2) tanh(lam a / 2), without cancellation
    return 0.5 * lam * np.tanh(0.5 * lam * a)


def _v_abs(spec, a):
    p = spec.params
    fam = spec.family
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if fam is Family.GAUSS:
            return np.ones_like(a)
        if fam is Family.LAPLACE:
            return np.where(a > 0, 0.5 / a, np.inf)
        if fam is Family.HUBER:
            k = p["k"]
            return np.where(a <= k, 0.5, k / (2.0 * a))
        if fam is Family.HAMPEL:
            ha, hb, hc = p["a"], p["b"], p["c"]
            mid = ha / (2.0 * a)
            tail = (ha * hc - ha * a) / (2.0 * (hc - hb) * a)
            return np.select([a <= ha, a <= hb, a <= hc], [0.5, mid, tail], 0.0)
        if fam is Family.TUKEY:
            k = p["k"]
            return np.where(a <= k, 0.5 * (1.0 - (a / k) ** 2) ** 2, 0.0)
        if fam is Family.ANDREW:
            k = p["k"]
            inner = np.where(a > 0, k * np.sin(np.pi * a / k) / (2.0 * a), 0.5 * np.pi)
            return np.where(a <= k, inner, 0.0)
        if fam is Family.WELSCH:
            k = p["k"]
            return 0.5 * np.exp(-0.5 * (a / k) ** 2)
        lam = p["lam"]
        u = 0.5 * lam * a
        # tanh(u)/u == 1 to double precision below 1e-8
        return np.where(u > 1e-8, _psi_abs(spec, a) / (2.0 * a), lam * lam / 8.0)


def _rho_abs(spec, a):
    p = spec.params
    fam = spec.family
    if fam is Family.GAUSS:
        return a * a
    if fam is Family.LAPLACE:
        return a.copy()
    if fam is Family.HUBER:
        k = p["k"]
        return np.where(a <= k, 0.5 * a * a, k * a - 0.5 * k * k)
    if fam is Family.HAMPEL:
        ha, hb, hc = p["a"], p["b"], p["c"]
        at_b = ha * hb - 0.5 * ha * ha
        at_c = at_b + 0.5 * ha * (hc - hb)
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = at_b + ha / (hc - hb) * (hc * (a - hb) - 0.5 * (a * a - hb * hb))
        return np.select(
            [a <= ha, a <= hb, a <= hc],
            [0.5 * a * a, ha * a - 0.5 * ha * ha, tail],
            at_c,
        )
    if fam is Family.TUKEY:
        k = p["k"]
        return np.where(a <= k, k * k / 6.0 * (1.0 - (1.0 - (a / k) ** 2) ** 3), k * k / 6.0)
    if fam is Family.ANDREW:
        k = p["k"]
        return np.where(a <= k, k * k / np.pi * (1.0 - np.cos(np.pi * a / k)), 2.0 * k * k / np.pi)
    if fam is Family.WELSCH:
        k = p["k"]
        return k * k * -np.expm1(-0.5 * (a / k) ** 2)
    # ln(1 + e^{lam x}) - lam x / 2 - ln 2 == ln cosh(lam x / 2)
    u = 0.5 * p["lam"] * a
    small = np.minimum(u, 40.0)
    return np.where(
        u <= 40.0,
        np.log1p(2.0 * np.sinh(0.5 * small) ** 2),
        u - _LN2 + np.log1p(np.exp(-2.0 * u)),
    )


def _prepare(x):
    arr = np.asarray(x, dtype=float)
    return arr, np.abs(arr)


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def gradient(spec: WeightSpec, x):
    """psi(x); odd in ``x``."""
    arr, a = _prepare(x)
    return _out(np.sign(arr) * _psi_abs(spec, a), x)


def raw_weight(spec: WeightSpec, x):
    """v(x) without the ``weight_floor`` clamp."""
    _, a = _prepare(x)
    return _out(_v_abs(spec, a), x)


def weight(spec: WeightSpec, x):
    """v(x) clamped below by ``spec.weight_floor``; even in ``x``."""
    _, a = _prepare(x)
    return _out(np.maximum(_v_abs(spec, a), spec.weight_floor), x)


def loss(spec: WeightSpec, x):
    """rho(x), anchored at rho(0) = 0; even in ``x``."""
    _, a = _prepare(x)
    return _out(_rho_abs(spec, a), x)


# ---------------------------------------------------------------------------
# condition checks
# ---------------------------------------------------------------------------

_CONDITIONS = ("v1", "v2", "v3", "c1", "c2", "c3", "c4")


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of :func:`check_conditions`.

    ``results`` maps each condition name to a bool; ``failures`` maps each
    failed condition to the first abscissa where it was violated.
    """

    results: dict
    failures: dict

    @property
    def all_passed(self):
        return all(self.results.values())

    @property
    def failed(self):
        return [name for name in _CONDITIONS if not self.results[name]]

    def __getitem__(self, name):
        return self.results[name]


def _first(mask, xs):
    idx = np.flatnonzero(mask)
    return float(xs[idx[0]]) if idx.size else None


def check_conditions(spec: WeightSpec, grid) -> ConditionReport:
    """Numerically check the weight conditions v1-v3 and gradient conditions c1-c4.

    v1  weight non-negative and bounded on the grid
    v2  weight even
    v3  weight non-increasing on the positive part of the grid
    c1  gradient odd
    c2  gradient continuous (jump probe of width ~1e-9 around every grid point)
    c3  gradient bounded (probed far beyond the grid, at 1e5 and 1e6 times its radius)
    c4  gradient non-decreasing on the grid (the relaxed form of strict increase)
    """
    xs = np.sort(np.asarray(grid, dtype=float).ravel())
    if xs.size == 0:
        raise InvalidArgumentError("grid must be non-empty")
    if not np.all(np.isfinite(xs)):
        raise InvalidArgumentError("grid must be finite")
    radius = float(np.max(np.abs(xs)))
    if np.max(np.abs(xs + xs[::-1])) > 1e-9 * max(radius, 1.0):
        raise InvalidArgumentError("grid must be symmetric about 0")

    results, failures = {}, {}

    def record(name, bad_mask, where):
        ok = not np.any(bad_mask)
        results[name] = ok
        if not ok:
            failures[name] = _first(bad_mask, where)

    v = weight(spec, xs)
    psi = gradient(spec, xs)

    record("v1", ~np.isfinite(v) | (v < 0), xs)
    record("v2", weight(spec, -xs) != v, xs)
    pos = xs[xs > 0]
    vp = weight(spec, pos)
    with np.errstate(invalid="ignore"):
        dv = np.diff(vp)
        tol_v = 1e-12 * max(1.0, float(np.max(vp[np.isfinite(vp)], initial=0.0)))
    record("v3", np.concatenate([[False], ~(dv <= tol_v)]), pos)

    record("c1", gradient(spec, -xs) != -psi, xs)
    delta = 1e-9 * np.maximum(1.0, np.abs(xs))
    jump = np.abs(gradient(spec, xs + delta) - gradient(spec, xs - delta))
    record("c2", ~(jump <= 1e-6), xs)

    probes = np.array([-1e6, -1e5, 1e5, 1e6]) * max(radius, 1.0)
    far = np.abs(gradient(spec, probes))
    grows = np.array([
        not (np.isfinite(far[0]) and far[0] <= (1 + 1e-9) * far[1] + 1e-12),
        False,
        False,
        not (np.isfinite(far[3]) and far[3] <= (1 + 1e-9) * far[2] + 1e-12),
    ])
    record("c3", grows, probes)

    dpsi = np.diff(psi)
    tol_psi = 1e-12 * max(1.0, float(np.max(np.abs(psi))))
    record("c4", np.concatenate([[False], dpsi < -tol_psi]), xs)

    return ConditionReport(results=results, failures=failures)
