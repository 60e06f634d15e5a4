"""Robust kernel-based regression: IRLS variants of LS-SVR and ELM with M-estimator weights."""

from robustkbr.data import Dataset, NoiseSpec, gen_curve_test, gen_sinc, inject_outliers
from robustkbr.elm import ElmModel, fit_elm, fit_irls_elm
from robustkbr.errors import (
    DataParseError, InvalidArgumentError, NumericalFailureError, RobustKBRError,
)
from robustkbr.evaluation import FitterConfig, GridSpec, cross_validate, grid_search, metrics
from robustkbr.irls import FitTrace, IrlsConfig
from robustkbr.kernel import KernelSpec
from robustkbr.lssvr import SvrModel, fit_irls_svr, fit_lssvr
from robustkbr.weights import Family, WeightSpec

__version__ = "0.1.0"
