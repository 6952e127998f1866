"""Goodness-of-fit tests from non-degenerate U-statistics with estimated nuisances.

The concrete instance is the modified score test for the exponential
power distribution with maximum likelihood or method-of-moments nuisance
estimates, together with a Monte Carlo laboratory for its size and
local power.
"""

from .apd import EPD_PARTITION, ParamVector, PartitionMask
from .epd_test import (
    ClosedFormMatrices,
    EPDTestConfig,
    epd_power_prediction,
    prop1_matrices,
    prop2_matrices,
    run_epd_test,
)
from .errors import (
    BackendAccuracy,
    DataError,
    DegenerateSample,
    DomainError,
    NonConvergence,
    NotPositiveDefinite,
    NumericalError,
    ParseError,
    ReductionViolated,
    SampleTooSmall,
    UstatError,
)
from .estimators import Estimator, EstimatorResult, fit_ml, fit_mom
from .ustat_core import KernelSpec, PluginMatrices, TestResult, local_power, u_statistic

__version__ = "0.1.0"
