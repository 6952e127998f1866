"""Nuisance estimators of (mu, sigma) for EPD_lambda and their expansions.

Also houses the score functions of the APD family at a null point,
split into the tested block (theta1, theta2) and the nuisance block
(mu, sigma).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import specfun
from .apd import ParamVector
from .errors import DegenerateSample, DomainError, NonConvergence, SampleTooSmall

__all__ = [
    "Estimator",
    "EstimatorResult",
    "InfluenceSpec",
    "fit_ml",
    "fit_mom",
    "fit",
    "score_K",
    "score_U",
    "mom_variance_factor",
    "mom_c3",
    "influence_ml",
    "influence_mom",
    "influence_for",
    "a4_remainder",
]


class Estimator(str, enum.Enum):
    ML = "ml"
    MOM = "mom"

    @classmethod
    def parse(cls, value) -> "Estimator":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown estimator {value!r}; expected 'ml' or 'mom'") from None


@dataclass(frozen=True)
class EstimatorResult:
    mu_hat: float
    sigma_hat: float
    method: Estimator
    iterations: int = 0
    converged: bool = True

    def theta(self, lam: float) -> ParamVector:
        """The plug-in null point (1/2, lam, mu_hat, sigma_hat)."""
        return ParamVector.null(lam, self.mu_hat, self.sigma_hat)


@dataclass(frozen=True)
class InfluenceSpec:
    """Linear expansion of a nuisance estimator.

    ``r_U(x, theta)`` has mean zero and covariance ``R_U`` under the null
    point theta, and sqrt(n)(theta_hat_U - theta_U) is asymptotically
    ``R_U^{-1} n^{-1/2} sum r_U(X_i)``. ``g_U = R_U^{-1} r_U`` is the
    equivalent direct expansion.
    """

    r_U: Callable
    R_U: np.ndarray
    label: str
    g_U: Callable | None = field(default=None, compare=False)


def _prepare(data) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise SampleTooSmall(f"need at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("data contain non-finite values")
    return x


def _check_lambda(lam: float, allow_one: bool = False) -> float:
    lam = float(lam)
    if not (lam > 1.0 or (allow_one and lam == 1.0)) or not math.isfinite(lam):
        raise DomainError(f"lambda must be > 1, got {lam!r}")
    return lam


def _lower_median(x: np.ndarray) -> float:
    # ties between the two middle order statistics resolve to the lower one
    s = np.sort(x)
    return float(s[(s.size - 1) // 2])


def _ml_location(x: np.ndarray, lam: float, rtol: float, max_iter: int) -> tuple[float, int]:
    """Root of the location score sum |x_i - m|^(lam-1) sign(x_i - m).

    The score is continuous and strictly decreasing in m for lam > 1, so
    a Newton step is accepted only when it stays inside the current sign
    bracket and at least halves the step before last; otherwise the
    bracket is bisected. The second rule stops Newton from cycling across
    the kinks at the observations.
    """
    lo, hi = float(x.min()), float(x.max())
    m = float(x.mean())
    # ulp-level resolution at the bracket, guarded near m = 0 so that a
    # root at a zero observation does not bisect into subnormals
    guard = 2.0**-20 * max(abs(lo), abs(hi))
    lam1 = lam - 1.0
    step_old = step = hi - lo
    for it in range(1, max_iter + 1):
        r = x - m
        a = np.abs(r)
        p1 = a**lam1
        score = float(np.dot(p1, np.sign(r)))
        scale = float(p1.sum())
        if abs(score) <= rtol * scale:
            return m, it
        if score > 0.0:
            lo = m
        else:
            hi = m
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = lam1 * float(np.sum(p1 / a))
        m_new = m + score / slope if math.isfinite(slope) and slope > 0.0 else math.nan
        step_old, step = step, abs(m_new - m)
        if not (lo < m_new < hi and step <= 0.5 * step_old):
            m_new = 0.5 * (lo + hi)
            step = 0.5 * (hi - lo)
        if m_new == m or hi - lo <= 4.0 * np.spacing(max(abs(lo), abs(hi), guard)):
            # bracket exhausted at float resolution: best attainable root
            return m_new, it
        m = m_new
    raise NonConvergence(f"ML location did not converge in {max_iter} iterations")


def fit_ml(data, lam: float, *, rtol: float = 1e-12, max_iter: int = 200) -> EstimatorResult:
    """Maximum likelihood (mu, sigma) for EPD_lam.

    lam = 2 gives the sample mean, lam = 1 the (lower) median, and any
    other lam > 1 the unique minimiser of sum |x_i - m|^lam.
    """
    x = _prepare(data)
    lam = _check_lambda(lam, allow_one=True)
    if np.all(x == x[0]):
        raise DegenerateSample("all observations are identical")
    iterations = 0
    if lam == 2.0:
        mu = float(x.mean())
    elif lam == 1.0:
        mu = _lower_median(x)
    else:
        mu, iterations = _ml_location(x, lam, rtol, max_iter)
    sigma = float(np.mean(np.abs(x - mu) ** lam)) ** (1.0 / lam)
    if not sigma > 0.0:
        raise DegenerateSample("fitted scale is zero")
    return EstimatorResult(mu, sigma, Estimator.ML, iterations, True)


def mom_variance_factor(lam: float) -> float:
    """Var(X) / sigma^2 = lam^(2/lam) Gamma(1+3/lam) / (3 Gamma(1+1/lam))."""
    return math.exp(
        2.0 / lam * math.log(lam)
        + specfun.ln_gamma(1.0 + 3.0 / lam)
        - specfun.ln_gamma(1.0 + 1.0 / lam)
    ) / 3.0


def fit_mom(data, lam: float) -> EstimatorResult:
    """Method of moments (mu, sigma) matching the first two moments."""
    x = _prepare(data)
    lam = _check_lambda(lam, allow_one=True)
    mu = float(x.mean())
    var = float(np.mean((x - mu) ** 2))
    if not var > 0.0:
        raise DegenerateSample("sample variance is zero")
    sigma = math.sqrt(var / mom_variance_factor(lam))
    return EstimatorResult(mu, sigma, Estimator.MOM, 0, True)


def fit(data, lam: float, estimator) -> EstimatorResult:
    if Estimator.parse(estimator) is Estimator.ML:
        return fit_ml(data, lam)
    return fit_mom(data, lam)


def _standardise(x, theta: ParamVector):
    y = (np.asarray(x, dtype=float) - theta.mu) / theta.sigma
    return y, np.abs(y)


def _finish(cols, scalar: bool):
    out = np.stack(cols, axis=-1)
    return out if not scalar else out.reshape(-1)


def score_K(x, theta: ParamVector) -> np.ndarray:
    """Score in (theta1, theta2) at the null point (1/2, lam, mu, sigma).

    Returns shape ``(2,)`` for scalar ``x`` and ``(n, 2)`` otherwise.
    ``|y|^lam ln|y|`` is taken as 0 at y = 0.
    """
    lam = theta.lam
    y, a = _standardise(x, theta)
    pw = a**lam
    with np.errstate(divide="ignore", invalid="ignore"):
        pl = np.where(a > 0.0, pw * np.log(a), 0.0)
    centre = (math.log(lam) + specfun.digamma(1.0 + 1.0 / lam)) / lam
    s1 = -2.0 * pw * np.sign(y)
    s2 = -(pl - centre) / lam
    return _finish([np.atleast_1d(s1), np.atleast_1d(s2)], np.ndim(x) == 0)


def score_U(x, theta: ParamVector) -> np.ndarray:
    """Score in (mu, sigma): sigma^-1 [|y|^(lam-1) sign(y), |y|^lam - 1]."""
    lam = theta.lam
    y, a = _standardise(x, theta)
    s1 = a ** (lam - 1.0) * np.sign(y) / theta.sigma
    s2 = (a**lam - 1.0) / theta.sigma
    return _finish([np.atleast_1d(s1), np.atleast_1d(s2)], np.ndim(x) == 0)


def ml_fisher_u(lam: float, sigma0: float = 1.0) -> np.ndarray:
    """Fisher information of (mu, sigma) under EPD_lam(mu0, sigma0)."""
    i11 = math.exp(
        (1.0 - 2.0 / lam) * math.log(lam)
        + specfun.ln_gamma(2.0 - 1.0 / lam)
        - specfun.ln_gamma(1.0 + 1.0 / lam)
    )
    return np.diag([i11, lam]) / sigma0**2


def influence_ml(lam: float, sigma0: float = 1.0) -> InfluenceSpec:
    """ML expansion: r_U is the nuisance score and R_U its information."""
    lam = _check_lambda(lam)
    R = ml_fisher_u(lam, sigma0)
    R_inv = np.diag(1.0 / np.diag(R))

    def g_U(x, theta):
        return score_U(x, theta) @ R_inv.T

    return InfluenceSpec(score_U, R, "SCORE_ML", g_U)


def mom_c3(lam: float) -> float:
    """Gamma^2(1+3/lam) / {(9/5) Gamma(1+1/lam) Gamma(1+5/lam) - Gamma^2(1+3/lam)}."""
    g1 = specfun.gamma(1.0 + 1.0 / lam)
    g3 = specfun.gamma(1.0 + 3.0 / lam)
    g5 = specfun.gamma(1.0 + 5.0 / lam)
    return g3**2 / (1.8 * g1 * g5 - g3**2)


def influence_mom(lam: float, sigma0: float = 1.0) -> InfluenceSpec:
    """Method-of-moments expansion of (mu_hat, sigma_hat)."""
    lam = _check_lambda(lam)
    k = 1.0 / mom_variance_factor(lam)
    c3 = mom_c3(lam)
    R_inv = sigma0**2 * np.diag([1.0 / k, 1.0 / (4.0 * c3)])
    R = np.diag(1.0 / np.diag(R_inv))

    def r_U(x, theta):
        y, _ = _standardise(x, theta)
        r1 = k * y / theta.sigma
        r2 = 2.0 * c3 * (k * y * y - 1.0) / theta.sigma
        return _finish([np.atleast_1d(r1), np.atleast_1d(r2)], np.ndim(x) == 0)

    def g_U(x, theta):
        d = np.asarray(x, dtype=float) - theta.mu
        g1 = d
        g2 = (k * d * d - theta.sigma**2) / (2.0 * theta.sigma)
        return _finish([np.atleast_1d(g1), np.atleast_1d(g2)], np.ndim(x) == 0)

    return InfluenceSpec(r_U, R, "MOM", g_U)


def influence_for(estimator, lam: float, sigma0: float = 1.0) -> InfluenceSpec:
    if Estimator.parse(estimator) is Estimator.ML:
        return influence_ml(lam, sigma0)
    return influence_mom(lam, sigma0)


def a4_remainder(data, estimator, theta0: ParamVector) -> np.ndarray:
    """sqrt(n)(theta_hat_U - theta0_U) minus its linear expansion.

    Asymptotically negligible when the estimator satisfies the usual
    linear-expansion condition with the influence of :func:`influence_for`.
    """
    x = _prepare(data)
    n = x.size
    res = fit(x, theta0.lam, estimator)
    spec = influence_for(estimator, theta0.lam, theta0.sigma)
    lhs = math.sqrt(n) * np.array([res.mu_hat - theta0.mu, res.sigma_hat - theta0.sigma])
    rhs = np.linalg.solve(spec.R_U, spec.r_U(x, theta0).sum(axis=0) / math.sqrt(n))
    return lhs - rhs
