"""Generic machinery for non-degenerate U-statistics with estimated nuisances.

A kernel ``h`` of degree ``nu`` maps ``nu`` observations and a parameter
point to a d-vector. With nuisance components estimated through an
expansion with influence ``r_U`` and covariance ``R_U``, the normalised
statistic sqrt(n) U_n(theta_hat) is asymptotically N(0, Sigma) under the
null and N(M delta_K, Sigma) under local alternatives, where::

    Sigma = nu^2 {H - G_U R_U^-1 J_U^T - J_U R_U^-1 G_U^T + G_U R_U^-1 G_U^T}
    M     = nu (G_K - G_U R_U^-1 S_KU^T)

and H, G_U, G_K, J_U, S_KU are expectations of outer products of the
degree-1 projection h1, the scores s_K, s_U and the influence r_U.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from . import specfun
from .errors import (
    BackendAccuracy,
    NotPositiveDefinite,
    ReductionViolated,
    SampleTooSmall,
)
from .quadrature import expect_quad

__all__ = [
    "KernelSpec",
    "PluginMatrices",
    "SigmaSource",
    "TestResult",
    "QuadratureBackend",
    "MCBackend",
    "u_statistic",
    "sigma_from_parts",
    "drift_from_parts",
    "plugin_matrices",
    "quadratic_form",
    "test_statistic",
    "noncentrality",
    "local_power",
    "full_drift_matrix",
    "corollary1_reduction",
]

MAX_SUBSETS = 10**7


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric kernel of degree ``degree`` with ``out_dim`` outputs.

    ``h(points, theta)`` is vectorised over a leading batch axis:
    ``points`` has shape ``(N, degree)`` (or ``(N, degree, m)`` for
    m-variate observations) and the result has shape ``(N, out_dim)``.
    ``h1(x, theta)`` is the degree-1 projection, mapping ``(N,)`` (or
    ``(N, m)``) observations to ``(N, out_dim)``; when omitted and
    ``degree == 1`` it is ``h`` itself.
    """

    degree: int
    out_dim: int
    h: Callable
    h1: Callable | None = None

    def __post_init__(self):
        if self.degree < 1 or self.out_dim < 1:
            raise ValueError("degree and out_dim must be >= 1")

    def projection(self) -> Callable:
        if self.h1 is not None:
            return self.h1
        if self.degree == 1:
            return lambda x, theta: self.h(np.asarray(x)[:, None], theta)
        raise ValueError("kernel of degree > 1 needs an explicit h1 projection")


class SigmaSource(str, enum.Enum):
    AT_THETA0 = "theta0"
    AT_THETA_HAT = "theta_hat"


@dataclass(frozen=True)
class TestResult:
    """Outcome of a U-statistic goodness-of-fit test."""

    statistic: float
    df: int
    p_value: float
    theta_hat: object
    sigma_source: SigmaSource
    u_n: np.ndarray
    sigma: np.ndarray

    __test__ = False  # not a pytest class

    def reject(self, alpha: float) -> bool:
        return self.statistic > specfun.chi2_quantile(1.0 - alpha, self.df)


def u_statistic(data, kernel: KernelSpec, theta, *, max_subsets: int = MAX_SUBSETS) -> np.ndarray:
    """Average of ``kernel.h`` over all strictly increasing index tuples.

    Degree 1 is the sample mean of ``h``; higher degrees enumerate all
    C(n, nu) subsets in chunks and refuse to run past ``max_subsets``.
    """
    x = np.asarray(data, dtype=float)
    n = x.shape[0]
    nu = kernel.degree
    if n < nu:
        raise SampleTooSmall(f"U-statistic of degree {nu} needs n >= {nu}, got {n}")
    if nu == 1:
        return np.asarray(kernel.h(x[:, None], theta), dtype=float).mean(axis=0)
    count = math.comb(n, nu)
    if count > max_subsets:
        raise SampleTooSmall(
            f"C({n}, {nu}) = {count} subsets exceeds the enumeration cap {max_subsets}"
        )
    total = np.zeros(kernel.out_dim)
    chunk = 100_000
    it = combinations(range(n), nu)
    while True:
        idx = np.fromiter((i for tup in _take(it, chunk) for i in tup), dtype=np.intp)
        if idx.size == 0:
            break
        points = x[idx.reshape(-1, nu)]
        total += np.asarray(kernel.h(points, theta), dtype=float).sum(axis=0)
    return total / count


def _take(iterator, k):
    for _ in range(k):
        try:
            yield next(iterator)
        except StopIteration:
            return


def _cholesky(a: np.ndarray, name: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(f"{name} is not positive definite:\n{a}") from None


def _solve_pd(a: np.ndarray, b: np.ndarray, name: str) -> np.ndarray:
    """a^-1 b for symmetric positive definite ``a`` via Cholesky."""
    low = _cholesky(a, name)
    return np.linalg.solve(low.T, np.linalg.solve(low, b))


def sigma_from_parts(H, G_U, J_U, R_U, nu: int = 1) -> np.ndarray:
    H = np.atleast_2d(H)
    if G_U is None or np.size(G_U) == 0:
        return nu**2 * H
    G_U, J_U, R_U = np.atleast_2d(G_U), np.atleast_2d(J_U), np.atleast_2d(R_U)
    RiG = _solve_pd(R_U, G_U.T, "R_U")
    RiJ = _solve_pd(R_U, J_U.T, "R_U")
    return nu**2 * (H - G_U @ RiJ - J_U @ RiG + G_U @ RiG)


def drift_from_parts(G_K, G_U, R_U, S_KU, nu: int = 1) -> np.ndarray:
    G_K = np.atleast_2d(G_K)
    if G_U is None or np.size(G_U) == 0:
        return nu * G_K
    G_U, R_U, S_KU = np.atleast_2d(G_U), np.atleast_2d(R_U), np.atleast_2d(S_KU)
    return nu * (G_K - G_U @ _solve_pd(R_U, S_KU.T, "R_U"))


@dataclass(frozen=True)
class PluginMatrices:
    """Expectation matrices of the asymptotic law and the derived Sigma, M.

    ``S_UU = E{s_U r_U^T}`` is optional; it is only needed to check that
    nuisance drift does not enter the local-alternative drift.
    """

    H: np.ndarray
    G_U: np.ndarray | None
    G_K: np.ndarray
    J_U: np.ndarray | None
    R_U: np.ndarray | None
    S_KU: np.ndarray | None
    Sigma: np.ndarray
    M: np.ndarray
    nu: int = 1
    S_UU: np.ndarray | None = None

    @classmethod
    def from_parts(cls, H, G_U, G_K, J_U, R_U, S_KU, nu=1, S_UU=None) -> "PluginMatrices":
        if R_U is not None and np.size(R_U):
            _cholesky(np.atleast_2d(R_U), "R_U")
        Sigma = sigma_from_parts(H, G_U, J_U, R_U, nu)
        Sigma = 0.5 * (Sigma + Sigma.T)
        _cholesky(Sigma, "Sigma")
        M = drift_from_parts(G_K, G_U, R_U, S_KU, nu)
        return cls(H, G_U, G_K, J_U, R_U, S_KU, Sigma, M, nu, S_UU)


class QuadratureBackend:
    """Expectations under a univariate density by adaptive quadrature."""

    def __init__(self, log_density: Callable, loc: float = 0.0, scale: float = 1.0, **tol):
        self.log_density = log_density
        self.loc = loc
        self.scale = scale
        self.tol = tol

    def expect(self, fn: Callable) -> np.ndarray:
        def flat(x):
            return np.asarray(fn(np.atleast_1d(x)), dtype=float).reshape(-1)

        return expect_quad(flat, self.log_density, self.loc, self.scale, **self.tol)


class MCBackend:
    """Expectations as sample means over ``size`` draws of ``sampler``.

    ``sampler(rng, size)`` returns observations; the generator is supplied
    by the caller, who thereby owns reproducibility. Each call to
    :meth:`expect` records the largest standard error in ``last_stderr``
    and raises :class:`BackendAccuracy` if it exceeds ``max_stderr``.
    """

    def __init__(self, sampler: Callable, size: int, rng: np.random.Generator, max_stderr=None):
        self.sampler = sampler
        self.size = int(size)
        self.rng = rng
        self.max_stderr = max_stderr
        self.last_stderr = math.nan
        self._draws = None

    def draws(self):
        if self._draws is None:
            self._draws = self.sampler(self.rng, self.size)
        return self._draws

    def expect(self, fn: Callable) -> np.ndarray:
        vals = np.asarray(fn(self.draws()), dtype=float).reshape(self.size, -1)
        mean = vals.mean(axis=0)
        se = float(np.max(vals.std(axis=0, ddof=1) / math.sqrt(self.size)))
        self.last_stderr = se
        if self.max_stderr is not None and se > self.max_stderr:
            raise BackendAccuracy(f"MC standard error {se:.3g} exceeds bound {self.max_stderr:.3g}")
        return mean


def _outer_expectation(backend, f: Callable, g: Callable, theta) -> np.ndarray:
    shape = {}

    def prod(x):
        a = np.atleast_2d(f(x, theta))
        b = np.atleast_2d(g(x, theta))
        shape["ab"] = (a.shape[1], b.shape[1])
        return (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1)

    return backend.expect(prod).reshape(shape["ab"])


def plugin_matrices(
    kernel: KernelSpec,
    score_K: Callable,
    score_U: Callable | None,
    influence,
    theta0,
    backend,
) -> PluginMatrices:
    """Assemble H, G_U, G_K, J_U, R_U, S_KU (and S_UU) under theta0.

    ``influence`` is an object with attribute ``r_U`` (e.g.
    :class:`~ustat_gof.estimators.InfluenceSpec`); pass ``None`` together
    with ``score_U=None`` when every parameter is known, in which case
    Sigma = nu^2 H.
    """
    h1 = kernel.projection()
    nu = kernel.degree
    H = _outer_expectation(backend, h1, h1, theta0)
    G_K = _outer_expectation(backend, h1, score_K, theta0)
    if influence is None:
        return PluginMatrices.from_parts(H, None, G_K, None, None, None, nu)
    r_U = influence.r_U
    G_U = _outer_expectation(backend, h1, score_U, theta0)
    J_U = _outer_expectation(backend, h1, r_U, theta0)
    R_U = _outer_expectation(backend, r_U, r_U, theta0)
    R_U = 0.5 * (R_U + R_U.T)
    S_KU = _outer_expectation(backend, score_K, r_U, theta0)
    S_UU = _outer_expectation(backend, score_U, r_U, theta0)
    return PluginMatrices.from_parts(H, G_U, G_K, J_U, R_U, S_KU, nu, S_UU)


def quadratic_form(u: np.ndarray, sigma: np.ndarray) -> float:
    """u^T sigma^-1 u through a Cholesky solve."""
    low = _cholesky(np.atleast_2d(sigma), "Sigma")
    z = np.linalg.solve(low, np.asarray(u, dtype=float))
    return float(z @ z)


def test_statistic(
    data,
    kernel: KernelSpec,
    fit: Callable,
    matrices,
    sigma_source: SigmaSource = SigmaSource.AT_THETA_HAT,
) -> TestResult:
    """n U_n(theta_hat)^T Sigma^-1 U_n(theta_hat) with its chi-square p-value.

    ``fit(data)`` returns theta_hat. ``matrices`` is either an object with
    a ``Sigma`` attribute, a bare matrix, or a callable evaluated at
    theta_hat (the data-facing choice, Sigma at the estimate).
    """
    x = np.asarray(data, dtype=float)
    n = x.shape[0]
    theta_hat = fit(x)
    u = u_statistic(x, kernel, theta_hat)
    if callable(matrices):
        sigma = matrices(theta_hat)
    else:
        sigma = getattr(matrices, "Sigma", matrices)
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    stat = n * quadratic_form(u, sigma)
    df = kernel.out_dim
    return TestResult(
        statistic=stat,
        df=df,
        p_value=specfun.chi2_sf(stat, df),
        theta_hat=theta_hat,
        sigma_source=SigmaSource(sigma_source),
        u_n=u,
        sigma=sigma,
    )


test_statistic.__test__ = False  # keep pytest from collecting it


def noncentrality(matrices, delta_K) -> float:
    """delta_K^T M^T Sigma^-1 M delta_K."""
    drift = np.atleast_2d(matrices.M) @ np.asarray(delta_K, dtype=float)
    return quadratic_form(drift, matrices.Sigma)


def local_power(matrices, delta_K, alpha: float = 0.05, df: int | None = None) -> float:
    """Asymptotic rejection probability under the local alternative delta_K."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if df is None:
        df = np.atleast_2d(matrices.Sigma).shape[0]
    crit = specfun.chi2_quantile(1.0 - alpha, df)
    ncp = noncentrality(matrices, delta_K)
    # guard tiny negative round-off from the quadratic form
    return specfun.noncentral_chi2_sf(crit, df, max(ncp, 0.0))


def full_drift_matrix(plugin: PluginMatrices, partition) -> np.ndarray:
    """nu (G - G_U R_U^-1 S^T) over all p parameters, columns in index order.

    G = [G_K, G_U] and S = [S_KU; S_UU] are laid out according to
    ``partition``.
    """
    if plugin.S_UU is None:
        raise ValueError("S_UU is required for the full drift matrix")
    d = plugin.H.shape[0]
    p = partition.p
    G = np.zeros((d, p))
    S = np.zeros((p, plugin.R_U.shape[0]))
    G[:, list(partition.known)] = plugin.G_K
    G[:, list(partition.unknown)] = plugin.G_U
    S[list(partition.known), :] = plugin.S_KU
    S[list(partition.unknown), :] = plugin.S_UU
    return plugin.nu * (G - plugin.G_U @ _solve_pd(plugin.R_U, S.T, "R_U"))


def corollary1_reduction(M_full, delta, partition, plugin: PluginMatrices, atol: float = 1e-8):
    """Drift under a full-parameter local alternative, checked against M delta_K.

    Raises :class:`ReductionViolated` when the nuisance components of
    ``delta`` change the drift by more than ``atol`` (which happens when
    E{s_U r_U^T} differs from R_U).
    """
    if M_full is None:
        M_full = full_drift_matrix(plugin, partition)
    delta = np.asarray(delta, dtype=float)
    drift = np.asarray(M_full) @ delta
    reduced = plugin.M @ delta[list(partition.known)]
    gap = float(np.max(np.abs(drift - reduced)))
    if gap > atol:
        raise ReductionViolated(f"nuisance drift changes the drift by {gap:.3g} > {atol:.3g}")
    return drift
