"""Asymmetric power distribution APD_lambda(theta1, theta2, mu, sigma).

The exponential power distribution EPD_lambda(mu, sigma) is the symmetric
member theta1 = 1/2, theta2 = lambda; lambda = 2 is the normal law and
lambda = 1 the Laplace law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import specfun
from .errors import DomainError
from .quadrature import expect_quad

__all__ = [
    "ParamVector",
    "PartitionMask",
    "EPD_PARTITION",
    "apd_delta",
    "apd_log_density",
    "apd_density",
    "apd_sample",
    "negative_branch_mass",
    "epd_moment_abs",
    "epd_moment_abs_log",
]


@dataclass(frozen=True)
class ParamVector:
    """A point theta = (theta1, theta2, mu, sigma) of the APD family.

    ``lam`` is the auxiliary exponent; it is fixed per model and is not a
    component of theta.
    """

    theta1: float
    theta2: float
    mu: float
    sigma: float
    lam: float

    def __post_init__(self):
        for name in ("theta1", "theta2", "mu", "sigma", "lam"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if not 0.0 < self.theta1 < 1.0:
            raise DomainError(f"theta1 must lie in (0, 1), got {self.theta1}")
        if self.theta2 <= 0.0:
            raise DomainError(f"theta2 must be positive, got {self.theta2}")
        if self.sigma <= 0.0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.lam <= 0.0:
            raise DomainError(f"lambda must be positive, got {self.lam}")

    @classmethod
    def null(cls, lam: float, mu: float = 0.0, sigma: float = 1.0) -> "ParamVector":
        """The EPD point (1/2, lam, mu, sigma)."""
        return cls(0.5, lam, mu, sigma, lam)

    @property
    def is_null(self) -> bool:
        return self.theta1 == 0.5 and self.theta2 == self.lam

    def with_nuisance(self, mu: float, sigma: float) -> "ParamVector":
        return replace(self, mu=mu, sigma=sigma)

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.mu, self.sigma])

    @classmethod
    def from_array(cls, values, lam: float) -> "ParamVector":
        t1, t2, mu, sigma = (float(v) for v in values)
        return cls(t1, t2, mu, sigma, lam)


@dataclass(frozen=True)
class PartitionMask:
    """Split of the parameter indices into known (K) and unknown (U) sets.

    Indices are 0-based positions in ``ParamVector.as_array()``.
    """

    known: tuple[int, ...]
    unknown: tuple[int, ...]

    def __post_init__(self):
        known, unknown = tuple(self.known), tuple(self.unknown)
        object.__setattr__(self, "known", known)
        object.__setattr__(self, "unknown", unknown)
        if set(known) & set(unknown):
            raise DomainError("known and unknown index sets must be disjoint")
        if sorted(known + unknown) != list(range(len(known) + len(unknown))):
            raise DomainError("known and unknown indices must cover 0..p-1")

    @property
    def p(self) -> int:
        return len(self.known) + len(self.unknown)


EPD_PARTITION = PartitionMask(known=(0, 1), unknown=(2, 3))


def apd_delta(theta1: float, theta2: float) -> float:
    """delta = 2 t^a (1-t)^a / (t^a + (1-t)^a) with t = theta1, a = theta2."""
    a = theta1**theta2
    b = (1.0 - theta1) ** theta2
    return 2.0 * a * b / (a + b)


def apd_log_density(x, theta: ParamVector):
    """Log-density of APD_lambda(theta) at ``x`` (scalar or array)."""
    lam = theta.lam
    t1, t2 = theta.theta1, theta.theta2
    delta = apd_delta(t1, t2)
    log_norm = (math.log(delta) - math.log(lam)) / t2 - math.log(theta.sigma) - specfun.ln_gamma(
        1.0 + 1.0 / t2
    )
    y = (np.asarray(x, dtype=float) - theta.mu) / theta.sigma
    # A(y) = {1/2 + sign(y)(1/2 - theta1)}^theta2; sign(0) = 0 picks (1/2)^theta2
    branch = (0.5 + np.sign(y) * (0.5 - t1)) ** t2
    out = log_norm - delta / (lam * branch) * np.abs(y) ** t2
    return out if out.ndim else float(out)


def apd_density(x, theta: ParamVector):
    return np.exp(apd_log_density(x, theta))


@lru_cache(maxsize=1024)
def negative_branch_mass(theta: ParamVector) -> float:
    """P(X < mu) under APD_lambda(theta), by quadrature of the density.

    Numerically this equals theta1 (checked to 1e-10 in the tests); it is
    still computed rather than assumed.
    """
    val = expect_quad(
        lambda x: np.ones(1), lambda x: apd_log_density(x, theta), theta.mu, theta.sigma, sides=(-1,)
    )
    return float(val[0])


def apd_sample(theta: ParamVector, rng: np.random.Generator, size=None):
    """Draw from APD_lambda(theta) using ``rng``.

    Picks the negative branch with probability :func:`negative_branch_mass`,
    draws T ~ Gamma(1/theta2) and maps it to
    mu -/+ sigma * w * (lam T / delta)^(1/theta2) with w = theta1 on the
    negative side and 1 - theta1 on the positive side.
    """
    p_neg = negative_branch_mass(theta)
    delta = apd_delta(theta.theta1, theta.theta2)
    n = 1 if size is None else size
    u = rng.random(n)
    t = rng.standard_gamma(1.0 / theta.theta2, n)
    radius = (theta.lam * t / delta) ** (1.0 / theta.theta2)
    neg = u < p_neg
    weight = np.where(neg, -theta.theta1, 1.0 - theta.theta1)
    x = theta.mu + theta.sigma * weight * radius
    return float(x[0]) if size is None else x


def _check_moment_args(a: float, lam: float) -> None:
    if not a > -1.0:
        raise DomainError(f"moment order must exceed -1, got {a!r}")
    if not lam >= 1.0:
        raise DomainError(f"lambda must be >= 1, got {lam!r}")


def epd_moment_abs(a: float, lam: float) -> float:
    """E|Y|^a for Y ~ EPD_lam(0, 1)."""
    _check_moment_args(a, lam)
    return math.exp(
        (a / lam - 1.0) * math.log(lam)
        + specfun.ln_gamma((a + 1.0) / lam)
        - specfun.ln_gamma(1.0 + 1.0 / lam)
    )


def epd_moment_abs_log(a: float, lam: float) -> float:
    """E[|Y|^a ln|Y|] for Y ~ EPD_lam(0, 1)."""
    _check_moment_args(a, lam)
    s = (a + 1.0) / lam
    return epd_moment_abs(a, lam) / lam * (math.log(lam) + specfun.digamma(s))
