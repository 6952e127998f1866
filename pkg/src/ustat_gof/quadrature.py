"""Adaptive Gauss-Kronrod expectations against univariate densities."""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import integrate

__all__ = ["expect_quad"]

EPSABS = 1e-13
EPSREL = 1e-12


def expect_quad(
    fn: Callable[[float], np.ndarray],
    log_density: Callable[[float], float],
    loc: float = 0.0,
    scale: float = 1.0,
    *,
    epsabs: float = EPSABS,
    epsrel: float = EPSREL,
    sides: tuple[int, ...] = (-1, 1),
) -> np.ndarray:
    """Return E[fn(X)] by adaptive Gauss-Kronrod quadrature.

    The real line is split at ``loc`` (where kernels built from
    ``|x - loc|`` are non-smooth); each half line is integrated in the
    standardised variable ``u = |x - loc| / scale`` with a breakpoint at
    ``u = 1``. ``sides`` restricts the integral to one half line.
    """

    def integrand(u, side):
        x = loc + side * scale * u
        return np.asarray(fn(x), dtype=float) * np.exp(log_density(x)) * scale

    total = 0.0
    for side in sides:
        for a, b in ((0.0, 1.0), (1.0, np.inf)):
            val, _ = integrate.quad_vec(
                integrand, a, b, args=(side,), epsabs=epsabs, epsrel=epsrel, limit=500
            )
            total = total + val
    return np.asarray(total, dtype=float)
