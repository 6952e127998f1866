"""Independent reference computations used only by the tests.

Nothing here imports the package's quadrature or special-function code:
densities are transcribed directly with SciPy's gamma functions and
integrated with ``scipy.integrate.quad``.
"""

import math

import numpy as np
from scipy import integrate, special


def apd_density_ref(x, t1, t2, mu, sigma, lam):
    y = (x - mu) / sigma
    delta = 2 * t1**t2 * (1 - t1) ** t2 / (t1**t2 + (1 - t1) ** t2)
    if y < 0:
        a = t1**t2
    elif y > 0:
        a = (1 - t1) ** t2
    else:
        a = 0.5**t2
    return (delta / lam) ** (1 / t2) / (sigma * special.gamma(1 + 1 / t2)) * math.exp(
        -delta / (lam * a) * abs(y) ** t2
    )


def epd_density_ref(y, lam):
    return math.exp(-abs(y) ** lam / lam) / (2 * lam ** (1 / lam) * special.gamma(1 + 1 / lam))


def quad_line(f, center=0.0, scale=1.0):
    """Integral of f over the real line, split at center and center +/- scale."""
    pieces = [(-np.inf, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, np.inf)]
    total = 0.0
    for a, b in pieces:
        val, _ = integrate.quad(
            lambda u: f(center + scale * u) * scale, a, b, epsabs=1e-14, epsrel=1e-13, limit=400
        )
        total += val
    return total


def epd_expect(f, lam):
    """E f(Y) for Y ~ EPD_lam(0, 1)."""
    return quad_line(lambda y: f(y) * epd_density_ref(y, lam))


def score_k_ref(y, lam):
    a = abs(y)
    pl = a**lam * math.log(a) if a > 0 else 0.0
    return (
        -2 * a**lam * np.sign(y),
        -(pl - (math.log(lam) + special.digamma(1 + 1 / lam)) / lam) / lam,
    )


def score_u_ref(y, lam):
    a = abs(y)
    return (a ** (lam - 1) * np.sign(y), a**lam - 1)


def outer_expect(f, g, lam):
    """Matrix of E f_i(Y) g_j(Y) under EPD_lam(0, 1)."""
    m = len(f(0.3))
    k = len(g(0.3))
    return np.array(
        [[epd_expect(lambda y, i=i, j=j: f(y)[i] * g(y)[j], lam) for j in range(k)] for i in range(m)]
    )


def bisect(fn, target, lo, hi, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def apd_expect(f, t1, t2, mu, sigma, lam):
    return quad_line(lambda x: f(x) * apd_density_ref(x, t1, t2, mu, sigma, lam), center=mu, scale=sigma)


def pseudo_true_nuisance(t1, t2, lam, estimator):
    """Probability limit of (mu_hat, sigma_hat) under APD(t1, t2, 0, 1)."""
    from scipy import optimize

    if estimator == "mom":
        m = apd_expect(lambda x: x, t1, t2, 0.0, 1.0, lam)
        v = apd_expect(lambda x: (x - m) ** 2, t1, t2, 0.0, 1.0, lam)
        k = lam ** (2 / lam) * special.gamma(1 + 3 / lam) / (3 * special.gamma(1 + 1 / lam))
        return m, math.sqrt(v / k)

    def eq(p):
        mu, s = p
        return [
            apd_expect(lambda x, i=i: score_u_ref((x - mu) / s, lam)[i], t1, t2, 0.0, 1.0, lam)
            for i in range(2)
        ]

    mu, s = optimize.fsolve(eq, [0.0, 1.0], xtol=1e-13)
    return mu, s


def finite_n_drift(delta, n, lam, estimator):
    """sqrt(n) E_{theta_n} s_K(X; 1/2, lam, mu*, sigma*) at the pseudo-true nuisance.

    The exact-n mean of sqrt(n) U_n, up to O(1/sqrt(n)) sampling terms,
    without linearising in delta.
    """
    t1 = 0.5 + delta[0] / math.sqrt(n)
    t2 = lam + delta[1] / math.sqrt(n)
    mu, s = pseudo_true_nuisance(t1, t2, lam, estimator)
    return math.sqrt(n) * np.array(
        [apd_expect(lambda x, i=i: score_k_ref((x - mu) / s, lam)[i], t1, t2, 0.0, 1.0, lam) for i in range(2)]
    )
