"""Independent reference computations used as test oracles.

Nothing here imports the code under test's formulas; each helper is a
second, separately written route to the same quantity.
"""

import mpmath as mp
import numpy as np

mp.mp.dps = 50


def theory_hp(mu_f, B_G, L_F, m, n, a, alpha, K):
    """High-precision constants, written from the beta-substituted form.

    beta1 = (1-1/m)(1-1/n), beta2 = 1-1/m, beta3 = 1-1/n.
    """
    mu, B, L, al = (mp.mpf(v) for v in (mu_f, B_G, L_F, alpha))
    m, n, a = mp.mpf(m), mp.mpf(n), mp.mpf(a)
    b1 = (1 - 1 / m) * (1 - 1 / n)
    b2 = 1 - 1 / m
    b3 = 1 - 1 / n
    lip = B**4 * L**2
    outer_poly = (m - 1) ** 2 * b3 * (n + 2) + (n - 1) * (4 * m - 3)
    inner_poly = (m - 1) ** 2 * (2 * n - 1) + n + 4 * n * (m - 1)
    sigma1 = 9 * al**2 * outer_poly + 16 * al * n * (b1**2 * m**2 + b3**2) / mu
    sigma2 = 9 * al**2 / m * inner_poly + 16 * al * (b2**2 * m + 16 * (m - a)) / (m**2 * mu)
    gamma1 = 1 / mp.mpf(K) + (n * sigma1 + 3 * m * (1 - (a / m) ** 2) * sigma2) * lip
    gamma2 = al * mu - (32 * al * (m - a) / (m * mu) + 3 * a * (2 - a / m) * sigma2) * lip
    # step-size thresholds: solve each "term < alpha*mu/c" condition for alpha
    pen2 = 16 * (b2**2 * m + 16 * (m - a)) / (m**2 * mu)
    alpha1 = m * (mu / (12 * a * (2 - a / m) * lip) - pen2) / (9 * inner_poly)
    if outer_poly == 0:
        alpha2 = mp.inf if mu / (8 * n * lip) > 0 else -mp.inf
    else:
        alpha2 = (mu / (8 * n * lip) - 16 * n * (b1**2 * m**2 + b3**2) / mu) / (9 * outer_poly)
    if a == m:
        alpha3 = mp.inf
    else:
        alpha3 = m * (mu / (24 * m * (1 - (a / m) ** 2) * lip) - pen2) / (9 * inner_poly)
    return dict(
        sigma1=sigma1, sigma2=sigma2, gamma1=gamma1, gamma2=gamma2,
        a_min=m * (1 - mu**2 / (128 * lip)),
        alpha1=alpha1, alpha2=alpha2, alpha3=alpha3,
        K_min=8 / (al * mu),
    )


def power_iteration(matvec, dim, iters=500, seed=0):
    """Largest eigenvalue of a symmetric PSD operator."""
    v = np.random.default_rng(seed).standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = matvec(v)
        lam = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
    return lam


def mean_variance_objective(R, x):
    """Negated mean-variance value written straight from its definition."""
    n = R.shape[0]
    returns = [float(np.dot(R[i], x)) for i in range(n)]
    mean = sum(returns) / n
    var = sum((r - mean) ** 2 for r in returns) / n
    return -(mean - var)
