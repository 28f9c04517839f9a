"""Independent reference computations used by the test suite."""

import mpmath as mp
import numpy as np


def fd_check(energy, grad, probes, h=1e-6, tol=1e-5):
    """Largest scaled gap between ``grad`` and a central difference of ``energy``."""
    worst = 0.0
    for x in probes:
        x = np.asarray(x, dtype=float)
        g = np.asarray(grad(x), dtype=float).reshape(-1)
        fd = np.empty_like(g)
        for i in range(x.size):
            e = np.zeros_like(x)
            e.flat[i] = h
            fd[i] = (energy(x + e) - energy(x - e)) / (2 * h)
        scale = np.maximum(1.0, np.abs(fd))
        worst = max(worst, float(np.max(np.abs(g - fd) / scale)))
    return worst, worst < tol


def noise_cov_quad(u, gamma, eta, dps=40):
    """Covariance of the exact OU increment by numerical quadrature of the Ito integrals.

    With s the time left in the step, the position picks up ``(1 - e^{-gamma s}) / gamma``
    and the momentum ``e^{-gamma s}`` per unit of driving noise ``sqrt(2 gamma u) dW``.
    """
    with mp.workdps(dps):
        g, u, eta = mp.mpf(gamma), mp.mpf(u), mp.mpf(eta)
        k = 2 * g * u
        fx = lambda s: (1 - mp.e ** (-g * s)) / g
        fv = lambda s: mp.e ** (-g * s)
        sxx = k * mp.quad(lambda s: fx(s) ** 2, [0, eta])
        sxv = k * mp.quad(lambda s: fx(s) * fv(s), [0, eta])
        svv = k * mp.quad(lambda s: fv(s) ** 2, [0, eta])
        return float(sxx), float(sxv), float(svv)


def hmc_linear_map(u, gamma, eta):
    """Transition matrix of the exact integrator when the gradient is x (standard normal)."""
    with mp.workdps(40):
        g, u, eta = mp.mpf(gamma), mp.mpf(u), mp.mpf(eta)
        decay = mp.e ** (-g * eta)
        cv = u / g * (1 - decay)
        cxv = (1 - decay) / g
        cx = u / g ** 2 * (g * eta + decay - 1)
        return np.array([[float(1 - cx), float(cxv)], [float(-cv), float(decay)]])


def lyapunov_fixed_point(a, q, tol=1e-15, max_iter=10_000_000):
    """Iterate S <- A S A^T + Q until it stops moving."""
    s = np.zeros_like(q)
    for _ in range(max_iter):
        nxt = a @ s @ a.T + q
        if np.max(np.abs(nxt - s)) < tol * max(1.0, np.max(np.abs(nxt))):
            return nxt
        s = nxt
    raise RuntimeError("Lyapunov iteration did not converge")


def stationary_hmc_cov(u, gamma, eta):
    sxx, sxv, svv = noise_cov_quad(u, gamma, eta)
    q = np.array([[sxx, sxv], [sxv, svv]])
    return lyapunov_fixed_point(hmc_linear_map(u, gamma, eta), q)


def sgld_ar1_variance(eta):
    """x' = (1 - eta) x + sqrt(2 eta) z has stationary variance 2 eta / (1 - (1 - eta)^2)."""
    return 2 * eta / (1 - (1 - eta) ** 2)
