"""Compiled hot loops: whole-chain runs on the analytic targets, and the KDE.

Each kernel mirrors a numpy reference (``lpmc.samplers`` steppers and
``lpmc.metrics.kde_values_numpy``) operation by operation, including the order
in which the shared ``np.random.Generator`` is consumed, so the two paths
give the same chains. With ``LPMC_DISABLE_JIT=1`` the functions below run as
plain Python, which is only useful for debugging them.
"""

import math

import numpy as np

from ._jit import njit

KIND_CODES = {
    "sgld": 0, "sgld_lpf": 1, "sgld_lpl": 2, "sgld_vc": 3,
    "sghmc": 4, "sghmc_lpf": 5, "sghmc_lpl": 6, "sghmc_vc": 7,
}
TARGET_CODES = {"gaussian": 0, "mixture": 1}

# slots of the float parameter vector
P_ETA, P_SQRT2ETA, P_DECAY, P_CV, P_CXV, P_CX, P_A, P_B, P_C, P_VAR_X, P_VAR_V = range(11)
# counter slots
C_WCLIP, C_GCLIP, C_CAT = range(3)


@njit(nogil=True)
def _clip(x, lo, hi):
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


@njit(nogil=True)
def _grad(target, x, out):
    if target == 0:
        for i in range(x.size):
            out[i] = x[i]
    else:
        for i in range(x.size):
            out[i] = 4.0 * x[i] - 4.0 * np.tanh(4.0 * x[i])


@njit(nogil=True)
def _grad_noise(g, sigma, rng):
    if sigma > 0.0:
        for i in range(g.size):
            g[i] = g[i] + sigma * rng.standard_normal()


@njit(nogil=True)
def _stoch(src, out, q, rng, counters, slot):
    """Clip then stochastically round ``src`` into ``out``; ``q = (lo, hi, delta)``."""
    lo, hi, d = q[0], q[1], q[2]
    for i in range(src.size):
        x = src[i]
        if x < lo or x > hi:
            counters[slot] += 1
        x = _clip(x, lo, hi)
        scaled = x / d
        fl = np.floor(scaled)
        frac = scaled - fl
        u = rng.random()
        if u < frac:
            out[i] = d * (fl + 1.0)
        else:
            out[i] = d * (fl + 0.0)


@njit(nogil=True)
def _pick(u, p_plus, p_minus, d):
    if u < p_plus:
        return d
    if u < p_plus + p_minus:
        return -d
    return 0.0


@njit(nogil=True)
def _vc(mu, v, out, q, rng, counters, tmp):
    lo, hi, d = q[0], q[1], q[2]
    n = mu.size
    v0 = d * d / 4.0
    two_d2 = 2.0 * d * d
    if v > v0:
        s = np.sqrt(v - v0)
        for i in range(n):
            tmp[i] = mu[i] + s * rng.standard_normal()
        for i in range(n):
            x = tmp[i]
            qd = d * np.rint(x / d)
            r = x - qd
            a = np.abs(r)
            u = rng.random()
            p_plus = (v0 + a * a + a * d) / two_d2
            p_minus = max((v0 + a * a - a * d) / two_d2, 0.0)
            out[i] = qd + np.sign(r) * _pick(u, p_plus, p_minus, d)
    else:
        for i in range(n):
            x = mu[i]
            scaled = x / d
            fl = np.floor(scaled)
            frac = scaled - fl
            if rng.random() < frac:
                tmp[i] = d * (fl + 1.0)
            else:
                tmp[i] = d * (fl + 0.0)
        for i in range(n):
            qs = tmp[i]
            r = mu[i] - qs
            a = np.abs(r)
            t = -r + np.sign(r) * d
            vs = (1.0 - a / d) * r * r + (a / d) * (t * t)
            u = rng.random()
            if v > vs:
                w = v - vs
                if w > d * d:
                    counters[C_CAT] += 1
                    w = d * d
                p = (w + 0.0 * 0.0 + 0.0 * d) / two_d2
                out[i] = qs + _pick(u, p, p, d)
            else:
                out[i] = qs
    for i in range(n):
        x = out[i]
        if x < lo or x > hi:
            counters[C_WCLIP] += 1
        out[i] = _clip(x, lo, hi)


@njit(nogil=True)
def _chain(kind, target, x, v, s_v, iterations, burn_in, thinning, prm, wq, gq,
           sigma, rescale, rng, xs, vs, svs, iters, counters):
    d = x.size
    g = np.empty(d)
    xq = np.empty(d)
    z1 = np.empty(d)
    z2 = np.empty(d)
    mv = np.empty(d)
    mx = np.empty(d)
    tmp = np.empty(d)
    eta, s2 = prm[P_ETA], prm[P_SQRT2ETA]
    decay, cv, cxv, cx = prm[P_DECAY], prm[P_CV], prm[P_CXV], prm[P_CX]
    na, nb, nc = prm[P_A], prm[P_B], prm[P_C]
    upper = wq[1]
    j = 0
    for k in range(1, iterations + 1):
        if kind == 1 or kind == 5:
            _stoch(x, xq, wq, rng, counters, C_WCLIP)
            _grad(target, xq, g)
        else:
            _grad(target, x, g)
        _grad_noise(g, sigma, rng)
        if kind != 0 and kind != 4:
            _stoch(g, g, gq, rng, counters, C_GCLIP)

        if kind <= 2:
            for i in range(d):
                z1[i] = rng.standard_normal()
            for i in range(d):
                mx[i] = x[i] - eta * g[i] + s2 * z1[i]
            if kind == 2:
                _stoch(mx, x, wq, rng, counters, C_WCLIP)
            else:
                for i in range(d):
                    x[i] = mx[i]
        elif kind == 3:
            for i in range(d):
                mx[i] = x[i] - eta * g[i]
            _vc(mx, 2.0 * eta, x, wq, rng, counters, tmp)
        else:
            if kind != 7:
                for i in range(d):
                    z1[i] = rng.standard_normal()
                for i in range(d):
                    z2[i] = rng.standard_normal()
            for i in range(d):
                vv = v[i] * s_v
                mv[i] = vv * decay - cv * g[i]
                mx[i] = x[i] + cxv * vv - cx * g[i]
            if kind == 4 or kind == 5:
                for i in range(d):
                    v[i] = mv[i] + na * z1[i]
                    x[i] = mx[i] + (nb * z1[i] + nc * z2[i])
            else:
                if rescale:
                    m = 0.0
                    for i in range(d):
                        m = max(m, np.abs(mv[i]))
                    m = m / upper
                    if m > 0.0:
                        s_v = m
                if kind == 6:
                    for i in range(d):
                        mv[i] = (mv[i] + na * z1[i]) / s_v
                        mx[i] = mx[i] + (nb * z1[i] + nc * z2[i])
                    _stoch(mv, v, wq, rng, counters, C_WCLIP)
                    _stoch(mx, x, wq, rng, counters, C_WCLIP)
                else:
                    for i in range(d):
                        mv[i] = mv[i] / s_v
                    _vc(mv, prm[P_VAR_V] / (s_v * s_v), v, wq, rng, counters, tmp)
                    _vc(mx, prm[P_VAR_X], x, wq, rng, counters, tmp)

        if k > burn_in and (k - burn_in) % thinning == 0:
            iters[j] = k
            for i in range(d):
                xs[j, i] = x[i]
                vs[j, i] = v[i] * s_v
            svs[j] = s_v
            j += 1
    return s_v


def _qvec(spec):
    if spec is None:
        return np.array([-np.inf, np.inf, 1.0])
    return np.array([spec.lower, spec.upper, spec.delta])


def run_chain_kernel(config, src, rng, state):
    from .samplers import Chain, ChainState, chain_diagnostics, hmc_noise_cov

    prm = np.zeros(11)
    if config.is_hmc:
        p = config.hmc
        cov = hmc_noise_cov(p)
        na, nb, nc = cov.factors()
        prm[P_DECAY], prm[P_CV], prm[P_CXV], prm[P_CX] = p.decay, p.v_grad_coef, p.x_vel_coef, p.x_grad_coef
        prm[P_A], prm[P_B], prm[P_C] = na, nb, nc
        prm[P_VAR_X], prm[P_VAR_V] = cov.s_xx, cov.s_vv
    else:
        prm[P_ETA], prm[P_SQRT2ETA] = config.eta, math.sqrt(2.0 * config.eta)
    specs = config.specs
    wq = _qvec(config.weight_spec)
    gq = _qvec(specs.grad_spec if specs is not None else None)

    n, d = config.n_records, src.dim
    xs = np.empty((n, d))
    vs = np.empty((n, d))
    svs = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    counters = np.zeros(3, dtype=np.int64)
    x = state.x.astype(float).copy()
    v = state.v.astype(float).copy()
    s_v = _chain(KIND_CODES[config.kind], TARGET_CODES[src.target.name], x, v, float(state.s_v),
                 config.iterations, config.burn_in, config.thinning, prm, wq, gq,
                 float(src.noise_sigma), bool(config.rescale_momentum), rng,
                 xs, vs, svs, iters, counters)
    diag = chain_diagnostics(config, counters[C_WCLIP], counters[C_GCLIP], counters[C_CAT], "numba")
    return Chain(iters, xs, vs if config.is_hmc else None, svs, diag, ChainState(x, v, s_v))


@njit(nogil=True)
def kde_kernel(samples, grid, h):
    """Gaussian KDE values on ``grid``; O(n * m) direct sum."""
    m = grid.size
    n = samples.size
    out = np.zeros(m)
    norm = 1.0 / (n * h * math.sqrt(2.0 * math.pi))
    for j in range(m):
        acc = 0.0
        gj = grid[j]
        for i in range(n):
            z = (gj - samples[i]) / h
            acc += math.exp(-0.5 * z * z)
        out[j] = acc * norm
    return out
