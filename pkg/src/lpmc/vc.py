"""Variance-corrected quantization.

``quantize_vc`` returns grid values whose per-coordinate mean and variance
match a requested ``(mu, v)``. The variance is produced by a three-point
sampler on ``{-delta, 0, +delta}`` rather than by rounding a real Gaussian
sample, so stochastic rounding does not add its own variance on top.

Random draws per call, in order: branch ``v > delta**2/4`` takes one normal
then one uniform per coordinate; the other branch takes one uniform for the
stochastic rounding then one uniform for the correction, per coordinate.
The numba chain kernels consume the generator in the same order.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InfeasibleMomentsError
from .quant import FixedPointSpec, QuantCounters, clip, stoch_round

_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class CatPmf:
    p_plus: float
    p_minus: float
    p_zero: float
    delta: float

    def outcomes(self) -> np.ndarray:
        return np.array([self.delta, -self.delta, 0.0])

    def probs(self) -> np.ndarray:
        return np.array([self.p_plus, self.p_minus, self.p_zero])

    def mean(self) -> float:
        return float(self.delta * (self.p_plus - self.p_minus))

    def variance(self) -> float:
        second = self.delta**2 * (self.p_plus + self.p_minus)
        return float(second - self.mean() ** 2)


def cat_probs(mu, v, delta):
    """Raw ``(p_plus, p_minus)``; vectorizes over ``mu`` and ``v``."""
    two_d2 = 2.0 * delta * delta
    p_plus = (v + mu * mu + mu * delta) / two_d2
    p_minus = (v + mu * mu - mu * delta) / two_d2
    return p_plus, p_minus


def cat_pmf(mu: float, v: float, delta: float) -> CatPmf:
    if delta <= 0:
        raise ValueError("delta must be positive")
    if v < 0:
        raise InfeasibleMomentsError(f"variance must be >= 0, got {v}")
    p_plus, p_minus = cat_probs(mu, v, delta)
    if p_minus < -_FEAS_TOL or p_plus < -_FEAS_TOL or p_plus + p_minus > 1.0 + _FEAS_TOL:
        raise InfeasibleMomentsError(
            f"no pmf on {{-d, 0, d}} has mean {mu} and variance {v} (d={delta})")
    p_plus = min(max(p_plus, 0.0), 1.0)
    p_minus = min(max(p_minus, 0.0), 1.0 - p_plus)
    return CatPmf(p_plus, p_minus, 1.0 - p_plus - p_minus, delta)


def cat_sample(mu: float, v: float, delta: float, rng: np.random.Generator) -> float:
    pmf = cat_pmf(mu, v, delta)
    u = rng.random()
    return _cat_pick(u, pmf.p_plus, pmf.p_minus, delta)


def _cat_pick(u, p_plus, p_minus, delta):
    return np.where(u < p_plus, delta, np.where(u < p_plus + p_minus, -delta, 0.0))


def rounding_variance(r, delta):
    """Variance stochastic rounding contributes given the residual ``r = mu - Q^s(mu)``.

    Equals ``a * (delta - a)`` with ``a = |r|`` whichever neighbour was chosen.
    """
    a = np.abs(r)
    t = -r + np.sign(r) * delta
    return (1.0 - a / delta) * r * r + (a / delta) * (t * t)


def quantize_vc(mu, v: float, spec: FixedPointSpec, rng: np.random.Generator,
                counters: Optional[QuantCounters] = None) -> np.ndarray:
    """Grid-valued sample with mean ``mu`` and variance ``v`` per coordinate.

    When ``v`` is below the variance stochastic rounding already injects at a
    coordinate, that coordinate is left as plain stochastic rounding and its
    variance overshoots ``v``.  Results are clipped to the representable
    range at the end; clipped coordinates are counted in ``counters``.
    """
    if v < 0:
        raise ValueError("v must be >= 0")
    mu = np.asarray(mu, dtype=float)
    d = spec.delta
    v0 = d * d / 4.0
    if v > v0:
        xi = rng.standard_normal(mu.shape)
        x = mu + np.sqrt(v - v0) * xi
        # unclipped rounding keeps |r| <= d/2, which makes Cat(|r|, v0) feasible
        q = d * np.rint(x / d)
        r = x - q
        a = np.abs(r)
        u = rng.random(mu.shape)
        p_plus, p_minus = cat_probs(a, v0, d)
        c = _cat_pick(u, p_plus, np.maximum(p_minus, 0.0), d)
        theta = q + np.sign(r) * c
    else:
        q = stoch_round(mu, d, rng)
        r = mu - q
        vs = rounding_variance(r, d)
        u = rng.random(mu.shape)
        need = v > vs
        w = v - vs
        capped = need & (w > d * d)
        if counters is not None:
            counters.cat_clamped += int(np.count_nonzero(capped))
        w = np.minimum(w, d * d)
        p_plus, p_minus = cat_probs(0.0, w, d)
        c = _cat_pick(u, p_plus, p_minus, d)
        theta = np.where(need, q + c, q)
    return clip(theta, spec, counters)
