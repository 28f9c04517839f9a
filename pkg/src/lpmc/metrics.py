"""Distances and summaries used to compare sampler output with a target."""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import logsumexp

from . import _jit
from .errors import EmptySamplesError, GridMismatchError, TooFewSamplesError

DEFAULT_GRID_POINTS = 512


@dataclass
class DensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    bandwidth: Optional[float] = None

    def mass(self) -> float:
        return float(trapezoid(self.values, self.grid))

    def local_maxima(self) -> np.ndarray:
        """Grid locations of strict interior local maxima."""
        y = self.values
        idx = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
        return self.grid[idx]


def empirical_w2_1d(samples, quantile: Callable) -> float:
    """2-Wasserstein distance to a 1-D law via the quantile coupling.

    Sorted samples are paired with the target quantiles at the midpoint
    plotting positions ``(i - 0.5) / n``.
    """
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = x.size
    if n == 0:
        raise EmptySamplesError("W2 needs samples")
    if n < 2:
        raise TooFewSamplesError("W2 needs at least 2 samples")
    q = np.asarray(quantile((np.arange(1, n + 1) - 0.5) / n), dtype=float)
    return float(np.sqrt(np.mean((x - q) ** 2)))


def scott_bandwidth(samples) -> float:
    x = np.asarray(samples, dtype=float)
    return float(x.size ** (-0.2) * np.std(x))


def default_grid(samples, bandwidth: float, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    return np.linspace(x.min() - 3.0 * bandwidth, x.max() + 3.0 * bandwidth, points)


def kde_values_numpy(samples, grid, h, chunk: int = 1 << 22):
    samples = np.asarray(samples, dtype=float)
    out = np.empty(grid.size)
    step = max(1, chunk // max(samples.size, 1))
    c = 1.0 / (samples.size * h * np.sqrt(2.0 * np.pi))
    for start in range(0, grid.size, step):
        z = (grid[start:start + step, None] - samples[None, :]) / h
        out[start:start + step] = np.exp(-0.5 * z * z).sum(axis=1) * c
    return out


def kde_density(samples, grid=None, bandwidth: Union[float, str] = "scott",
                backend: Optional[str] = None) -> DensityEstimate:
    """Gaussian-kernel density estimate.

    ``grid=None`` uses 512 points over ``[min - 3h, max + 3h]``.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise EmptySamplesError("KDE needs samples")
    if bandwidth == "scott":
        h = scott_bandwidth(x)
        if h == 0.0:
            raise ValueError("scott bandwidth is zero for constant samples; pass a bandwidth")
    else:
        h = float(bandwidth)
        if not h > 0:
            raise ValueError("bandwidth must be positive")
    grid = default_grid(x, h) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise EmptySamplesError("KDE needs a non-empty grid")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly ascending")
    if _jit.resolve_backend(backend) == "numba":
        from .kernels import kde_kernel

        values = kde_kernel(x, grid, h)
    else:
        values = kde_values_numpy(x, grid, h)
    return DensityEstimate(grid, values, h)


def l2_density_distance(a: DensityEstimate, b: DensityEstimate) -> float:
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise GridMismatchError("density estimates live on different grids")
    diff = a.values - b.values
    return float(np.sqrt(trapezoid(diff * diff, a.grid)))


def density_on_grid(pdf: Callable, grid) -> DensityEstimate:
    grid = np.asarray(grid, dtype=float)
    return DensityEstimate(grid, np.asarray(pdf(grid), dtype=float))


def summary_stats(samples):
    """Sample mean and unbiased variance (per column for 2-D input)."""
    x = np.asarray(samples, dtype=float)
    if x.shape[0] < 2:
        raise TooFewSamplesError("need at least 2 samples")
    mean = x.mean(axis=0)
    var = x.var(axis=0, ddof=1)
    if x.ndim == 1:
        return float(mean), float(var)
    return mean, var


def avg_nll(target, weight_samples: Sequence, dataset=None) -> float:
    """NLL of the posterior-predictive mean, averaged over data points."""
    ws = list(weight_samples)
    if not ws:
        raise EmptySamplesError("avg_nll needs at least one weight sample")
    ds = target.dataset if dataset is None else dataset
    idx = np.arange(len(ds.labels))
    log_p = []
    for w in ws:
        z = target.logits(w, ds.features)
        log_p.append(z[idx, ds.labels] - logsumexp(z, axis=1))
    log_mean = logsumexp(np.stack(log_p), axis=0) - np.log(len(ws))
    return float(-np.mean(log_mean))
