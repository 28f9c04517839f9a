"""Sampling targets: energies, gradients and 1-D distribution utilities."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp, ndtr, ndtri

from .errors import DimensionMismatchError


class Target:
    """Energy ``U`` with exact gradient; ``p(x) ∝ exp(-U(x))``.

    1-D targets also provide ``pdf``, ``cdf`` and ``quantile``.
    """

    name = "target"
    dim: int

    def energy(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError(f"{self.name} has no closed-form density")

    def cdf(self, x):
        raise NotImplementedError(f"{self.name} has no closed-form cdf")

    def quantile(self, p):
        raise NotImplementedError(f"{self.name} has no quantile function")


class GaussianTarget(Target):
    name = "gaussian"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)

    def energy(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ x)

    def grad(self, x):
        return np.array(x, dtype=float)

    # per-coordinate marginals are all standard normal
    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)

    def cdf(self, x):
        return ndtr(x)

    def quantile(self, p):
        return ndtri(p)


class MixtureTarget(Target):
    """Equal-weight mixture of N(-1, 1/4) and N(1, 1/4).

    ``U(x) = -log(exp(-2(x-1)^2) + exp(-2(x+1)^2))``, evaluated as
    ``2x^2 + 2 - logaddexp(4x, -4x)`` so neither exponential can overflow.
    """

    name = "mixture"
    dim = 1
    _bracket = (-12.0, 12.0)

    def energy(self, x):
        x = float(np.asarray(x, dtype=float).reshape(-1)[0])
        return 2.0 * x * x + 2.0 - float(np.logaddexp(4.0 * x, -4.0 * x))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return 4.0 * x - 4.0 * np.tanh(4.0 * x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return (np.exp(-2.0 * (x - 1.0) ** 2) + np.exp(-2.0 * (x + 1.0) ** 2)) / np.sqrt(2.0 * np.pi)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (ndtr(2.0 * (x - 1.0)) + ndtr(2.0 * (x + 1.0)))

    def quantile(self, p, tol: float = 1e-10):
        """Vectorized bisection on the cdf, to bracket width ``tol``."""
        p = np.asarray(p, dtype=float)
        lo = np.full(p.shape, self._bracket[0])
        hi = np.full(p.shape, self._bracket[1])
        while np.max(hi - lo, initial=0.0) > tol:
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        return out if out.ndim else float(out)


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: Optional[int] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise DimensionMismatchError("features must be an N x d matrix")
        if len(self.labels) != len(self.features):
            raise DimensionMismatchError("features and labels disagree on N")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        if self.num_classes is None:
            self.num_classes = int(self.labels.max()) + 1 if len(self.labels) else 2
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("labels outside [0, num_classes)")

    def __len__(self):
        return len(self.labels)

    @property
    def width(self) -> int:
        return self.features.shape[1]


class LogisticTarget(Target):
    """Multiclass softmax regression with an isotropic Gaussian prior.

    Weights are a ``(num_classes, width)`` matrix flattened row-major.
    """

    name = "logistic"

    def __init__(self, dataset: LabeledDataset, prior_variance: float):
        if prior_variance <= 0:
            raise ValueError("prior_variance must be positive")
        self.dataset = dataset
        self.prior_variance = float(prior_variance)
        self.num_classes = dataset.num_classes
        self.width = dataset.width
        self.dim = self.num_classes * self.width

    def weights(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.size != self.dim:
            raise DimensionMismatchError(
                f"expected {self.dim} weights ({self.num_classes} x {self.width}), got {w.size}")
        return w.reshape(self.num_classes, self.width)

    def logits(self, w, features=None):
        X = self.dataset.features if features is None else np.asarray(features, dtype=float)
        if X.shape[1] != self.width:
            raise DimensionMismatchError("feature width does not match weights")
        return X @ self.weights(w).T

    def data_energy(self, w, idx=None):
        X, y = self._subset(idx)
        if len(y) == 0:
            return 0.0
        z = self.logits(w, X)
        return float(np.sum(logsumexp(z, axis=1) - z[np.arange(len(y)), y]))

    def data_grad(self, w, idx=None):
        X, y = self._subset(idx)
        W = self.weights(w)
        if len(y) == 0:
            return np.zeros(self.dim)
        z = X @ W.T
        p = np.exp(z - logsumexp(z, axis=1, keepdims=True))
        p[np.arange(len(y)), y] -= 1.0
        return (p.T @ X).reshape(-1)

    def energy(self, w):
        w = np.asarray(w, dtype=float)
        self.weights(w)
        return self.data_energy(w) + float(w.reshape(-1) @ w.reshape(-1)) / (2.0 * self.prior_variance)

    def grad(self, w):
        w = np.asarray(w, dtype=float).reshape(-1)
        return self.data_grad(w) + w / self.prior_variance

    def predictive_probs(self, w, features=None):
        z = self.logits(w, features)
        return np.exp(z - logsumexp(z, axis=1, keepdims=True))

    def _subset(self, idx):
        ds = self.dataset
        if idx is None:
            return ds.features, ds.labels
        return ds.features[idx], ds.labels[idx]


def gaussian_target(dim: int = 1) -> GaussianTarget:
    return GaussianTarget(dim)


def mixture_target() -> MixtureTarget:
    return MixtureTarget()


def logistic_target(dataset: LabeledDataset, prior_variance: float = 1e-2) -> LogisticTarget:
    return LogisticTarget(dataset, prior_variance)


@dataclass
class GradSource:
    """Unbiased gradient oracle for a target.

    ``noise_sigma > 0`` adds isotropic Gaussian noise to the exact gradient.
    ``batch_size`` (logistic targets only) switches to minibatch estimates
    drawn without replacement.
    """

    target: Target
    noise_sigma: float = 0.0
    batch_size: Optional[int] = None

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.batch_size is not None:
            if not isinstance(self.target, LogisticTarget):
                raise ValueError("minibatch gradients need a dataset-backed target")
            if self.batch_size < 1:
                raise ValueError("batch_size must be >= 1")

    @property
    def dim(self) -> int:
        return self.target.dim

    def __call__(self, x, rng):
        return stochastic_grad(self, x, rng)


def stochastic_grad(src: GradSource, x, rng: np.random.Generator) -> np.ndarray:
    """One gradient estimate; consumes ``dim`` normals only when noise is on."""
    target = src.target
    if src.batch_size is not None and src.batch_size < len(target.dataset):
        n = len(target.dataset)
        idx = rng.choice(n, size=src.batch_size, replace=False)
        w = np.asarray(x, dtype=float).reshape(-1)
        g = (n / src.batch_size) * target.data_grad(w, idx) + w / target.prior_variance
    else:
        g = target.grad(x)
    if src.noise_sigma > 0:
        g = g + src.noise_sigma * rng.standard_normal(np.shape(g))
    return g


def as_grad_source(obj) -> GradSource:
    return obj if isinstance(obj, GradSource) else GradSource(obj)
