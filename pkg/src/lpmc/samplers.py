"""SGLD / SGHMC stepping kernels in full and low precision, and the chain runner.

The SGHMC recursion is the exact integrator of underdamped Langevin dynamics
over one step with the gradient frozen::

    v' = v e^{-γη} - (u/γ)(1 - e^{-γη}) g + ξ^v
    x' = x + (1/γ)(1 - e^{-γη}) v - (u/γ²)(γη + e^{-γη} - 1) g + ξ^x

with ``(ξ^x, ξ^v)`` jointly Gaussian per coordinate (see ``hmc_noise_cov``).

Random draws inside one step happen in a fixed order so that the numba
chain kernel in ``lpmc.kernels`` reproduces the numpy steppers exactly:

* LP-F kinds: weight rounding of ``x``, gradient noise, gradient rounding,
  then the Langevin noise;
* other kinds: gradient noise, gradient rounding, Langevin noise, then the
  state rounding (``v`` before ``x``).

SGHMC Langevin noise is ``z1`` for all coordinates, then ``z2``.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _jit
from .errors import NotPSDError
from .quant import BfpSpec, FixedPointSpec, QuantCounters, quantize
from .targets import GaussianTarget, GradSource, MixtureTarget, as_grad_source
from .vc import quantize_vc

SGLD_KINDS = ("sgld", "sgld_lpf", "sgld_lpl", "sgld_vc")
SGHMC_KINDS = ("sghmc", "sghmc_lpf", "sghmc_lpl", "sghmc_vc")
KINDS = SGLD_KINDS + SGHMC_KINDS
LOW_PRECISION_KINDS = tuple(k for k in KINDS if k not in ("sgld", "sghmc"))

PrecisionSpec = Union[FixedPointSpec, BfpSpec]


def expm1_plus(h: float) -> float:
    """``e^{-h} - 1 + h`` without cancellation for small ``h``."""
    if h < 0.5:
        term, total, n = h * h / 2.0, 0.0, 2
        while abs(term) > 1e-18 * abs(total) or n < 4:
            total += term
            n += 1
            term *= -h / n
        return total
    return math.expm1(-h) + h


def _xx_bracket(h: float) -> float:
    """``2h + 4e^{-h} - e^{-2h} - 3`` without cancellation for small ``h``.

    Series: sum over n >= 3 of (-1)^n (4 - 2^n) h^n / n!.
    """
    if h < 0.5:
        total = 0.0
        fact = 6.0
        hn = h**3
        for n in range(3, 40):
            term = (-1) ** n * (4.0 - 2.0**n) * hn / fact
            total += term
            if abs(term) < 1e-18 * abs(total):
                break
            hn *= h
            fact *= n + 1
        return total
    return 2.0 * h + 4.0 * math.exp(-h) - math.exp(-2.0 * h) - 3.0


@dataclass(frozen=True)
class HmcParams:
    eta: float
    gamma: float
    u: float

    def __post_init__(self):
        for name in ("eta", "gamma", "u"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive and finite, got {val}")

    @property
    def decay(self) -> float:
        return math.exp(-self.gamma * self.eta)

    @property
    def v_grad_coef(self) -> float:
        """(u/γ)(1 - e^{-γη})."""
        return -self.u / self.gamma * math.expm1(-self.gamma * self.eta)

    @property
    def x_vel_coef(self) -> float:
        """(1/γ)(1 - e^{-γη})."""
        return -math.expm1(-self.gamma * self.eta) / self.gamma

    @property
    def x_grad_coef(self) -> float:
        """(u/γ²)(γη + e^{-γη} - 1)."""
        return self.u / self.gamma**2 * expm1_plus(self.gamma * self.eta)


@dataclass(frozen=True)
class NoiseCov:
    s_xx: float
    s_xv: float
    s_vv: float

    @property
    def det(self) -> float:
        return self.s_xx * self.s_vv - self.s_xv**2

    def matrix(self) -> np.ndarray:
        return np.array([[self.s_xx, self.s_xv], [self.s_xv, self.s_vv]])

    def factors(self):
        """``(a, b, c)`` with ξ^v = a z1 and ξ^x = b z1 + c z2."""
        if self.det < -1e-14 * self.s_xx * self.s_vv or min(self.s_xx, self.s_vv) < 0:
            raise NotPSDError(f"noise covariance is not PSD: {self}")
        if self.s_vv == 0.0:
            return 0.0, 0.0, math.sqrt(max(self.s_xx, 0.0))
        a = math.sqrt(self.s_vv)
        b = self.s_xv / a
        return a, b, math.sqrt(max(self.s_xx - b * b, 0.0))


def hmc_noise_cov(p: HmcParams) -> NoiseCov:
    h = p.gamma * p.eta
    m = math.expm1(-h)
    return NoiseCov(
        s_xx=p.u / p.gamma**2 * _xx_bracket(h),
        s_xv=p.u / p.gamma * m * m,
        s_vv=-p.u * math.expm1(-2.0 * h),
    )


def sample_hmc_noise(cov: NoiseCov, dim: int, rng: np.random.Generator):
    a, b, c = cov.factors()
    z1 = rng.standard_normal(dim)
    z2 = rng.standard_normal(dim)
    return b * z1 + c * z2, a * z1


@dataclass
class ChainState:
    x: np.ndarray
    v: np.ndarray
    s_v: float = 1.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.x.shape != self.v.shape:
            raise ValueError("x and v must have the same shape")
        if not self.s_v > 0:
            raise ValueError("s_v must be positive")

    @classmethod
    def zeros(cls, dim: int) -> "ChainState":
        return cls(np.zeros(dim), np.zeros(dim), 1.0)

    @property
    def momentum(self) -> np.ndarray:
        """Momentum in natural units (stored value times the scale)."""
        return self.v * self.s_v


@dataclass(frozen=True)
class PrecisionSpecs:
    weight: PrecisionSpec
    grad: Optional[PrecisionSpec] = None

    @property
    def grad_spec(self) -> PrecisionSpec:
        return self.weight if self.grad is None else self.grad

    def fixed_weight(self) -> FixedPointSpec:
        if not isinstance(self.weight, FixedPointSpec):
            raise TypeError("this sampler needs a fixed-point weight format")
        return self.weight


@dataclass
class StepCounters:
    weight: QuantCounters = field(default_factory=QuantCounters)
    grad: QuantCounters = field(default_factory=QuantCounters)


def _counters(counters):
    return (counters.weight, counters.grad) if counters is not None else (None, None)


def _hmc_update(state, g, p, xi_x, xi_v):
    decay, cv, cxv, cx = p.decay, p.v_grad_coef, p.x_vel_coef, p.x_grad_coef
    v_new = state.v * decay - cv * g + xi_v
    x_new = state.x + cxv * state.v - cx * g + xi_x
    return x_new, v_new


def step_sghmc(state: ChainState, grad, p: HmcParams, noise) -> ChainState:
    xi_x, xi_v = noise
    x_new, v_new = _hmc_update(state, np.asarray(grad, dtype=float), p, xi_x, xi_v)
    return ChainState(x_new, v_new, state.s_v)


def step_sghmc_lpf(state, grad_source, p, specs: PrecisionSpecs, rng, cov=None, counters=None):
    wc, gc = _counters(counters)
    src = as_grad_source(grad_source)
    xq = quantize(state.x, specs.weight, rng, wc)
    g = quantize(src(xq, rng), specs.grad_spec, rng, gc)
    noise = sample_hmc_noise(cov or hmc_noise_cov(p), state.x.size, rng)
    return step_sghmc(state, g, p, noise)


def _rescaled(mv, s_v, upper, rescale):
    if not rescale:
        return s_v
    m = float(np.max(np.abs(mv))) / upper
    # keep the previous scale when the momentum mean is exactly zero
    return m if m > 0.0 else s_v


def step_sghmc_lpl(state, grad_source, p, specs: PrecisionSpecs, rescale: bool, rng,
                   cov=None, counters=None):
    wc, gc = _counters(counters)
    src = as_grad_source(grad_source)
    g = quantize(src(state.x, rng), specs.grad_spec, rng, gc)
    xi_x, xi_v = sample_hmc_noise(cov or hmc_noise_cov(p), state.x.size, rng)
    vv = state.v * state.s_v
    mv = vv * p.decay - p.v_grad_coef * g
    mx = state.x + p.x_vel_coef * vv - p.x_grad_coef * g
    s_new = _rescaled(mv, state.s_v, _upper(specs.weight), rescale)
    v_new = quantize((mv + xi_v) / s_new, specs.weight, rng, wc)
    x_new = quantize(mx + xi_x, specs.weight, rng, wc)
    return ChainState(x_new, v_new, s_new)


def step_sghmc_vc(state, grad_source, p, specs: PrecisionSpecs, rng, rescale: bool = False,
                  cov=None, counters=None):
    """Variance-corrected LP-L step; all injected noise comes from ``quantize_vc``.

    Only the marginal variances ``s_vv`` and ``s_xx`` are targeted; the
    position/momentum cross-covariance ``s_xv`` of the exact integrator is
    not reproduced.
    """
    wc, gc = _counters(counters)
    spec = specs.fixed_weight()
    src = as_grad_source(grad_source)
    cov = cov or hmc_noise_cov(p)
    g = quantize(src(state.x, rng), specs.grad_spec, rng, gc)
    vv = state.v * state.s_v
    mv = vv * p.decay - p.v_grad_coef * g
    mx = state.x + p.x_vel_coef * vv - p.x_grad_coef * g
    s_new = _rescaled(mv, state.s_v, spec.upper, rescale)
    v_new = quantize_vc(mv / s_new, cov.s_vv / (s_new * s_new), spec, rng, wc)
    x_new = quantize_vc(mx, cov.s_xx, spec, rng, wc)
    return ChainState(x_new, v_new, s_new)


def step_sgld(state: ChainState, grad, eta: float, rng) -> ChainState:
    xi = rng.standard_normal(state.x.size)
    x_new = state.x - eta * np.asarray(grad, dtype=float) + math.sqrt(2.0 * eta) * xi
    return ChainState(x_new, state.v, state.s_v)


def step_sgld_lpf(state, grad_source, eta, specs: PrecisionSpecs, rng, counters=None):
    wc, gc = _counters(counters)
    src = as_grad_source(grad_source)
    xq = quantize(state.x, specs.weight, rng, wc)
    g = quantize(src(xq, rng), specs.grad_spec, rng, gc)
    return step_sgld(state, g, eta, rng)


def step_sgld_lpl(state, grad_source, eta, specs: PrecisionSpecs, rng, counters=None):
    wc, gc = _counters(counters)
    src = as_grad_source(grad_source)
    g = quantize(src(state.x, rng), specs.grad_spec, rng, gc)
    xi = rng.standard_normal(state.x.size)
    x_new = quantize(state.x - eta * g + math.sqrt(2.0 * eta) * xi, specs.weight, rng, wc)
    return ChainState(x_new, state.v, state.s_v)


def step_sgld_vc(state, grad_source, eta, specs: PrecisionSpecs, rng, counters=None):
    wc, gc = _counters(counters)
    spec = specs.fixed_weight()
    src = as_grad_source(grad_source)
    g = quantize(src(state.x, rng), specs.grad_spec, rng, gc)
    x_new = quantize_vc(state.x - eta * g, 2.0 * eta, spec, rng, wc)
    return ChainState(x_new, state.v, state.s_v)


def _upper(spec) -> float:
    if isinstance(spec, FixedPointSpec):
        return spec.upper
    raise TypeError("momentum rescaling needs a fixed-point weight format")


@dataclass
class SamplerConfig:
    kind: str
    iterations: int
    hmc: Optional[HmcParams] = None
    eta: Optional[float] = None
    weight_spec: Optional[PrecisionSpec] = None
    grad_spec: Optional[PrecisionSpec] = None
    rescale_momentum: bool = False
    burn_in: int = 0
    thinning: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; expected one of {KINDS}")
        if self.is_hmc:
            if self.hmc is None:
                raise ValueError(f"{self.kind} needs hmc parameters")
        elif self.eta is None:
            if self.hmc is None:
                raise ValueError(f"{self.kind} needs a step size")
            self.eta = self.hmc.eta
        if self.eta is not None and not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.kind in LOW_PRECISION_KINDS and self.weight_spec is None:
            raise ValueError(f"{self.kind} needs a weight precision spec")
        if self.kind.endswith("_vc") and not isinstance(self.weight_spec, FixedPointSpec):
            raise ValueError("variance-corrected samplers need a fixed-point weight format")
        if self.rescale_momentum and self.kind not in ("sghmc_lpl", "sghmc_vc"):
            raise ValueError("rescale_momentum applies to sghmc_lpl and sghmc_vc only")
        if not (self.iterations >= self.burn_in >= 0):
            raise ValueError("need iterations >= burn_in >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")

    @property
    def is_hmc(self) -> bool:
        return self.kind in SGHMC_KINDS

    @property
    def specs(self) -> Optional[PrecisionSpecs]:
        if self.weight_spec is None:
            return None
        return PrecisionSpecs(self.weight_spec, self.grad_spec)

    @property
    def n_records(self) -> int:
        return (self.iterations - self.burn_in) // self.thinning


@dataclass
class Chain:
    iters: np.ndarray
    x: np.ndarray
    v: Optional[np.ndarray]
    s_v: np.ndarray
    diagnostics: dict
    final: ChainState


def make_stepper(config: SamplerConfig, src: GradSource):
    """Return ``step(state, rng, counters) -> state`` for one kind."""
    kind, specs = config.kind, config.specs
    if config.is_hmc:
        p = config.hmc
        cov = hmc_noise_cov(p)
        if kind == "sghmc":
            return lambda s, rng, c: step_sghmc(s, src(s.x, rng), p, sample_hmc_noise(cov, s.x.size, rng))
        if kind == "sghmc_lpf":
            return lambda s, rng, c: step_sghmc_lpf(s, src, p, specs, rng, cov, c)
        if kind == "sghmc_lpl":
            return lambda s, rng, c: step_sghmc_lpl(s, src, p, specs, config.rescale_momentum, rng, cov, c)
        return lambda s, rng, c: step_sghmc_vc(s, src, p, specs, rng, config.rescale_momentum, cov, c)
    eta = config.eta
    if kind == "sgld":
        return lambda s, rng, c: step_sgld(s, src(s.x, rng), eta, rng)
    if kind == "sgld_lpf":
        return lambda s, rng, c: step_sgld_lpf(s, src, eta, specs, rng, c)
    if kind == "sgld_lpl":
        return lambda s, rng, c: step_sgld_lpl(s, src, eta, specs, rng, c)
    return lambda s, rng, c: step_sgld_vc(s, src, eta, specs, rng, c)


def kernel_eligible(config: SamplerConfig, src: GradSource) -> bool:
    """Whether the compiled chain kernel covers this (config, target) pair."""
    if not isinstance(src.target, (GaussianTarget, MixtureTarget)) or src.batch_size is not None:
        return False
    return all(s is None or isinstance(s, FixedPointSpec) for s in (config.weight_spec, config.grad_spec))


def run_chain(config: SamplerConfig, source, rng: np.random.Generator,
              init: Optional[ChainState] = None, backend: Optional[str] = None) -> Chain:
    """Run one chain and keep every ``thinning``-th state after burn-in.

    ``backend`` is "numba", "numpy" or None (numba unless disabled via
    ``LPMC_DISABLE_JIT``). Targets the compiled kernel does not cover always
    use the numpy steppers. Both paths consume ``rng`` identically.
    """
    src = as_grad_source(source)
    state = init if init is not None else ChainState.zeros(src.dim)
    if state.x.size != src.dim:
        raise ValueError(f"initial state has dim {state.x.size}, target has {src.dim}")
    backend = _jit.resolve_backend(backend)
    if backend == "numba" and kernel_eligible(config, src):
        from .kernels import run_chain_kernel

        return run_chain_kernel(config, src, rng, state)
    return _run_chain_numpy(config, src, rng, state)


def _run_chain_numpy(config, src, rng, state) -> Chain:
    step = make_stepper(config, src)
    counters = StepCounters()
    n, d = config.n_records, src.dim
    xs = np.empty((n, d))
    vs = np.empty((n, d)) if config.is_hmc else None
    svs = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    j = 0
    for k in range(1, config.iterations + 1):
        state = step(state, rng, counters)
        if k > config.burn_in and (k - config.burn_in) % config.thinning == 0:
            iters[j] = k
            xs[j] = state.x
            if vs is not None:
                vs[j] = state.momentum
            svs[j] = state.s_v
            j += 1
    return Chain(iters, xs, vs, svs, chain_diagnostics(config, counters.weight.clipped,
                                                        counters.grad.clipped,
                                                        counters.weight.cat_clamped, "numpy"), state)


def chain_diagnostics(config, weight_clipped, grad_clipped, cat_clamped, backend) -> dict:
    diag = {
        "backend": backend,
        "weight_clipped": int(weight_clipped),
        "grad_clipped": int(grad_clipped),
        "cat_clamped": int(cat_clamped),
    }
    if config.kind == "sghmc_vc":
        # cross-covariance the exact integrator injects and the VC step omits
        diag["vc_dropped_cross_cov"] = hmc_noise_cov(config.hmc).s_xv
    return diag


def eta_for_var_ratio(ratio: float, gamma: float, u: float, delta: float) -> float:
    """Step size at which ``s_xx = ratio * delta**2 / 4``."""
    from scipy.optimize import brentq

    target = ratio * delta * delta / 4.0
    f = lambda eta: hmc_noise_cov(HmcParams(eta, gamma, u)).s_xx - target
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, 1e-12, hi, xtol=1e-15, rtol=1e-13)
