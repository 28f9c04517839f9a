"""Low-precision SGLD/SGHMC samplers with fixed-point and BFP emulation."""

from .errors import (
    BadMagicError, ConfigError, CountMismatchError, DimensionMismatchError, EmptySamplesError,
    GridMismatchError, IdxFormatError, InfeasibleMomentsError, InvalidBitWidthsError,
    LpmcError, MissingMetricError, NotPSDError, TooFewSamplesError, TruncatedFileError,
)
from .quant import (
    BfpSpec, FixedPointSpec, QuantCounters, clip, make_fixed_point_spec, quantize, quantize_bfp,
    quantize_det, quantize_stoch,
)
from .vc import CatPmf, cat_pmf, cat_sample, quantize_vc
from .targets import (
    GradSource, LabeledDataset, Target, gaussian_target, logistic_target, mixture_target,
    stochastic_grad,
)
from .idx import load_mnist_idx
from .samplers import (
    KINDS, Chain, ChainState, HmcParams, NoiseCov, PrecisionSpecs, SamplerConfig,
    eta_for_var_ratio, hmc_noise_cov, run_chain, sample_hmc_noise, step_sghmc, step_sghmc_lpf,
    step_sghmc_lpl, step_sghmc_vc, step_sgld, step_sgld_lpf, step_sgld_lpl, step_sgld_vc,
)
from .metrics import (
    DensityEstimate, avg_nll, empirical_w2_1d, kde_density, l2_density_distance, summary_stats,
)

__version__ = "0.1.0"
