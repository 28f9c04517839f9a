"""Fixed-point and block-floating-point emulation.

Quantized values are carried as float64 numbers lying on the format's grid;
nothing is bit-packed. Both rounding modes clip to the representable range
first, so every output is a representable value.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidBitWidthsError


@dataclass(frozen=True)
class FixedPointSpec:
    """Two's-complement fixed point with ``word_bits`` total bits.

    ``frac_bits`` of them are fractional, so the grid gap is ``2**-frac_bits``
    and the range is ``[-2**(W-F-1), 2**(W-F-1) - delta]``.
    """

    word_bits: int
    frac_bits: int

    def __post_init__(self):
        w, f = self.word_bits, self.frac_bits
        if not (isinstance(w, (int, np.integer)) and isinstance(f, (int, np.integer))):
            raise InvalidBitWidthsError("bit widths must be integers")
        if not 2 <= w <= 32:
            raise InvalidBitWidthsError(f"word_bits must be in [2, 32], got {w}")
        if not 0 <= f <= w - 1:
            raise InvalidBitWidthsError(f"frac_bits must be in [0, {w - 1}], got {f}")

    @property
    def delta(self) -> float:
        return 2.0 ** (-self.frac_bits)

    @property
    def lower(self) -> float:
        return -(2.0 ** (self.word_bits - self.frac_bits - 1))

    @property
    def upper(self) -> float:
        return 2.0 ** (self.word_bits - self.frac_bits - 1) - self.delta

    @property
    def levels(self) -> int:
        return 2**self.word_bits

    def grid(self) -> np.ndarray:
        """All representable values in ascending order."""
        return self.lower + self.delta * np.arange(self.levels)

    def on_grid(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = (x - self.lower) / self.delta
        return (k == np.round(k)) & (x >= self.lower) & (x <= self.upper)


@dataclass(frozen=True)
class BfpSpec:
    """Block floating point: one shared exponent per block.

    ``block_size=None`` shares a single exponent across the whole tensor.
    Each element keeps a sign and a ``mantissa_bits``-bit magnitude.
    """

    mantissa_bits: int
    block_size: Optional[int] = None

    def __post_init__(self):
        if self.mantissa_bits < 2:
            raise InvalidBitWidthsError("mantissa_bits must be >= 2")
        if self.block_size is not None and self.block_size < 1:
            raise InvalidBitWidthsError("block_size must be positive")


@dataclass
class QuantCounters:
    """Event counts accumulated by the quantizers when a counter is passed."""

    clipped: int = 0
    cat_clamped: int = 0

    def add(self, other: "QuantCounters") -> None:
        self.clipped += other.clipped
        self.cat_clamped += other.cat_clamped


def make_fixed_point_spec(word_bits: int, frac_bits: int) -> FixedPointSpec:
    """Validated constructor; raises InvalidBitWidthsError on bad widths."""
    return FixedPointSpec(word_bits, frac_bits)


def clip(x, spec: FixedPointSpec, counters: Optional[QuantCounters] = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if counters is not None:
        counters.clipped += int(np.count_nonzero((x < spec.lower) | (x > spec.upper)))
    return np.clip(x, spec.lower, spec.upper)


def quantize_det(x, spec: FixedPointSpec, counters: Optional[QuantCounters] = None) -> np.ndarray:
    """Round to nearest grid point, ties to even grid index."""
    x = clip(x, spec, counters)
    # lower is a multiple of delta, so an even multiple of delta is an even index
    return spec.delta * np.rint(x / spec.delta)


def quantize_stoch(x, spec: FixedPointSpec, rng: np.random.Generator,
                   counters: Optional[QuantCounters] = None) -> np.ndarray:
    """Unbiased stochastic rounding: up with probability equal to the fractional part."""
    x = clip(x, spec, counters)
    return stoch_round(x, spec.delta, rng)


def stoch_round(x, delta: float, rng: np.random.Generator) -> np.ndarray:
    """Stochastic rounding on the infinite grid ``delta * Z`` (no clipping).

    Draws one uniform per element, in C order.
    """
    x = np.asarray(x, dtype=float)
    scaled = x / delta
    floor = np.floor(scaled)
    frac = scaled - floor
    up = rng.random(x.shape) < frac
    return delta * (floor + up)


def quantize(x, spec, rng: np.random.Generator, counters: Optional[QuantCounters] = None) -> np.ndarray:
    """Stochastic quantizer for either format; used for the Q_W/Q_G roles."""
    if isinstance(spec, FixedPointSpec):
        return quantize_stoch(x, spec, rng, counters)
    if isinstance(spec, BfpSpec):
        return quantize_bfp(x, spec, rng)
    raise TypeError(f"unsupported precision spec {spec!r}")


def quantize_bfp(x, spec: BfpSpec, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("quantize_bfp needs a non-empty array")
    flat = x.reshape(-1)
    block = flat.size if spec.block_size is None else spec.block_size
    n_blocks = -(-flat.size // block)
    padded = np.zeros(n_blocks * block)
    padded[: flat.size] = flat
    blocks = padded.reshape(n_blocks, block)

    amax = np.max(np.abs(blocks), axis=1)
    _, exp = np.frexp(amax)
    shared = exp.astype(float) - 1.0  # floor(log2(amax)) for amax > 0
    gap = np.exp2(shared - spec.mantissa_bits + 1)[:, None]
    max_mag = (2**spec.mantissa_bits - 1) * gap

    scaled = blocks / gap
    floor = np.floor(scaled)
    up = rng.random(blocks.shape) < (scaled - floor)
    out = np.clip(gap * (floor + up), -max_mag, max_mag)
    out[amax == 0.0] = 0.0
    return out.reshape(-1)[: flat.size].reshape(x.shape)


def bfp_grid_gap(x, mantissa_bits: int) -> float:
    """Grid gap of a whole-tensor BFP block containing ``x``."""
    amax = float(np.max(np.abs(x)))
    if amax == 0.0:
        return 0.0
    _, exp = np.frexp(amax)
    return 2.0 ** (exp - 1 - mantissa_bits + 1)
