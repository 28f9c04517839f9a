"""Experiment configuration: TOML documents or built-in presets."""

import hashlib
import json
import sys
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError
from ..quant import BfpSpec, FixedPointSpec
from ..samplers import KINDS, SGHMC_KINDS, HmcParams, SamplerConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

METRICS = ("mean", "var", "w2", "l2", "nll")
ONE_D_METRICS = ("w2", "l2")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FixedFormat(_Strict):
    format: Literal["fixed"] = "fixed"
    word_bits: int = 8
    frac_bits: int = 4

    def build(self):
        return FixedPointSpec(self.word_bits, self.frac_bits)


class BfpFormat(_Strict):
    format: Literal["bfp"]
    mantissa_bits: int = 8
    block_size: Optional[int] = None

    def build(self):
        return BfpSpec(self.mantissa_bits, self.block_size)


Format = Annotated[Union[FixedFormat, BfpFormat], Field(discriminator="format")]


class PrecisionConfig(_Strict):
    weight: Format = Field(default_factory=FixedFormat)
    grad: Optional[Format] = None

    @model_validator(mode="after")
    def _check_widths(self):
        for fmt in (self.weight, self.grad):
            if fmt is not None:
                try:
                    fmt.build()
                except ValueError as exc:
                    raise ValueError(str(exc)) from None
        return self


class TargetConfig(_Strict):
    kind: Literal["gaussian", "mixture", "logistic"]
    dim: int = Field(1, ge=1)
    noise_sigma: float = Field(0.0, ge=0.0)
    images: Optional[str] = None
    labels: Optional[str] = None
    num_classes: int = Field(10, ge=2)
    prior_variance: float = Field(1e-2, gt=0.0)
    batch_size: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == "logistic":
            if not (self.images and self.labels):
                raise ValueError("logistic targets need 'images' and 'labels' paths")
        elif self.batch_size is not None:
            raise ValueError("batch_size only applies to logistic targets")
        if self.kind == "mixture" and self.dim != 1:
            raise ValueError("the mixture target is one-dimensional")
        return self

    @property
    def is_1d(self) -> bool:
        return self.kind == "mixture" or (self.kind == "gaussian" and self.dim == 1)


class SamplerDefaults(_Strict):
    eta: float = Field(0.09, gt=0.0)
    gamma: float = Field(3.0, gt=0.0)
    u: float = Field(2.0, gt=0.0)
    iterations: int = Field(100_000, ge=0)
    burn_in: int = Field(10_000, ge=0)
    thinning: int = Field(10, ge=1)


class SamplerEntry(_Strict):
    kind: Literal[KINDS]
    label: Optional[str] = None
    eta: Optional[float] = Field(None, gt=0.0)
    gamma: Optional[float] = Field(None, gt=0.0)
    u: Optional[float] = Field(None, gt=0.0)
    iterations: Optional[int] = Field(None, ge=0)
    burn_in: Optional[int] = Field(None, ge=0)
    thinning: Optional[int] = Field(None, ge=1)
    rescale_momentum: bool = False


class SweepConfig(_Strict):
    var_ratio: List[float] = Field(min_length=1)


class ExperimentConfig(_Strict):
    name: str
    master_seed: int = 0
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    metrics: List[Literal[METRICS]] = Field(default_factory=lambda: ["mean", "var"])
    log_every: int = Field(10_000, ge=1)
    output_dir: str = "runs"
    save_state: bool = True
    jobs: int = Field(1, ge=1)
    target: TargetConfig
    precision: PrecisionConfig = Field(default_factory=PrecisionConfig)
    defaults: SamplerDefaults = Field(default_factory=SamplerDefaults)
    samplers: List[SamplerEntry] = Field(min_length=1)
    sweep: Optional[SweepConfig] = None

    @model_validator(mode="after")
    def _cross_checks(self):
        for m in self.metrics:
            if m in ONE_D_METRICS and not self.target.is_1d:
                raise ValueError(f"metric {m!r} needs a one-dimensional target")
            if m == "nll" and self.target.kind != "logistic":
                raise ValueError("metric 'nll' needs a logistic target")
        labels = self.sampler_labels()
        if len(set(labels)) != len(labels):
            raise ValueError("sampler labels must be unique")
        if self.sweep is not None:
            if any(s.kind not in SGHMC_KINDS for s in self.samplers):
                raise ValueError("var_ratio sweeps apply to SGHMC samplers only")
            if not isinstance(self.precision.weight, FixedFormat):
                raise ValueError("var_ratio sweeps need a fixed-point weight format")
        # build every sampler once so bad combinations fail at parse time
        for i, _ in enumerate(self.samplers):
            try:
                self.sampler_config(i)
            except ValueError as exc:
                raise ValueError(f"samplers[{i}]: {exc}") from None
        return self

    def sampler_labels(self) -> List[str]:
        labels, seen = [], {}
        for s in self.samplers:
            base = s.label or s.kind
            if s.label is None and s.rescale_momentum:
                base += "_rescaled"
            seen[base] = seen.get(base, 0) + 1
            labels.append(base if seen[base] == 1 else f"{base}_{seen[base]}")
        return labels

    def sampler_config(self, index: int, eta: Optional[float] = None) -> SamplerConfig:
        s, d = self.samplers[index], self.defaults
        eta = eta if eta is not None else (s.eta if s.eta is not None else d.eta)
        gamma = s.gamma if s.gamma is not None else d.gamma
        u = s.u if s.u is not None else d.u
        weight = self.precision.weight.build()
        grad = self.precision.grad.build() if self.precision.grad is not None else None
        low = s.kind not in ("sgld", "sghmc")
        return SamplerConfig(
            kind=s.kind,
            iterations=s.iterations if s.iterations is not None else d.iterations,
            hmc=HmcParams(eta, gamma, u) if s.kind in SGHMC_KINDS else None,
            eta=eta,
            weight_spec=weight if low else None,
            grad_spec=grad if low else None,
            rescale_momentum=s.rescale_momentum,
            burn_in=s.burn_in if s.burn_in is not None else d.burn_in,
            thinning=s.thinning if s.thinning is not None else d.thinning,
        )

    def config_hash(self) -> str:
        return config_hash(self.model_dump(mode="json"))


def config_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def _format_loc(loc) -> str:
    parts = []
    for p in loc:
        if isinstance(p, int):
            parts.append(f"[{p}]")
        elif p in ("fixed", "bfp", "function-after[_check_widths(), PrecisionConfig]"):
            continue
        else:
            parts.append(("." if parts else "") + str(p))
    return "".join(parts) or "<root>"


def config_from_dict(doc: dict) -> ExperimentConfig:
    from .presets import PRESETS

    doc = dict(doc)
    base = doc.pop("extends", None)
    if base is not None:
        if base not in PRESETS:
            raise ConfigError(f"unknown preset {base!r}", path="extends")
        doc = _deep_merge(PRESETS[base], doc)
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(err["msg"], path=_format_loc(err["loc"])) from None


def parse_config(path_or_preset) -> ExperimentConfig:
    """Load a TOML config file, or a built-in preset by name."""
    from .presets import PRESETS

    key = str(path_or_preset)
    if key in PRESETS and not Path(key).exists():
        return config_from_dict(PRESETS[key])
    path = Path(key)
    if not path.is_file():
        raise ConfigError(f"no such config file or preset: {key}")
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"parse error: {exc}") from None
    return config_from_dict(doc)
