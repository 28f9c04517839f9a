"""Run every (sampler, seed) chain of an experiment and write CSVs + manifest."""

import csv
import io
import json
import logging
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .. import __version__
from ..errors import LpmcError
from ..idx import load_mnist_idx
from ..metrics import DEFAULT_GRID_POINTS, avg_nll, density_on_grid, empirical_w2_1d, kde_density, l2_density_distance
from ..samplers import eta_for_var_ratio, run_chain
from ..targets import GradSource, gaussian_target, logistic_target, mixture_target
from .config import ExperimentConfig

log = logging.getLogger(__name__)

CSV_VERSION = "lpmc-chain-csv/1"
SUMMARY_VERSION = "lpmc-summary-csv/1"
MANIFEST_NAME = "manifest.json"
NLL_MAX_SAMPLES = 100


class ChainRunError(LpmcError, RuntimeError):
    pass


@dataclass
class ChainJob:
    index: int
    sampler_index: int
    label: str
    seed: int
    var_ratio: Optional[float] = None
    ratio_index: int = 0

    @property
    def stem(self) -> str:
        if self.var_ratio is None:
            return f"{self.label}__seed{self.seed}"
        return f"{self.label}__ratio{self.var_ratio:g}__seed{self.seed}"


@dataclass
class RunRecord:
    config_hash: str
    out_dir: Path
    series: Dict[str, Dict[str, List[tuple]]] = field(default_factory=dict)
    summary: List[dict] = field(default_factory=list)
    diagnostics: Dict[str, dict] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / MANIFEST_NAME


def build_grad_source(cfg: ExperimentConfig) -> GradSource:
    t = cfg.target
    if t.kind == "gaussian":
        target = gaussian_target(t.dim)
    elif t.kind == "mixture":
        target = mixture_target()
    else:
        target = logistic_target(load_mnist_idx(t.images, t.labels, t.num_classes), t.prior_variance)
    return GradSource(target, t.noise_sigma, t.batch_size)


def chain_rng(master_seed: int, sampler_index: int, seed: int, ratio_index: int = 0):
    key = [master_seed, sampler_index, seed] + ([ratio_index] if ratio_index else [])
    return np.random.default_rng(np.random.SeedSequence(key))


def compute_metric(name: str, src: GradSource, xs: np.ndarray) -> float:
    target = src.target
    if name == "mean":
        return float(np.mean(xs.mean(axis=0)))
    if name == "var":
        return float(np.mean(xs.var(axis=0, ddof=1)))
    if name == "w2":
        return empirical_w2_1d(xs[:, 0], target.quantile)
    if name == "l2":
        est = kde_density(xs[:, 0])
        return l2_density_distance(est, density_on_grid(target.pdf, est.grid))
    if name == "nll":
        pick = np.unique(np.linspace(0, len(xs) - 1, min(len(xs), NLL_MAX_SAMPLES)).astype(int))
        return avg_nll(target, xs[pick])
    raise ValueError(f"unknown metric {name!r}")


def _jobs(cfg: ExperimentConfig) -> List[ChainJob]:
    labels = cfg.sampler_labels()
    ratios = cfg.sweep.var_ratio if cfg.sweep is not None else [None]
    jobs = []
    for si, label in enumerate(labels):
        for ri, ratio in enumerate(ratios):
            for seed in cfg.seeds:
                jobs.append(ChainJob(len(jobs), si, label, seed, ratio, ri + 1 if ratio is not None else 0))
    return jobs


def _run_job(cfg, src, job: ChainJob, backend):
    eta = None
    if job.var_ratio is not None:
        base = cfg.sampler_config(job.sampler_index)
        eta = eta_for_var_ratio(job.var_ratio, base.hmc.gamma, base.hmc.u, base.weight_spec.delta)
    sc = cfg.sampler_config(job.sampler_index, eta=eta)
    rng = chain_rng(cfg.master_seed, job.sampler_index, job.seed, job.ratio_index)
    try:
        chain = run_chain(sc, src, rng, backend=backend)
    except LpmcError as exc:
        raise ChainRunError(f"{job.stem}: {exc}") from exc

    log_rows = [i for i, it in enumerate(chain.iters) if it % cfg.log_every == 0]
    if len(chain.iters) and (not log_rows or log_rows[-1] != len(chain.iters) - 1):
        log_rows.append(len(chain.iters) - 1)
    series = {m: [] for m in cfg.metrics}
    for row in log_rows:
        if row + 1 < 2:
            continue
        for m in cfg.metrics:
            val = compute_metric(m, src, chain.x[: row + 1])
            if not np.isfinite(val):
                raise ChainRunError(f"{job.stem}: metric {m} is not finite at iteration {chain.iters[row]}")
            series[m].append((int(chain.iters[row]), val))
    return sc, chain, series


def _fmt(v) -> str:
    return format(float(v) + 0.0, ".17g")  # no "-0"


def chain_csv_text(cfg, sc, chain, series) -> str:
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    d = chain.x.shape[1]
    cols = ["iter"]
    if cfg.save_state:
        cols += [f"x_{i}" for i in range(d)]
        if chain.v is not None:
            cols += [f"v_{i}" for i in range(d)] + ["s_v"]
    cols += list(cfg.metrics)
    w.writerow(cols)
    by_iter = {m: dict(vals) for m, vals in series.items()}
    for j, it in enumerate(chain.iters):
        row = [int(it)]
        if cfg.save_state:
            row += [_fmt(x) for x in chain.x[j]]
            if chain.v is not None:
                row += [_fmt(x) for x in chain.v[j]] + [_fmt(chain.s_v[j])]
        row += [_fmt(by_iter[m][it]) if it in by_iter[m] else "" for m in cfg.metrics]
        w.writerow(row)
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, out_dir=None, backend: Optional[str] = None) -> RunRecord:
    """Run all chains; ``out_dir`` beats ``$LPMC_OUT`` beats ``cfg.output_dir``."""
    out = Path(out_dir or os.environ.get("LPMC_OUT") or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise ChainRunError(f"output directory {out} is not writable")
    src = build_grad_source(cfg)
    jobs = _jobs(cfg)
    started = time.time()
    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(lambda j: _run_job(cfg, src, j, backend), jobs))
    else:
        results = [_run_job(cfg, src, j, backend) for j in jobs]
    wall = time.time() - started

    record = RunRecord(cfg.config_hash(), out)
    summary_cols = ["sampler", "kind", "seed", "var_ratio", "eta", "n_records"] + list(cfg.metrics) + [
        "weight_clipped", "grad_clipped", "cat_clamped", "csv"]
    rows = []
    for job, (sc, chain, series) in zip(jobs, results):
        name = f"{job.stem}.csv"
        (out / name).write_text(chain_csv_text(cfg, sc, chain, series), encoding="utf-8")
        record.files.append(name)
        record.series[job.stem] = series
        record.diagnostics[job.stem] = dict(chain.diagnostics, s_v_min=float(chain.s_v.min(initial=1.0)),
                                            s_v_max=float(chain.s_v.max(initial=1.0)))
        row = {
            "sampler": job.label, "kind": sc.kind, "seed": job.seed,
            "var_ratio": "" if job.var_ratio is None else _fmt(job.var_ratio),
            "eta": _fmt(sc.eta if sc.hmc is None else sc.hmc.eta),
            "n_records": len(chain.iters),
        }
        for m in cfg.metrics:
            row[m] = _fmt(series[m][-1][1]) if series[m] else ""
        row.update({k: chain.diagnostics[k] for k in ("weight_clipped", "grad_clipped", "cat_clamped")})
        row["csv"] = name
        rows.append(row)
    record.summary = rows

    buf = io.StringIO()
    buf.write(f"# {SUMMARY_VERSION}\n")
    w = csv.DictWriter(buf, summary_cols, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    (out / "summary.csv").write_text(buf.getvalue(), encoding="utf-8")

    manifest = {
        "config_hash": record.config_hash,
        "config": cfg.model_dump(mode="json"),
        "library_version": __version__,
        "python": platform.python_version(),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "wall_clock_seconds": wall,
        "csv_version": CSV_VERSION,
        "summary": "summary.csv",
        "chains": [
            {"sampler": j.label, "kind": r[0].kind, "seed": j.seed, "var_ratio": j.var_ratio,
             "csv": f"{j.stem}.csv", "diagnostics": record.diagnostics[j.stem]}
            for j, r in zip(jobs, results)
        ],
        "metrics": list(cfg.metrics),
        "metric_settings": {
            "kde": {"kernel": "gaussian", "bandwidth": "scott n^-1/5 std",
                    "grid_points": DEFAULT_GRID_POINTS, "grid_span": "[min - 3h, max + 3h]"},
            "w2": {"coupling": "quantile", "plotting_positions": "(i - 0.5) / n"},
            "var": {"ddof": 1},
            "nll": {"max_weight_samples": NLL_MAX_SAMPLES},
        },
        "target": {"kind": cfg.target.kind, "dim": cfg.target.dim},
    }
    record.manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    log.info("wrote %d chains to %s in %.1fs", len(jobs), out, wall)
    return record
