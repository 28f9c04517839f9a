"""Emit standalone matplotlib scripts that redraw figures from run CSVs.

Nothing is plotted here; the emitted script only reads the CSV files listed
in the run manifest, so it can be rerun anywhere matplotlib is installed.
"""

import json
import os
from pathlib import Path
from typing import Optional, Union

from ..errors import MissingMetricError
from .runner import MANIFEST_NAME, RunRecord

FIGURES = ("overdispersion", "density-panels", "l2-curves", "vc-ratio")

_PRELUDE = '''#!/usr/bin/env python3
"""{title}, generated by lpmc; reads only the run CSVs."""
import csv
import os
import sys
from collections import defaultdict

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.normpath(os.path.join(os.path.dirname(os.path.abspath(__file__)), {rel!r}))
CHAINS = {chains!r}


def read_chain(name):
    with open(os.path.join(HERE, name), newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    cols = defaultdict(list)
    for r in body:
        for key, val in zip(header, r):
            if val != "":
                cols[key].append((int(r[0]), float(val)))
    return cols


def series(cols, key):
    pts = cols.get(key, [])
    return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


def by_sampler():
    groups = defaultdict(list)
    for c in CHAINS:
        groups[c["sampler"]].append(c)
    return groups

'''

_OVERDISPERSION = '''
fig, ax = plt.subplots(figsize=(6, 4))
for sampler, chains in by_sampler().items():
    traces = [series(read_chain(c["csv"]), "var") for c in chains]
    it = traces[0][0]
    n = min(len(t[1]) for t in traces)
    ax.plot(it[:n], np.mean([t[1][:n] for t in traces], axis=0), label=sampler)
ax.axhline({target_var!r}, color="k", ls="--", lw=1, label="target")
ax.set_xlabel("iteration")
ax.set_ylabel("sample variance")
ax.legend()
'''

_DENSITY = '''
PDF = {pdf!r}


def true_pdf(x):
    if PDF == "mixture":
        return (np.exp(-2 * (x - 1) ** 2) + np.exp(-2 * (x + 1) ** 2)) / np.sqrt(2 * np.pi)
    return np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)


groups = by_sampler()
fig, axes = plt.subplots(1, len(groups), figsize=(3.2 * len(groups), 3), squeeze=False)
for ax, (sampler, chains) in zip(axes[0], groups.items()):
    xs = np.concatenate([series(read_chain(c["csv"]), "x_0")[1] for c in chains])
    ax.hist(xs, bins=80, density=True, alpha=0.5)
    grid = np.linspace(xs.min() - 0.5, xs.max() + 0.5, 400)
    ax.plot(grid, true_pdf(grid), "k--", lw=1)
    ax.set_title(sampler)
'''

_L2 = '''
fig, ax = plt.subplots(figsize=(6, 4))
for sampler, chains in by_sampler().items():
    traces = [series(read_chain(c["csv"]), "l2") for c in chains]
    it = traces[0][0]
    n = min(len(t[1]) for t in traces)
    ax.plot(it[:n], np.log(np.mean([t[1][:n] for t in traces], axis=0)), label=sampler)
ax.set_xlabel("iteration")
ax.set_ylabel("log L2 distance")
ax.legend()
'''

_VC_RATIO = '''
final = defaultdict(list)
for c in CHAINS:
    t, w2 = series(read_chain(c["csv"]), "w2")
    final[(c["kind"], c["var_ratio"])].append(w2[-1])
ratios = sorted({r for (_, r) in final})
vals = [np.mean(final[("sghmc_vc", r)]) / np.mean(final[("sghmc_lpl", r)]) for r in ratios]
fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogx(ratios, vals, "o-")
ax.axhline(1.0, color="k", ls="--", lw=1)
ax.set_xlabel("Var_x / (delta^2 / 4)")
ax.set_ylabel("W2 ratio VC / naive")
'''

_CODA = '''
fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, "{figure}.png")
fig.savefig(out, dpi=150)
print(out)
'''


def _load_manifest(record_or_manifest) -> tuple:
    if isinstance(record_or_manifest, RunRecord):
        path = record_or_manifest.manifest_path
    else:
        path = Path(record_or_manifest)
        if path.is_dir():
            path = path / MANIFEST_NAME
    return path, json.loads(path.read_text(encoding="utf-8"))


def _has_column(run_dir: Path, csv_name: str, column: str) -> bool:
    with open(run_dir / csv_name, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                return column in line.rstrip("\n").split(",")
    return False


def _require(cond: bool, msg: str):
    if not cond:
        raise MissingMetricError(msg)


def emit_plot_script(record_or_manifest: Union[RunRecord, str, Path], figure: str,
                     out: Optional[Union[str, Path]] = None) -> Path:
    """Write ``<run dir>/plot_<figure>.py`` (or ``out``) and return its path."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    path, man = _load_manifest(record_or_manifest)
    run_dir = path.parent
    chains = man["chains"]
    metrics = set(man["metrics"])
    samplers = {c["sampler"] for c in chains}
    target = man["target"]
    one_d = target["kind"] == "mixture" or (target["kind"] == "gaussian" and target["dim"] == 1)

    if figure == "overdispersion":
        _require("var" in metrics, "overdispersion needs the 'var' metric")
        _require(len(samplers) >= 2, "overdispersion needs variance traces of at least 2 samplers")
        body = _OVERDISPERSION.format(target_var=1.0 if target["kind"] == "gaussian" else 1.25)
    elif figure == "density-panels":
        _require(one_d, "density-panels needs a one-dimensional target")
        _require(all(_has_column(run_dir, c["csv"], "x_0") for c in chains),
                 "density-panels needs saved states (x_0 column)")
        body = _DENSITY.format(pdf=target["kind"])
    elif figure == "l2-curves":
        _require("l2" in metrics, "l2-curves needs the per-iteration 'l2' metric")
        body = _L2
    else:
        _require("w2" in metrics, "vc-ratio needs the 'w2' metric")
        kinds = {c["kind"] for c in chains}
        _require({"sghmc_vc", "sghmc_lpl"} <= kinds, "vc-ratio needs both sghmc_vc and sghmc_lpl chains")
        _require(all(c["var_ratio"] is not None for c in chains), "vc-ratio needs a var_ratio sweep")
        body = _VC_RATIO

    meta = [{k: c[k] for k in ("sampler", "kind", "seed", "var_ratio", "csv")} for c in chains]
    dest = Path(out) if out is not None else run_dir / f"plot_{figure.replace('-', '_')}.py"
    rel = os.path.relpath(run_dir.resolve(), dest.resolve().parent)
    text = _PRELUDE.format(title=f"{figure} figure for run {man['config_hash']}", chains=meta, rel=rel)
    text += body + _CODA.format(figure=figure)
    dest.write_text(text, encoding="utf-8")
    return dest
