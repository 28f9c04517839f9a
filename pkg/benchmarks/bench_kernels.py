"""Time the compiled kernels against the numpy reference paths.

    python benchmarks/bench_kernels.py --iterations 20000 --kinds sghmc_lpl sghmc_vc
"""

import argparse
import time

import numpy as np

from lpmc import FixedPointSpec, HmcParams, SamplerConfig, gaussian_target, kde_density, run_chain
from lpmc.samplers import KINDS


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def chain_config(kind, iterations):
    hmc = HmcParams(0.09, 3.0, 2.0) if kind.startswith("sghmc") else None
    spec = None if kind in ("sgld", "sghmc") else FixedPointSpec(8, 4)
    return SamplerConfig(kind, iterations, hmc=hmc, eta=0.09, weight_spec=spec)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--iterations", type=int, default=20_000)
    ap.add_argument("--dim", type=int, default=1)
    ap.add_argument("--kinds", nargs="+", default=list(KINDS), choices=KINDS)
    ap.add_argument("--kde-samples", type=int, default=20_000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    target = gaussian_target(args.dim)
    print(f"{'case':<24}{'numpy s':>10}{'numba s':>10}{'speedup':>10}")
    for kind in args.kinds:
        cfg = chain_config(kind, args.iterations)
        run = lambda b: run_chain(cfg, target, np.random.default_rng(0), backend=b)
        run("numba")  # compile outside the timing
        t_np = best_of(lambda: run("numpy"), args.repeats)
        t_nb = best_of(lambda: run("numba"), args.repeats)
        print(f"{kind:<24}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>9.1f}x")

    x = np.random.default_rng(1).normal(size=args.kde_samples)
    kde_density(x, backend="numba")
    t_np = best_of(lambda: kde_density(x, backend="numpy"), args.repeats)
    t_nb = best_of(lambda: kde_density(x, backend="numba"), args.repeats)
    print(f"{'kde (512-point grid)':<24}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
