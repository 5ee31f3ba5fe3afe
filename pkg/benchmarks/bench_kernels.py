"""Compare the numba and pure-numpy simulation kernels.

Usage: python benchmarks/bench_kernels.py [--runs N] [--grid WxH]

Both backends consume the same random draws, so the script also checks that
their metrics agree exactly before reporting timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from evoc import _kernels as K
from evoc.domain import default_template_set
from evoc.experiment import Condition, parse_grid
from evoc.society import SocietyConfig, run


def time_backend(cfg: SocietyConfig, ff1, ff2, backend: str, runs: int) -> tuple[float, list]:
    out = []
    t0 = time.perf_counter()
    for seed in range(runs):
        out.append(run(cfg, ff1, ff2, seed=seed, backend=backend))
    return time.perf_counter() - t0, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--grid", default="10x10")
    args = ap.parse_args()
    w, h = parse_grid(args.grid)
    ff1, ff2 = default_template_set("ff1"), default_template_set("ff2")
    backends = ["numpy"] + (["numba"] if K.HAVE_NUMBA else [])
    print(f"grid {w}x{h}, {args.runs} runs per condition, backends: {', '.join(backends)}")
    if K.HAVE_NUMBA:
        # compile outside the timed region
        run(SocietyConfig(iterations=2, switch_iteration=1), ff1, ff2, backend="numba")
    print(f"{'condition':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}  match")
    for c in Condition:
        cfg = SocietyConfig(
            grid_width=w, grid_height=h, chaining_enabled=c.chaining, cf_enabled=c.cf
        )
        times, results = {}, {}
        for b in backends:
            times[b], results[b] = time_backend(cfg, ff1, ff2, b, args.runs)
        match = "-"
        speed = "-"
        if len(backends) == 2:
            same = all(
                np.array_equal(x.mean_fitness, y.mean_fitness)
                and np.array_equal(x.diversity, y.diversity)
                and np.array_equal(x.mean_rcc, y.mean_rcc)
                for x, y in zip(results["numpy"], results["numba"])
            )
            match = "yes" if same else "NO"
            speed = f"{times['numpy'] / times['numba']:.1f}x"
        row = "".join(f"{times[b] / args.runs * 1e3:>10.1f}ms" for b in backends)
        print(f"{c.name:<18}{row}{speed:>10}  {match}")


if __name__ == "__main__":
    main()
