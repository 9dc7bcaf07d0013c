"""Benchmark: compiled march kernel vs the pure-Python fallback.

Run as `python -m cornerflow.benchmark [--preset dam-break] [--n 128]`.
"""

import argparse
import time

import numpy as np

from . import _kernels, goursat, pipeline, waves
from .config import preset


def run(preset_name="dam-break", n=128, repeats=3):
    cfg = preset(preset_name)
    eos_model = cfg.validate()
    tau_end = pipeline.derive_tau_end(cfg, eos_model)
    pq = waves.curve_PQ(eos_model, cfg.u0, cfg.tau0, tau_end, n)
    pr = waves.curve_PR_with_states(eos_model, cfg.u0, cfg.tau0, tau_end, n)

    results = {}
    if _kernels.kernel_available(eos_model):
        goursat.march_grid(pq, pr, eos_model, use_kernel=True)  # JIT warmup
        t = time.perf_counter()
        for _ in range(repeats):
            gk = goursat.march_grid(pq, pr, eos_model, use_kernel=True)
        results["numba"] = (time.perf_counter() - t) / repeats
    t = time.perf_counter()
    gp = goursat.march_grid(pq, pr, eos_model, use_kernel=False)
    results["fallback"] = time.perf_counter() - t

    print(f"{preset_name} at {n}x{n} ({np.sum(gp.status == 1)} interior nodes)")
    for name, sec in results.items():
        print(f"  {name:<9} {sec * 1e3:9.1f} ms")
    if "numba" in results:
        print(f"  speedup   {results['fallback'] / results['numba']:9.1f}x")
        diff = np.max(np.abs(gk.tau[gk.ok_mask()] - gp.tau[gp.ok_mask()]))
        print(f"  path agreement (tau): {diff:.3e}")
    return results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="dam-break")
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    run(args.preset, args.n, args.repeats)


if __name__ == "__main__":
    main()
