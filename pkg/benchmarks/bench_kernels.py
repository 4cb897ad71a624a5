"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--M 64] [--reps 2000]
"""

import argparse
import timeit

import numpy as np

from beamsnr import kernels
from beamsnr.estimator import build_schedule


def cases(M, rng):
    s = build_schedule(M)
    p = np.sort(rng.exponential(1.0, M))
    P = np.sort(rng.exponential(1.0, (1000, M)), axis=1)
    raw = rng.integers(0, 2**16, M)
    praw = np.sort(raw)
    shifts = s.shifts()
    g = s.gammas()
    return {
        "scan_boundary": lambda k: k.scan_boundary(p, g),
        "scan_boundary_batch[1000]": lambda k: k.scan_boundary_batch(P, g),
        "systolic_sort": lambda k: k.systolic_sort(raw),
        "separate_fx": lambda k: k.separate_fx(praw, shifts, 2**40 - 1, 2**56 - 1),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=64)
    ap.add_argument("--reps", type=int, default=2000)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = kernels.available_backends()
    print(f"M={args.M} backends={backends} default={kernels.BACKEND}")
    print(f"{'kernel':28s}" + "".join(f"{b:>14s}" for b in backends) + f"{'speedup':>10s}")
    for name, fn in cases(args.M, rng).items():
        us = {}
        for b in backends:
            mod = kernels.get_backend(b)
            reps = max(1, args.reps // (50 if "batch" in name else 1))
            us[b] = min(timeit.repeat(lambda: fn(mod), number=reps, repeat=3)) / reps * 1e6
        sp = f"{us['python'] / us['cython']:9.1f}x" if "cython" in us else ""
        print(f"{name:28s}" + "".join(f"{us[b]:12.2f}us" for b in backends) + f"{sp:>10s}")


if __name__ == "__main__":
    main()
