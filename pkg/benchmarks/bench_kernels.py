"""Compare the compiled kernels with the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times the per-agent fitness call (evaluate, bin, gain ratio) at client-sized
and dataset-sized row counts, plus Hamming distances for clustering.
"""
import argparse
import timeit

import numpy as np

from mmffc import _pykernels
from mmffc.genome import ProgramShape, build_tree, compile_postfix, decode, random_position

try:
    from mmffc import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def sample_programs(shape, rng, k):
    codes = []
    while len(codes) < k:
        dp = decode(random_position(shape, rng), shape)
        if dp.mask.any():
            codes.append(compile_postfix(build_tree(dp, shape), shape.operators))
    return codes


def bench(backend, codes, X, y, repeat):
    def fitness_sweep():
        for code in codes:
            backend.program_igr(code, X, y, 3, 10)
    return min(timeit.repeat(fitness_sweep, number=1, repeat=repeat)) / len(codes)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    shape = ProgramShape(13, 3, 2)
    codes = sample_programs(shape, rng, 200)
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])

    print(f"{'rows':>6} " + " ".join(f"{name:>12}" for name, _ in backends) + "   speedup")
    for n in (12, 120, 1200):
        X = rng.normal(size=(n, 13))
        y = rng.integers(0, 3, n)
        times = [bench(mod, codes, X, y, args.repeat) for _, mod in backends]
        cells = " ".join(f"{t * 1e6:10.1f}us" for t in times)
        speed = f"{times[0] / times[-1]:8.1f}x" if len(times) > 1 else "       -"
        print(f"{n:>6} {cells} {speed}")

    keys = rng.integers(0, 8, (30, shape.dimension))
    ref = keys[0]
    for name, mod in backends:
        t = min(timeit.repeat(lambda: mod.hamming_rows(keys, ref), number=1000, repeat=args.repeat)) / 1000
        print(f"hamming 30 x {keys.shape[1]} [{name}]: {t * 1e6:.1f}us")
    if _ckernels is None:
        print("compiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()
