"""Time the compiled and pure-Python kernels on the same inputs.

    python bench/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from pmlhist import _core
from pmlhist.rng import RandomStream


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = ["python"] + (["cython"] if _core.compiled is not None else [])
    logp = np.log(np.full(3, 1 / 3))
    Y = RandomStream(1, ("bench",)).uniforms(3 * 200).reshape(200, 3) * 40 - 5
    key = RandomStream(1, (10,)).key
    scales = np.array([2.0, 4.0, 10.0, 20.0])

    cases = {
        "class_loglik  (n=40, k=3, 200 outcomes)": lambda kern: kern.class_loglik(Y, logp, 39, 1.0),
        "simulate_tvd  (n=1000, k=10, 2000 reps, 4 scales)":
            lambda kern: kern.simulate_tvd(key, 1000, 10, 0, 2000, scales),
    }
    print(f"{'kernel':52s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup")
    for label, fn in cases.items():
        t = {b: best_of(lambda: fn(_core.get_kernels(b)), args.repeat) for b in backends}
        row = f"{label:52s}" + "".join(f"{t[b]:11.4f}s" for b in backends)
        if "cython" in t:
            row += f"  {t['python'] / t['cython']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
