"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run on both paths with identical inputs; the maximum absolute
difference between the outputs is printed next to the timings.
"""

import argparse
import timeit

import numpy as np

from poisson_pinsker import _kernels

CASES = {
    # thinning-sized intensity evaluation for a short series
    "intensity_series": lambda rng: (rng.normal(size=8), rng.uniform(0, 1, 200_000), 1.0),
    "cosine_series": lambda rng: (rng.normal(size=8), rng.uniform(0, 1, 200_000), 1.0),
    # pooled events of a large-n replication against a long coefficient vector
    "sine_sums": lambda rng: (np.sort(rng.uniform(0, 1, 50_000)), 400, 1.0),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max diff':>12}")
    for name, make in CASES.items():
        inputs = make(rng)
        f_np, f_nb = _kernels.numpy_impl[name], _kernels.numba_impl[name]
        f_nb(*inputs)  # compile outside the timed region
        t_np = min(timeit.repeat(lambda: f_np(*inputs), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: f_nb(*inputs), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(f_np(*inputs) - f_nb(*inputs))))
        print(f"{name:<18}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
