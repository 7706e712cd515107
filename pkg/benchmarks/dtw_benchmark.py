#!/usr/bin/env python3
"""Compare the alignment backends on realistic problem sizes.

The warping dynamic program runs either as a fused JIT kernel (numba)
or as a vectorized row scan (numpy). This script times both on the
window-versus-reference shapes the online predictor actually produces
and verifies that they agree to machine precision.

Run from the repository root:

    python3 benchmarks/dtw_benchmark.py
    python3 benchmarks/dtw_benchmark.py --repeats 30
"""

import argparse
import time

import numpy as np

from tensormotion.alignment import (
    accumulated_cost,
    available_backends,
    use_backend,
    warmup,
)

# (query frames, reference frames, channels): observation windows
# against extended references of increasing length, plus a small probe
CASES = [
    (60, 500, 9),
    (240, 1200, 27),
    (240, 2500, 27),
    (240, 5000, 27),
]


def _time_case(q: np.ndarray, r: np.ndarray, repeats: int):
    samples = []
    acc = None
    for _ in range(repeats):
        start = time.perf_counter()
        acc = accumulated_cost(q, r, open_begin=True)
        samples.append(time.perf_counter() - start)
    return float(np.median(samples)), acc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="time the warping backends against each other"
    )
    parser.add_argument("--repeats", type=int, default=20,
                        help="timed runs per case; the median is reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = available_backends()
    print(f"available backends: {', '.join(backends)}")
    header = f"{'query x ref x ch':>20}" + "".join(
        f"{name + ' (ms)':>14}" for name in backends
    )
    if len(backends) == 2:
        header += f"{'speedup':>10}{'max |diff|':>12}"
    print(header)

    rng = np.random.default_rng(args.seed)
    for n_q, n_r, n_c in CASES:
        q = rng.uniform(0.0, np.pi, (n_q, n_c))
        r = rng.uniform(0.0, np.pi, (n_r, n_c))
        millis, accs = [], []
        for backend in backends:
            previous = use_backend(backend)
            try:
                warmup()
                seconds, acc = _time_case(q, r, args.repeats)
            finally:
                use_backend(previous)
            millis.append(seconds * 1e3)
            accs.append(acc)
        line = f"{f'{n_q} x {n_r} x {n_c}':>20}" + "".join(
            f"{ms:>14.2f}" for ms in millis
        )
        if len(accs) == 2:
            diff = float(np.max(np.abs(accs[0] - accs[1])))
            line += f"{millis[1] / millis[0]:>10.1f}{diff:>12.2e}"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
