"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--trials N]

Prints per-call kernel timings at several levels, then whole-protocol
throughput with each backend swapped in.
"""

import argparse
import time
import timeit

import numpy as np

from mqpc import _kernels_py, kernels
from mqpc.adversary import PrematureMeasureParty
from mqpc.harness import ExperimentSpec, run_experiment
from mqpc.protocol import ProtocolConfig

try:
    from mqpc import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

FUNCS = ["fourier_state", "shift", "overlap", "probabilities", "sample", "measure_outcome"]


def use(impl):
    for name in FUNCS:
        setattr(kernels, name, getattr(impl, name))


def bench_kernels(impls, number=20000):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<30}" + "".join(f"{i.NAME:>12}" for i in impls) + "   (us/call)")
    for d in (2, 4, 16, 64):
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        v /= np.linalg.norm(v)
        probs = np.abs(v) ** 2
        cases = {
            "fourier_state": lambda m: m.fourier_state(d, 1),
            "shift": lambda m: m.shift(v, 1),
            "probabilities[fourier]": lambda m: m.probabilities(v, True),
            "sample": lambda m: m.sample(probs, 0.5),
            "measure_outcome[fourier]": lambda m: m.measure_outcome(v, True, 0.5),
        }
        for label, fn in cases.items():
            row = f"{label + f' d={d}':<30}"
            for impl in impls:
                t = min(timeit.repeat(lambda: fn(impl), number=number, repeat=3)) / number
                row += f"{t * 1e6:12.2f}"
            print(row)


def bench_protocol(impls, trials):
    cfg = ProtocolConfig(4, 4, 5, seed=1)
    spec = ExperimentSpec(cfg, None, PrematureMeasureParty(2), trials)
    print(f"\nprotocol runs (d=4, L=5, premature-measure, {trials} trials)")
    for impl in impls:
        use(impl)
        start = time.perf_counter()
        run_experiment(spec)
        elapsed = time.perf_counter() - start
        print(f"  {impl.NAME:<8} {elapsed:7.2f} s   {trials / elapsed:8.0f} runs/s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1000)
    args = ap.parse_args()
    impls = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])
    if _kernels_c is None:
        print("compiled kernels not built; showing the numpy backend only")
    bench_kernels(impls)
    bench_protocol(impls, args.trials)


if __name__ == "__main__":
    main()
