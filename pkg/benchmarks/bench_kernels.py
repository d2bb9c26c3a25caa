"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--n 200] [--steps 100000]
"""

import argparse
import time

import numpy as np

from necklaces import _pykernels
from necklaces.bead import analyze_bead, simple_bead
from necklaces.kernels import csr_arrays
from necklaces.necklace import build_necklace, indicator_gallery, point_mass, stationary

try:
    from necklaces import _kernels
except ImportError:
    _kernels = None


def timed(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--steps", type=int, default=100_000)
    ap.add_argument("--conv", type=int, default=20_000)
    args = ap.parse_args()

    spec, op = build_necklace(analyze_bead(simple_bead(2 / 3)), indicator_gallery("alternating", args.n))
    arrays = csr_arrays(op)
    x0 = point_mass(spec)
    pi = stationary(spec)
    f = spec.bead.pmf.padded(200)
    g = np.random.default_rng(0).random(args.conv)

    cases = [
        ("evolve", lambda k: k.evolve(*arrays, x0, args.steps)),
        ("evolve_tv_trace", lambda k: k.evolve_tv_trace(*arrays, x0, pi, args.steps)[0]),
        ("convolve_truncated", lambda k: k.convolve_truncated(g, f, args.conv)),
    ]
    print(f"necklace n={args.n} |S|={spec.size} steps={args.steps}")
    print(f"{'kernel':<20}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, run in cases:
        tp, outp = timed(run, _pykernels)
        if _kernels is None:
            print(f"{name:<20}{tp:>12.4f}{'n/a':>12}")
            continue
        tc, outc = timed(run, _kernels)
        diff = float(np.max(np.abs(np.asarray(outp) - np.asarray(outc))))
        print(f"{name:<20}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
