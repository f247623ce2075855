"""Time the numba and numpy kernel backends on realistic workloads.

    python benchmarks/bench_kernels.py [--repeat 5] [--seconds 10]

The first numba call (JIT compile, or cache load) is timed separately and
excluded from the steady-state figures. Both backends are checked for
agreement before timing.
"""

import argparse
import time

import numpy as np

from stereocarto.kernels import HAVE_NUMBA, get_backend


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(seconds, sr=44100):
    rng = np.random.default_rng(0)
    n = int(seconds * sr)
    x = rng.standard_normal(n)
    t = np.arange(n) / sr
    # a source circling the pair once every 10 s: delay swings ~ +-7 samples
    delay = 40.0 + 7.0 * np.sin(2 * np.pi * t / 10.0)
    gain = 0.5 + 0.1 * np.cos(2 * np.pi * t / 10.0)

    win = int(0.05 * sr)
    frames = n // win
    left = rng.standard_normal((frames, win))
    right = np.roll(left, 9, axis=1) * 0.7
    return {
        "varying_delay": (lambda be: be.varying_delay(x, delay, gain, 16), f"{n} samples, 32 taps"),
        "frame_xcorr": (lambda be: be.frame_xcorr(left, right, 60), f"{frames} frames x {win}, +-60 lags"),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seconds", type=float, default=10.0, help="signal length")
    args = ap.parse_args()

    names = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if not HAVE_NUMBA:
        print("numba not installed; timing the numpy backend only")
    backends = {name: get_backend(name) for name in names}

    print(f"{'kernel':<14} {'backend':<7} {'first (s)':>10} {'best (s)':>10} {'speedup':>8}  workload")
    for kernel, (run, desc) in workloads(args.seconds).items():
        ref = None
        base = None
        for name, be in backends.items():
            t0 = time.perf_counter()
            out = run(be)
            first = time.perf_counter() - t0
            if ref is None:
                ref = out
            else:
                err = np.max(np.abs(out - ref))
                assert err < 1e-9, f"{kernel}: backends disagree by {err:g}"
            best = best_of(lambda: run(be), args.repeat)
            base = base or best
            print(f"{kernel:<14} {name:<7} {first:10.4f} {best:10.4f} {base / best:7.1f}x  {desc}")


if __name__ == "__main__":
    main()
