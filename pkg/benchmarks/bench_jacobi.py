"""Compare the compiled and pure-Python Jacobi backends.

Times batched diagonalization of random Hermitian 4x4 and 8x8 matrices (the
two problem sizes of the simulator) and one full 901-step site B sweep, and
checks that both backends give the same eigenvalues.

    python benchmarks/bench_jacobi.py [--batch 20000] [--repeat 3] [--threads N]
"""

import argparse
import os
import time

import numpy as np


def _random_hermitian(rng, batch, n):
    A = rng.normal(size=(batch, n, n)) + 1j * rng.normal(size=(batch, n, n))
    return 50.0 * (A + np.conj(np.swapaxes(A, 1, 2))) / 2


def _best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, help="value for SPINPAIR_THREADS (0 = runtime default)")
    args = ap.parse_args()
    if args.threads is not None:
        os.environ["SPINPAIR_THREADS"] = str(args.threads)

    from spinpair import _kernels
    from spinpair.presets import preset_model
    from spinpair.spectrum import sweep

    backends = sorted(_kernels.BACKENDS)
    if "compiled" not in backends:
        print("compiled extension not built; only the Python backend is available")
    print(f"SPINPAIR_THREADS={_kernels.thread_cap()}  batch={args.batch}  best of {args.repeat}")
    rng = np.random.default_rng(0)
    print(f"{'problem':<22}" + "".join(f"{b:>14}" for b in backends) + f"{'speed-up':>12}")
    for n in (4, 8):
        H = _random_hermitian(rng, args.batch, n)
        times, values = {}, {}
        for b in backends:
            times[b], (w, _, _) = _best_time(lambda: _kernels.jacobi_batch(H, backend=b), args.repeat)
            values[b] = np.sort(w, axis=1)
        ref = np.linalg.eigvalsh(H)
        for b in backends:
            err = np.max(np.abs(values[b] - ref))
            assert err < 1e-9, f"{b} backend differs from LAPACK by {err:.2e}"
        row = f"{f'{n}x{n} x {args.batch}':<22}" + "".join(f"{times[b]:>13.3f}s" for b in backends)
        if len(backends) == 2:
            row += f"{times['python'] / times['compiled']:>11.1f}x"
        print(row)

    model = preset_model("siteB")
    times = {}
    for b in backends:
        times[b], _ = _best_time(lambda: sweep(model, [0, 0, 1], -0.2, 0.7, 901, backend=b),
                                 args.repeat)
    row = f"{'siteB sweep, 901 steps':<22}" + "".join(f"{times[b]:>13.3f}s" for b in backends)
    if len(backends) == 2:
        row += f"{times['python'] / times['compiled']:>11.1f}x"
    print(row)


if __name__ == "__main__":
    main()
