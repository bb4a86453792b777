"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 3] [--quick]
"""
import argparse
import time

import numpy as np

from randpf import _pykernels
from randpf.kernels import BACKENDS


def best_of(fn, setup, repeat):
    times = []
    for _ in range(repeat):
        args = setup()
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(quick):
    rng = np.random.default_rng(0)
    n_qubits, n_steps = (8, 200) if quick else (12, 1000)
    d = 1 << n_qubits
    x = rng.integers(0, d, n_steps)
    z = rng.integers(0, d, n_steps)
    y = np.array([bin(a & b).count("1") for a, b in zip(x, z)])
    th = rng.normal(size=n_steps)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    yield (
        f"pauli steps n={n_qubits} N={n_steps}",
        "apply_pauli_steps",
        lambda: (psi.copy(), x, z, y, th),
    )
    m = 1 << (14 if quick else 20)
    vec = rng.normal(size=m)
    yield (f"fwht length 2^{m.bit_length() - 1}", "fwht", lambda: (vec.copy(),))
    for dim in ((32, 64) if quick else (64, 128)):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        h = (a + a.conj().T) / 2
        sched = _pykernels.round_robin(dim)
        yield (
            f"jacobi d={dim}",
            "jacobi_eigh",
            lambda h=h, sched=sched: (h.copy(), sched, 1e-13, 100, True),
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--quick", action="store_true", help="small sizes for a smoke run")
    args = parser.parse_args()
    names = sorted(BACKENDS)
    print(f"{'case':32s}" + "".join(f"{b:>12s}" for b in names) + "     speedup")
    for label, fname, setup in cases(args.quick):
        times = {b: best_of(getattr(BACKENDS[b], fname), setup, args.repeat) for b in names}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:32s}" + "".join(f"{times[b]:12.4f}" for b in names) + f"{speed:12.1f}x")


if __name__ == "__main__":
    main()
