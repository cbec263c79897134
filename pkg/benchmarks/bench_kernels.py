"""Benchmark the ramp-integration kernels: numba backend vs pure numpy.

Runs the same fixed-step integration through both backends, checks they agree
to near machine precision, and reports steps/second.  Select the backend used
by the library at large with the OTTO_ISING_BACKEND environment variable
(values: numba | numpy).

Usage: python3 benchmarks/bench_kernels.py [n_sites ...]
"""

from __future__ import annotations

import sys
import time

import numpy as np

from otto_ising import kernels


def _bench_one(n_sites: int, nsteps: int = 4000) -> None:
    coupling = 1.0
    h0, v = 0.5, 0.01
    dt = 1e-3

    results = {}
    for backend in kernels.available_backends():
        fn = kernels.rk4_chunk_numba if backend == "numba" else kernels.rk4_chunk_numpy
        phi = np.eye(n_sites, dtype=np.complex128)
        psi = np.eye(n_sites, dtype=np.complex128)
        if backend == "numba":
            # one warmup call so JIT compilation stays out of the timing
            fn(phi.copy(), psi.copy(), 0.0, dt, 10, h0, v, coupling)
        start = time.perf_counter()
        fn(phi, psi, 0.0, dt, nsteps, h0, v, coupling)
        elapsed = time.perf_counter() - start
        results[backend] = (phi, psi, elapsed)
        print(f"  {backend:>6}: {nsteps / elapsed:>12.0f} steps/s   ({elapsed:.3f} s)")

    if len(results) == 2:
        (phi_a, psi_a, _), (phi_b, psi_b, _) = results["numba"], results["numpy"]
        worst = max(np.max(np.abs(phi_a - phi_b)), np.max(np.abs(psi_a - psi_b)))
        assert worst < 1e-12, f"backends disagree by {worst:.3e}"
        speedup = results["numpy"][2] / results["numba"][2]
        print(f"  agreement: {worst:.3e}   numba speedup: {speedup:.1f}x")


def main(argv: list[str]) -> int:
    sizes = [int(a) for a in argv[1:]] or [20, 50, 100]
    print(f"backends available: {', '.join(kernels.available_backends())}")
    print(f"active backend: {kernels.active_backend()}")
    for n in sizes:
        print(f"N = {n}:")
        _bench_one(n)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
