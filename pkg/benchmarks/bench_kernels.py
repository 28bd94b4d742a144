#!/usr/bin/env python3
"""Benchmark the compiled propagation kernel against the NumPy fallback.

The workload mirrors the drifting-detuning sweep: per-spin quaternion
propagation through repeated pulse trains with one exact drift update per
substep.  Run after an editable install:

    python3 benchmarks/bench_kernels.py
"""

import math
import time

import numpy as np

from ddmem import broadening as bd
from ddmem import engine
from ddmem.engine import quat
from ddmem.sequences import SequenceSpec


def run_case(backend: str, n: int, reps: int, spec: SequenceSpec, substeps: int, seed: int = 7):
    params = bd.BroadeningParams(
        gamma=2 * math.pi * 27e3, sigma_delta=2 * math.pi * 284.0, tau_c=3.5e-3, seed=seed
    )
    deltas = bd.sample_detunings(params, n)
    a, b = bd.ou_coefficients(spec.tau / (2 * substeps), params)
    rng = np.random.default_rng(seed)
    normals = rng.standard_normal((n, reps * spec.L * 2 * substeps))
    q = quat.quat_identity((n,))
    dou = bd.ou_init(params, np.random.default_rng(seed + 1), n)
    phases = np.array(spec.phases)
    t0 = time.perf_counter()
    engine.ou_propagate(
        q, deltas, dou, phases, spec.tau, 0.01 * math.pi, substeps, a, b, normals, reps,
        backend=backend,
    )
    elapsed = time.perf_counter() - t0
    steps = n * reps * spec.L * (2 * substeps + 1)
    return elapsed, steps, q


def main():
    backends = engine.available_backends()
    print(f"available backends: {', '.join(backends)}")
    cases = [
        ("XY8, tau sweep point (fine)", SequenceSpec.preset("XY8", 100e-6), 1000, 1250, 1),
        ("CP, short spacing", SequenceSpec.preset("CP", 30e-6), 1000, 8000, 1),
        ("U5a:XY4, coarse spacing", SequenceSpec.preset("U5a:XY4", 2e-3, ), 1000, 25, 3),
    ]
    for label, spec, n, reps, substeps in cases:
        print(f"\n{label}: n={n} spins, {reps} repetitions, L={spec.L}, substeps={substeps}")
        results = {}
        for backend in backends:
            elapsed, steps, q = run_case(backend, n, reps, spec, substeps)
            results[backend] = (elapsed, q)
            print(f"  {backend:>6s}: {elapsed:8.3f} s   ({steps / elapsed / 1e6:8.1f} M steps/s)")
        if len(results) == 2:
            speedup = results["numpy"][0] / results["cython"][0]
            agree = float(np.max(np.abs(results["numpy"][1] - results["cython"][1])))
            print(f"  speedup cython/numpy: {speedup:.1f}x   max state diff: {agree:.2e}")


if __name__ == "__main__":
    main()
