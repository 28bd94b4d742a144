"""Propagation backends.

The hot loop (per-spin propagation with drifting detunings) exists twice:
a compiled Cython kernel and a NumPy fallback with identical semantics and
identical consumption of random draws.  The compiled kernel is used when it
imported successfully; set ``DDMEM_BACKEND=numpy`` or ``=cython`` to force
a choice.  ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import logging
import os

import numpy as np

from . import kernels_np

logger = logging.getLogger(__name__)

try:  # compiled kernel is optional
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None

__all__ = ["active_backend", "available_backends", "ou_propagate", "quat"]


def available_backends() -> tuple[str, ...]:
    return ("numpy",) if _compiled is None else ("cython", "numpy")


def _select() -> str:
    choice = os.environ.get("DDMEM_BACKEND", "auto").lower()
    if choice in ("auto", ""):
        return "cython" if _compiled is not None else "numpy"
    if choice == "cython":
        if _compiled is None:
            raise ImportError(
                "DDMEM_BACKEND=cython but the compiled kernel is not available; "
                "reinstall with a C compiler or unset DDMEM_BACKEND"
            )
        return "cython"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"DDMEM_BACKEND must be auto, cython or numpy, got {choice!r}")


def active_backend() -> str:
    """Name of the kernel implementation in use."""
    return _select()


def ou_propagate(
    q: np.ndarray,
    delta_static: np.ndarray,
    delta_ou: np.ndarray,
    phases: np.ndarray,
    tau: float,
    eps: float,
    substeps: int,
    a_coef: float,
    b_coef: float,
    normals: np.ndarray,
    reps: int,
    backend: str | None = None,
) -> None:
    """Advance per-spin propagators by ``reps`` repetitions, in place."""
    name = backend or _select()
    if name == "cython":
        _compiled.ou_propagate(
            q,
            np.ascontiguousarray(delta_static, dtype=float),
            delta_ou,
            np.ascontiguousarray(phases, dtype=float),
            float(tau),
            float(eps),
            int(substeps),
            float(a_coef),
            float(b_coef),
            np.ascontiguousarray(normals, dtype=float),
            int(reps),
        )
    else:
        kernels_np.ou_propagate(
            q, delta_static, delta_ou, phases, tau, eps, substeps, a_coef, b_coef, normals, reps
        )
