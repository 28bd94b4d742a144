"""NumPy implementation of the drifting-detuning propagation kernel.

Semantics are shared with the compiled kernel in ``_kernels.pyx``: one
repetition applies, for each pulse, ``substeps`` free-evolution substeps of
``tau/(2*substeps)``, the pulse, and ``substeps`` further substeps.  Every
substep uses the drift value at its start and then advances the drift with
the exact Ornstein-Uhlenbeck transition ``delta' = a*delta + b*nu``,
consuming one normal draw per substep in chronological order.

The sequential drift recursion is delegated to an AR(1) filter and the
ordered quaternion product to a pairwise tree, so the Python-level work is
O(log n_steps) array operations instead of one call per step.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from .quat import gap_quat, pulse_quat, quat_chain, quat_mul, quat_normalize

__all__ = ["ou_propagate"]


def _step_layout(n_pulses: int, substeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Positions of gap and pulse steps inside one repetition."""
    per_pulse = 2 * substeps + 1
    base = np.arange(n_pulses) * per_pulse
    pulse_pos = base + substeps
    gap_pos = np.concatenate(
        [np.concatenate([base + s for s in range(substeps)]),
         np.concatenate([base + substeps + 1 + s for s in range(substeps)])]
    )
    gap_pos.sort()
    return gap_pos, pulse_pos


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
) -> None:
    """Advance per-spin propagators by ``reps`` repetitions, in place.

    Parameters
    ----------
    q : ndarray, shape (n, 4)
        Cumulative propagator quaternions, updated in place.
    delta_static, delta_ou : ndarray, shape (n,)
        Static detunings and current drift values; the drift is updated.
    phases : ndarray, shape (L,)
        Chronological pulse phases of one repetition.
    normals : ndarray, shape (n, reps * L * 2 * substeps)
        Standard-normal draws, consumed row-wise chronologically.
    """
    n, L = q.shape[0], len(phases)
    k = int(substeps)
    dt = tau / (2.0 * k)
    gaps_per_rep = 2 * k * L
    steps_per_rep = L * (2 * k + 1)
    if normals.shape != (n, reps * gaps_per_rep):
        raise ValueError(f"normals shape {normals.shape} != {(n, reps * gaps_per_rep)}")

    pulses = pulse_quat(np.asarray(phases, dtype=float), eps)  # (L, 4)
    gap_rep, pulse_rep = _step_layout(L, k)

    # chunk whole repetitions to bound the (n, steps, 4) workspace
    chunk_reps = max(1, int(2_000_000 // max(1, n * steps_per_rep)))
    done = 0
    while done < reps:
        rc = min(chunk_reps, reps - done)
        g0 = done * gaps_per_rep
        nu = normals[:, g0 : g0 + rc * gaps_per_rep]

        # drift value at the start of each gap: current value, then AR(1)
        zi = (a_coef * delta_ou)[:, None]
        y, _ = lfilter([b_coef], [1.0, -a_coef], nu, axis=1, zi=zi)
        used = np.concatenate([delta_ou[:, None], y[:, :-1]], axis=1)
        delta_ou[:] = y[:, -1]

        gap_phase = (delta_static[:, None] + used) * dt

        offsets = (np.arange(rc) * steps_per_rep)[:, None]
        gap_pos = (offsets + gap_rep[None, :]).ravel()
        pulse_pos = (offsets + pulse_rep[None, :]).ravel()

        steps = np.zeros((n, rc * steps_per_rep, 4), dtype=float)
        steps[:, gap_pos, :] = gap_quat(gap_phase.reshape(n, -1))
        steps[:, pulse_pos, :] = np.broadcast_to(
            np.tile(pulses, (rc, 1))[None, :, :], (n, rc * L, 4)
        )

        q[:] = quat_mul(quat_chain(steps), q)
        q[:] = quat_normalize(q)
        done += rc
