"""Decoupling sequences as declarative pulse programs.

A sequence is an ordered list of pulse phases applied at spacing ``tau``,
with free evolution of ``tau/2`` before the first and after the last pulse
of every repetition.  Presets cover the standard trains (CP, CPMG, XY4,
XY8) and the five-pulse composite variants U5a:CP and U5a:XY4, where each
inversion pulse of the host train is replaced by a five-pulse block whose
internal gaps equal the external ones.

Phase lists are stored in chronological order (first pulse first); the
unitary builder folds them so that the first pulse acts first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence as Seq

import numpy as np

from . import su2
from .engine import quat

__all__ = [
    "PRESET_NAMES",
    "SequenceSpec",
    "PulseProgram",
    "FreeEvolve",
    "Pulse",
    "preset_phases",
    "building_block",
    "materialize",
    "sequence_unitary",
    "sequence_quats",
    "first_order_cancellation_check",
]

_PI = math.pi


def _u5a_block(base: float) -> tuple[float, ...]:
    # chronological order; the list is palindromic so it coincides with its
    # operator-ordered (right-to-left) reading
    return (
        base + 4 * _PI / 3,
        base + _PI / 6,
        base + 5 * _PI / 3,
        base + _PI / 6,
        base + 4 * _PI / 3,
    )


_XY4 = (0.0, _PI / 2, 0.0, _PI / 2)

_PRESETS: dict[str, tuple[float, ...]] = {
    "CP": (0.0, 0.0),
    "CPMG": (0.0, _PI),
    "XY4": _XY4,
    # second half is the first half with the two phases interchanged
    "XY8": _XY4 + (_PI / 2, 0.0, _PI / 2, 0.0),
    "U5a:CP": _u5a_block(0.0) + _u5a_block(0.0),
    "U5a:XY4": sum((_u5a_block(p) for p in _XY4), ()),
}

PRESET_NAMES = tuple(_PRESETS)

#: building blocks per repetition, for reference and validation
PRESET_LENGTHS = {name: len(p) for name, p in _PRESETS.items()}


def preset_phases(name: str) -> tuple[float, ...]:
    """Chronological pulse-phase list of a named preset."""
    try:
        return _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}") from None


@dataclass(frozen=True)
class SequenceSpec:
    """Declarative description of one repetition of a sequence.

    Attributes
    ----------
    name : str
        Preset name, or ``"Custom"`` for an explicit phase list.
    phases : tuple of float
        Chronological pulse phases in radians.
    tau : float
        Inter-pulse spacing in seconds (> 0).
    """

    name: str
    phases: tuple[float, ...]
    tau: float

    def __post_init__(self):
        if self.tau <= 0 or not math.isfinite(self.tau):
            raise ValueError(f"tau must be positive and finite, got {self.tau}")
        if len(self.phases) == 0:
            raise ValueError("a sequence needs at least one pulse")
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))

    @classmethod
    def preset(cls, name: str, tau: float) -> "SequenceSpec":
        return cls(name=name, phases=preset_phases(name), tau=tau)

    @classmethod
    def custom(cls, phases: Seq[float], tau: float) -> "SequenceSpec":
        return cls(name="Custom", phases=tuple(phases), tau=tau)

    @property
    def L(self) -> int:
        """Number of building blocks per repetition."""
        return len(self.phases)

    @property
    def duration(self) -> float:
        """Duration of one repetition, exactly ``L * tau``."""
        return self.L * self.tau


@dataclass(frozen=True)
class FreeEvolve:
    duration: float


@dataclass(frozen=True)
class Pulse:
    phase: float


@dataclass(frozen=True)
class PulseProgram:
    """Time-ordered events of one repetition, with merged gaps.

    The stored pattern is ``tau/2`` before the first pulse, ``tau`` between
    consecutive pulses (two adjacent half-gaps merged, also inside
    composite blocks) and ``tau/2`` after the last pulse.
    """

    events: tuple = field(repr=False)

    @property
    def duration(self) -> float:
        return sum(e.duration for e in self.events if isinstance(e, FreeEvolve))

    @property
    def pulse_phases(self) -> tuple[float, ...]:
        return tuple(e.phase for e in self.events if isinstance(e, Pulse))


def materialize(spec: SequenceSpec) -> PulseProgram:
    """Expand a spec into its time-ordered event list."""
    half = 0.5 * spec.tau
    events: list = [FreeEvolve(half)]
    for j, phase in enumerate(spec.phases):
        events.append(Pulse(phase))
        events.append(FreeEvolve(half if j == spec.L - 1 else spec.tau))
    return PulseProgram(tuple(events))


def _eps_per_pulse(spec: SequenceSpec, eps) -> np.ndarray:
    eps_arr = np.atleast_1d(np.asarray(eps, dtype=float))
    if eps_arr.size == 1:
        return np.full(spec.L, float(eps_arr[0]))
    if eps_arr.size != spec.L:
        raise ValueError(f"need one amplitude error or {spec.L}, got {eps_arr.size}")
    return eps_arr


def building_block(phi: float, tau: float, delta: float, eps: float) -> su2.Unitary2:
    """Basic block: half-gap, pulse, half-gap."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    half = su2.free_evolution(delta, 0.5 * tau)
    return su2.compose(half, su2.compose(su2.pi_pulse(phi, eps), half))


def sequence_unitary(spec: SequenceSpec, delta: float, eps) -> su2.Unitary2:
    """One repetition of the sequence as an exact unitary.

    ``eps`` may be a scalar systematic amplitude error or a per-pulse
    vector of length ``L``.  With ``eps = 0`` the result is the identity
    up to a global phase for any preset, detuning and spacing.
    """
    eps_vec = _eps_per_pulse(spec, eps)
    program = materialize(spec)
    u = su2.Unitary2.identity()
    k = 0
    for event in program.events:
        if isinstance(event, FreeEvolve):
            step = su2.free_evolution(delta, event.duration)
        else:
            step = su2.pi_pulse(event.phase, eps_vec[k])
            k += 1
        u = su2.compose(step, u)
    return u


def sequence_quats(spec: SequenceSpec, deltas: np.ndarray, eps) -> np.ndarray:
    """Per-spin repetition quaternions, shape ``(n, 4)``.

    Vectorized over detunings; equal to
    ``sequence_unitary(spec, delta, eps)`` up to a global phase for each
    entry.  This is the construction step of the static (noise-free)
    Monte Carlo path.
    """
    deltas = np.asarray(deltas, dtype=float)
    eps_vec = _eps_per_pulse(spec, eps)
    half_phase = deltas * (0.5 * spec.tau)
    full_phase = deltas * spec.tau
    q = quat.gap_quat(half_phase)
    for j, phase in enumerate(spec.phases):
        q = quat.quat_mul(np.broadcast_to(quat.pulse_quat(phase, eps_vec[j]), q.shape), q)
        gap = half_phase if j == spec.L - 1 else full_phase
        q = quat.quat_mul(quat.gap_quat(gap), q)
    return quat.quat_normalize(q)


def first_order_cancellation_check(phases: Seq[float], tol: float = 1e-9) -> bool:
    """Whether a four-pulse phase list cancels amplitude errors to first order.

    The two conditions are ``phi2 = (phi3 + phi1 + pi)/2`` and
    ``phi4 = (3 phi3 - phi1 + pi)/2``, both modulo 2pi.
    """
    phases = [float(p) for p in phases]
    if len(phases) != 4:
        raise ValueError(f"need exactly 4 phases, got {len(phases)}")
    p1, p2, p3, p4 = phases

    def _mod_close(a: float, b: float) -> bool:
        d = (a - b) % (2 * _PI)
        return min(d, 2 * _PI - d) <= tol

    return _mod_close(p2, 0.5 * (p3 + p1 + _PI)) and _mod_close(p4, 0.5 * (3 * p3 - p1 + _PI))
