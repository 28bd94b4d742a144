"""Exact algebra of two-level unitaries.

Everything downstream (pulse sequences, ensemble propagation, closed-form
checks) is built from three primitives: free evolution about z, an
instantaneous population-inversion pulse with amplitude error, and matrix
composition.  The module also provides the axis-angle view of a unitary and
the 3x3 real matrix that transports Pauli observables.

Conventions
-----------
* Basis order is (storage ``|s>``, ground ``|g>``), so the storage-state
  projector is ``(1 + sigma_z)/2``.
* A rotation is written ``u = exp(-i (alpha/2) n.sigma)`` with unit axis
  ``n`` and angle ``alpha``.  ``(alpha, n)`` and ``(-alpha, -n)`` describe
  the same unitary.
* Unitaries are compared through the phase-insensitive trace fidelity
  ``|tr(a^dag b)| / 2``, never entrywise.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "IDENTITY",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "Unitary2",
    "RotationRep",
    "HeisenbergMatrix",
    "free_evolution",
    "pi_pulse",
    "compose",
    "repeat",
    "to_axis_angle",
    "from_axis_angle",
    "heisenberg_matrix",
    "trace_fidelity",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

#: below this value of |sin(alpha/2)| the rotation axis is unresolvable and
#: the canonical axis (0, 0, 1) is reported instead
DEGENERATE_AXIS_EPS = 1e-9

_UNITARITY_TOL = 1e-12


class DomainError(ValueError):
    """Raised for non-finite or otherwise invalid physical inputs."""


@dataclass(frozen=True)
class Unitary2:
    """A 2x2 unitary, the fundamental propagator object.

    Parameters
    ----------
    matrix : ndarray
        Complex 2x2 matrix.  Unitarity is checked on construction with a
        tolerance loose enough for long composition chains; use
        :meth:`renormalized` to project back onto the unitary group if a
        chain of more than ~1e6 compositions is expected.
    """

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("matrix entries must be finite")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Unitary2":
        return cls(IDENTITY)

    def dagger(self) -> "Unitary2":
        return Unitary2(self.matrix.conj().T)

    def unitarity_defect(self) -> float:
        """Frobenius norm of ``u^dag u - 1``."""
        return float(np.linalg.norm(self.matrix.conj().T @ self.matrix - IDENTITY))

    def det_defect(self) -> float:
        """``abs(|det u| - 1)``."""
        return abs(abs(np.linalg.det(self.matrix)) - 1.0)

    def renormalized(self) -> "Unitary2":
        """Project onto the closest unitary (polar decomposition)."""
        w, _, vh = np.linalg.svd(self.matrix)
        return Unitary2(w @ vh)

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        return Unitary2(self.matrix @ other.matrix)


@dataclass(frozen=True)
class RotationRep:
    """Axis-angle form of a two-level unitary.

    ``alpha`` is the rotation angle in radians and ``axis`` the unit
    3-vector ``n``; the represented unitary is
    ``exp(-i (alpha/2) n.sigma)`` up to a global phase.
    """

    alpha: float
    axis: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = np.asarray(self.axis, dtype=float).reshape(3)
        norm = float(np.linalg.norm(n))
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-9:
            raise ValueError(f"axis must be a unit vector, |n| = {norm}")
        n = n / norm
        n.setflags(write=False)
        object.__setattr__(self, "axis", n)
        if not (-2 * math.pi < self.alpha <= 2 * math.pi):
            raise ValueError(f"alpha out of range (-2pi, 2pi]: {self.alpha}")

    @property
    def theta(self) -> float:
        """Polar angle of the axis, in [0, pi]."""
        return math.acos(max(-1.0, min(1.0, float(self.axis[2]))))

    @property
    def phi(self) -> float:
        """Azimuth of the axis, in [0, 2pi)."""
        return math.atan2(float(self.axis[1]), float(self.axis[0])) % (2 * math.pi)

    def flipped(self) -> "RotationRep":
        """The equivalent representative ``(-alpha, -n)``."""
        return RotationRep(-self.alpha if self.alpha != 0.0 else 0.0, -self.axis)

    def rotation_vector(self) -> np.ndarray:
        """``alpha * n``, which is invariant under the sign flip."""
        return self.alpha * self.axis


@dataclass(frozen=True)
class HeisenbergMatrix:
    """3x3 real matrix ``h`` transporting Pauli observables.

    Defined operationally by ``u^dag sigma_q u = sum_p h[q, p] sigma_p``
    for ``q, p`` in ``(x, y, z)``.  For any unitary ``u`` it is a proper
    rotation: ``h^T h = 1`` and ``det h = +1``.
    """

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def orthogonality_defect(self) -> float:
        return float(np.linalg.norm(self.matrix.T @ self.matrix - np.eye(3)))

    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def __matmul__(self, other: "HeisenbergMatrix") -> "HeisenbergMatrix":
        return HeisenbergMatrix(self.matrix @ other.matrix)


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value}")


def free_evolution(delta: float, t: float) -> Unitary2:
    """Free evolution of a spin detuned by ``delta`` for a duration ``t``.

    Returns ``cos(delta t / 2) 1 - i sin(delta t / 2) sigma_z``, an exact
    z-rotation by the accumulated phase ``delta * t``.

    Parameters
    ----------
    delta : float
        Angular detuning in rad/s.
    t : float
        Duration in seconds, must be >= 0.
    """
    _check_finite(delta=float(delta), t=float(t))
    if t < 0:
        raise DomainError(f"duration must be non-negative, got {t}")
    half = 0.5 * delta * t
    c, s = math.cos(half), math.sin(half)
    return Unitary2(np.array([[c - 1j * s, 0.0], [0.0, c + 1j * s]]))


def pi_pulse(phi: float, eps: float = 0.0) -> Unitary2:
    """Instantaneous population-inversion pulse of phase ``phi``.

    The pulse area is ``pi + eps``; the propagator is
    ``cos(eps/2)(cos(phi) sigma_x + sin(phi) sigma_y) + i sin(eps/2) 1``.
    ``eps = 0`` gives an exact inversion (``sigma_x`` for ``phi = 0``).

    Parameters
    ----------
    phi : float
        Pulse phase in radians.
    eps : float
        Amplitude (pulse-area) error in radians.
    """
    _check_finite(phi=float(phi), eps=float(eps))
    ce, se = math.cos(0.5 * eps), math.sin(0.5 * eps)
    cp, sp = math.cos(phi), math.sin(phi)
    return Unitary2(
        np.array(
            [
                [1j * se, ce * (cp - 1j * sp)],
                [ce * (cp + 1j * sp), 1j * se],
            ]
        )
    )


def compose(a: Unitary2, b: Unitary2) -> Unitary2:
    """Matrix product ``a b``; ``b`` acts first."""
    return Unitary2(a.matrix @ b.matrix)


def trace_fidelity(a: Unitary2, b: Unitary2) -> float:
    """Phase-insensitive overlap ``|tr(a^dag b)| / 2``, equal to 1 iff
    ``a`` and ``b`` agree up to a global phase."""
    return abs(np.trace(a.matrix.conj().T @ b.matrix)) / 2.0


def _su2_parts(u: Unitary2) -> tuple[float, np.ndarray, complex]:
    """Split ``u`` into a special-unitary quaternion and its global phase.

    Returns ``(w, v, phase)`` with ``u = phase * (w 1 - i v.sigma)`` and
    ``w^2 + |v|^2 = 1``.
    """
    m = u.matrix
    det = complex(np.linalg.det(m))
    mag = abs(det)
    if mag < 1e-3:
        raise ValueError("matrix is singular, not a unitary")
    phase = cmath.sqrt(det / mag) * math.sqrt(mag)
    psi = m / phase
    w = 0.5 * (psi[0, 0] + psi[1, 1]).real
    v = np.array(
        [
            -0.5 * (psi[0, 1] + psi[1, 0]).imag,
            0.5 * (psi[1, 0] - psi[0, 1]).real,
            -0.5 * (psi[0, 0] - psi[1, 1]).imag,
        ]
    )
    return w, v, phase


def to_axis_angle(u: Unitary2) -> RotationRep:
    """Axis-angle form of a unitary, up to a global phase.

    Returns ``(alpha, n)`` with ``u = exp(-i (alpha/2) n.sigma)`` up to
    phase and ``alpha`` in ``[0, 2pi]``.  For ``u`` proportional to the
    identity the axis is unresolvable; the canonical axis ``(0, 0, 1)`` is
    returned, with ``alpha = 0`` (for ``+1``-like phase) or ``2pi`` (for
    ``-1``-like phase, a bare global sign).
    """
    w, v, _ = _su2_parts(u)
    r = float(np.linalg.norm(v))
    if r < DEGENERATE_AXIS_EPS:
        return RotationRep(0.0 if w >= 0.0 else 2 * math.pi, np.array([0.0, 0.0, 1.0]))
    return RotationRep(2.0 * math.atan2(r, w), v / r)


def from_axis_angle(alpha: float, axis) -> Unitary2:
    """Unitary ``exp(-i (alpha/2) n.sigma)`` for a unit axis ``n``."""
    n = np.asarray(axis, dtype=float).reshape(3)
    n = n / np.linalg.norm(n)
    c, s = math.cos(0.5 * alpha), math.sin(0.5 * alpha)
    nx, ny, nz = n
    return Unitary2(
        np.array(
            [
                [c - 1j * s * nz, -s * (ny + 1j * nx)],
                [s * (ny - 1j * nx), c + 1j * s * nz],
            ]
        )
    )


def repeat(u: Unitary2, m: int) -> Unitary2:
    """``u`` applied ``m`` times.

    Uses the axis-angle form (angle ``alpha -> m alpha`` about a fixed
    axis) plus the accumulated global phase, so the cost is independent of
    ``m`` and the result matches ``m`` explicit compositions to machine
    precision.  ``m = 0`` returns the identity.
    """
    if m < 0:
        raise ValueError(f"repetition count must be >= 0, got {m}")
    if m == 0:
        return Unitary2.identity()
    w, v, phase = _su2_parts(u)
    r = float(np.linalg.norm(v))
    half = math.atan2(r, w)
    phase_m = phase**m
    if r < 1e-300:
        return Unitary2(phase_m * (1.0 if w >= 0 else (-1.0) ** m) * IDENTITY)
    n = v / r
    cm, sm = math.cos(m * half), math.sin(m * half)
    nx, ny, nz = n
    psi_m = np.array(
        [
            [cm - 1j * sm * nz, -sm * (ny + 1j * nx)],
            [sm * (ny - 1j * nx), cm + 1j * sm * nz],
        ]
    )
    return Unitary2(phase_m * psi_m)


def heisenberg_matrix(u: Unitary2) -> HeisenbergMatrix:
    """Observable-transport matrix of ``u``.

    ``h[q, p]`` solves ``u^dag sigma_q u = sum_p h[q, p] sigma_p``; the map
    is multiplicative in the same order as the operators,
    ``h(a b) = h(a) h(b)``.
    """
    w, v, _ = _su2_parts(u)
    norm = math.sqrt(w * w + float(v @ v))
    w /= norm
    x, y, z = v / norm
    return HeisenbergMatrix(
        np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )
    )
