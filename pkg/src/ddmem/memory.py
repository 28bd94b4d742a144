"""Memory read-out layer: efficiency, noise photons and the final SNR.

The decoupling-dependent physics enters only through the coherence
efficiency and the stray population; this module folds in the optical
parameters of the storage scheme.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

__all__ = ["SCHEMES", "MemoryParams", "memory_efficiency", "noise_photons", "snr"]

SCHEMES = ("afc_backward", "afc_forward", "eit")


@dataclass(frozen=True)
class MemoryParams:
    """Optical parameters of the storage scheme.

    ``d_tilde`` is the effective optical depth, ``eta_d`` a scheme-level
    dephasing efficiency factor in [0, 1], ``mu_in`` the mean input photon
    number.  The EIT scheme needs its efficiency constant ``eit_c``
    explicitly; there is no meaningful default.
    """

    d_tilde: float
    eta_d: float = 1.0
    mu_in: float = 1.0
    scheme: str = "afc_backward"
    eit_c: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.d_tilde < 0:
            raise ValueError(f"d_tilde must be >= 0, got {self.d_tilde}")
        if not 0.0 <= self.eta_d <= 1.0:
            raise ValueError(f"eta_d must be in [0, 1], got {self.eta_d}")
        if self.mu_in <= 0:
            raise ValueError(f"mu_in must be > 0, got {self.mu_in}")


def memory_efficiency(params: MemoryParams) -> float:
    """Read-write efficiency of the bare memory (no decoupling losses).

    Backward-retrieval echo memories follow ``(1 - e^{-d})^2 eta_d``,
    forward retrieval ``d^2 e^{-d} eta_d``, and EIT at large depth
    ``1 - C/d``; all values are clamped to [0, 1].
    """
    d = params.d_tilde
    if params.scheme == "afc_backward":
        return (1.0 - math.exp(-d)) ** 2 * params.eta_d
    if params.scheme == "afc_forward":
        return d * d * math.exp(-d) * params.eta_d
    if params.eit_c is None:
        raise ValueError("the EIT scheme requires the efficiency constant eit_c")
    if d == 0.0:
        warnings.warn("EIT efficiency is undefined at zero optical depth; returning 0")
        return 0.0
    return min(1.0, max(0.0, 1.0 - params.eit_c / d)) * params.eta_d


def noise_photons(d_tilde: float, rho_ss: float, transfer_efficiency: float = 1.0) -> float:
    """Mean photon number spontaneously emitted into the output mode.

    ``(1 - e^{-d}) * rho_ss``, valid for values well below one (a warning
    is raised above 0.1).  ``transfer_efficiency`` scales the fraction of
    stray population actually promoted at read-out; the default of 1 is
    the standard full-transfer assumption.
    """
    mu = (1.0 - math.exp(-d_tilde)) * rho_ss * transfer_efficiency
    if mu > 0.1:
        warnings.warn("noise photon number exceeds the weak-noise regime (> 0.1)")
    return mu


def snr(params: MemoryParams, eta_coh: float, rho_ss: float) -> float:
    """Signal-to-noise ratio of the memory output mode.

    ``mu_in * eta_m * eta_coh / mu_noise``; for backward-retrieval echo
    memories this reduces to ``(1 - e^{-d}) eta_d mu_in * eta_coh/rho_ss``
    and approaches ``mu_in * eta_d * R`` at large optical depth.  A
    non-positive ``rho_ss`` (noise below the input correction) gives
    ``inf``.
    """
    if rho_ss <= 0.0:
        return math.inf
    eta_m = memory_efficiency(params)
    mu_noise = noise_photons(params.d_tilde, rho_ss)
    if mu_noise == 0.0:
        return math.inf
    return params.mu_in * eta_m * eta_coh / mu_noise
