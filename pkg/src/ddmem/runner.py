"""Sweep driver: expands a configuration into ensemble runs and flat rows."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import __version__
from .analytic import COHERENCE_LOSS_SMALL_M, POPULATION_SMALL_M
from .config import ExperimentConfig, SequenceRequest, log_checkpoints
from .engine import active_backend
from .ensemble import EnsembleConfig, EnsembleResult, run_experiment
from .memory import snr as memory_snr
from .oracle import overlay_calibration

__all__ = ["SweepData", "run_sweep", "COLUMNS"]

COLUMNS = (
    "sequence",
    "m",
    "tau_s",
    "t_s",
    "rho_ss",
    "rho_ss_err",
    "eta_coh",
    "eta_coh_err",
    "artificial_coherence",
    "artificial_significant",
    "R",
    "R_err",
    "snr",
    "guard_flag",
    "noise_limited",
    "eta_coh_below_0p9",
    "rho_ss_analytic",
    "coh_loss_analytic",
    "R_analytic",
)


@dataclass(frozen=True)
class SweepData:
    meta: dict
    rows: list[dict]


def _overlays(req: SequenceRequest, cfg: ExperimentConfig, tau: float):
    """Quadratic-regime overlay curves, where a closed expansion exists."""
    if cfg.ou_enabled or req.phases_pi is not None or req.name not in POPULATION_SMALL_M:
        return None
    if cfg.eps == 0.0:
        return None  # nothing to expand around
    kappa_rho, kappa_coh = overlay_calibration(req.name, cfg.eps, cfg.broadening(), tau)
    c_rho, k_rho = POPULATION_SMALL_M[req.name]
    c_coh, k_coh = COHERENCE_LOSS_SMALL_M[req.name]
    correction = 0.0 if cfg.atoms is None else 1.0 / cfg.atoms

    def at(m: int) -> tuple[float, float, float]:
        # same input-excitation correction as the measured population; for
        # very clean sequences the quadratic term starts below it
        rho = kappa_rho * c_rho * m * m * cfg.eps**k_rho - correction
        loss = kappa_coh * c_coh * m * m * cfg.eps**k_coh
        r = (1.0 - loss) / rho if rho > 0 else math.inf
        return rho, loss, r

    return at


def _rows_for(
    req: SequenceRequest, cfg: ExperimentConfig, tau: float, results: list[EnsembleResult]
) -> list[dict]:
    overlay = _overlays(req, cfg, tau)
    rows = []
    for res in results:
        if overlay is not None:
            rho_a, loss_a, r_a = overlay(res.m)
        else:
            rho_a = loss_a = r_a = math.nan
        value_snr = math.nan
        if cfg.memory is not None:
            value_snr = memory_snr(cfg.memory, res.eta_coh, res.rho_ss)
        rows.append(
            {
                "sequence": req.label,
                "m": int(res.m),
                "tau_s": float(tau),
                "t_s": float(res.t),
                "rho_ss": float(res.rho_ss),
                "rho_ss_err": float(res.rho_ss_err),
                "eta_coh": float(res.eta_coh),
                "eta_coh_err": float(res.eta_coh_err),
                "artificial_coherence": float(res.artificial_coherence),
                "artificial_significant": bool(res.artificial_significant),
                "R": float(res.R),
                "R_err": float(res.R_err),
                "snr": float(value_snr),
                "guard_flag": res.guard,
                "noise_limited": bool(res.noise_limited),
                "eta_coh_below_0p9": bool(res.eta_below_0p9),
                "rho_ss_analytic": float(rho_a),
                "coh_loss_analytic": float(loss_a),
                "R_analytic": float(r_a),
            }
        )
    return rows


def run_sweep(cfg: ExperimentConfig) -> SweepData:
    """Run every sequence over the configured sweep axis."""
    rows: list[dict] = []
    for req in cfg.sequences:
        if cfg.sweep == "repetitions":
            spec = req.spec(cfg.tau)
            m_max = max(1, round(cfg.total_time / spec.duration))
            ensemble_cfg = EnsembleConfig(
                spec=spec,
                eps=cfg.eps,
                broadening=cfg.broadening(),
                n_sample=cfg.n_sample,
                m_checkpoints=log_checkpoints(m_max, cfg.checkpoints),
                atoms=cfg.atoms,
                ou_enabled=cfg.ou_enabled,
                substeps=cfg.substeps,
                workers=cfg.workers,
            )
            rows.extend(_rows_for(req, cfg, cfg.tau, run_experiment(ensemble_cfg)))
        else:
            for tau in cfg.tau_grid:
                spec = req.spec(tau)
                m = max(1, round(cfg.total_time / spec.duration))
                ensemble_cfg = EnsembleConfig(
                    spec=spec,
                    eps=cfg.eps,
                    broadening=cfg.broadening(),
                    n_sample=cfg.n_sample,
                    m_checkpoints=(m,),
                    atoms=cfg.atoms,
                    ou_enabled=cfg.ou_enabled,
                    substeps=cfg.substeps,
                    workers=cfg.workers,
                )
                rows.extend(_rows_for(req, cfg, tau, run_experiment(ensemble_cfg)))
    meta = {
        "tool": f"ddmem {__version__}",
        "config_sha256": cfg.config_hash(),
        "seed": cfg.seed,
        "backend": active_backend(),
        "label": cfg.label,
    }
    return SweepData(meta=meta, rows=rows)
