"""Monte Carlo ensemble engine.

Each sampled spin carries its own static detuning (and optionally a
drifting detuning) and is propagated through ``m`` repetitions of a
sequence.  The observable-transport matrices ``g`` of the per-spin
propagators are averaged to ``G``, from which the stray population, the
coherence efficiency and their ratio follow:

* ``rho_ss = (1 - G_zz)/2 - 1/N``  (the ``1/N`` input correction is
  applied only for a finite configured atom number),
* ``eta_coh = (G_xx^2 + G_xy^2 + G_yx^2 + G_yy^2)/2``, the fraction of the
  collective signal that survives,
* ``R = eta_coh / rho_ss``.

Pulse errors also create an artificial ``N``-weighted coherence
``N (G_xz^2 + G_yz^2)``.  It is extra emission rather than signal, decays
with the inhomogeneous width, and its Monte Carlo estimate carries a
positive noise floor of order ``N/n_sample``; it is therefore evaluated
separately, significance-tested, and never folded into the ratio.

Sampling is reproducible and independent of the worker count: spins are
processed in fixed blocks, each spin owns a counter-based random stream
keyed by (seed, spin index), and the reduction runs in block order with
pairwise summation.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import broadening as bd
from . import engine
from .engine import quat
from .sequences import SequenceSpec, sequence_quats

__all__ = [
    "EnsembleConfig",
    "EnsembleResult",
    "GEstimate",
    "propagate_spin",
    "average_g",
    "population",
    "coherence",
    "CoherenceResult",
    "ratio",
    "collective_emission_guard",
    "auto_substeps",
    "run_experiment",
    "beta_closed_single",
    "beta_closed_collective",
]

_XY_FLAT = np.array([0, 1, 3, 4])  # flat indices of the xx, xy, yx, yy entries
_XZ_FLAT, _YZ_FLAT, _ZZ_FLAT = 2, 5, 8
_POP = 9  # index of the cancellation-free population feature

#: default spins per reduction block; fixed so results do not depend on the
#: worker count
BLOCK_SIZE = 512

#: normals drawn per kernel call are capped around this many doubles
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class EnsembleConfig:
    """Inputs of one Monte Carlo run."""

    spec: SequenceSpec
    eps: float
    broadening: bd.BroadeningParams
    n_sample: int
    m_checkpoints: tuple[int, ...]
    atoms: float | None = None
    ou_enabled: bool = False
    substeps: int | str = "auto"
    workers: int | None = None
    guard_threshold: float = 0.01

    def __post_init__(self):
        if self.n_sample < 100:
            raise ValueError(f"n_sample must be >= 100, got {self.n_sample}")
        ms = tuple(int(m) for m in self.m_checkpoints)
        if not ms or any(b <= a for a, b in zip(ms, ms[1:])) or ms[0] < 1:
            raise ValueError("m_checkpoints must be a strictly increasing list of ints >= 1")
        object.__setattr__(self, "m_checkpoints", ms)
        if self.atoms is not None and self.atoms <= 0:
            raise ValueError(f"atoms must be positive, got {self.atoms}")


@dataclass(frozen=True)
class GEstimate:
    """Entrywise mean of the transport matrices with its covariance.

    ``mean`` is the 3x3 average; ``cov`` is the 10x10 covariance of the
    mean over the flattened entries plus the cancellation-free population
    feature ``(1 - g_zz)/2`` as component 9.
    """

    mean: np.ndarray = field(repr=False)
    cov: np.ndarray = field(repr=False)
    pop_mean: float
    n: int

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov)[:9], 0.0, None)).reshape(3, 3)


@dataclass(frozen=True)
class CoherenceResult:
    """Split coherence estimate.

    ``eta`` is the surviving-signal part (the four transverse-block
    entries), which is what the performance ratio and the memory SNR use.
    ``artificial`` is the pulse-induced ``N``-weighted remainder; it counts
    as extra emission rather than signal and is tracked separately, with
    ``artificial_significant`` telling whether it cleared the Monte Carlo
    noise floor (deterministic inputs always count as significant).
    ``eta_total`` is the sum of both parts, with an insignificant
    artificial term treated as zero.
    """

    eta: float
    err: float
    artificial: float
    artificial_significant: bool

    @property
    def eta_total(self) -> float:
        return self.eta + (self.artificial if self.artificial_significant else 0.0)


@dataclass(frozen=True)
class EnsembleResult:
    """Per-checkpoint record of an ensemble run."""

    m: int
    t: float
    G: np.ndarray = field(repr=False)
    G_err: np.ndarray = field(repr=False)
    rho_ss: float
    rho_ss_err: float
    eta_coh: float
    eta_coh_err: float
    artificial_coherence: float
    artificial_significant: bool
    R: float
    R_err: float
    guard: str
    noise_limited: bool
    eta_below_0p9: bool


def collective_emission_guard(
    atoms: float | None, gamma: float, tau: float, threshold: float = 0.01
) -> str:
    """``ok`` unless stray population could emit collectively.

    The criterion is ``N * exp(-gamma^2 tau^2 / 2) > threshold`` for a
    Gaussian profile.  A single atom (or an unspecified count) has no
    partners to emit with and is always ``ok``.
    """
    if atoms is None or atoms <= 1.0:
        return "ok"
    exponent = -0.5 * (gamma * tau) ** 2
    value = atoms * math.exp(max(-745.0, exponent))
    return "warn" if value > threshold else "ok"


def auto_substeps(tau: float, params: bd.BroadeningParams, ou_enabled: bool) -> int:
    """Substeps per half-gap so one drift sample spans at most ``tau_c/4``."""
    if not ou_enabled or params.sigma_delta == 0.0:
        return 1
    return max(1, math.ceil((0.5 * tau) / (0.25 * params.tau_c)))


def _features(q: np.ndarray) -> np.ndarray:
    """Per-spin feature rows: the 9 transport entries plus the population."""
    g = quat.quat_to_heisenberg(q)
    pop = quat.population_from_quat(q)
    return np.concatenate([g.reshape(g.shape[0], 9), pop[:, None]], axis=1)


def average_g(g_samples: np.ndarray) -> GEstimate:
    """Entrywise mean and covariance-of-the-mean of transport matrices.

    Accepts ``(n, 3, 3)`` matrices or ``(n, 10)`` feature rows.  At least
    100 samples are required for a meaningful error estimate.
    """
    arr = np.asarray(g_samples, dtype=float)
    if arr.ndim == 3:
        feats = np.concatenate(
            [arr.reshape(arr.shape[0], 9), (0.5 * (1.0 - arr[:, 2, 2]))[:, None]], axis=1
        )
    else:
        feats = arr
    n = feats.shape[0]
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    s1 = feats.sum(axis=0)
    s2 = feats.T @ feats
    return _estimate_from_sums(s1, s2, n)


def _estimate_from_sums(s1: np.ndarray, s2: np.ndarray, n: int) -> GEstimate:
    mean = s1 / n
    centered = s2 - n * np.outer(mean, mean)
    cov_mean = centered / (n * max(1, n - 1))
    return GEstimate(mean=mean[:9].reshape(3, 3), cov=cov_mean, pop_mean=mean[_POP], n=n)


def population(G: np.ndarray | GEstimate, atoms: float | None) -> float:
    """Stray population left in the storage state.

    ``(1 - G_zz)/2``, minus ``1/N`` when a finite atom count is configured
    (the stored excitation itself).  A :class:`GEstimate` input uses the
    cancellation-free accumulator, exact down to populations ~1e-30.
    """
    if isinstance(G, GEstimate):
        base = G.pop_mean
    else:
        base = 0.5 * (1.0 - float(np.asarray(G)[2, 2]))
    return base - (0.0 if atoms is None else 1.0 / atoms)


def _population_err(est: GEstimate) -> float:
    return math.sqrt(max(0.0, est.cov[_POP, _POP]))


def coherence(
    G: np.ndarray | GEstimate,
    atoms: float | None,
    significance: float = 3.0,
) -> CoherenceResult:
    """Coherence efficiency from the averaged transport matrix.

    The signal part is half the squared Frobenius norm of the transverse
    2x2 block.  The pulse-induced ``N``-weighted remainder is evaluated
    separately: its Monte Carlo estimate has a positive noise floor of
    order ``N * var(G_xz)``, so it is flagged significant only when it
    exceeds ``significance^2`` times that floor (deterministic inputs are
    always significant).  With ``atoms=None`` the remainder is dropped
    entirely (the infinite-ensemble idealization).
    """
    if isinstance(G, GEstimate):
        g, cov = G.mean, G.cov
    else:
        g, cov = np.asarray(G, dtype=float), None
    flat = g.reshape(9)
    xy = flat[_XY_FLAT]
    signal = 0.5 * float(xy @ xy)
    grad = np.zeros(10)
    grad[_XY_FLAT] = xy

    artificial = 0.0
    significant = False
    if atoms is not None:
        gxz, gyz = flat[_XZ_FLAT], flat[_YZ_FLAT]
        artificial = atoms * (gxz**2 + gyz**2)
        if cov is None:
            significant = artificial > 0.0
        else:
            floor = atoms * (cov[_XZ_FLAT, _XZ_FLAT] + cov[_YZ_FLAT, _YZ_FLAT])
            significant = artificial > significance**2 * floor

    err = 0.0 if cov is None else math.sqrt(max(0.0, grad @ cov @ grad))
    return CoherenceResult(
        eta=signal, err=err, artificial=artificial, artificial_significant=significant
    )


def ratio(eta_coh: float, rho_ss: float) -> float:
    """``R = eta_coh / rho_ss``; non-positive population gives ``inf``."""
    if rho_ss <= 0.0:
        return math.inf
    return eta_coh / rho_ss


def _ratio_err(est: GEstimate, coh: CoherenceResult, rho: float) -> float:
    if rho <= 0.0 or not math.isfinite(rho):
        return math.nan
    flat = est.mean.reshape(9)
    grad = np.zeros(10)
    grad[_XY_FLAT] = flat[_XY_FLAT] / rho
    grad[_POP] = -coh.eta / rho**2
    return math.sqrt(max(0.0, grad @ est.cov @ grad))


def _workers(config: EnsembleConfig) -> int:
    if config.workers is not None:
        return max(1, config.workers)
    env = os.environ.get("DDMEM_WORKERS", "")
    if env.strip():
        return max(1, int(env))
    return 1


def _block_static(q_seq: np.ndarray, checkpoints: tuple[int, ...]) -> list[np.ndarray]:
    """Per-checkpoint feature sums of one block on the drift-free path."""
    out = []
    for m in checkpoints:
        feats = _features(quat.quat_power(q_seq, m))
        out.append((feats.sum(axis=0), feats.T @ feats))
    return out


def _block_ou(
    lo: int,
    hi: int,
    deltas: np.ndarray,
    config: EnsembleConfig,
    substeps: int,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Propagate one block through all checkpoints on the drifting path."""
    params = config.broadening
    spec, eps, tau = config.spec, config.eps, config.spec.tau
    n = hi - lo
    streams = [bd.spin_stream(params.seed, i) for i in range(lo, hi)]
    delta_ou = np.array([bd.ou_init(params, rng) for rng in streams], dtype=float)
    q = quat.quat_identity((n,))
    dstat = np.ascontiguousarray(deltas[lo:hi])
    a_coef, b_coef = bd.ou_coefficients(tau / (2.0 * substeps), params)
    phases = np.asarray(spec.phases, dtype=float)
    gaps_per_rep = 2 * substeps * spec.L
    chunk_reps = max(1, _CHUNK_BUDGET // max(1, n * gaps_per_rep))

    out = []
    m_done = 0
    for m in config.m_checkpoints:
        todo = m - m_done
        while todo > 0:
            rc = min(chunk_reps, todo)
            draws = rc * gaps_per_rep
            nu = np.empty((n, draws))
            for i, rng in enumerate(streams):
                nu[i] = rng.standard_normal(draws)
            engine.ou_propagate(
                q, dstat, delta_ou, phases, tau, eps, substeps, a_coef, b_coef, nu, rc
            )
            todo -= rc
        m_done = m
        feats = _features(q)
        out.append((feats.sum(axis=0), feats.T @ feats))
    return out


def propagate_spin(
    spin: bd.SpinState,
    spec: SequenceSpec,
    eps: float,
    m: int,
    params: bd.BroadeningParams | None = None,
    substeps: int = 1,
) -> np.ndarray:
    """Transport matrix of one spin after ``m`` repetitions.

    Without ``params`` the detuning is static and the repetition is an
    exact matrix power.  With ``params`` the drift is advanced through
    every gap in time order (the result is then a time-ordered product,
    not a power), consuming draws from the spin's own stream.
    """
    if params is None:
        q = quat.quat_power(sequence_quats(spec, np.array([spin.delta0]), eps)[0], m)
        return quat.quat_to_heisenberg(q)
    q = quat.quat_identity((1,))
    dstat = np.array([spin.delta0], dtype=float)
    dou = np.array([spin.delta_ou], dtype=float)
    a_coef, b_coef = bd.ou_coefficients(spec.tau / (2.0 * substeps), params)
    phases = np.asarray(spec.phases, dtype=float)
    draws = m * 2 * substeps * spec.L
    nu = spin.rng.standard_normal(draws)[None, :]
    engine.ou_propagate(q, dstat, dou, phases, spec.tau, eps, substeps, a_coef, b_coef, nu, m)
    spin.delta_ou = float(dou[0])
    return quat.quat_to_heisenberg(q[0])


def average_over_spins(
    spins: list[bd.SpinState],
    spec: SequenceSpec,
    eps: float,
    m: int,
    params: bd.BroadeningParams | None = None,
    substeps: int = 1,
) -> GEstimate:
    """Entrywise mean transport matrix over explicit spin states.

    Convenience wrapper over :func:`propagate_spin` + :func:`average_g`
    for small hand-built ensembles; the production path is
    :func:`run_experiment`.
    """
    gs = np.array([propagate_spin(s, spec, eps, m, params, substeps) for s in spins])
    return average_g(gs)


def _pairwise_reduce(parts: list[np.ndarray]) -> np.ndarray:
    """Order-fixed pairwise summation over block results."""
    items = list(parts)
    while len(items) > 1:
        merged = []
        for i in range(0, len(items) - 1, 2):
            merged.append(items[i] + items[i + 1])
        if len(items) % 2:
            merged.append(items[-1])
        items = merged
    return items[0]


def run_experiment(config: EnsembleConfig) -> list[EnsembleResult]:
    """Run the ensemble and report every checkpoint.

    Deterministic for a fixed seed; bit-identical for any worker count.
    """
    params = config.broadening
    n, spec = config.n_sample, config.spec
    deltas = bd.sample_detunings(params, n)
    substeps = (
        auto_substeps(spec.tau, params, config.ou_enabled)
        if config.substeps == "auto"
        else max(1, int(config.substeps))
    )
    blocks = [(b, lo, min(lo + BLOCK_SIZE, n)) for b, lo in enumerate(range(0, n, BLOCK_SIZE))]

    if config.ou_enabled:

        def job(block):
            _, lo, hi = block
            return _block_ou(lo, hi, deltas, config, substeps)

    else:

        def job(block):
            _, lo, hi = block
            q_seq = sequence_quats(spec, deltas[lo:hi], config.eps)
            return _block_static(q_seq, config.m_checkpoints)

    n_workers = _workers(config)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            per_block = list(pool.map(job, blocks))
    else:
        per_block = [job(b) for b in blocks]

    guard = collective_emission_guard(
        config.atoms, params.gamma, spec.tau, config.guard_threshold
    )
    results = []
    for k, m in enumerate(config.m_checkpoints):
        s1 = _pairwise_reduce([pb[k][0] for pb in per_block])
        s2 = _pairwise_reduce([pb[k][1] for pb in per_block])
        est = _estimate_from_sums(s1, s2, n)
        rho = population(est, config.atoms)
        rho_err = _population_err(est)
        coh = coherence(est, config.atoms)
        r_val = ratio(coh.eta, rho)
        results.append(
            EnsembleResult(
                m=m,
                t=m * spec.duration,
                G=est.mean,
                G_err=est.stderr,
                rho_ss=rho,
                rho_ss_err=rho_err,
                eta_coh=coh.eta,
                eta_coh_err=coh.err,
                artificial_coherence=coh.artificial,
                artificial_significant=coh.artificial_significant,
                R=r_val,
                R_err=_ratio_err(est, coh, rho),
                guard=guard,
                noise_limited=rho <= rho_err,
                eta_below_0p9=coh.eta < 0.9,
            )
        )
    return results


def jackknife_errors(config: EnsembleConfig) -> list[tuple[float, float, float]]:
    """Block-jackknife cross-check of the propagated errors.

    Returns ``(rho_err, eta_err, R_err)`` per checkpoint.  Meant as a
    validation tool; the production errors come from first-order
    propagation of the entry covariance.
    """
    cfg = config
    params, spec = cfg.broadening, cfg.spec
    deltas = bd.sample_detunings(params, cfg.n_sample)
    substeps = (
        auto_substeps(spec.tau, params, cfg.ou_enabled)
        if cfg.substeps == "auto"
        else max(1, int(cfg.substeps))
    )
    blocks = [(b, lo, min(lo + BLOCK_SIZE, cfg.n_sample)) for b, lo in enumerate(range(0, cfg.n_sample, BLOCK_SIZE))]
    if cfg.ou_enabled:
        per_block = [_block_ou(lo, hi, deltas, cfg, substeps) for _, lo, hi in blocks]
    else:
        per_block = [
            _block_static(sequence_quats(spec, deltas[lo:hi], cfg.eps), cfg.m_checkpoints)
            for _, lo, hi in blocks
        ]
    counts = [hi - lo for _, lo, hi in blocks]
    out = []
    for k in range(len(cfg.m_checkpoints)):
        s1 = _pairwise_reduce([pb[k][0] for pb in per_block])
        values = []
        for j in range(len(blocks)):
            s1_j = (s1 - per_block[j][k][0]) / (cfg.n_sample - counts[j])
            g_j = s1_j[:9].reshape(3, 3)
            rho_j = s1_j[_POP] - (0.0 if cfg.atoms is None else 1.0 / cfg.atoms)
            coh_j = coherence(g_j, cfg.atoms)
            values.append((rho_j, coh_j.eta, ratio(coh_j.eta, rho_j)))
        values = np.asarray(values)
        nb = len(blocks)
        errs = np.sqrt((nb - 1) / nb * ((values - values.mean(axis=0)) ** 2).sum(axis=0))
        out.append(tuple(float(e) for e in errs))
    return out


def beta_closed_single(g: np.ndarray, atoms: float) -> tuple[float, float]:
    """Input-phase-averaged metrics of a single spin, exact in ``1/N``.

    For a spin prepared with storage amplitude ``1/sqrt(N)`` and uniformly
    averaged preparation phase, the stray population and the (unit-
    normalized) coherence retention are closed quadratic forms in the
    transport entries.  This is the closed counterpart of the brute-force
    phase-grid average and agrees with it to machine precision.
    """
    if atoms is None or not math.isfinite(atoms) or atoms < 2:
        raise ValueError("a finite atom number >= 2 is required")
    g = np.asarray(g, dtype=float)
    inv = 1.0 / atoms
    s_xy = float(np.sum(g[:2, :2] ** 2))
    s_z = float(g[0, 2] ** 2 + g[1, 2] ** 2)
    rho = 0.5 * (1.0 - g[2, 2]) * (1.0 - 2.0 * inv)
    eta = 0.5 * s_xy + 0.25 * atoms * (1.0 - 2.0 * inv) ** 2 / (1.0 - inv) * s_z
    return rho, eta


def beta_closed_collective(gs: np.ndarray, atoms: float) -> tuple[float, float]:
    """Phase-averaged collective-emission metrics of ``N`` product spins.

    ``gs`` holds the ``N`` per-spin transport matrices.  The coherence is
    the collective-emission expectation minus the incoherent population
    contribution beyond the stored excitation, so an identity evolution
    gives ``rho = 0`` and ``eta = 1 - 1/N + 1/N^2`` (the phase averaging
    itself costs a ``1/N`` fraction of the signal).
    """
    gs = np.asarray(gs, dtype=float)
    n_atoms = float(atoms)
    inv = 1.0 / n_atoms
    gbar = gs.mean(axis=0)
    s_xy_bar = float(np.sum(gbar[:2, :2] ** 2))
    s_z_bar = float(gbar[0, 2] ** 2 + gbar[1, 2] ** 2)
    collective = 0.5 * (1.0 - inv) * s_xy_bar + 0.25 * n_atoms * (1.0 - 2.0 * inv) ** 2 * s_z_bar
    s_xy_each = np.sum(gs[:, :2, :2] ** 2, axis=(1, 2))
    s_z_each = gs[:, 0, 2] ** 2 + gs[:, 1, 2] ** 2
    single = float(
        np.mean(0.5 * inv * (1.0 - inv) * s_xy_each + 0.25 * (1.0 - 2.0 * inv) ** 2 * s_z_each)
    )
    eta = collective - single + inv
    rho = 0.5 * (1.0 - gbar[2, 2]) * (1.0 - 2.0 * inv)
    return rho, eta
