import math

import numpy as np
import pytest

from ddmem import broadening as bd
from ddmem import oracle, su2
from ddmem.ensemble import (
    EnsembleConfig,
    average_g,
    average_over_spins,
    beta_closed_single,
    coherence,
    collective_emission_guard,
    jackknife_errors,
    population,
    propagate_spin,
    ratio,
    run_experiment,
)
from ddmem.sequences import SequenceSpec, sequence_unitary

PI = math.pi
GAMMA = 2 * PI * 27e3


def _params(**kw):
    defaults = dict(gamma=GAMMA, seed=12)
    defaults.update(kw)
    return bd.BroadeningParams(**defaults)


def _config(**kw):
    defaults = dict(
        spec=SequenceSpec.preset("XY4", 100e-6),
        eps=0.1 * PI,
        broadening=_params(),
        n_sample=800,
        m_checkpoints=(1, 4),
        atoms=1e10,
    )
    defaults.update(kw)
    return EnsembleConfig(**defaults)


def test_config_validation():
    with pytest.raises(ValueError):
        _config(n_sample=50)
    with pytest.raises(ValueError):
        _config(m_checkpoints=(4, 4))
    with pytest.raises(ValueError):
        _config(m_checkpoints=(0, 2))
    with pytest.raises(ValueError):
        _config(atoms=0.0)


def test_population_and_coherence_scalars():
    assert population(np.eye(3), None) == 0.0
    assert population(np.eye(3), 1e4) == pytest.approx(-1e-4)
    g = np.diag([1.0, 1.0, -1.0])
    assert population(g, 100.0) == pytest.approx(1.0 - 0.01)
    coh = coherence(np.eye(3), None)
    assert coh.eta == pytest.approx(1.0)
    assert coh.artificial == 0.0
    assert ratio(1.0, 1e-3) == pytest.approx(1000.0)
    assert ratio(1.0, 0.0) == math.inf
    assert ratio(0.0, 1e-3) == 0.0


def test_artificial_term_deterministic_vs_noise_limited():
    g = np.eye(3)
    g[0, 2] = 1e-4
    det = coherence(g, 1e10)
    assert det.artificial == pytest.approx(1e10 * 1e-8)
    assert det.artificial_significant
    assert det.eta_total == pytest.approx(det.eta + det.artificial)
    # same matrix but with a covariance implying the entry is pure noise
    est_cov = np.zeros((10, 10))
    est_cov[2, 2] = est_cov[5, 5] = (1e-3) ** 2
    from ddmem.ensemble import GEstimate

    est = GEstimate(mean=g, cov=est_cov, pop_mean=0.0, n=1000)
    mc = coherence(est, 1e10)
    assert not mc.artificial_significant
    assert mc.eta_total == mc.eta


def test_collective_emission_guard_cases():
    tau = 100e-6
    assert collective_emission_guard(1e10, GAMMA, tau) == "ok"
    assert collective_emission_guard(1e10, GAMMA, 10e-6) == "warn"
    assert collective_emission_guard(1.0, GAMMA, 1e-9) == "ok"
    assert collective_emission_guard(None, GAMMA, 1e-9) == "ok"


def test_propagate_spin_static_matches_exact_path():
    spec = SequenceSpec.preset("XY8", 90e-6)
    spin = bd.SpinState(index=0, delta0=1.7e5, delta_ou=0.0, rng=bd.spin_stream(1, 0))
    g = propagate_spin(spin, spec, 0.05, 7)
    ref = su2.heisenberg_matrix(su2.repeat(sequence_unitary(spec, 1.7e5, 0.05), 7)).matrix
    assert np.allclose(g, ref, atol=1e-11)


def test_propagate_spin_cp_zero_detuning_closed_form():
    eps, m = 0.01 * PI, 50
    spec = SequenceSpec.preset("CP", 100e-6)
    spin = bd.SpinState(index=0, delta0=0.0, delta_ou=0.0, rng=bd.spin_stream(1, 0))
    g = propagate_spin(spin, spec, eps, m)
    assert g[2, 2] == pytest.approx(math.cos(2 * m * eps), abs=1e-10)


def test_propagate_spin_error_free_is_identity_with_or_without_reps():
    spec = SequenceSpec.preset("U5a:CP", 70e-6)
    for m in (1, 10, 100):
        spin = bd.SpinState(index=0, delta0=-2.4e5, delta_ou=0.0, rng=bd.spin_stream(1, 0))
        g = propagate_spin(spin, spec, 0.0, m)
        assert np.allclose(g, np.eye(3), atol=1e-10)


def test_average_g_requires_samples_and_matches_numpy():
    rng = np.random.default_rng(0)
    gs = np.array([np.eye(3) + 0.01 * rng.normal(size=(3, 3)) for _ in range(200)])
    est = average_g(gs)
    assert np.allclose(est.mean, gs.mean(axis=0), atol=1e-14)
    assert est.n == 200
    with pytest.raises(ValueError):
        average_g(gs[:50])


def test_average_over_spins_matches_run_path():
    params = _params()
    spec = SequenceSpec.preset("CP", 100e-6)
    deltas = bd.sample_detunings(params, 300)
    spins = [
        bd.SpinState(index=i, delta0=float(d), delta_ou=0.0, rng=bd.spin_stream(params.seed, i))
        for i, d in enumerate(deltas)
    ]
    est = average_over_spins(spins, spec, 0.05, 3)
    cfg = _config(spec=spec, eps=0.05, n_sample=300, m_checkpoints=(3,))
    res = run_experiment(cfg)[0]
    assert np.allclose(est.mean, res.G, atol=1e-12)


def test_error_free_run_reports_clean_memory():
    cfg = _config(eps=0.0, n_sample=100, m_checkpoints=(1,), atoms=None)
    res = run_experiment(cfg)[0]
    assert res.rho_ss == pytest.approx(0.0, abs=1e-12)
    assert res.rho_ss_err == pytest.approx(0.0, abs=1e-12)
    assert res.eta_coh == pytest.approx(1.0, abs=1e-12)
    assert res.eta_coh_err == pytest.approx(0.0, abs=1e-12)
    assert res.R == math.inf


def test_run_is_deterministic_and_worker_independent():
    base = _config(n_sample=700)
    res1 = run_experiment(base)
    res2 = run_experiment(base)
    res4 = run_experiment(_config(n_sample=700, workers=4))
    for a, b in zip(res1, res2):
        assert np.array_equal(a.G, b.G) and a.rho_ss == b.rho_ss
    for a, b in zip(res1, res4):
        assert np.array_equal(a.G, b.G)
        assert a.rho_ss == b.rho_ss and a.eta_coh == b.eta_coh and a.R == b.R


def test_ou_run_worker_independence_and_guard_flags():
    params = _params(sigma_delta=2 * PI * 284.0, tau_c=3.5e-3)
    cfg = _config(
        spec=SequenceSpec.preset("CP", 100e-6),
        eps=0.01 * PI,
        broadening=params,
        n_sample=300,
        m_checkpoints=(20, 40),
        ou_enabled=True,
    )
    res1 = run_experiment(cfg)
    res3 = run_experiment(
        EnsembleConfig(**{**cfg.__dict__, "workers": 3})
    )
    for a, b in zip(res1, res3):
        assert np.array_equal(a.G, b.G)
    assert all(r.guard == "ok" for r in res1)
    warn_cfg = _config(
        spec=SequenceSpec.preset("CP", 10e-6),
        n_sample=100,
        m_checkpoints=(1,),
    )
    assert run_experiment(warn_cfg)[0].guard == "warn"


def test_drift_noise_degrades_effective_refocusing():
    # with perfect pulses the only decay channel is the drifting detuning
    params = _params(sigma_delta=2 * PI * 284.0, tau_c=3.5e-3, seed=4)
    spec = SequenceSpec.preset("CP", 2e-3)
    cfg = _config(
        spec=spec, eps=0.0, broadening=params, n_sample=500, m_checkpoints=(50,),
        ou_enabled=True, atoms=None,
    )
    res = run_experiment(cfg)[0]
    assert res.eta_coh < 0.7
    assert res.rho_ss == pytest.approx(0.0, abs=1e-10)


def test_quadratic_growth_slope_before_saturation():
    params = _params()
    spec = SequenceSpec.preset("XY4", 100e-6)
    ms = np.array([2, 3, 4, 6, 8, 11, 16])
    rhos = [
        oracle.quadrature_metrics(spec, 0.03 * PI, int(m), params).rho_ss for m in ms
    ]
    slope, _ = oracle.fit_power_law(ms, np.array(rhos))
    assert slope == pytest.approx(2.0, abs=0.02)
    resid = np.polyfit(np.log(ms), np.log(rhos), 1, full=True)[1][0]
    r2 = 1 - resid / np.var(np.log(rhos)) / len(ms)
    assert r2 > 0.99


def test_jackknife_cross_check():
    cfg = _config(n_sample=4096, m_checkpoints=(4,))
    res = run_experiment(cfg)[0]
    jk = jackknife_errors(cfg)[0]
    assert jk[0] == pytest.approx(res.rho_ss_err, rel=0.5)
    assert jk[1] == pytest.approx(res.eta_coh_err, rel=0.5)


def test_beta_closed_single_identity_case():
    rho, eta = beta_closed_single(np.eye(3), 100.0)
    assert rho == 0.0
    assert eta == pytest.approx(1.0)
    with pytest.raises(ValueError):
        beta_closed_single(np.eye(3), None)


@pytest.mark.slow
def test_mc_matches_quadrature_across_presets():
    params = _params(seed=2021)
    failures = []
    for name in ("CP", "CPMG", "XY4", "XY8", "U5a:CP", "U5a:XY4"):
        spec = SequenceSpec.preset(name, 100e-6)
        for eps in (0.01 * PI, 0.1 * PI):
            cfg = EnsembleConfig(
                spec=spec, eps=eps, broadening=params, n_sample=100_000,
                m_checkpoints=(1, 10, 100), atoms=1e10,
            )
            for res in run_experiment(cfg):
                q = oracle.quadrature_metrics(spec, eps, res.m, params, atoms=1e10)
                # floors for the regimes where the statistical error
                # degenerates: the population accumulator is cancellation
                # free (~1e-14 floor), while the coherence of the cleanest
                # sequences is 1 minus ~1e-10 and two independent floating
                # point paths only agree to ~1e-11 there
                tol_rho = max(3 * res.rho_ss_err, 1e-12)
                tol_eta = max(3 * res.eta_coh_err, 1e-11)
                if abs(res.rho_ss - q.rho_ss) > tol_rho or abs(res.eta_coh - q.eta_coh) > tol_eta:
                    failures.append((name, eps, res.m))
    assert not failures
