import math

import pytest

from ddmem.memory import MemoryParams, memory_efficiency, noise_photons, snr


def test_backward_retrieval_efficiency():
    assert memory_efficiency(MemoryParams(d_tilde=50.0)) == pytest.approx(1.0, abs=1e-12)
    assert memory_efficiency(MemoryParams(d_tilde=1.0)) == pytest.approx(0.39958, abs=1e-5)
    assert memory_efficiency(MemoryParams(d_tilde=1.0, eta_d=0.5)) == pytest.approx(
        0.19979, abs=1e-5
    )


def test_forward_retrieval_efficiency():
    assert memory_efficiency(MemoryParams(d_tilde=2.0, scheme="afc_forward")) == pytest.approx(
        4 * math.exp(-2), abs=1e-12
    )


def test_eit_requires_constant_and_clamps():
    with pytest.raises(ValueError):
        memory_efficiency(MemoryParams(d_tilde=5.0, scheme="eit"))
    assert memory_efficiency(MemoryParams(d_tilde=10.0, scheme="eit", eit_c=2.0)) == pytest.approx(
        0.8
    )
    assert memory_efficiency(MemoryParams(d_tilde=1.0, scheme="eit", eit_c=2.0)) == 0.0
    with pytest.warns(UserWarning):
        assert memory_efficiency(MemoryParams(d_tilde=0.0, scheme="eit", eit_c=2.0)) == 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        MemoryParams(d_tilde=-1.0)
    with pytest.raises(ValueError):
        MemoryParams(d_tilde=1.0, eta_d=1.5)
    with pytest.raises(ValueError):
        MemoryParams(d_tilde=1.0, mu_in=0.0)
    with pytest.raises(ValueError):
        MemoryParams(d_tilde=1.0, scheme="gem")


def test_noise_photons():
    assert noise_photons(1.0, 0.0) == 0.0
    assert noise_photons(0.0, 1e-3) == 0.0
    assert noise_photons(1.0, 1e-3) == pytest.approx(6.321e-4, abs=1e-6)
    assert noise_photons(1.0, 1e-3, transfer_efficiency=0.5) == pytest.approx(3.1606e-4, rel=1e-4)
    with pytest.warns(UserWarning):
        noise_photons(5.0, 0.5)


def test_snr_reduces_to_ratio_at_large_depth():
    r = 1234.5
    assert snr(MemoryParams(d_tilde=40.0), 1.0, 1.0 / r) == pytest.approx(r, rel=1e-12)
    got = snr(MemoryParams(d_tilde=20.0), 1.0, 1.0 / r)
    assert abs(got - r) / r < 1e-8


def test_snr_prefactor_at_unit_depth():
    got = snr(MemoryParams(d_tilde=1.0), 1.0, 1e-3)
    assert got / 1e3 == pytest.approx(1 - math.exp(-1), abs=1e-6)
    assert got / 1e3 == pytest.approx(0.63212, abs=1e-5)


def test_snr_identity_for_backward_retrieval():
    for d, eta_d, mu_in, eta, rho in [
        (0.3, 1.0, 1.0, 0.9, 1e-3),
        (2.0, 0.7, 0.4, 0.5, 1e-5),
        (7.0, 0.2, 1.3, 0.99, 3e-2),
    ]:
        lhs = snr(MemoryParams(d_tilde=d, eta_d=eta_d, mu_in=mu_in), eta, rho)
        rhs = (1 - math.exp(-d)) * eta_d * mu_in * eta / rho
        assert abs(lhs - rhs) <= 1e-12 * rhs


def test_snr_sentinels_and_zero_signal():
    assert snr(MemoryParams(d_tilde=1.0), 1.0, 0.0) == math.inf
    assert snr(MemoryParams(d_tilde=1.0), 1.0, -1e-10) == math.inf
    assert snr(MemoryParams(d_tilde=1.0), 0.0, 1e-3) == 0.0


def test_snr_monotone_in_depth():
    values = [snr(MemoryParams(d_tilde=d), 0.8, 1e-3) for d in [0.1 * k for k in range(1, 60)]]
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
