import math

import numpy as np
import pytest
from scipy.linalg import expm

from ddmem import su2


def test_free_evolution_zero_duration_is_identity():
    u = su2.free_evolution(2 * math.pi * 99e3, 0.0)
    assert np.allclose(u.matrix, su2.IDENTITY)


def test_free_evolution_full_turn_is_minus_identity():
    u = su2.free_evolution(2 * math.pi, 1.0)
    assert np.allclose(u.matrix, -su2.IDENTITY, atol=1e-12)
    rep = su2.to_axis_angle(u)
    assert rep.alpha == pytest.approx(2 * math.pi)
    assert np.allclose(rep.axis, [0, 0, 1])


def test_free_evolution_matches_matrix_exponential():
    delta, t = 2 * math.pi * 27e3, 100e-6
    u = su2.free_evolution(delta, t)
    ref = expm(-0.5j * delta * t * su2.SIGMA_Z)
    assert np.allclose(u.matrix, ref, atol=1e-12)


@pytest.mark.parametrize("bad", [math.nan, math.inf])
def test_free_evolution_rejects_non_finite(bad):
    with pytest.raises(su2.DomainError):
        su2.free_evolution(bad, 1e-6)
    with pytest.raises(su2.DomainError):
        su2.free_evolution(1.0, bad)


def test_free_evolution_rejects_negative_duration():
    with pytest.raises(su2.DomainError):
        su2.free_evolution(1.0, -1e-9)


def test_pi_pulse_exact_inversions():
    assert np.allclose(su2.pi_pulse(0.0, 0.0).matrix, su2.SIGMA_X)
    assert np.allclose(su2.pi_pulse(math.pi / 2, 0.0).matrix, su2.SIGMA_Y)


def test_pi_pulse_inversion_probability_with_area_error():
    eps = 0.06 * math.pi
    u = su2.pi_pulse(0.0, eps)
    # transfer probability from |g> to |s)
    p = abs(u.matrix[0, 1]) ** 2
    assert p == pytest.approx(math.cos(eps / 2) ** 2, abs=1e-12)
    assert p == pytest.approx(0.99115, abs=1e-4)
    assert u.unitarity_defect() < 1e-12


def test_compose_identity_and_inverse():
    u = su2.pi_pulse(0.3, 0.05)
    assert np.allclose(su2.compose(su2.Unitary2.identity(), u).matrix, u.matrix)
    assert np.allclose(su2.compose(u, u.dagger()).matrix, su2.IDENTITY, atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_echo_identity_for_any_gap_and_detuning(seed):
    # gap, perfect pulse, gap equals the bare pulse: broadening is refocused
    rng = np.random.default_rng(seed)
    delta = rng.normal(0, 3e5)
    tau = rng.uniform(1e-6, 1e-3)
    phi = rng.uniform(0, 2 * math.pi)
    v = su2.free_evolution(delta, tau)
    pulse = su2.pi_pulse(phi, 0.0)
    echoed = su2.compose(v, su2.compose(pulse, v))
    assert su2.trace_fidelity(echoed, pulse) >= 1 - 1e-12


def test_to_axis_angle_sigma_x():
    rep = su2.to_axis_angle(su2.Unitary2(su2.SIGMA_X))
    assert rep.alpha == pytest.approx(math.pi)
    assert np.allclose(rep.axis, [1, 0, 0], atol=1e-12)


def test_to_axis_angle_identity_degenerate_convention():
    rep = su2.to_axis_angle(su2.Unitary2.identity())
    assert rep.alpha == 0.0
    assert np.allclose(rep.axis, [0, 0, 1])


@pytest.mark.parametrize("seed", range(8))
def test_axis_angle_round_trip(seed):
    rng = np.random.default_rng(100 + seed)
    alpha = rng.uniform(0.01, 2 * math.pi - 0.01)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    rep = su2.to_axis_angle(su2.from_axis_angle(alpha, axis))
    same = np.allclose([rep.alpha], [alpha], atol=1e-9) and np.allclose(rep.axis, axis, atol=1e-9)
    flipped = np.allclose([2 * math.pi - rep.alpha], [alpha], atol=1e-9) and np.allclose(
        rep.axis, -axis, atol=1e-9
    )
    assert same or flipped


def test_rotation_rep_spherical_angles():
    rep = su2.to_axis_angle(su2.from_axis_angle(1.0, [0, 1, 0]))
    assert rep.theta == pytest.approx(math.pi / 2)
    assert rep.phi == pytest.approx(math.pi / 2)


def test_heisenberg_identity_and_z_rotation():
    assert np.allclose(su2.heisenberg_matrix(su2.Unitary2.identity()).matrix, np.eye(3))
    alpha = 0.7
    h = su2.heisenberg_matrix(su2.from_axis_angle(alpha, [0, 0, 1])).matrix
    c, s = math.cos(alpha), math.sin(alpha)
    # observables rotate by -alpha when states rotate by +alpha about z
    ref = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    assert np.allclose(h, ref, atol=1e-12)
    assert h[2, 2] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(6))
def test_heisenberg_proper_rotation_and_conjugation(seed):
    rng = np.random.default_rng(200 + seed)
    u = su2.from_axis_angle(rng.uniform(0, 2 * math.pi), rng.normal(size=3))
    u = su2.Unitary2(u.matrix * np.exp(1j * rng.uniform(0, 2 * math.pi)))
    h = su2.heisenberg_matrix(u)
    assert h.orthogonality_defect() < 1e-10
    assert h.det() == pytest.approx(1.0, abs=1e-10)
    paulis = (su2.SIGMA_X, su2.SIGMA_Y, su2.SIGMA_Z)
    direct = np.array(
        [
            [
                0.5 * np.trace(p @ u.matrix.conj().T @ q @ u.matrix).real
                for p in paulis
            ]
            for q in paulis
        ]
    )
    assert np.allclose(h.matrix, direct, atol=1e-12)


def test_heisenberg_multiplicative_in_operator_order():
    a = su2.from_axis_angle(0.9, [1, 2, 3])
    b = su2.from_axis_angle(2.1, [-1, 0.5, 0.1])
    hab = su2.heisenberg_matrix(su2.compose(a, b)).matrix
    ref = su2.heisenberg_matrix(a).matrix @ su2.heisenberg_matrix(b).matrix
    assert np.allclose(hab, ref, atol=1e-10)


def test_repeat_basics():
    u = su2.pi_pulse(0.1, 0.02)
    assert np.allclose(su2.repeat(u, 1).matrix, u.matrix)
    assert np.allclose(su2.repeat(u, 0).matrix, su2.IDENTITY)
    closed = su2.repeat(su2.from_axis_angle(math.pi / 7, [1, 0, 0]), 14)
    assert su2.trace_fidelity(closed, su2.Unitary2.identity()) >= 1 - 1e-12


def test_repeat_matches_explicit_composition():
    from ddmem.sequences import SequenceSpec, sequence_unitary

    block = sequence_unitary(SequenceSpec.preset("CP", 80e-6), 2 * math.pi * 11e3, 0.03)
    fast = su2.repeat(block, 100)
    slow = su2.Unitary2.identity()
    for _ in range(100):
        slow = su2.compose(block, slow)
    assert np.allclose(fast.matrix, slow.matrix, atol=1e-10)
    # axis is preserved, angle is linear in the count before wrapping
    r1, r100 = su2.to_axis_angle(block), su2.to_axis_angle(fast)
    assert abs(abs(float(r1.axis @ r100.axis)) - 1.0) < 1e-9


def test_unitarity_survives_long_chains():
    # raw drift grows roughly linearly (~1.4e-16 per product); periodic
    # renormalization keeps arbitrarily long chains inside the contract
    u = su2.pi_pulse(0.2, 0.01)
    step = su2.compose(u, su2.free_evolution(1e5, 50e-6))
    raw = su2.Unitary2.identity()
    for _ in range(20_000):
        raw = su2.compose(step, raw)
    assert raw.unitarity_defect() < 1e-11
    kept = su2.Unitary2.identity()
    for k in range(20_000):
        kept = su2.compose(step, kept)
        if (k + 1) % 1000 == 0:
            kept = kept.renormalized()
    assert kept.unitarity_defect() < 1e-12
    assert kept.det_defect() < 1e-12
    assert su2.trace_fidelity(kept, raw) >= 1 - 1e-10
