"""Model builders: drift, controls, Hamiltonian, observables, states."""

import numpy as np
import pytest

from spinlie.model import (InvalidStateError, SpinPairModel, build_controls,
                           build_drift, check_density_matrix, collective_observables,
                           hamiltonian, magnetization, mixed_random_density_matrix,
                           model_from_dict, model_to_dict, random_density_matrix,
                           thermal_density_matrix)
from spinlie.operators import commutator, is_hermitian, is_skew_hermitian, is_traceless


def model(g1=1.0, g2=2.0, j=0.5, seed=7):
    return SpinPairModel(g1, g2, j, mixed_random_density_matrix(seed))


class TestDrift:
    def test_zero_coupling(self):
        assert np.linalg.norm(build_drift(model(j=0.0))) == 0.0

    def test_skew_and_traceless(self):
        a = build_drift(model(g1=0.3, g2=-1.7, j=-0.9))
        assert is_skew_hermitian(a) and is_traceless(a)

    def test_commutes_with_controls_at_equal_ratios(self):
        m = model(g1=1.0, g2=1.0, j=1.0)
        a = build_drift(m)
        for b in build_controls(m):
            assert np.linalg.norm(commutator(a, b)) <= 1e-12

    def test_commutes_with_collective_rotations(self):
        m = model(g1=0.4, g2=2.2, j=0.8)
        a = build_drift(m)
        coll = build_controls(SpinPairModel(1.0, 1.0, 0.0, m.rho0))
        for b in coll:
            assert np.linalg.norm(commutator(a, b)) <= 1e-12

    def test_scales_linearly_in_j(self):
        assert np.allclose(build_drift(model(j=-2.0)), -4 * build_drift(model(j=0.5)))


class TestControls:
    def test_unit_ratio_z_control_diagonal(self):
        bz = build_controls(model(g1=1.0, g2=1.0))[2]
        expect = -1j * np.diag([2.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, -1.0, -2.0])
        assert np.allclose(bz, expect, atol=1e-15)

    def test_skew_and_traceless(self):
        for b in build_controls(model(g1=-0.3, g2=1.9)):
            assert is_skew_hermitian(b) and is_traceless(b)

    def test_single_site_when_second_ratio_vanishes(self):
        m = model(g1=1.3, g2=0.0)
        bx = build_controls(m)[0]
        from spinlie.su3 import build_su3_basis
        basis = build_su3_basis()
        assert np.allclose(bx, 1.3 * np.kron(basis.spin_x, np.eye(3)), atol=1e-15)


class TestHamiltonian:
    def test_zero_control_is_drift(self):
        m = model()
        assert np.allclose(hamiltonian(m, (0, 0, 0)), 1j * build_drift(m))

    def test_hermitian_traceless(self):
        m = model(g1=0.7, g2=1.9, j=-0.4)
        rng = np.random.default_rng(1)
        for _ in range(5):
            h = hamiltonian(m, rng.uniform(-3, 3, size=3))
            assert is_hermitian(h)
            assert abs(np.trace(h)) <= 1e-12

    def test_rejects_bad_controls(self):
        with pytest.raises(ValueError):
            hamiltonian(model(), (np.inf, 0, 0))
        with pytest.raises(ValueError):
            hamiltonian(model(), (1.0, 2.0))


class TestMagnetization:
    def test_observables_hermitian_traceless(self):
        for obs in collective_observables():
            assert is_hermitian(obs) and is_traceless(obs)

    def test_maximally_mixed_gives_zero(self):
        assert np.allclose(magnetization(np.eye(9) / 9), 0.0)

    def test_both_spins_up_along_z(self):
        # J_z = diag(-1, 0, 1): the m = +1 eigenvector is the third basis
        # vector, so the both-up product state occupies index 8
        rho = np.zeros((9, 9), dtype=complex)
        rho[8, 8] = 1.0
        assert magnetization(rho)[2] == pytest.approx(2.0, abs=1e-14)

    def test_real_for_random_states(self):
        for seed in range(5):
            m = magnetization(random_density_matrix(seed))
            assert m.dtype == float and np.all(np.isfinite(m))

    def test_linear_in_state(self):
        r1, r2 = random_density_matrix(1), random_density_matrix(2)
        alpha = 0.3
        lhs = magnetization(alpha * r1 + (1 - alpha) * r2)
        rhs = alpha * magnetization(r1) + (1 - alpha) * magnetization(r2)
        assert np.allclose(lhs, rhs, atol=1e-12)


class TestStates:
    def test_random_state_deterministic(self):
        assert np.array_equal(random_density_matrix(11), random_density_matrix(11))

    def test_random_state_valid(self):
        for seed in range(5):
            rho = random_density_matrix(seed)
            assert abs(np.trace(rho) - 1) <= 1e-12
            assert np.linalg.eigvalsh(rho)[0] >= -1e-12
            assert np.linalg.norm(rho - rho.conj().T) <= 1e-14

    def test_mixed_state_partner_bound(self):
        # the mixing weight keeps the top eigenvalue below 2/9, the exact
        # threshold for the exchange-sign partner to stay a state
        for seed in range(20):
            top = np.linalg.eigvalsh(mixed_random_density_matrix(seed))[-1]
            assert top < 2.0 / 9.0

    def test_thermal_state_valid(self):
        rho = thermal_density_matrix(0.5, beta=1.0)
        check_density_matrix(rho)

    def test_scalar_state_rejected(self):
        with pytest.raises(InvalidStateError, match="scalar"):
            SpinPairModel(1.0, 2.0, 0.5, np.eye(9) / 9)
        with pytest.raises(InvalidStateError, match="scalar"):
            check_density_matrix(np.eye(9) / 9 + 1e-9 * np.diag([1] * 4 + [-4] + [1] * 3 + [-1]) / 9)

    def test_invalid_states_rejected(self):
        rho = random_density_matrix(0)
        with pytest.raises(InvalidStateError, match="Hermitian"):
            check_density_matrix(rho + 1e-6 * 1j * np.eye(9))
        with pytest.raises(InvalidStateError, match="trace"):
            check_density_matrix(2 * rho)
        bad = rho - 1e-3 * np.eye(9) / 9
        bad = bad / np.trace(bad) * (1 + 1e-3)  # keep trace off to trip first
        with pytest.raises(InvalidStateError):
            check_density_matrix(bad)
        evil = rho.copy()
        evil[0, 0] -= 2e-4
        evil[1, 1] += 2e-4
        if np.linalg.eigvalsh(evil)[0] < -1e-10:
            with pytest.raises(InvalidStateError, match="semidefinite"):
                check_density_matrix(evil)

    def test_parameters_must_be_finite(self):
        with pytest.raises(ValueError):
            SpinPairModel(np.nan, 1.0, 0.5, random_density_matrix(1))


class TestModelJson:
    def test_roundtrip_matrix_state(self):
        m = model()
        back = model_from_dict(model_to_dict(m))
        assert back.gamma1 == m.gamma1 and back.j12 == m.j12
        assert np.array_equal(back.rho0, m.rho0)

    def test_random_preset(self):
        m = model_from_dict({"gamma1": 1, "gamma2": 2, "J12": 0.5,
                             "rho0": {"preset": "random", "seed": 3}})
        assert np.array_equal(m.rho0, random_density_matrix(3))

    def test_random_preset_with_weight(self):
        m = model_from_dict({"gamma1": 1, "gamma2": 2, "J12": 0.5,
                             "rho0": {"preset": "random", "seed": 3, "weight": 0.22}})
        assert np.array_equal(m.rho0, mixed_random_density_matrix(3, 0.22))

    def test_thermal_preset(self):
        m = model_from_dict({"gamma1": 1, "gamma2": 2, "J12": 0.5,
                             "rho0": {"preset": "thermal", "beta": 2.0}})
        assert np.array_equal(m.rho0, thermal_density_matrix(0.5, 2.0))

    def test_missing_field(self):
        with pytest.raises(ValueError, match="missing"):
            model_from_dict({"gamma1": 1, "gamma2": 2})

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="preset"):
            model_from_dict({"gamma1": 1, "gamma2": 2, "J12": 0.5,
                             "rho0": {"preset": "pure"}})
