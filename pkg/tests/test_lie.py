"""Closures, adjoint orbits, controllability and observability verdicts."""

import numpy as np
import pytest

from spinlie.lie import (ClosureError, ad_orbit, controllability_verdict,
                         lie_closure, observability_verdict)
from spinlie.model import (SpinPairModel, build_controls, build_drift,
                           collective_observables, mixed_random_density_matrix)
from spinlie.operators import OperatorSpan, commutator, skew_traceless_basis
from spinlie.su3 import build_su3_basis

BASIS = build_su3_basis()


def model(g1, g2, j, seed=7):
    return SpinPairModel(g1, g2, j, mixed_random_density_matrix(seed))


def generators(g1, g2, j):
    m = model(g1, g2, j)
    return [build_drift(m), *build_controls(m)]


class TestLieClosure:
    def test_controllable_reaches_su9(self):
        span, rep = lie_closure(generators(1.0, 2.0, 1.0))
        assert rep.dimension == 80 and rep.controllable
        assert span.dimension == 80

    def test_equal_ratios_collective_algebra(self):
        _, rep = lie_closure(generators(1.0, 1.0, 1.0))
        assert rep.dimension == 4 and not rep.controllable

    def test_single_generator_abelian(self):
        bz = build_controls(model(1.0, 2.0, 0.5))[2]
        _, rep = lie_closure([bz])
        assert rep.dimension == 1

    def test_sweep_history_monotone_with_fixpoint(self):
        _, rep = lie_closure(generators(1.0, 2.0, 0.5))
        dims = rep.per_iteration_dims
        assert all(a <= b for a, b in zip(dims, dims[1:]))
        assert dims[-1] == dims[-2]
        assert rep.iterations == len(dims) - 1

    def test_order_and_scale_invariance(self):
        gens = generators(1.0, 2.0, 0.5)
        _, base = lie_closure(gens)
        _, permuted = lie_closure(gens[::-1])
        _, scaled = lie_closure([3.0 * g for g in gens])
        assert base.dimension == permuted.dimension == scaled.dimension

    def test_monotone_in_generators(self):
        bx, by, bz = build_controls(model(1.0, 2.0, 0.5))
        _, small = lie_closure([bz])
        _, larger = lie_closure([bz, bx])
        assert larger.dimension >= small.dimension

    def test_output_is_bracket_closed(self):
        span, _ = lie_closure(generators(1.0, 1.0, 1.0))
        basis = span.basis
        for i, a in enumerate(basis):
            for b in basis[i:]:
                assert span.residual_norm(commutator(a, b)) <= 1e-8

    def test_identity_direction_never_enters(self):
        span, _ = lie_closure(generators(1.0, 2.0, 0.5))
        ident = 1j * np.eye(9) / 3.0
        assert span.residual_norm(ident) == pytest.approx(1.0, abs=1e-10)

    def test_sweep_cap_raises(self):
        with pytest.raises(ClosureError, match="sweeps"):
            lie_closure(generators(1.0, 2.0, 0.5), max_sweeps=1)

    def test_rejects_bad_generators(self):
        with pytest.raises(ValueError, match="skew"):
            lie_closure([np.eye(9)])
        with pytest.raises(ValueError, match="traceless"):
            lie_closure([1j * np.eye(9)])


class TestAdOrbit:
    def test_orbit_of_r_under_rotation_block(self):
        algebra = OperatorSpan.from_matrices(BASIS.sigma_basis())
        orbit = ad_orbit(algebra, BASIS.R)
        assert orbit.dimension == 5

    def test_nonzero_orbit_in_simple_algebra_is_everything(self):
        su9 = OperatorSpan.from_matrices(skew_traceless_basis(9))
        orbit = ad_orbit(su9, skew_traceless_basis(9)[17])
        assert orbit.dimension == 80

    def test_observable_orbit_in_controllable_case(self):
        algebra, _ = lie_closure(generators(1.0, 2.0, 0.5))
        seed = 1j * collective_observables()[2]
        orbit = ad_orbit(algebra, seed)
        assert orbit.dimension == 80


class TestControllabilityVerdict:
    @pytest.mark.parametrize("params", [(1.0, 2.0, 0.5), (1.0, 3.0, 1.0), (2.0, 1.0, -0.7)])
    def test_controllable_cases(self, params):
        rep = controllability_verdict(model(*params))
        assert rep.controllable and rep.dimension == 80
        assert rep.gamma_distinct and rep.j12_nonzero

    def test_equal_ratios(self):
        rep = controllability_verdict(model(1.0, 1.0, 0.5))
        assert not rep.controllable and rep.dimension == 4
        assert rep.notes

    def test_zero_exchange_distinct_ratios(self):
        # the closure splits into independent per-site rotations: dimension 6,
        # and the report must carry the note about the collective-case value 3
        rep = controllability_verdict(model(1.0, 2.0, 0.0))
        assert not rep.controllable
        assert rep.dimension == 6
        assert any("dimension 6" in n for n in rep.notes)

    def test_zero_exchange_equal_ratios(self):
        rep = controllability_verdict(model(1.0, 1.0, 0.0))
        assert rep.dimension == 3
        assert rep.notes

    def test_report_serializes(self):
        import json
        assert json.dumps(controllability_verdict(model(1.0, 2.0, 0.5)).to_dict())


class TestObservabilityVerdict:
    def test_controllable_case_is_observable(self):
        rep = observability_verdict(model(1.0, 2.0, 0.5))
        assert rep.observable and rep.space_dim == 80
        assert rep.vperp_basis.dimension == 0

    def test_equal_ratios_not_observable(self):
        rep = observability_verdict(model(1.0, 1.0, 0.5))
        assert not rep.observable
        assert rep.space_dim == 3
        assert rep.vperp_basis.dimension == 77
        assert rep.space_dim + rep.vperp_basis.dimension == 80
        assert rep.notes

    def test_vperp_orthogonal_to_orbit_seeds(self):
        rep = observability_verdict(model(1.0, 1.0, 0.5))
        for obs in collective_observables():
            coeffs = rep.vperp_basis.coefficients(1j * obs)
            assert np.abs(coeffs).max() <= 1e-10


def test_indistinguishable_perturbation_for_unobservable_model():
    # states differing along the observability complement produce identical
    # outputs: simulated witness for the equal-ratio regime
    from spinlie.dynamics import propagate, random_schedule
    m = model(1.0, 1.0, 0.5, seed=3)
    rep = observability_verdict(m)
    direction = 1j * rep.vperp_basis.basis[0]
    direction = (direction + direction.conj().T) / 2
    lam = np.linalg.eigvalsh(np.asarray(m.rho0))[0]
    eps = 0.5 * lam / np.abs(np.linalg.eigvalsh(direction)).max()
    perturbed = m.with_state(np.asarray(m.rho0) + eps * direction)
    worst = 0.0
    for seed in range(5):
        sched = random_schedule(seed)
        tr_a, _ = propagate(m, sched)
        tr_b, _ = propagate(perturbed, sched)
        worst = max(worst, np.abs(tr_a.components() - tr_b.components()).max())
    assert worst <= 1e-8
