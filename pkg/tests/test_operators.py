"""Operator primitives: products, exponentials, spans, serialization."""

import numpy as np
import pytest

from spinlie.operators import (OperatorSpan, anticommutator, commutator, expm_skew,
                               hs_inner, is_hermitian, is_skew_hermitian, is_traceless,
                               matrix_from_json, matrix_to_json, skew_traceless_basis,
                               span_insert, tensor)
from spinlie.su3 import build_su3_basis

BASIS = build_su3_basis()
RNG = np.random.default_rng(42)


def random_complex(n, rng=RNG):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def random_skew(n, rng=RNG):
    x = random_complex(n, rng)
    return (x - x.conj().T) / 2


def random_hermitian(n, rng=RNG):
    x = random_complex(n, rng)
    return (x + x.conj().T) / 2


class TestCommutator:
    def test_rq_pair(self):
        # the tabulated (Q, R) cell holds with this orientation; the reversed
        # bracket is one of the documented sign-flip cells
        assert np.allclose(commutator(BASIS.Q, BASIS.R), -2 * BASIS.sigma_z, atol=1e-14)
        assert np.allclose(commutator(BASIS.R, BASIS.Q), 2 * BASIS.sigma_z, atol=1e-14)

    def test_self_commutator_vanishes(self):
        for _ in range(5):
            x = random_complex(4)
            assert np.linalg.norm(commutator(x, x)) == 0.0

    def test_sigma_z_t_commute(self):
        assert np.linalg.norm(commutator(BASIS.sigma_z, BASIS.T)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            commutator(np.eye(3), np.eye(4))

    def test_skew_closed_under_bracket(self):
        for _ in range(10):
            x, y = random_skew(5), random_skew(5)
            assert is_skew_hermitian(commutator(x, y))


class TestAnticommutator:
    def test_rr_diagonal(self):
        got = -1j * anticommutator(BASIS.R, BASIS.R)
        assert np.allclose(got, np.diag([2j, 0, 2j]), atol=1e-14)
        assert np.allclose(got, (4j / 3) * BASIS.identity + (2 / 3) * BASIS.T, atol=1e-14)

    def test_sigma_xy(self):
        got = -1j * anticommutator(BASIS.sigma_y, BASIS.sigma_x)
        assert np.allclose(got, 2 * BASIS.Q, atol=1e-14)

    def test_zero_operand(self):
        x = random_complex(3)
        assert np.linalg.norm(anticommutator(x, np.zeros((3, 3)))) == 0.0

    def test_hermitian_closed(self):
        for _ in range(10):
            x, y = random_hermitian(4), random_hermitian(4)
            assert is_hermitian(anticommutator(x, y))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            anticommutator(np.eye(2), np.eye(3))


class TestTensor:
    def test_identity(self):
        assert np.array_equal(tensor(np.eye(3), np.eye(3)), np.eye(9))

    def test_block_convention(self):
        x = random_complex(2)
        y = random_complex(3)
        t = tensor(x, y)
        for i in range(2):
            for j in range(2):
                assert np.allclose(t[3 * i:3 * i + 3, 3 * j:3 * j + 3], x[i, j] * y)

    def test_mixed_product_property(self):
        for _ in range(5):
            x, y, w, z = (random_complex(3) for _ in range(4))
            lhs = tensor(x, y) @ tensor(w, z)
            rhs = tensor(x @ w, y @ z)
            assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1, np.linalg.norm(rhs))

    def test_spin_square_sum_collapses_brackets(self):
        # sum_j [M (x) (-i spin_j), N (x) (-i spin_j)] = 2 [M, N] (x) 1
        spins = [-1j * s for s in BASIS.spin_basis()]
        for _ in range(5):
            m, n = random_complex(3), random_complex(3)
            acc = sum(commutator(tensor(m, s), tensor(n, s)) for s in spins)
            assert np.allclose(acc, 2 * tensor(commutator(m, n), np.eye(3)), atol=1e-12)


class TestExpmSkew:
    def test_zero(self):
        assert np.allclose(expm_skew(np.zeros((4, 4))), np.eye(4))

    def test_diagonal(self):
        x = -1j * np.pi * np.diag([1.0, 0.0, -1.0])
        assert np.allclose(expm_skew(x), np.diag([-1.0, 1.0, -1.0]), atol=1e-14)

    def test_inverse_identity(self):
        for _ in range(5):
            x = random_skew(6)
            u = expm_skew(x) @ expm_skew(-x)
            assert np.linalg.norm(u - np.eye(6)) <= 1e-10

    def test_unitary_singular_values(self):
        for _ in range(5):
            s = np.linalg.svd(expm_skew(random_skew(9)), compute_uv=False)
            assert np.abs(s - 1).max() <= 1e-10

    def test_rejects_non_skew(self):
        with pytest.raises(ValueError, match="skew-Hermitian"):
            expm_skew(np.eye(3))


class TestHsInner:
    def test_symmetric_real(self):
        for _ in range(5):
            x, y = random_complex(4), random_complex(4)
            assert hs_inner(x, y) == pytest.approx(hs_inner(y, x), abs=1e-12)

    def test_bilinear_over_reals(self):
        x, y, z = (random_complex(3) for _ in range(3))
        a, b = 0.7, -1.3
        assert hs_inner(x, a * y + b * z) == pytest.approx(
            a * hs_inner(x, y) + b * hs_inner(x, z), abs=1e-10)

    def test_positive_definite(self):
        for _ in range(10):
            x = random_complex(5)
            assert hs_inner(x, x) > 0


class TestOperatorSpan:
    def test_insert_single_direction(self):
        span = OperatorSpan(3)
        assert span.insert(BASIS.sigma_x)
        assert span.dimension == 1

    def test_rejects_dependent(self):
        span = OperatorSpan(3)
        span.insert(BASIS.sigma_x)
        span, accepted = span_insert(span, 2.0 * span.basis[0])
        assert not accepted
        assert span.dimension == 1

    def test_eight_named_matrices_span_eight(self):
        span = OperatorSpan(3)
        for m in [BASIS.sigma_x, BASIS.sigma_y, BASIS.sigma_z,
                  BASIS.R, BASIS.Q, BASIS.T, BASIS.V, BASIS.U]:
            span.insert(m)
        assert span.dimension == 8

    def test_idempotent_on_combinations(self):
        span = OperatorSpan(3)
        for m in (BASIS.sigma_x, BASIS.R, BASIS.T):
            span.insert(m)
        rng = np.random.default_rng(0)
        for _ in range(10):
            combo = sum(c * b for c, b in zip(rng.standard_normal(3), span.basis))
            assert not span.insert(combo)
        assert span.dimension == 3

    def test_orthonormal_within_tolerance(self):
        span = OperatorSpan(9)
        rng = np.random.default_rng(3)
        for _ in range(40):
            x = random_skew(9, rng)
            span.insert(x - np.trace(x) / 9 * np.eye(9))
        assert span.orthonormality_defect() <= 1e-10

    def test_traceless_dimension_cap(self):
        span = OperatorSpan(3)
        rng = np.random.default_rng(1)
        for _ in range(30):
            x = random_skew(3, rng)
            span.insert(x - np.trace(x) / 3 * np.eye(3))
        assert span.dimension == 8  # dim su(3)

    def test_rejects_non_skew(self):
        span = OperatorSpan(3)
        with pytest.raises(ValueError, match="skew-Hermitian"):
            span.insert(np.eye(3))

    def test_projection_and_residual(self):
        span = OperatorSpan(3)
        span.insert(BASIS.sigma_x)
        span.insert(BASIS.sigma_y)
        inside = 0.3 * BASIS.sigma_x - 0.8 * BASIS.sigma_y
        assert span.residual_norm(inside) <= 1e-12
        assert np.allclose(span.project(inside), inside, atol=1e-12)
        assert span.residual_norm(BASIS.R) == pytest.approx(np.linalg.norm(BASIS.R), rel=1e-12)


def test_skew_traceless_basis_is_orthonormal():
    for n in (3, 9):
        basis = skew_traceless_basis(n)
        assert len(basis) == n * n - 1
        flat = np.array([b.reshape(-1) for b in basis])
        gram = (flat.conj() @ flat.T).real
        assert np.abs(gram - np.eye(len(basis))).max() <= 1e-12
        assert all(is_skew_hermitian(b) and is_traceless(b) for b in basis)


def test_matrix_json_roundtrip():
    x = random_complex(5)
    back = matrix_from_json(matrix_to_json(x))
    assert np.array_equal(back, x)


def test_matrix_json_rejects_malformed():
    with pytest.raises(ValueError):
        matrix_from_json([[1.0, 2.0], [3.0, 4.0]])
