"""Dense complex operator algebra with Hilbert-Schmidt geometry.

Everything downstream works with plain ``numpy`` complex arrays.  This module
supplies the primitives: validated products (commutator, anticommutator,
Kronecker product), the unitary exponential of a skew-Hermitian matrix, the
real Hilbert-Schmidt inner product ``<X, Y> = Re tr(X^dag Y)``, and
:class:`OperatorSpan`, an incrementally grown orthonormal basis of
skew-Hermitian matrices used to represent Lie algebras and orbit spaces.

Spans live over the *reals*: skew-Hermitian matrices form a real vector
space, and all dimension counts here are real dimensions (``dim su(n) =
n^2 - 1``).
"""

from __future__ import annotations

import json
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-10
SPAN_TOL = 1e-9


def as_operator(x) -> np.ndarray:
    """Validate and return ``x`` as a square, finite, complex matrix."""
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"operator must be a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError("operator must have dimension >= 1")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("operator entries must be finite")
    return m


def hs_inner(x: np.ndarray, y: np.ndarray) -> float:
    """Real Hilbert-Schmidt inner product ``Re tr(X^dag Y)``."""
    return float(np.vdot(x, y).real)


def hs_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def is_hermitian(x: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return bool(np.linalg.norm(x - x.conj().T) <= tol * max(1.0, hs_norm(x)))


def is_skew_hermitian(x: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return bool(np.linalg.norm(x + x.conj().T) <= tol * max(1.0, hs_norm(x)))


def is_traceless(x: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return bool(abs(np.trace(x)) <= tol * max(1.0, hs_norm(x)))


def _check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``[X, Y] = XY - YX``."""
    x, y = as_operator(x), as_operator(y)
    _check_same_dim(x, y)
    return x @ y - y @ x


def anticommutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``{X, Y} = XY + YX``."""
    x, y = as_operator(x), as_operator(y)
    _check_same_dim(x, y)
    return x @ y + y @ x


def tensor(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Kronecker product with block convention
    ``(X (x) Y)[i*m + k, j*m + l] = X[i, j] * Y[k, l]`` for ``m = dim(Y)``.

    Satisfies the mixed-product property ``(X(x)Y)(W(x)Z) = XW (x) YZ``.
    """
    return np.kron(as_operator(x), as_operator(y))


def expm_skew(x: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unitary exponential ``exp(X)`` of a skew-Hermitian ``X``.

    Computed through the eigendecomposition of the Hermitian matrix ``iX``,
    which keeps the result unitary to machine precision at the small sizes
    used here.  Raises if ``X`` is not skew-Hermitian within ``tol``.
    """
    x = as_operator(x)
    if not is_skew_hermitian(x, tol):
        raise ValueError("expm_skew requires a skew-Hermitian matrix")
    w, v = np.linalg.eigh(1j * x)
    return (v * np.exp(-1j * w)) @ v.conj().T


def skew_traceless_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of ``su(n)`` (skew-Hermitian, traceless), length n^2-1.

    Generalized Gell-Mann construction: antisymmetric and symmetric
    off-diagonal pairs plus diagonal matrices, each multiplied by ``i`` where
    needed to make it skew-Hermitian, normalized in Hilbert-Schmidt norm.
    """
    basis: list[np.ndarray] = []
    for j in range(n):
        for k in range(j + 1, n):
            a = np.zeros((n, n), dtype=complex)
            a[j, k] = 1.0
            a[k, j] = -1.0
            basis.append(a / np.sqrt(2.0))
            s = np.zeros((n, n), dtype=complex)
            s[j, k] = 1j
            s[k, j] = 1j
            basis.append(s / np.sqrt(2.0))
    for j in range(1, n):
        d = np.zeros(n, dtype=complex)
        d[:j] = 1j
        d[j] = -1j * j
        basis.append(np.diag(d) / np.sqrt(j * (j + 1)))
    return basis


class OperatorSpan:
    """Orthonormal real span of skew-Hermitian matrices of a fixed size.

    The basis is grown only through :meth:`insert`, which projects the
    candidate onto the orthogonal complement of the current span with a
    two-pass Gram-Schmidt sweep and appends the normalized residual when it
    is independent.  Basis elements are pairwise orthonormal under the real
    Hilbert-Schmidt inner product.
    """

    def __init__(self, ambient_dim: int):
        if ambient_dim < 1:
            raise ValueError("ambient_dim must be >= 1")
        self.ambient_dim = int(ambient_dim)
        self._basis: list[np.ndarray] = []
        # conjugated, flattened basis rows for vectorized projections
        self._flat = np.zeros((0, ambient_dim * ambient_dim), dtype=complex)

    @classmethod
    def from_matrices(cls, mats: Iterable[np.ndarray], tol: float = SPAN_TOL) -> "OperatorSpan":
        mats = list(mats)
        if not mats:
            raise ValueError("need at least one matrix")
        span = cls(as_operator(mats[0]).shape[0])
        for m in mats:
            span.insert(m, tol)
        return span

    @property
    def dimension(self) -> int:
        return len(self._basis)

    @property
    def basis(self) -> list[np.ndarray]:
        return [b.copy() for b in self._basis]

    def copy(self) -> "OperatorSpan":
        out = OperatorSpan(self.ambient_dim)
        out._basis = [b.copy() for b in self._basis]
        out._flat = self._flat.copy()
        return out

    def _project_out(self, vec: np.ndarray) -> np.ndarray:
        # vec is the flattened candidate; two passes are enough to
        # reorthogonalize at these scales
        for _ in range(2):
            if self._flat.shape[0]:
                coeff = (self._flat @ vec).real
                vec = vec - coeff @ self._flat.conj()
        return vec

    def insert(self, x: np.ndarray, tol: float = SPAN_TOL) -> bool:
        """Insert ``x`` if it is independent of the span; return acceptance.

        The residual of ``x`` against the current basis is appended
        (normalized) when its norm exceeds ``tol * max(1, ||x||)``.
        """
        x = as_operator(x)
        if x.shape[0] != self.ambient_dim:
            raise ValueError(
                f"ambient dimension mismatch: span is {self.ambient_dim}, got {x.shape[0]}")
        if not is_skew_hermitian(x):
            raise ValueError("span elements must be skew-Hermitian")
        norm = hs_norm(x)
        if norm == 0.0:
            return False
        vec = self._project_out(x.reshape(-1).copy())
        res = np.linalg.norm(vec)
        if res <= tol * max(1.0, norm):
            return False
        vec /= res
        self._basis.append(vec.reshape(self.ambient_dim, self.ambient_dim))
        self._flat = np.vstack([self._flat, vec.conj()[None, :]])
        return True

    def coefficients(self, x: np.ndarray) -> np.ndarray:
        """Real expansion coefficients of ``x`` against the basis."""
        x = as_operator(x)
        return (self._flat @ x.reshape(-1)).real

    def project(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection of ``x`` onto the span."""
        coeff = self.coefficients(x)
        flat = coeff @ self._flat.conj()
        return flat.reshape(self.ambient_dim, self.ambient_dim)

    def residual_norm(self, x: np.ndarray) -> float:
        """Norm of the component of ``x`` orthogonal to the span."""
        x = as_operator(x)
        return float(np.linalg.norm(self._project_out(x.reshape(-1).copy())))

    def contains(self, x: np.ndarray, tol: float = SPAN_TOL) -> bool:
        return self.residual_norm(x) <= tol * max(1.0, hs_norm(x))

    def orthonormality_defect(self) -> float:
        """Max deviation of the basis Gram matrix from the identity."""
        if not self._basis:
            return 0.0
        g = self._flat @ self._flat.conj().T
        return float(np.abs(g - np.eye(self.dimension)).max())


def span_insert(span: OperatorSpan, x: np.ndarray, tol: float = SPAN_TOL) -> tuple[OperatorSpan, bool]:
    """Functional wrapper around :meth:`OperatorSpan.insert`."""
    accepted = span.insert(x, tol)
    return span, accepted


# --- JSON wire format: array of rows, each entry a two-element [re, im] ---

def matrix_to_json(x: np.ndarray) -> list[list[list[float]]]:
    x = as_operator(x)
    return [[[float(v.real), float(v.imag)] for v in row] for row in x]


def matrix_from_json(rows: Sequence) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 2:
        raise ValueError("matrix JSON must be an NxN array of [re, im] pairs")
    return as_operator(arr[..., 0] + 1j * arr[..., 1])


def save_matrix(path, x: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(matrix_to_json(x), fh)


def load_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return matrix_from_json(json.load(fh))
