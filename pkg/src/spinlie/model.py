"""Driven pair of coupled spin-1 particles: generators, states, observables.

The dynamics on the 9-dimensional pair space is generated by the exchange
drift ``A = -i J12 * sum_j spin_j (x) spin_j`` and three control directions
``B_v = gamma1 spin_v (x) 1 + gamma2 1 (x) spin_v``; the Hamiltonian is
``H = i (A + sum_v u_v B_v)``, Hermitian because A and the B_v are
skew-Hermitian.  State evolution follows ``rho' = -i [H, rho]``.

Outputs are total magnetizations.  The skew-Hermitian spin generators are
Hermitized once and for all as ``J_v = -i spin_v``, so that
``M_v = tr((J_v (x) 1 + 1 (x) J_v) rho)`` is real; this fixed rescaling by
``-i`` leaves every span, kernel and orthogonality statement unchanged.
Note ``J_z = diag(-1, 0, 1)``: the m = +1 eigenvector along z is the third
basis vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .operators import as_operator, matrix_from_json, matrix_to_json, tensor
from .su3 import build_su3_basis

DIM = 9
SCALAR_STATE_TOL = 1e-8


class InvalidStateError(ValueError):
    """The supplied matrix is not an admissible density matrix."""


def check_density_matrix(rho, *, herm_tol: float = 1e-10, trace_tol: float = 1e-10,
                         eig_floor: float = -1e-10, require_nonscalar: bool = True) -> np.ndarray:
    """Validate a 9x9 density matrix; return it as a complex array.

    Requires Hermiticity, unit trace and positive semidefiniteness within
    the stated tolerances.  Scalar states (within ``SCALAR_STATE_TOL`` of
    the maximally mixed state) are rejected by default because they produce
    identically zero output for every model.
    """
    rho = as_operator(rho)
    if rho.shape[0] != DIM:
        raise InvalidStateError(f"density matrix must be {DIM}x{DIM}, got {rho.shape}")
    if np.linalg.norm(rho - rho.conj().T) > herm_tol:
        raise InvalidStateError("density matrix must be Hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise InvalidStateError(f"density matrix must have unit trace, got {np.trace(rho)}")
    w = np.linalg.eigvalsh(rho)
    if w[0] < eig_floor:
        raise InvalidStateError(f"density matrix must be positive semidefinite, min eig {w[0]:.3e}")
    if require_nonscalar and np.linalg.norm(rho - np.eye(DIM) / DIM) <= SCALAR_STATE_TOL:
        raise InvalidStateError("scalar (maximally mixed) states are excluded: outputs vanish identically")
    return rho


@dataclass(frozen=True)
class SpinPairModel:
    """Model parameters plus the initial state.

    gamma1, gamma2 : gyromagnetic ratios (angular frequency per unit field)
    j12 : exchange constant (angular frequency)
    rho0 : 9x9 density matrix
    """

    gamma1: float
    gamma2: float
    j12: float
    rho0: np.ndarray

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "j12"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        rho = check_density_matrix(self.rho0)
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "rho0", rho)

    def with_state(self, rho0: np.ndarray) -> "SpinPairModel":
        return SpinPairModel(self.gamma1, self.gamma2, self.j12, rho0)


@lru_cache(maxsize=1)
def _site_ops() -> tuple[dict[str, np.ndarray], np.ndarray]:
    basis = build_su3_basis()
    spin = {"x": basis.spin_x, "y": basis.spin_y, "z": basis.spin_z}
    return spin, np.asarray(basis.identity)


def build_drift(model: SpinPairModel) -> np.ndarray:
    """Exchange drift ``A = -i j12 sum_j spin_j (x) spin_j`` (skew-Hermitian)."""
    spin, _ = _site_ops()
    acc = sum(tensor(spin[v], spin[v]) for v in "xyz")
    return -1j * model.j12 * acc


def build_controls(model: SpinPairModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Control generators ``B_v = gamma1 spin_v (x) 1 + gamma2 1 (x) spin_v``."""
    spin, ident = _site_ops()
    return tuple(
        model.gamma1 * tensor(spin[v], ident) + model.gamma2 * tensor(ident, spin[v])
        for v in "xyz")


def hamiltonian(model: SpinPairModel, u) -> np.ndarray:
    """Hermitian ``H = i (A + u_x B_x + u_y B_y + u_z B_z)``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (3,) or not np.all(np.isfinite(u)):
        raise ValueError("control must be a finite triple (u_x, u_y, u_z)")
    a = build_drift(model)
    bx, by, bz = build_controls(model)
    return 1j * (a + u[0] * bx + u[1] * by + u[2] * bz)


@lru_cache(maxsize=1)
def collective_observables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hermitian, traceless total-spin observables ``J_v (x) 1 + 1 (x) J_v``."""
    spin, ident = _site_ops()
    out = []
    for v in "xyz":
        j = -1j * spin[v]
        m = tensor(j, ident) + tensor(ident, j)
        m.setflags(write=False)
        out.append(m)
    return tuple(out)


def magnetization(rho: np.ndarray) -> np.ndarray:
    """Total magnetization ``(M_x, M_y, M_z)`` of a state (or any matrix)."""
    rho = as_operator(rho)
    return np.array([np.vdot(obs, rho).real for obs in collective_observables()])


def random_density_matrix(seed: int) -> np.ndarray:
    """Seeded random full-rank state ``G G^dag / tr(G G^dag)``.

    ``G`` is a 9x9 matrix of independent standard complex Gaussians drawn
    from ``numpy.random.default_rng(seed)``.
    """
    rng = np.random.default_rng(seed)
    g = (rng.standard_normal((DIM, DIM)) + 1j * rng.standard_normal((DIM, DIM))) / np.sqrt(2.0)
    w = g @ g.conj().T
    return w / np.trace(w).real


def mixed_random_density_matrix(seed: int, weight: float = 0.22) -> np.ndarray:
    """Random state pulled toward the maximally mixed state.

    ``(1 - weight) * 1/9 + weight * random_density_matrix(seed)``.  A state
    keeps a positive-semidefinite exchange-sign partner exactly when its
    largest eigenvalue is at most 2/9; plain 9x9 Wishart states always
    exceed that bound, while ``weight <= 0.22`` stays safely below it.
    """
    if not 0.0 < weight <= 1.0:
        raise ValueError("weight must be in (0, 1]")
    return (1.0 - weight) * np.eye(DIM) / DIM + weight * random_density_matrix(seed)


def thermal_density_matrix(j12: float, beta: float = 1.0) -> np.ndarray:
    """Gibbs state of the drift Hamiltonian, ``exp(-beta H0) / Z`` with
    ``H0 = i A`` at zero controls (so ``H0 = j12 sum_j spin_j (x) spin_j``)."""
    spin, _ = _site_ops()
    h0 = j12 * sum(tensor(spin[v], spin[v]) for v in "xyz")
    w, v = np.linalg.eigh(h0)
    e = np.exp(-beta * (w - w.min()))
    return (v * (e / e.sum())) @ v.conj().T


# --- model JSON: {"gamma1": r, "gamma2": r, "J12": r, "rho0": ...} ---------

def _state_from_spec(spec, j12: float) -> np.ndarray:
    if isinstance(spec, dict) and "preset" in spec:
        preset = spec["preset"]
        if preset == "random":
            rho = random_density_matrix(int(spec["seed"]))
            weight = spec.get("weight")
            if weight is not None:
                rho = mixed_random_density_matrix(int(spec["seed"]), float(weight))
            return rho
        if preset == "thermal":
            return thermal_density_matrix(j12, float(spec.get("beta", 1.0)))
        raise ValueError(f"unknown state preset {preset!r}")
    return matrix_from_json(spec)


def model_to_dict(model: SpinPairModel) -> dict:
    return {"gamma1": model.gamma1, "gamma2": model.gamma2, "J12": model.j12,
            "rho0": matrix_to_json(model.rho0)}


def model_from_dict(data: dict) -> SpinPairModel:
    try:
        j12 = float(data["J12"])
        rho0 = _state_from_spec(data["rho0"], j12)
        return SpinPairModel(float(data["gamma1"]), float(data["gamma2"]), j12, rho0)
    except KeyError as exc:
        raise ValueError(f"model JSON missing field {exc}") from exc


def save_model(path, model: SpinPairModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> SpinPairModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
