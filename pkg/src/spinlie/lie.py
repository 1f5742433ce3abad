"""Lie-algebra closures, adjoint orbits, and control-theoretic verdicts.

The closure routine seeds an orthonormal span with the (normalized)
generators and sweeps breadth-first: at every sweep each element accepted in
the previous sweep is bracketed against every current basis element, and
independent residuals are appended.  A sweep that accepts nothing certifies
the fixpoint, so the per-sweep dimension record always ends with two equal
entries.  Generators are normalized before closing so that rank decisions
are independent of the magnitudes of the physical parameters.

Controllability of the spin pair holds exactly when the closure of
``{A, B_x, B_y, B_z}`` is all of su(9) (real dimension 80); observability
when the joint adjoint orbit of the magnetization observables under that
closure is again all of su(9).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import SpinPairModel, build_controls, build_drift, collective_observables
from .operators import (OperatorSpan, commutator, hs_norm, is_skew_hermitian,
                        is_traceless, skew_traceless_basis)

PARAM_EQ_TOL = 1e-12
DEFAULT_CLOSURE_TOL = 1e-9
MAX_SWEEPS = 20


class ClosureError(RuntimeError):
    """Closure failed to reach a fixpoint within the sweep cap."""


@dataclass
class ClosureReport:
    generator_labels: list[str]
    ambient_dim: int
    dimension: int
    controllable: bool
    iterations: int
    per_iteration_dims: list[int]
    tolerance_used: float
    gamma_distinct: bool | None = None
    j12_nonzero: bool | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "generators": self.generator_labels,
            "ambient_dim": self.ambient_dim,
            "dimension": self.dimension,
            "controllable": self.controllable,
            "iterations": self.iterations,
            "per_iteration_dims": self.per_iteration_dims,
            "tolerance_used": self.tolerance_used,
            "gamma_distinct": self.gamma_distinct,
            "j12_nonzero": self.j12_nonzero,
            "notes": self.notes,
        }


@dataclass
class ObservabilityReport:
    space_dim: int
    observable: bool
    closure: ClosureReport
    vperp_basis: OperatorSpan
    notes: list[str] = field(default_factory=list)

    def to_dict(self, include_vperp: bool = False) -> dict:
        from .operators import matrix_to_json
        out = {
            "space_dim": self.space_dim,
            "observable": self.observable,
            "vperp_dim": self.vperp_basis.dimension,
            "closure": self.closure.to_dict(),
            "notes": self.notes,
        }
        if include_vperp:
            out["vperp_basis"] = [matrix_to_json(b) for b in self.vperp_basis.basis]
        return out


def _validate_generators(generators: Sequence[np.ndarray]) -> list[np.ndarray]:
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if not gens:
        raise ValueError("need at least one generator")
    n = gens[0].shape[0]
    for g in gens:
        if g.shape != (n, n):
            raise ValueError("generators must share a common ambient dimension")
        if not is_skew_hermitian(g):
            raise ValueError("generators must be skew-Hermitian")
        if not is_traceless(g):
            raise ValueError("generators must be traceless")
    return gens


def lie_closure(generators: Sequence[np.ndarray], tol: float = DEFAULT_CLOSURE_TOL,
                max_sweeps: int = MAX_SWEEPS,
                labels: Sequence[str] | None = None) -> tuple[OperatorSpan, ClosureReport]:
    """Close a set of skew-Hermitian traceless generators under commutation.

    Returns the generated algebra as an orthonormal span together with a
    report (dimension, sweep history, verdict against ``dim su(n)``).
    Zero generators are skipped.  Raises :class:`ClosureError` if the sweep
    cap is hit before a full sweep accepts nothing.
    """
    gens = _validate_generators(generators)
    n = gens[0].shape[0]
    if labels is None:
        labels = [f"g{i}" for i in range(len(gens))]
    span = OperatorSpan(n)
    frontier: list[np.ndarray] = []
    for g in gens:
        nrm = hs_norm(g)
        if nrm == 0.0:
            continue
        if span.insert(g / nrm, tol):
            frontier.append(span.basis[-1])
    dims = [span.dimension]
    sweeps = 0
    while frontier:
        if sweeps >= max_sweeps:
            raise ClosureError(
                f"no fixpoint within {max_sweeps} sweeps (dimension {span.dimension}); "
                "the tolerance may be too tight for these generators")
        new: list[np.ndarray] = []
        for x in frontier:
            for b in list(span.basis):
                if span.insert(commutator(x, b), tol):
                    new.append(span.basis[-1])
        dims.append(span.dimension)
        frontier = new
        sweeps += 1
    if len(dims) < 2:           # all generators were zero or dependent
        dims.append(dims[0] if dims else 0)
    report = ClosureReport(
        generator_labels=list(labels), ambient_dim=n, dimension=span.dimension,
        controllable=(span.dimension == n * n - 1), iterations=sweeps,
        per_iteration_dims=dims, tolerance_used=tol)
    return span, report


def ad_orbit(algebra: OperatorSpan, seed, tol: float = DEFAULT_CLOSURE_TOL,
             max_sweeps: int = MAX_SWEEPS) -> OperatorSpan:
    """Smallest subspace containing the seed(s) and stable under bracketing
    with every basis element of ``algebra``.

    ``seed`` may be a single matrix or a sequence of matrices; each must be
    skew-Hermitian and traceless.
    """
    seeds = [seed] if isinstance(seed, np.ndarray) else list(seed)
    seeds = _validate_generators(seeds)
    orbit = OperatorSpan(algebra.ambient_dim)
    frontier: list[np.ndarray] = []
    for s in seeds:
        nrm = hs_norm(s)
        if nrm == 0.0:
            continue
        if orbit.insert(s / nrm, tol):
            frontier.append(orbit.basis[-1])
    sweeps = 0
    while frontier:
        if sweeps >= max_sweeps:
            raise ClosureError(f"orbit did not stabilize within {max_sweeps} sweeps")
        new = []
        for x in frontier:
            for l in algebra.basis:
                if orbit.insert(commutator(l, x), tol):
                    new.append(orbit.basis[-1])
        frontier = new
        sweeps += 1
    return orbit


def _model_generators(model: SpinPairModel):
    a = build_drift(model)
    bx, by, bz = build_controls(model)
    return [a, bx, by, bz], ["drift", "control_x", "control_y", "control_z"]


def controllability_verdict(model: SpinPairModel,
                            tol: float = DEFAULT_CLOSURE_TOL) -> ClosureReport:
    """Close ``{A, B_x, B_y, B_z}`` and render the controllability verdict.

    The report cross-checks the algebraic dimension against the parameter
    condition (distinct gyromagnetic ratios and nonzero exchange, both at
    tolerance 1e-12) and attaches notes for degenerate regimes instead of
    failing silently.
    """
    gens, labels = _model_generators(model)
    span, report = lie_closure(gens, tol=tol, labels=labels)
    report.gamma_distinct = abs(model.gamma1 - model.gamma2) > PARAM_EQ_TOL
    report.j12_nonzero = abs(model.j12) > PARAM_EQ_TOL
    expected_controllable = report.gamma_distinct and report.j12_nonzero
    if expected_controllable != report.controllable:
        report.notes.append(
            "algebraic dimension disagrees with the parameter condition "
            "(distinct ratios and nonzero exchange); rank decisions may be "
            "tolerance-sensitive for near-degenerate parameters")
    if not report.j12_nonzero:
        if report.gamma_distinct:
            report.notes.append(
                f"zero exchange with distinct gyromagnetic ratios: computed closure "
                f"dimension {report.dimension}; the two sites rotate independently "
                f"(su(2)+su(2), dimension 6), not as a single collective su(2) of "
                f"dimension 3 as in the equal-ratio case")
        else:
            report.notes.append(
                f"zero exchange with equal gyromagnetic ratios: closure is the "
                f"collective rotation algebra, dimension {report.dimension}")
    if report.j12_nonzero and not report.gamma_distinct:
        report.notes.append(
            "equal gyromagnetic ratios with nonzero exchange: closure is the "
            "collective rotation algebra plus the central exchange direction")
    return report


def observability_verdict(model: SpinPairModel,
                          tol: float = DEFAULT_CLOSURE_TOL) -> ObservabilityReport:
    """Compute the joint adjoint orbit of the magnetization observables.

    Seeds are ``i * (J_v (x) 1 + 1 (x) J_v)`` (skew-Hermitian, traceless)
    for v = x, y, z; the orbit is taken under the model's dynamical algebra.
    The complement of the orbit inside su(9) is returned explicitly:
    Hermitian perturbations ``i X`` of the initial state along complement
    directions X are invisible to every output trajectory.
    """
    gens, labels = _model_generators(model)
    algebra, closure_report = lie_closure(gens, tol=tol, labels=labels)
    closure_report.gamma_distinct = abs(model.gamma1 - model.gamma2) > PARAM_EQ_TOL
    closure_report.j12_nonzero = abs(model.j12) > PARAM_EQ_TOL

    seeds = [1j * obs for obs in collective_observables()]
    orbit = ad_orbit(algebra, seeds, tol=tol)

    n = orbit.ambient_dim
    full = orbit.copy()
    vperp = OperatorSpan(n)
    for b in skew_traceless_basis(n):
        if full.insert(b, tol):
            vperp.insert(full.basis[-1], tol)

    notes = []
    observable = orbit.dimension == n * n - 1
    if not observable:
        notes.append(
            f"observability space has dimension {orbit.dimension} < {n * n - 1}: "
            f"initial states differing along the {vperp.dimension}-dimensional "
            f"complement produce identical outputs for every control")
    return ObservabilityReport(
        space_dim=orbit.dimension, observable=observable,
        closure=closure_report, vperp_basis=vperp, notes=notes)
