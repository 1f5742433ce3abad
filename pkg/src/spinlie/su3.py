"""The named su(3)/u(3) basis for a single spin-1 site and its structure tables.

The basis splits u(3) into two orthogonal pieces: the rotation block
``span{sigma_x, sigma_y, sigma_z}`` (isomorphic to su(2), the image of the
spin-1 generators) and its orthogonal complement ``span{R, Q, T, V, U, i*1}``.
All commutator and anticommutator tables among these matrices are treated as
*claims under test*: :func:`verify_structure_tables` recomputes every cell
from scratch and reports, for any cell whose tabulated combination disagrees,
the numerically recomputed expansion in the named basis.  Nothing downstream
ever reads a tabulated value; only the recomputed products are used.

Known outcome, frozen here as :data:`KNOWN_SIGN_DISCREPANCIES`: twelve cells
(six commutator, six anticommutator) disagree with their tabulated
combination by an exact overall sign, and every one of them involves
``sigma_z`` as an operand or in the result.  All twelve would be consistent
if ``sigma_z`` carried the opposite sign, but that sign is pinned by the
relation ``[sigma_x, sigma_y] = 2 sigma_z`` and by ``sigma_z = spin_z``,
both of which hold exactly.  The verification reports the recomputed
coefficients and never silently corrects a cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement, product

import numpy as np

from .operators import OperatorSpan, anticommutator, commutator, hs_inner, hs_norm

SQRT2 = np.sqrt(2.0)

#: bracket convention for table cells: the cell in row ``L``, column ``C``
#: is compared against the bracket [C, L] (column first).  This orientation
#: is the one consistent with the bulk of the tabulated cells.
TABLE_CONVENTION = "[column, row]"


def _freeze(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class Su3Basis:
    """Named 3x3 skew-Hermitian constants plus the identity.

    ``sigma_*`` span the rotation block; ``R, Q, T, V, U`` together with
    ``i * identity`` span its orthogonal complement in u(3).  ``spin_*`` are
    the skew-Hermitian spin-1 generators; ``sigma_x = sqrt(2) spin_x``,
    ``sigma_y = sqrt(2) spin_y`` and ``sigma_z = spin_z``.
    """

    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_z: np.ndarray
    R: np.ndarray
    Q: np.ndarray
    T: np.ndarray
    V: np.ndarray
    U: np.ndarray
    spin_x: np.ndarray
    spin_y: np.ndarray
    spin_z: np.ndarray
    identity: np.ndarray

    def named(self) -> dict[str, np.ndarray]:
        """The nine orthogonal directions spanning u(3), keyed by label."""
        return {
            "sigma_x": self.sigma_x, "sigma_y": self.sigma_y, "sigma_z": self.sigma_z,
            "R": self.R, "Q": self.Q, "T": self.T, "V": self.V, "U": self.U,
            "i_identity": 1j * self.identity,
        }

    def sigma_basis(self) -> list[np.ndarray]:
        return [self.sigma_x, self.sigma_y, self.sigma_z]

    def complement_basis(self, include_identity: bool = True) -> list[np.ndarray]:
        out = [self.R, self.Q, self.T, self.V, self.U]
        if include_identity:
            out.append(1j * self.identity)
        return out

    def spin_basis(self) -> list[np.ndarray]:
        return [self.spin_x, self.spin_y, self.spin_z]

    def expand(self, x: np.ndarray) -> tuple[dict[str, float], float]:
        """Expansion coefficients of ``x`` over the nine named directions.

        Returns the coefficient dictionary (entries below 1e-9 dropped) and
        the norm of the residual outside the span.
        """
        out: dict[str, float] = {}
        resid = np.asarray(x, dtype=complex).copy()
        for name, b in self.named().items():
            c = hs_inner(b, x) / hs_inner(b, b)
            resid -= c * b
            if abs(c) > 1e-9:
                out[name] = float(c)
        return out, float(np.linalg.norm(resid))

    def combine(self, coeffs: dict[str, float]) -> np.ndarray:
        named = self.named()
        out = np.zeros((3, 3), dtype=complex)
        for name, c in coeffs.items():
            out = out + c * named[name]
        return out


def build_su3_basis() -> Su3Basis:
    """Construct the named constants exactly as tabulated."""
    sigma_x = _freeze([[0, 1j, 0], [1j, 0, 1j], [0, 1j, 0]])
    sigma_y = _freeze([[0, 1, 0], [-1, 0, 1], [0, -1, 0]])
    sigma_z = _freeze(np.diag([-1j, 0, 1j]))
    r = _freeze([[0, 0, 1j], [0, 0, 0], [1j, 0, 0]])
    q = _freeze([[0, 0, 1], [0, 0, 0], [-1, 0, 0]])
    t = _freeze(np.diag([1j, -2j, 1j]))
    v = _freeze([[0, 1, 0], [-1, 0, -1], [0, 1, 0]])
    u = _freeze([[0, 1j, 0], [1j, 0, -1j], [0, -1j, 0]])
    half = 0.5 * SQRT2
    spin_x = _freeze(1j * half * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex))
    spin_y = _freeze(half * np.array([[0, 1, 0], [-1, 0, 1], [0, -1, 0]], dtype=complex))
    spin_z = _freeze(np.diag([-1j, 0, 1j]))
    identity = _freeze(np.eye(3))
    return Su3Basis(sigma_x, sigma_y, sigma_z, r, q, t, v, u,
                    spin_x, spin_y, spin_z, identity)


def spin_square_sum_defect(basis: Su3Basis | None = None) -> float:
    """Max-abs deviation of ``sum_j (-i spin_j)^2`` from ``2 * identity``.

    Algebraically exact; in floating point the sqrt(2)/2 entries square to
    within one ulp of 1/2, so the defect is a few 1e-16.
    """
    basis = basis or build_su3_basis()
    acc = sum((-1j * s) @ (-1j * s) for s in basis.spin_basis())
    return float(np.abs(acc - 2 * basis.identity).max())


# ---------------------------------------------------------------------------
# structure tables as claims: (lhs, rhs, tabulated combination)
# Commutator cells are read with the [column, row] orientation, so a cell in
# row L, column C appears below as (C, L, ...) and is tested as [C, L].
# Anticommutator cells are symmetric; -i{lhs, rhs} is tested.
# ---------------------------------------------------------------------------

_COMM_SS = [
    ("sigma_x", "sigma_y", {"sigma_z": 2.0}),
    ("sigma_y", "sigma_z", {"sigma_x": 1.0}),
    ("sigma_z", "sigma_x", {"sigma_y": 1.0}),
]

_COMM_SPERP_SPERP = [
    ("R", "Q", {"sigma_z": -2.0}),
    ("R", "T", {}),
    ("Q", "T", {}),
    ("R", "V", {"sigma_x": 1.0}),
    ("Q", "V", {"sigma_y": 1.0}),
    ("T", "V", {"sigma_x": 3.0}),
    ("R", "U", {"sigma_y": 1.0}),
    ("Q", "U", {"sigma_x": -1.0}),
    ("T", "U", {"sigma_y": -3.0}),
    ("V", "U", {"sigma_z": 2.0}),
]

_COMM_SPERP_S = [
    ("R", "sigma_x", {"V": -1.0}),
    ("Q", "sigma_x", {"U": 1.0}),
    ("T", "sigma_x", {"V": -3.0}),
    ("V", "sigma_x", {"T": 2.0, "R": 2.0}),
    ("U", "sigma_x", {"Q": -2.0}),
    ("R", "sigma_y", {"U": -1.0}),
    ("Q", "sigma_y", {"V": -1.0}),
    ("T", "sigma_y", {"U": 3.0}),
    ("V", "sigma_y", {"Q": 2.0}),
    ("U", "sigma_y", {"T": -2.0, "R": 2.0}),
    ("R", "sigma_z", {"Q": 2.0}),
    ("Q", "sigma_z", {"R": -2.0}),
    ("T", "sigma_z", {}),
    ("V", "sigma_z", {"U": -1.0}),
    ("U", "sigma_z", {"V": 1.0}),
]

_ANTI_SPERP_SPERP = [
    ("R", "R", {"i_identity": 4.0 / 3.0, "T": 2.0 / 3.0}),
    ("Q", "R", {}),
    ("Q", "Q", {"i_identity": 4.0 / 3.0, "T": 2.0 / 3.0}),
    ("T", "R", {"R": 2.0}),
    ("T", "Q", {"Q": 2.0}),
    ("T", "T", {"i_identity": 4.0, "T": -2.0}),
    ("V", "R", {"V": 1.0}),
    ("V", "Q", {"U": -1.0}),
    ("V", "T", {"V": -1.0}),
    ("V", "V", {"i_identity": 8.0 / 3.0, "T": -2.0 / 3.0, "R": 2.0}),
    ("U", "R", {"U": -1.0}),
    ("U", "Q", {"V": -1.0}),
    ("U", "T", {"U": -1.0}),
    ("U", "V", {"Q": -2.0}),
    ("U", "U", {"i_identity": 8.0 / 3.0, "T": -2.0 / 3.0, "R": -2.0}),
]

_ANTI_SPERP_S = [
    ("sigma_x", "R", {"sigma_x": 1.0}),
    ("sigma_x", "Q", {"sigma_y": 1.0}),
    ("sigma_x", "T", {"sigma_x": -1.0}),
    ("sigma_x", "V", {}),
    ("sigma_x", "U", {"sigma_z": 2.0}),
    ("sigma_y", "R", {"sigma_y": -1.0}),
    ("sigma_y", "Q", {"sigma_x": 1.0}),
    ("sigma_y", "T", {"sigma_y": -1.0}),
    ("sigma_y", "V", {"sigma_z": 2.0}),
    ("sigma_y", "U", {}),
    ("sigma_z", "R", {}),
    ("sigma_z", "Q", {}),
    ("sigma_z", "T", {"sigma_z": 2.0}),
    ("sigma_z", "V", {"sigma_y": 1.0}),
    ("sigma_z", "U", {"sigma_x": 1.0}),
]

_ANTI_SS = [
    ("sigma_x", "sigma_x", {"i_identity": 8.0 / 3.0, "T": -2.0 / 3.0, "R": 2.0}),
    ("sigma_y", "sigma_x", {"Q": 2.0}),
    ("sigma_y", "sigma_y", {"i_identity": 8.0 / 3.0, "T": -2.0 / 3.0, "R": -2.0}),
    ("sigma_z", "sigma_x", {"U": 1.0}),
    ("sigma_z", "sigma_y", {"V": 1.0}),
    ("sigma_z", "sigma_z", {"i_identity": 4.0 / 3.0, "T": 2.0 / 3.0}),
]

_TABLES = {
    "commutator-SS": _COMM_SS,
    "commutator-Sperp-Sperp": _COMM_SPERP_SPERP,
    "commutator-Sperp-S": _COMM_SPERP_S,
    "anticommutator-SS": _ANTI_SS,
    "anticommutator-Sperp-Sperp": _ANTI_SPERP_SPERP,
    "anticommutator-Sperp-S": _ANTI_SPERP_S,
}

#: cells whose recomputed value is exactly the *negative* of the tabulated
#: combination; all involve sigma_z (see module docstring)
KNOWN_SIGN_DISCREPANCIES: dict[str, frozenset[tuple[str, str]]] = {
    "commutator-SS": frozenset(),
    "commutator-Sperp-Sperp": frozenset({("R", "Q"), ("V", "U")}),
    "commutator-Sperp-S": frozenset({
        ("R", "sigma_z"), ("Q", "sigma_z"), ("V", "sigma_z"), ("U", "sigma_z")}),
    "anticommutator-SS": frozenset({("sigma_z", "sigma_x"), ("sigma_z", "sigma_y")}),
    "anticommutator-Sperp-Sperp": frozenset(),
    "anticommutator-Sperp-S": frozenset({
        ("sigma_x", "U"), ("sigma_y", "V"), ("sigma_z", "V"), ("sigma_z", "U")}),
}


@dataclass
class TableEntry:
    lhs: str
    rhs: str
    claimed: dict[str, float]
    residual: float
    recomputed: dict[str, float]
    expansion_defect: float     # residual of the recomputation outside the basis
    matched: bool

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs, "rhs": self.rhs, "claimed": self.claimed,
            "residual": self.residual, "recomputed": self.recomputed,
            "expansion_defect": self.expansion_defect, "matched": self.matched,
        }


@dataclass
class TableReport:
    table_id: str
    entries: list[TableEntry]
    tolerance: float = 1e-12
    max_residual: float = field(init=False)

    def __post_init__(self):
        self.max_residual = max((e.residual for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def mismatched(self) -> list[TableEntry]:
        return [e for e in self.entries if not e.matched]

    def to_dict(self) -> dict:
        return {
            "table_id": self.table_id,
            "convention": TABLE_CONVENTION,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "passed": self.passed,
            "entries": [e.to_dict() for e in self.entries],
        }


def verify_structure_tables(tolerance: float = 1e-12,
                            basis: Su3Basis | None = None) -> list[TableReport]:
    """Recompute every tabulated cell and report the residuals.

    Each commutator cell is evaluated as ``[lhs, rhs]`` (column-first
    orientation), each anticommutator cell as ``-i {lhs, rhs}``.  Cells whose
    residual against the tabulated combination exceeds ``tolerance`` are
    flagged with the recomputed expansion coefficients; they are never
    corrected in place.
    """
    basis = basis or build_su3_basis()
    named = basis.named()
    reports = []
    for table_id, cells in _TABLES.items():
        anti = table_id.startswith("anticommutator")
        entries = []
        for lhs, rhs, claimed in cells:
            if anti:
                got = -1j * anticommutator(named[lhs], named[rhs])
            else:
                got = commutator(named[lhs], named[rhs])
            residual = float(np.linalg.norm(got - basis.combine(claimed)))
            recomputed, defect = basis.expand(got)
            entries.append(TableEntry(
                lhs=lhs, rhs=rhs, claimed=dict(claimed), residual=residual,
                recomputed=recomputed, expansion_defect=defect,
                matched=residual <= tolerance))
        reports.append(TableReport(table_id=table_id, entries=entries, tolerance=tolerance))
    return reports


def discrepancy_summary(reports: list[TableReport]) -> dict[str, list[tuple[str, str]]]:
    """Mismatched cells per table, as (lhs, rhs) label pairs."""
    return {r.table_id: [(e.lhs, e.rhs) for e in r.mismatched()] for r in reports}


def matches_known_discrepancies(reports: list[TableReport]) -> bool:
    """True when the mismatch set is exactly the documented sign-flip set
    and every mismatch is an exact sign flip of its tabulated combination."""
    basis = build_su3_basis()
    for rep in reports:
        expected = KNOWN_SIGN_DISCREPANCIES.get(rep.table_id, frozenset())
        got = {(e.lhs, e.rhs) for e in rep.mismatched()}
        if got != set(expected):
            return False
        for e in rep.mismatched():
            flipped = {k: -v for k, v in e.claimed.items()}
            named = basis.named()
            if rep.table_id.startswith("anticommutator"):
                val = -1j * anticommutator(named[e.lhs], named[e.rhs])
            else:
                val = commutator(named[e.lhs], named[e.rhs])
            if np.linalg.norm(val - basis.combine(flipped)) > rep.tolerance:
                return False
    return True


# ---------------------------------------------------------------------------
# subspace relations
# ---------------------------------------------------------------------------

@dataclass
class SubspaceRelation:
    relation: str
    expected_dim: int
    computed_dim: int
    containment_residual: float   # max residual of either inclusion
    passed: bool

    def to_dict(self) -> dict:
        return {"relation": self.relation, "expected_dim": self.expected_dim,
                "computed_dim": self.computed_dim,
                "containment_residual": self.containment_residual,
                "passed": self.passed}


@dataclass
class SubspaceReport:
    relations: list[SubspaceRelation]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.relations)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "relations": [r.to_dict() for r in self.relations]}


def _set_equality_residual(computed: OperatorSpan, reference: OperatorSpan) -> float:
    worst = 0.0
    for b in computed.basis:
        worst = max(worst, reference.residual_norm(b))
    for b in reference.basis:
        worst = max(worst, computed.residual_norm(b))
    return worst


def verify_subspace_relations(tol: float = 1e-10,
                              basis: Su3Basis | None = None) -> SubspaceReport:
    """Check the span identities among the rotation block and its complement.

    Covered relations: brackets of the rotation block close on itself; its
    anticommutators (times i) fill the complement; mixed brackets fill the
    complement modulo the identity direction; complement brackets fall back
    into the rotation block; and the adjoint orbit of each of R, Q, T, V, U
    under the rotation block is the full five-dimensional traceless
    complement.
    """
    basis = basis or build_su3_basis()
    sig = basis.sigma_basis()
    comp5 = basis.complement_basis(include_identity=False)
    comp6 = basis.complement_basis(include_identity=True)

    span_sigma = OperatorSpan.from_matrices(sig)
    span_comp5 = OperatorSpan.from_matrices(comp5)
    span_comp6 = OperatorSpan.from_matrices(comp6)

    rels: list[SubspaceRelation] = []

    def add(relation: str, mats: list[np.ndarray], reference: OperatorSpan, expected: int):
        comp = OperatorSpan(3)
        for m in mats:
            if hs_norm(m) > 0:
                comp.insert(m)
        resid = _set_equality_residual(comp, reference)
        rels.append(SubspaceRelation(
            relation=relation, expected_dim=expected, computed_dim=comp.dimension,
            containment_residual=resid,
            passed=(comp.dimension == expected and resid <= tol)))

    add("[S,S] = S", [commutator(a, b) for a, b in combinations(sig, 2)],
        span_sigma, 3)
    add("i{S,S} = S_perp",
        [1j * anticommutator(a, b) for a, b in combinations_with_replacement(sig, 2)],
        span_comp6, 6)
    add("[S_perp,S] = S_perp mod identity",
        [commutator(a, b) for a, b in product(comp5, sig)],
        span_comp5, 5)
    add("[S_perp,S_perp] = S",
        [commutator(a, b) for a, b in combinations(comp5, 2)],
        span_sigma, 3)
    add("i{S_perp,S_perp} = S_perp",
        [1j * anticommutator(a, b) for a, b in combinations_with_replacement(comp5, 2)],
        span_comp6, 6)
    add("i{S_perp,S} = S",
        [1j * anticommutator(a, b) for a, b in product(comp5, sig)],
        span_sigma, 3)

    for name, seed in zip("RQTVU", comp5):
        orbit = OperatorSpan(3)
        orbit.insert(seed)
        frontier = orbit.basis
        while frontier:
            new = []
            for x in frontier:
                for s in sig:
                    if orbit.insert(commutator(s, x)):
                        new.append(orbit.basis[-1])
            frontier = new
        resid = _set_equality_residual(orbit, span_comp5)
        rels.append(SubspaceRelation(
            relation=f"ad_S orbit of {name} = S_perp mod identity",
            expected_dim=5, computed_dim=orbit.dimension,
            containment_residual=resid,
            passed=(orbit.dimension == 5 and resid <= tol)))

    return SubspaceReport(relations=rels)
