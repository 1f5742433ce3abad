"""Parity grading of su(9) (and su(27)) by sigma-count of tensor words.

Each spin-1 site carries two orthogonal Hermitian blocks: the sigma-type
block ``{i sigma_x, i sigma_y, i sigma_z}`` and the complement block
``{i R, i Q, i T, i V, i U, 1}`` (the identity counts as complement-type).
Tensor words over these per-site blocks are mutually orthogonal; grading
them by the parity of their sigma-type letter count and dropping the
all-identity word splits the traceless Hermitian matrices into an *even*
class (44-dimensional for two sites) and an *odd* class (36-dimensional).

The skew versions ``i * even`` and ``i * odd`` decompose su(9) with the
closure pattern of a Cartan-type splitting in which the odd (mixed-word)
class is the subalgebra:

    [odd, odd] in odd,   [odd, even] in even,   [even, even] in odd,

and the anticommutators close the opposite way (modulo the identity).  The
exchange drift is purely even, the control generators purely odd; this is
what ties the grading to the sign ambiguity of the exchange constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .operators import OperatorSpan, anticommutator, as_operator, commutator, tensor
from .su3 import build_su3_basis

SUPPORTED_SPINS = (1, 2, 3)
CARTAN_TOL = 1e-10

#: closure triple as published for the general n-site grading: the odd class
#: is bracket-closed.  verify_cartan_relations also scores the swapped
#: labeling so the correct assignment is established numerically, not assumed.
RELATIONS = (
    ("[odd,odd] in odd", "comm", "odd", "odd", "even"),
    ("[odd,even] in even", "comm", "odd", "even", "odd"),
    ("[even,even] in odd", "comm", "even", "even", "even"),
    ("{odd,odd} in even", "anti", "odd", "odd", "odd"),
    ("{odd,even} in odd", "anti", "odd", "even", "even"),
    ("{even,even} in even", "anti", "even", "even", "odd"),
)


def _site_blocks():
    b = build_su3_basis()
    sigma = [("x", 1j * b.sigma_x), ("y", 1j * b.sigma_y), ("z", 1j * b.sigma_z)]
    comp = [("R", 1j * b.R), ("Q", 1j * b.Q), ("T", 1j * b.T),
            ("V", 1j * b.V), ("U", 1j * b.U), ("1", np.asarray(b.identity))]
    return ([("s", name, m) for name, m in sigma]
            + [("q", name, m) for name, m in comp])


class ParityDecomposition:
    """Even/odd word classes for ``n_spins`` sites, with fast projectors.

    ``even_space`` and ``odd_space`` hold the skew-Hermitian versions
    (``i * word``) as orthonormal spans; ``labels_even`` / ``labels_odd``
    record each word as ``pattern:member/member`` with ``s`` for sigma-type
    and ``q`` for complement-type letters.
    """

    def __init__(self, n_spins: int, words_even, words_odd, labels_even, labels_odd):
        self.n_spins = n_spins
        self.dim = 3 ** n_spins
        self.labels_even = labels_even
        self.labels_odd = labels_odd
        # stacked conjugate-flattened Hermitian words for complex projection
        d2 = self.dim * self.dim
        self._flat_even = np.array([w.conj().reshape(-1) for w in words_even]).reshape(-1, d2)
        self._flat_odd = np.array([w.conj().reshape(-1) for w in words_odd]).reshape(-1, d2)
        self.even_space = OperatorSpan(self.dim)
        self.odd_space = OperatorSpan(self.dim)
        for w in words_even:
            self.even_space.insert(1j * w)
        for w in words_odd:
            self.odd_space.insert(1j * w)

    @property
    def even_dim(self) -> int:
        return self._flat_even.shape[0]

    @property
    def odd_dim(self) -> int:
        return self._flat_odd.shape[0]

    def _project_flat(self, flat_words: np.ndarray, x: np.ndarray) -> np.ndarray:
        coeff = flat_words @ x.reshape(-1)
        return (coeff @ flat_words.conj()).reshape(self.dim, self.dim)

    def project(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, complex]:
        """Split ``x`` into (even part, odd part, identity coefficient).

        The identity coefficient is taken against the normalized identity
        ``1/sqrt(dim)``, so ``x = even + odd + coeff * 1/sqrt(dim)`` up to
        roundoff for any matrix in the word span (i.e. any matrix at all).
        """
        x = as_operator(x)
        if x.shape[0] != self.dim:
            raise ValueError(f"expected a {self.dim}x{self.dim} matrix, got {x.shape}")
        even = self._project_flat(self._flat_even, x)
        odd = self._project_flat(self._flat_odd, x)
        ident = complex(np.trace(x) / np.sqrt(self.dim))
        return even, odd, ident

    def flip_even(self, x: np.ndarray) -> np.ndarray:
        """Negate the even-class component of ``x``, keeping odd + identity."""
        even, odd, ident = self.project(x)
        return odd - even + ident * np.eye(self.dim) / np.sqrt(self.dim)


def build_parity_decomposition(n_spins: int) -> ParityDecomposition:
    """Enumerate, classify and normalize the tensor words for ``n_spins`` sites."""
    if n_spins not in SUPPORTED_SPINS:
        raise ValueError(f"n_spins must be in {SUPPORTED_SPINS}, got {n_spins}")
    blocks = _site_blocks()
    words_even, words_odd, labels_even, labels_odd = [], [], [], []
    for combo in product(blocks, repeat=n_spins):
        types = [c[0] for c in combo]
        names = [c[1] for c in combo]
        if all(t == "q" for t in types) and all(n == "1" for n in names):
            continue  # the all-identity word is excluded from both classes
        w = combo[0][2]
        for _, _, m in combo[1:]:
            w = tensor(w, m)
        w = w / np.linalg.norm(w)
        label = "".join(types) + ":" + "/".join(names)
        if types.count("s") % 2 == 0:
            words_even.append(w)
            labels_even.append(label)
        else:
            words_odd.append(w)
            labels_odd.append(label)
    return ParityDecomposition(n_spins, words_even, words_odd, labels_even, labels_odd)


def project(decomp: ParityDecomposition, x: np.ndarray):
    """Functional alias for :meth:`ParityDecomposition.project`."""
    return decomp.project(x)


@dataclass
class CartanRelationResult:
    relation: str
    pairs_checked: int
    violations: int
    max_forbidden_norm: float

    def to_dict(self) -> dict:
        return {"relation": self.relation, "pairs_checked": self.pairs_checked,
                "violations": self.violations,
                "max_forbidden_norm": self.max_forbidden_norm}


@dataclass
class CartanReport:
    n_spins: int
    mode: str
    tolerance: float
    relations: list[CartanRelationResult]
    closed_class: str
    swapped_labeling_violations: int
    even_dim: int
    odd_dim: int
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.violations == 0 for r in self.relations)

    def to_dict(self) -> dict:
        return {
            "n_spins": self.n_spins, "mode": self.mode, "tolerance": self.tolerance,
            "even_dim": self.even_dim, "odd_dim": self.odd_dim,
            "passed": self.passed,
            "closed_class": self.closed_class,
            "swapped_labeling_violations": self.swapped_labeling_violations,
            "relations": [r.to_dict() for r in self.relations],
            "notes": self.notes,
        }


def _hermitian_words(decomp: ParityDecomposition, cls: str) -> np.ndarray:
    flat = decomp._flat_even if cls == "even" else decomp._flat_odd
    return flat.conj().reshape(-1, decomp.dim, decomp.dim)


def _relation_pairs(decomp: ParityDecomposition, cls_a: str, cls_b: str,
                    mode: str, n_samples: int, rng: np.random.Generator):
    wa = _hermitian_words(decomp, cls_a)
    wb = _hermitian_words(decomp, cls_b)
    if mode == "exhaustive":
        if cls_a == cls_b:
            for i, j in combinations(range(len(wa)), 2):
                yield wa[i], wb[j]
            for i in range(len(wa)):
                yield wa[i], wa[i]
        else:
            for a in wa:
                for b in wb:
                    yield a, b
    else:
        for _ in range(n_samples):
            yield wa[rng.integers(len(wa))], wb[rng.integers(len(wb))]


def verify_cartan_relations(decomp: ParityDecomposition, mode: str = "auto",
                            n_samples: int = 2000, seed: int = 0,
                            tol: float = CARTAN_TOL) -> CartanReport:
    """Check the closure triple for brackets and anticommutators.

    For every word pair the product is projected onto the *forbidden* class
    of the relation; any projection norm above ``tol`` counts as a
    violation.  Exhaustive for one or two sites, uniformly sampled (seeded,
    ``n_samples`` pairs per relation) for three.  The report also scores the
    swapped labeling ("even class is the subalgebra") so the published
    assignment is certified rather than presumed.
    """
    if mode == "auto":
        mode = "exhaustive" if decomp.n_spins <= 2 else "sampled"
    if mode == "exhaustive" and decomp.n_spins > 2:
        raise ValueError("exhaustive verification is only supported for n_spins <= 2")
    rng = np.random.default_rng(seed)
    forbidden_flat = {"even": decomp._flat_even, "odd": decomp._flat_odd}
    results = []
    for relation, kind, cls_a, cls_b, forb in RELATIONS:
        flat = forbidden_flat[forb]
        worst, bad, count = 0.0, 0, 0
        for a, b in _relation_pairs(decomp, cls_a, cls_b, mode, n_samples, rng):
            z = a @ b - b @ a if kind == "comm" else a @ b + b @ a
            norm = float(np.linalg.norm(flat @ z.reshape(-1)))
            worst = max(worst, norm)
            bad += norm > tol
            count += 1
        results.append(CartanRelationResult(relation, count, bad, worst))

    # swapped labeling: pretend the even class were the subalgebra and count
    # how badly "[even,even] in even" fails on a small sample
    wa = _hermitian_words(decomp, "even")
    swapped_bad = 0
    n_check = min(200, n_samples)
    for _ in range(n_check):
        a = wa[rng.integers(len(wa))]
        b = wa[rng.integers(len(wa))]
        z = a @ b - b @ a
        norm = float(np.linalg.norm(decomp._flat_odd @ z.reshape(-1)))
        swapped_bad += norm > tol
    closed = "odd-sigma-count" if all(r.violations == 0 for r in results) else "undetermined"
    notes = []
    if closed == "odd-sigma-count" and swapped_bad > 0:
        notes.append(
            "the odd-sigma-count class is the bracket-closed one; relabeling the "
            f"classes breaks the closure triple ({swapped_bad}/{n_check} sampled "
            "even-even brackets leave the even class)")
    return CartanReport(
        n_spins=decomp.n_spins, mode=mode, tolerance=tol, relations=results,
        closed_class=closed, swapped_labeling_violations=swapped_bad,
        even_dim=decomp.even_dim, odd_dim=decomp.odd_dim, notes=notes)


def verify_product_identity(n_trials: int = 100, seed: int = 0,
                            block_dim: int = 3) -> float:
    """Max residual of the tensor-bracket expansion on random blocks.

    Checks ``[A(x)B, C(x)D] = ({A,C}(x)[B,D] + [A,C](x){B,D}) / 2`` on
    ``n_trials`` random complex quadruples; an algebraic identity, so the
    residual is pure roundoff.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_trials):
        a, b, c, d = (rng.standard_normal((block_dim, block_dim))
                      + 1j * rng.standard_normal((block_dim, block_dim))
                      for _ in range(4))
        lhs = commutator(tensor(a, b), tensor(c, d))
        rhs = 0.5 * (tensor(anticommutator(a, c), commutator(b, d))
                     + tensor(commutator(a, c), anticommutator(b, d)))
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst
