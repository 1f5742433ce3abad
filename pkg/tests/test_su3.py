"""Named su(3) basis constants and the recomputed structure tables."""

import numpy as np

from spinlie.operators import hs_inner, is_skew_hermitian, is_traceless
from spinlie.su3 import (KNOWN_SIGN_DISCREPANCIES, build_su3_basis,
                         discrepancy_summary, matches_known_discrepancies,
                         spin_square_sum_defect, verify_structure_tables,
                         verify_subspace_relations)

BASIS = build_su3_basis()


class TestBasisConstants:
    def test_printed_entries(self):
        assert np.array_equal(BASIS.sigma_z, np.diag([-1j, 0, 1j]))
        assert np.array_equal(BASIS.T, np.diag([1j, -2j, 1j]))
        assert np.array_equal(BASIS.spin_z, -1j * np.diag([1.0, 0.0, -1.0]))
        assert np.array_equal(BASIS.R, np.array([[0, 0, 1j], [0, 0, 0], [1j, 0, 0]]))

    def test_spin_proportionality(self):
        s2 = np.sqrt(2.0)
        assert np.linalg.norm(BASIS.sigma_x - s2 * BASIS.spin_x) <= 1e-15
        assert np.linalg.norm(BASIS.sigma_y - s2 * BASIS.spin_y) <= 1e-15
        assert np.array_equal(BASIS.sigma_z, BASIS.spin_z)

    def test_all_skew_hermitian_traceless(self):
        for name, m in BASIS.named().items():
            if name == "i_identity":
                continue
            assert is_skew_hermitian(m), name
            assert is_traceless(m), name

    def test_mutual_orthogonality(self):
        named = list(BASIS.named().items())
        for i, (na, a) in enumerate(named):
            for nb, b in named[i + 1:]:
                assert abs(hs_inner(a, b)) <= 1e-12, (na, nb)

    def test_subspace_dimensions(self):
        # rotation block 3, complement 6, together all of u(3)
        assert len(BASIS.sigma_basis()) == 3
        assert len(BASIS.complement_basis()) == 6

    def test_spin_square_sum(self):
        # algebraically 2 * identity; a few ulps of sqrt(2) roundoff survive
        assert spin_square_sum_defect(BASIS) <= 1e-14

    def test_expand_roundtrip(self):
        rng = np.random.default_rng(9)
        coeffs = {name: float(c) for name, c in
                  zip(BASIS.named(), rng.standard_normal(9)) if abs(c) > 1e-6}
        got, defect = BASIS.expand(BASIS.combine(coeffs))
        assert defect <= 1e-12
        for name, c in coeffs.items():
            assert abs(got[name] - c) <= 1e-10


class TestStructureTables:
    def setup_method(self):
        self.reports = verify_structure_tables()
        self.by_id = {r.table_id: r for r in self.reports}

    def test_shape_of_reports(self):
        counts = {r.table_id: len(r.entries) for r in self.reports}
        assert counts == {"commutator-SS": 3, "commutator-Sperp-Sperp": 10,
                          "commutator-Sperp-S": 15, "anticommutator-SS": 6,
                          "anticommutator-Sperp-Sperp": 15, "anticommutator-Sperp-S": 15}

    def test_rotation_bracket_relations_exact(self):
        rep = self.by_id["commutator-SS"]
        assert rep.passed and rep.max_residual == 0.0

    def test_matched_cells_within_tolerance(self):
        for rep in self.reports:
            for e in rep.entries:
                if e.matched:
                    assert e.residual <= 1e-12, (rep.table_id, e.lhs, e.rhs)

    def test_every_cell_expands_in_named_basis(self):
        for rep in self.reports:
            for e in rep.entries:
                assert e.expansion_defect <= 1e-12

    def test_mismatch_set_is_the_documented_one(self):
        assert discrepancy_summary(self.reports) == {
            k: [tuple(c) for c in sorted(v)] or []
            for k, v in ((r.table_id, sorted(KNOWN_SIGN_DISCREPANCIES[r.table_id]))
                         for r in self.reports)}

    def test_mismatches_are_exact_sign_flips(self):
        assert matches_known_discrepancies(self.reports)

    def test_every_flagged_cell_involves_sigma_z(self):
        for rep in self.reports:
            for e in rep.mismatched():
                touches = "sigma_z" in (e.lhs, e.rhs) or "sigma_z" in e.claimed
                assert touches, (rep.table_id, e.lhs, e.rhs)

    def test_reports_serialize(self):
        import json
        payload = json.dumps([r.to_dict() for r in self.reports])
        assert "recomputed" in payload


class TestSubspaceRelations:
    def setup_method(self):
        self.report = verify_subspace_relations()

    def test_all_pass(self):
        assert self.report.passed

    def test_dimensions(self):
        dims = {r.relation: r.computed_dim for r in self.report.relations}
        assert dims["[S,S] = S"] == 3
        assert dims["i{S,S} = S_perp"] == 6
        assert dims["[S_perp,S] = S_perp mod identity"] == 5
        assert dims["[S_perp,S_perp] = S"] == 3
        for name in "RQTVU":
            assert dims[f"ad_S orbit of {name} = S_perp mod identity"] == 5

    def test_containment_residuals(self):
        for r in self.report.relations:
            assert r.containment_residual <= 1e-10
