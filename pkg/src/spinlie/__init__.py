"""Numerical toolkit for a driven pair of coupled spin-1 particles:
Lie-algebra closures for controllability and observability verdicts, the
parity grading of su(9), exact piecewise-constant simulation of the state
flow, the exchange-sign equivalence of input-output behavior, and parameter
identification from magnetization records."""

__version__ = "0.1.0"

from .dynamics import (ControlSchedule, EquivalenceReport, MagnetizationTrace,
                       UnphysicalPartnerError, equivalent_partner, partner_state,
                       propagate, random_schedule, verify_adjoint_identity,
                       verify_equivalence, verify_split_dynamics)
from .identify import (ExperimentRecord, IdentificationResult, IdentifyConfig,
                       IdentifyError, MomentEstimateError, generate_record,
                       identify, moment_gamma_estimate,
                       vandermonde_distinguishability)
from .lie import (ClosureError, ClosureReport, ObservabilityReport, ad_orbit,
                  controllability_verdict, lie_closure, observability_verdict)
from .model import (InvalidStateError, SpinPairModel, build_controls, build_drift,
                    check_density_matrix, collective_observables, hamiltonian,
                    load_model, magnetization, mixed_random_density_matrix,
                    model_from_dict, model_to_dict, random_density_matrix,
                    save_model, thermal_density_matrix)
from .operators import (OperatorSpan, anticommutator, commutator, expm_skew,
                        hs_inner, is_hermitian, is_skew_hermitian, is_traceless,
                        matrix_from_json, matrix_to_json, span_insert, tensor)
from .parity import (CartanReport, ParityDecomposition, build_parity_decomposition,
                     project, verify_cartan_relations, verify_product_identity)
from .su3 import (KNOWN_SIGN_DISCREPANCIES, Su3Basis, TableReport, build_su3_basis,
                  spin_square_sum_defect, verify_structure_tables,
                  verify_subspace_relations)

__all__ = [name for name in dir() if not name.startswith("_")]
