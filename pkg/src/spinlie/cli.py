"""Command-line front door.

Subcommands: verify-tables, cartan, controllability, observability,
simulate, equivalence, identify.  Structured reports are JSON, time series
are CSV, and every run writes a manifest next to its outputs.  Exit codes
form a stable scripting contract: 0 success / affirmative verdict,
2 negative verdict, 3 defined special outcome, 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (EquivalenceReport, UnphysicalPartnerError, equivalent_partner,
                       propagate, random_schedule, verify_equivalence)
from .identify import ExperimentRecord, IdentifyConfig, IdentifyError, identify
from .lie import controllability_verdict, observability_verdict
from .model import load_model
from .operators import matrix_to_json
from .parity import build_parity_decomposition, verify_cartan_relations, verify_product_identity
from .su3 import (KNOWN_SIGN_DISCREPANCIES, discrepancy_summary,
                  matches_known_discrepancies, spin_square_sum_defect,
                  verify_structure_tables, verify_subspace_relations)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2
EXIT_SPECIAL = 3


def _write_manifest(out_dir: Path, command: str, seed, config_path, outputs) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config_path": str(config_path) if config_path else None,
        "seed": seed,
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "output_paths": [str(p) for p in outputs],
    }
    with open(out_dir / f"{command}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)


def _dump_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


def cmd_verify_tables(args) -> int:
    reports = verify_structure_tables(tolerance=args.tolerance)
    payload = {
        "tables": [r.to_dict() for r in reports],
        "mismatched_cells": {k: [list(c) for c in v]
                             for k, v in discrepancy_summary(reports).items()},
        "documented_sign_flips": {k: sorted(list(map(list, v)))
                                  for k, v in KNOWN_SIGN_DISCREPANCIES.items()},
        "spin_square_sum_defect": spin_square_sum_defect(),
        "subspaces": verify_subspace_relations().to_dict(),
    }
    as_documented = matches_known_discrepancies(reports) if args.tolerance <= 1e-10 else None
    payload["matches_documented_discrepancies"] = as_documented
    out_dir = Path(args.out_dir)
    outputs = []
    if args.json:
        _dump_json(Path(args.json), payload)
        outputs.append(args.json)
    for rep in reports:
        mism = rep.mismatched()
        line = f"{rep.table_id}: {len(rep.entries)} cells, max residual {rep.max_residual:.3e}"
        if mism:
            line += f", {len(mism)} sign-flagged: " + ", ".join(
                f"({e.lhs},{e.rhs})" for e in mism)
        print(line)
    print(f"spin square-sum defect: {payload['spin_square_sum_defect']:.3e}")
    _write_manifest(out_dir, "verify-tables", None, None, outputs)
    if as_documented is None:
        # nonstandard tolerance: report only, verdict by residuals alone
        return EXIT_OK if all(r.passed for r in reports) else EXIT_NEGATIVE
    if as_documented:
        print("all cells verified; flagged cells match the documented sign flips")
        return EXIT_OK
    print("UNEXPECTED table discrepancies (beyond the documented sign flips)")
    return EXIT_NEGATIVE


def cmd_cartan(args) -> int:
    decomp = build_parity_decomposition(args.n_spins)
    report = verify_cartan_relations(decomp, mode=args.mode,
                                     n_samples=args.samples, seed=args.seed)
    payload = report.to_dict()
    payload["product_identity_max_residual"] = verify_product_identity(seed=args.seed)
    outputs = []
    if args.json:
        _dump_json(Path(args.json), payload)
        outputs.append(args.json)
    print(f"n_spins={report.n_spins} even dim {report.even_dim}, odd dim {report.odd_dim}")
    for rel in report.relations:
        print(f"  {rel.relation}: {rel.pairs_checked} pairs, "
              f"{rel.violations} violations, max {rel.max_forbidden_norm:.3e}")
    print(f"closed class: {report.closed_class}")
    _write_manifest(Path(args.out_dir), "cartan", args.seed, None, outputs)
    return EXIT_OK if report.passed else EXIT_NEGATIVE


def cmd_controllability(args) -> int:
    model = load_model(args.model)
    report = controllability_verdict(model, tol=args.tolerance)
    outputs = []
    if args.json:
        _dump_json(Path(args.json), report.to_dict())
        outputs.append(args.json)
    print(f"dimension {report.dimension} (ambient su({report.ambient_dim}) "
          f"has dimension {report.ambient_dim ** 2 - 1})")
    print("controllable" if report.controllable else "not controllable")
    for note in report.notes:
        print(f"note: {note}")
    _write_manifest(Path(args.out_dir), "controllability", None, args.model, outputs)
    return EXIT_OK if report.controllable else EXIT_NEGATIVE


def cmd_observability(args) -> int:
    model = load_model(args.model)
    report = observability_verdict(model, tol=args.tolerance)
    outputs = []
    if args.json:
        _dump_json(Path(args.json), report.to_dict(include_vperp=args.emit_vperp))
        outputs.append(args.json)
    print(f"observability space dimension {report.space_dim}; "
          f"complement dimension {report.vperp_basis.dimension}")
    print("observable" if report.observable else "not observable")
    for note in report.notes:
        print(f"note: {note}")
    _write_manifest(Path(args.out_dir), "observability", None, args.model, outputs)
    return EXIT_OK if report.observable else EXIT_NEGATIVE


def cmd_simulate(args) -> int:
    from .dynamics import ControlSchedule
    model = load_model(args.model)
    schedule = ControlSchedule.load(args.schedule)
    trace, _ = propagate(model, schedule, samples_per_segment=args.samples_per_segment)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    trace.save_csv(out)
    print(f"wrote {len(trace)} samples to {out}")
    _write_manifest(out.parent, "simulate", None, args.model, [out])
    return EXIT_OK


def cmd_equivalence(args) -> int:
    model = load_model(args.model)
    out_dir = Path(args.out_dir)
    rng = np.random.default_rng(args.seed)
    schedules = [random_schedule(rng) for _ in range(args.n_schedules)]

    try:
        partner = equivalent_partner(model)
    except UnphysicalPartnerError as exc:
        payload = {"partner_physical": False, "min_eigenvalue": exc.min_eigenvalue,
                   "partner_state": matrix_to_json(exc.partner_state)}
        _dump_json(out_dir / "equivalence.json", payload)
        print(f"partner state unphysical (min eigenvalue {exc.min_eigenvalue:.3e}); "
              "no physical equivalence partner exists for this initial state")
        _write_manifest(out_dir, "equivalence", args.seed, args.model,
                        [out_dir / "equivalence.json"])
        return EXIT_SPECIAL

    other = partner if not args.keep_state else partner.with_state(model.rho0)
    report: EquivalenceReport = verify_equivalence(model, other, schedules)
    payload = report.to_dict()
    payload["partner_physical"] = True
    payload["state_flipped"] = not args.keep_state
    outputs = [out_dir / "equivalence.json"]
    _dump_json(outputs[0], payload)

    if args.emit_plot_data:
        rows = ["schedule,t,component,model,value"]
        for k, sched in enumerate(schedules):
            tr_a, _ = propagate(model, sched)
            tr_b, _ = propagate(other, sched)
            for tr, tag in ((tr_a, "original"), (tr_b, "partner")):
                for t, m in zip(tr.times, tr.components()):
                    for comp, val in zip("xyz", m):
                        rows.append(f"{k},{t:.17g},{comp},{tag},{val:.17g}")
        plot_path = out_dir / "equivalence_traces.csv"
        plot_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        outputs.append(plot_path)

    print(f"max output deviation over {args.n_schedules} schedules: "
          f"{report.max_deviation:.3e} (tolerance {report.tolerance:.1e})")
    _write_manifest(out_dir, "equivalence", args.seed, args.model, outputs)
    return EXIT_OK if report.passed else EXIT_NEGATIVE


def cmd_identify(args) -> int:
    record = ExperimentRecord.load(args.data_dir)
    config = IdentifyConfig(n_starts=args.starts, seed=args.seed)
    try:
        result = identify(record, config)
    except IdentifyError as exc:
        print(f"identification failed: {exc}")
        return EXIT_ERROR
    outputs = []
    if args.json:
        _dump_json(Path(args.json), result.to_dict())
        outputs.append(args.json)
    print(f"gamma estimates: {result.gamma1_hat:.6f}, {result.gamma2_hat:.6f} "
          f"(up to permutation); |J| = {result.abs_j_hat:.6f}")
    for cand in result.candidates:
        phys = "physical" if cand.physical else f"unphysical (min eig {cand.min_eigenvalue:.2e})"
        print(f"  candidate J = {cand.j_signed:+.6f}: max misfit {cand.residual:.3e}, {phys}")
    for w in result.warnings:
        print(f"warning: {w}")
    _write_manifest(Path(args.out_dir), "identify", args.seed, args.data_dir, outputs)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinlie",
        description="Controllability, observability and identification toolkit "
                    "for a driven pair of coupled spin-1 particles")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-tables", help="recompute the su(3) structure tables")
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.add_argument("--json", help="write the full report to this path")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_verify_tables)

    p = sub.add_parser("cartan", help="verify the parity-grading closure relations")
    p.add_argument("--n-spins", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--mode", default="auto", choices=("auto", "exhaustive", "sampled"))
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_cartan)

    p = sub.add_parser("controllability", help="closure dimension and verdict")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--json")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_controllability)

    p = sub.add_parser("observability", help="observability space and verdict")
    p.add_argument("model")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--json")
    p.add_argument("--emit-vperp", action="store_true",
                   help="include the complement basis matrices in the JSON report")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_observability)

    p = sub.add_parser("simulate", help="propagate a model through a schedule")
    p.add_argument("model")
    p.add_argument("schedule")
    p.add_argument("--out", required=True, help="trace CSV path")
    p.add_argument("--samples-per-segment", type=int, default=16)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("equivalence", help="exchange-sign partner demonstration")
    p.add_argument("model")
    p.add_argument("--n-schedules", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keep-state", action="store_true",
                   help="negate the exchange without flipping the state "
                        "(control run; generically distinguishable)")
    p.add_argument("--emit-plot-data", action="store_true",
                   help="write tidy long-format CSV of both models' traces")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_equivalence)

    p = sub.add_parser("identify", help="fit parameters and the model class to a record")
    p.add_argument("data_dir", help="directory of schedule_*.json / trace_*.csv pairs")
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_identify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
