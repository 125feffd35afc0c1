"""Command line front end: generate, verify, classify, spectrum.

Reports are canonical JSON: keys are sorted, every float is rendered as
its shortest round-tripping decimal string, and anything nondeterministic
(wall-clock timings) lives under the single top-level key ``timings`` so
that two runs on the same input differ at most there.

Exit codes: 0 success (for classify, a certified pure verdict), 1
verification failure, 2 usage or parse problems, 3 a certified non-pure
verdict, 4 a verdict that is neither certified outcome.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Optional

from .bundleio import (
    canonical_json,
    complex_pair,
    emit_bundle,
    float_str,
    load_bundle,
)
from .errors import GmraFilterError, GridAlignmentError, ResolutionError
from .filters import (
    FilterMatrix,
    filter_equation_residual,
    generalized_filter_residual,
    make_journe_step,
    make_constant,
    make_haar,
    make_journe_family,
    make_shannon,
    support_violations,
)
from .gmra import intersection_report
from .lowpass import derive_journe
from .ruelle import (
    NOT_PURE_CERTIFIED,
    PURE_CERTIFIED,
    classify_purity,
    isometry_residual,
)
from .torus import GridSpec, rat_str

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_NOT_PURE = 3
EXIT_UNDECIDED = 4

GENERATOR_DEPTHS = {
    "haar": 4,
    "shannon": 4,
    "constant": 4,
    "journe_step": 2,
    "journe": 2,
}


def _write_text(out: Optional[str], text: str) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _interval_parts(intervals) -> list[list[str]]:
    return [[rat_str(a), rat_str(b)] for a, b in intervals.parts]


def _build_filter(args) -> tuple[FilterMatrix, dict]:
    name = args.generator
    depth = args.depth if args.depth is not None else GENERATOR_DEPTHS[name]
    provenance: dict = {"generator": name, "depth": depth}
    if name == "haar":
        filt = make_haar(depth=depth)
    elif name == "shannon":
        filt = make_shannon(depth=depth)
    elif name == "constant":
        filt = make_constant(depth=depth)
    elif name == "journe_step":
        filt = make_journe_step(depth=depth, half_turn_phases=args.half_turn_phases)
        provenance["half_turn_phases"] = args.half_turn_phases
    else:
        derivation = derive_journe(args.delta, grid=GridSpec(2, 56, depth))
        filt = make_journe_family(
            derivation.params, half_turn_phases=args.half_turn_phases
        )
        provenance.update(
            {
                "half_turn_phases": args.half_turn_phases,
                "delta": float_str(derivation.delta),
                "r": float_str(derivation.r),
                "r_off_block_budget": float_str(derivation.r1),
                "r_expansion_cap": float_str(derivation.r2),
                "interval_denominator": derivation.interval_denominator,
                "region": _interval_parts(derivation.region),
                "eps_smooth": rat_str(derivation.params.eps_smooth),
                "transition": derivation.params.transition,
            }
        )
    return filt, provenance


def cmd_generate(args) -> int:
    filt, provenance = _build_filter(args)
    _write_text(args.out, emit_bundle(filt, provenance))
    return EXIT_OK


def _equation_section(filt: FilterMatrix) -> tuple[dict, bool]:
    eq = filter_equation_residual(filt)
    sup = support_violations(filt)
    section = {
        "max_residual": float_str(eq.max_abs_residual),
        "witness_cell": eq.argmax_cell,
        "witness_pair": list(eq.argmax_pair),
        "per_pair": {
            f"{i},{j}": float_str(v) for (i, j), v in sorted(eq.per_pair.items())
        },
        "support": {
            "column_violations": [list(v) for v in sup.column],
            "dilated_row_violations": [list(v) for v in sup.dilated_row],
        },
    }
    clean = not sup.column and not sup.dilated_row
    return section, clean


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    filt, provenance = load_bundle(args.bundle)
    tol = args.tol
    section, support_clean = _equation_section(filt)
    ok = support_clean and float(section["max_residual"]) <= tol

    generalized = []
    for order in range(1, args.nmax + 1):
        try:
            rep = generalized_filter_residual(filt, order)
        except (ResolutionError, GridAlignmentError) as exc:
            generalized.append({"order": order, "skipped": str(exc)})
            continue
        generalized.append(
            {
                "order": order,
                "max_residual": float_str(rep.max_abs_residual),
                "witness_cell": rep.argmax_cell,
            }
        )
        ok = ok and rep.max_abs_residual <= tol

    iso = isometry_residual(filt, trials=args.trials, seed=args.seed)
    ok = ok and iso <= tol

    report = {
        "command": "verify",
        "bundle": args.bundle,
        "ok": ok,
        "tolerances": {"verify_tol": float_str(tol)},
        "filter_equation": section,
        "generalized_equation": generalized,
        "isometry": {
            "trials": args.trials,
            "seed": args.seed,
            "max_deviation": float_str(iso),
        },
        "provenance": provenance,
        "timings": {"total_s": time.perf_counter() - t0},
    }
    _write_text(args.out, canonical_json(report))
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def _field_section(fld) -> dict:
    return {
        f"component_{i}": [complex_pair(z) for z in fld.values[i]]
        for i in range(fld.values.shape[0])
    }


def _spectrum_rows(diag: dict) -> list[list[str]]:
    rows = []
    spectrum = diag["spectrum"]
    passing = diag["passing_flags"]
    for k in diag["spectrum_order"]:
        lam = complex(spectrum[k])
        rows.append(
            [
                float_str(lam.real),
                float_str(lam.imag),
                float_str(abs(lam)),
                "true" if bool(passing[k]) else "false",
            ]
        )
    return rows


def cmd_classify(args) -> int:
    t0 = time.perf_counter()
    filt, provenance = load_bundle(args.bundle)
    section, support_clean = _equation_section(filt)
    if not support_clean or float(section["max_residual"]) > args.verify_tol:
        report = {
            "command": "classify",
            "bundle": args.bundle,
            "ok": False,
            "status": "verification_failed",
            "filter_equation": section,
            "provenance": provenance,
            "timings": {"total_s": time.perf_counter() - t0},
        }
        _write_text(args.out, canonical_json(report))
        return EXIT_VERIFY_FAIL

    rep = intersection_report(
        filt,
        tol_eig=args.tol_eig,
        tol_res=args.tol_res,
        tol_norm=args.tol_norm,
        verify_tol=args.verify_tol,
    )
    verdict = rep.verdict
    diag = verdict.diagnostics
    cert = rep.certificate
    report = {
        "command": "classify",
        "bundle": args.bundle,
        "ok": True,
        "status": verdict.status,
        "tolerances": {
            "tol_eig": float_str(args.tol_eig),
            "tol_res": float_str(args.tol_res),
            "tol_norm": float_str(args.tol_norm),
            "verify_tol": float_str(args.verify_tol),
        },
        "filter_equation": section,
        "purity": {
            "status": verdict.status,
            "dimension": diag["dimension"],
            "eigenpairs": [
                {
                    "eigenvalue": complex_pair(p.eigenvalue),
                    "residual": float_str(p.residual),
                    "unit_norm_deviation": float_str(p.unit_norm_dev),
                    "unit_norm_ok": p.unit_norm_ok,
                    "field": _field_section(p.fld),
                }
                for p in verdict.eigenpairs
            ],
            "candidates_tested": [
                {
                    "eigenvalue": complex_pair(c["eigenvalue"]),
                    "residual": float_str(c["residual"]),
                    "block_deviation": float_str(c["block_deviation"]),
                    "passed": c["passed"],
                }
                for c in diag["candidates_tested"]
            ],
            "anomalies": list(diag["anomalies"]),
            "decay_probe": [float_str(x) for x in diag["decay_probe"]],
        },
        "spectrum": _spectrum_rows(diag),
        "certificate": None
        if cert is None
        else {
            "block_size": cert.block_size,
            "delta": float_str(cert.delta),
            "eps": float_str(cert.eps),
            "region": _interval_parts(cert.region),
            "sigma_min": float_str(cert.sigma_min),
            "off_block_max": float_str(cert.off_block_max),
            "overlap_measure": rat_str(cert.overlap_measure),
        },
        "intersection": {
            "equivalence": rep.equivalence,
            "narrative": rep.narrative,
            "dimension_caution": rep.dimension_caution,
        },
        "provenance": provenance,
        "timings": {"total_s": time.perf_counter() - t0},
    }
    if "martingale_max_dev" in diag:
        report["purity"]["martingale_max_dev"] = [
            float_str(x) for x in diag["martingale_max_dev"]
        ]
    _write_text(args.out, canonical_json(report))
    if verdict.status == PURE_CERTIFIED:
        return EXIT_OK
    if verdict.status == NOT_PURE_CERTIFIED:
        return EXIT_NOT_PURE
    return EXIT_UNDECIDED


def cmd_spectrum(args) -> int:
    filt, _ = load_bundle(args.bundle)
    try:
        verdict = classify_purity(
            filt,
            tol_eig=args.tol_eig,
            tol_res=args.tol_res,
            tol_norm=args.tol_norm,
            verify_tol=args.verify_tol,
        )
    except GmraFilterError as exc:
        print(f"gmrafilters: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAIL
    lines = ["eigenvalue_re,eigenvalue_im,modulus,passes_eigen_test"]
    lines.extend(",".join(row) for row in _spectrum_rows(verdict.diagnostics))
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _add_classify_tolerances(sub) -> None:
    sub.add_argument("--tol-eig", type=float, default=1e-8)
    sub.add_argument("--tol-res", type=float, default=1e-9)
    sub.add_argument("--tol-norm", type=float, default=1e-6)
    sub.add_argument("--verify-tol", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmrafilters",
        description="Generalized wavelet filter construction and analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a filter bundle")
    gen.add_argument(
        "generator", choices=sorted(GENERATOR_DEPTHS), help="filter family"
    )
    gen.add_argument("--depth", type=int, default=None, help="grid refinement depth")
    gen.add_argument(
        "--delta",
        type=float,
        default=0.1,
        help="requested expansion margin (journe only)",
    )
    gen.add_argument(
        "--half-turn-phases",
        action="store_true",
        help="realize the printed band phases as sign flips",
    )
    gen.add_argument("--out", default=None, help="output path (default stdout)")
    gen.set_defaults(func=cmd_generate)

    ver = sub.add_parser("verify", help="check the defining identities")
    ver.add_argument("bundle")
    ver.add_argument("--tol", type=float, default=1e-10)
    ver.add_argument("--nmax", type=int, default=3, help="highest identity order")
    ver.add_argument("--trials", type=int, default=20)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--out", default=None)
    ver.set_defaults(func=cmd_verify)

    cls = sub.add_parser("classify", help="purity verdict with certificate search")
    cls.add_argument("bundle")
    _add_classify_tolerances(cls)
    cls.add_argument("--out", default=None)
    cls.set_defaults(func=cmd_classify)

    spectrum = sub.add_parser("spectrum", help="adjoint spectrum as CSV")
    spectrum.add_argument("bundle")
    _add_classify_tolerances(spectrum)
    spectrum.add_argument("--out", default=None)
    spectrum.set_defaults(func=cmd_spectrum)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except GmraFilterError as exc:
        print(f"gmrafilters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"gmrafilters: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
