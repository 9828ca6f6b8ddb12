"""Command-line interface.

Subcommands: verify-bounds, simulate, analyze, qm-predict,
adversary-search, sweep.  Angles on the command line are degrees.
Every command that writes an output also writes a manifest JSON
(``<out>.manifest.json``) recording the exact argument vector, seeds
and tool version; re-running the stored argv reproduces all outputs
byte for byte at any worker count.

Exit codes: 0 success (bounds hold or are flagged not-guaranteed),
1 input error, 2 verified theorem breach (a passing assumption
validator together with a broken bound; never reachable for a correct
core).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adversary import SearchConfig, get_family, search
from .bounds import (
    EffectiveCorrelationMode,
    SettingsQuad,
    effective_chsh,
)
from .estimator import analysis_report, qm_epsilon_identity, read_counts_csv
from .model import BellSimError, ValidationError
from .modelio import load_model
from .qm import (
    QMModelParams,
    u_eff_cap,
    u_eff_cap_holds,
    violation_lhs,
)
from . import qm
from .sampler import ExperimentPlan, run_experiment, write_counts_csv, write_run_sidecar

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_THEOREM_BREACH = 2


def _parse_quad(s: str) -> SettingsQuad:
    parts = [p.strip() for p in s.split(",")]
    if len(parts) != 4:
        raise ValidationError(
            f"--quad needs four comma-separated degrees \"a,a',b,b'\", got {s!r}")
    try:
        return SettingsQuad.from_degrees(*(float(p) for p in parts))
    except ValueError as exc:
        raise ValidationError(f"bad --quad value {s!r}: {exc}") from exc


def _parse_values(s: str) -> list[float]:
    try:
        vals = [float(p) for p in s.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"bad numeric list {s!r}") from exc
    if not vals:
        raise ValidationError(f"empty numeric list {s!r}")
    return vals


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_manifest(args, out_path: Path, outputs: list[str]) -> None:
    doc = {
        "schema_version": 1,
        "tool": "bellsim",
        "version": __version__,
        "numpy_version": np.__version__,
        "argv": args._argv,
        "outputs": outputs,
    }
    manifest_path = Path(str(out_path) + ".manifest.json")
    manifest_path.write_text(_json_dump(doc), encoding="utf-8")


def _qm_params_from_args(args) -> QMModelParams:
    eta2 = args.eta2 if args.eta2 is not None else args.eta
    f2 = args.f2 if args.f2 is not None else args.f
    return QMModelParams(eta1=args.eta, eta2=eta2, f1=args.f, f2=f2, F=args.F)


def _add_qm_flags(p):
    p.add_argument("--eta", type=float, required=True,
                   help="detector efficiency (photon 1; photon 2 too unless --eta2)")
    p.add_argument("--eta2", type=float, default=None)
    p.add_argument("--f", type=float, required=True,
                   help="collimator factor (photon 1; photon 2 too unless --f2)")
    p.add_argument("--f2", type=float, default=None)
    p.add_argument("--F", type=float, required=True, help="source correlation strength")


def cmd_verify_bounds(args) -> int:
    model = load_model(args.model)
    quad = _parse_quad(args.quad)
    mode = EffectiveCorrelationMode.from_string(args.mode)
    report = effective_chsh(model, quad, mode)
    doc = report.to_json_dict(verbosity=args.verbose)
    if not report.bound_guaranteed:
        doc["note"] = "assumptions violated; bound not guaranteed"
    text = _json_dump(doc)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        _write_manifest(args, out, [out.name])
    return EXIT_THEOREM_BREACH if report.theorem_breach else EXIT_OK


def cmd_simulate(args) -> int:
    if args.model:
        source = load_model(args.model)
    else:
        for flag in ("eta", "f", "F"):
            if getattr(args, flag) is None:
                raise ValidationError(
                    "simulate needs either --model FILE or all of --eta --f --F")
        source = _qm_params_from_args(args)
    quad = _parse_quad(args.quad)
    plan = ExperimentPlan(quad=quad, trials_per_pair=args.trials, seed=args.seed)
    result = run_experiment(source, plan, workers=args.workers)
    out = Path(args.out)
    write_counts_csv(result.records, out)
    sidecar = Path(str(out) + ".run.json")
    write_run_sidecar(result, sidecar)
    _write_manifest(args, out, [out.name, sidecar.name])
    return EXIT_OK


def _analysis_csv(report: dict) -> str:
    lines = ["label,E_eff,stderr,coincidences"]
    for label in ("ab", "ab'", "a'b", "a'b'"):
        e = report["per_pair"][label]
        lines.append(f"{label},{e['E_eff']!r},{e['stderr']!r},{e['coincidences']}")
    lines.append(f"U_eff,{report['U_eff']!r},{report['stderr']!r},")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    totals = None
    if args.emitted_totals:
        totals_doc = json.loads(Path(args.emitted_totals).read_text(encoding="utf-8"))
        totals = {str(k): int(v) for k, v in totals_doc.items()}
    recs = read_counts_csv(args.counts, emitted_totals=totals)
    report = analysis_report(recs)
    text = _analysis_csv(report) if args.format == "csv" else _json_dump(report)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        _write_manifest(args, out, [out.name])
    return EXIT_OK


def cmd_qm_predict(args) -> int:
    params = _qm_params_from_args(args)
    quad = _parse_quad(args.quad)
    per_pair = {}
    for label, x, y, _sign in quad.pairs():
        per_pair[label] = {
            "E": qm.correlation(params, x, y),
            "E_eff": qm.effective_correlation(params, x, y),
            "joint": {f"{r:+d},{q:+d}": qm.joint_probability(params, x, y, r, q)
                      for r in (1, -1) for q in (1, -1)},
        }
    doc = {
        "schema_version": 1,
        "params": {"eta1": params.eta1, "eta2": params.eta2,
                   "f1": params.f1, "f2": params.f2, "F": params.F},
        "quad_degrees": list(quad.to_degrees()),
        "coincidence_probability": qm.coincidence_probability(params),
        "per_pair": per_pair,
        "U": qm.chsh_value(params, quad),
        "U_eff": qm.effective_chsh_value(params, quad),
        "violation_lhs_at_pi_over_4": violation_lhs(params.F, math.pi / 4),
        "u_eff_cap": u_eff_cap(params),
        "u_eff_cap_holds": u_eff_cap_holds(params),
    }
    if args.format == "csv":
        lines = ["label,E,E_eff"]
        for label in ("ab", "ab'", "a'b", "a'b'"):
            e = per_pair[label]
            lines.append(f"{label},{e['E']!r},{e['E_eff']!r}")
        lines.append(f"U,{doc['U']!r},")
        lines.append(f"U_eff,,{doc['U_eff']!r}")
        text = "\n".join(lines) + "\n"
    else:
        text = _json_dump(doc)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        _write_manifest(args, out, [out.name])
    return EXIT_OK


def cmd_adversary_search(args) -> int:
    family = get_family(args.family)
    freeze = {}
    for item in args.freeze or []:
        if "=" not in item:
            raise ValidationError(f"--freeze takes name=value, got {item!r}")
        name, _, value = item.partition("=")
        try:
            freeze[name.strip()] = float(value)
        except ValueError as exc:
            raise ValidationError(f"bad --freeze value {item!r}") from exc
    config = SearchConfig(
        family=family, quad=_parse_quad(args.quad),
        mode=EffectiveCorrelationMode.from_string(args.mode),
        restarts=args.restarts, max_evals=args.max_evals, seed=args.seed,
        n_lambda=args.n_lambda, freeze=freeze)
    result = search(config, workers=args.workers)
    text = _json_dump(result.to_json_dict())
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        _write_manifest(args, out, [out.name])
    return EXIT_OK


def cmd_sweep(args) -> int:
    etas = _parse_values(args.eta_values)
    f12s = _parse_values(args.f12_values)
    quad = _parse_quad(args.quad)

    lines = ["eta,f12,F,n_pairs,u_eff_exact,u_eff_sampled,u_eff_stderr,"
             "u_sampled,epsilon_qm,u_eff_cap"]
    point_index = 0
    for eta in etas:
        for f12 in f12s:
            params = QMModelParams(eta1=eta, eta2=eta, f1=f12, f2=1.0, F=args.F)
            exact = qm.effective_chsh_value(params, quad)
            # Scale the emitted count so every point collects at least
            # --min-coincidences coincidences per setting pair.
            n_pairs = max(int(math.ceil(args.min_coincidences /
                                        params.eta12f12)), 1)
            point_seed = int(np.random.SeedSequence(
                entropy=args.seed, spawn_key=(point_index,)).generate_state(1)[0])
            plan = ExperimentPlan(quad=quad, trials_per_pair=n_pairs,
                                  seed=point_seed)
            result = run_experiment(params, plan, workers=args.workers)
            report = analysis_report(result.records)
            u_sampled = report["epsilon"]["U"]
            lines.append(
                f"{eta:.10g},{f12:.10g},{args.F:.10g},{n_pairs},"
                f"{exact!r},{report['U_eff']!r},{report['stderr']!r},"
                f"{u_sampled!r},{qm_epsilon_identity(params, exact)!r},"
                f"{u_eff_cap(params)!r}")
            point_index += 1
    out = Path(args.out)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(args, out, [out.name])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellsim",
        description="Simulate and analyze double-channel Bell experiments "
                    "with imperfect detection")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=False, formats=False):
        p.add_argument("-v", "--verbose", action="count", default=0)
        if needs_out:
            p.add_argument("--out", required=True, help="output file path")
        else:
            p.add_argument("--out", default=None, help="optional output file path")
        if formats:
            p.add_argument("--format", default="json", choices=["json", "csv"])

    p = sub.add_parser("verify-bounds",
                       help="exact bound verification for a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--quad", default="0,45,22.5,67.5")
    p.add_argument("--mode", default="solution1",
                   choices=["solution1", "solution2", "solution3"])
    common(p)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("simulate", help="Monte Carlo run producing a counts CSV")
    p.add_argument("--model", default=None, help="SLHV model JSON file")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--eta2", type=float, default=None)
    p.add_argument("--f", type=float, default=None)
    p.add_argument("--f2", type=float, default=None)
    p.add_argument("--F", type=float, default=None)
    p.add_argument("--quad", default="0,45,22.5,67.5")
    p.add_argument("--trials", type=int, required=True,
                   help="emitted pairs per setting pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    common(p, needs_out=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="estimate U_eff (and eps) from a counts CSV")
    p.add_argument("--counts", required=True)
    p.add_argument("--emitted-totals", default=None,
                   help="JSON file mapping pair_label to emitted totals "
                        "(for coincidence-only CSVs)")
    common(p, formats=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("qm-predict", help="exact QM quantities for one quad")
    _add_qm_flags(p)
    p.add_argument("--quad", default="0,45,22.5,67.5")
    common(p, formats=True)
    p.set_defaults(func=cmd_qm_predict)

    p = sub.add_parser("adversary-search",
                       help="derivative-free search for |U_eff| > 2 models")
    p.add_argument("--family", required=True)
    p.add_argument("--quad", default="0,45,22.5,67.5")
    p.add_argument("--mode", default="solution1",
                   choices=["solution1", "solution2", "solution3"])
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-evals", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-lambda", type=int, default=720)
    p.add_argument("--freeze", action="append", default=None,
                   metavar="NAME=VALUE")
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_adversary_search)

    p = sub.add_parser("sweep",
                       help="efficiency sweep: exact vs sampled U_eff per point")
    p.add_argument("--eta-values", required=True, help="comma-separated")
    p.add_argument("--f12-values", required=True,
                   help="comma-separated products f1*f2 (applied as f1=f12, f2=1)")
    p.add_argument("--F", type=float, required=True)
    p.add_argument("--quad", default="0,45,22.5,67.5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-coincidences", type=float, default=1e4)
    p.add_argument("--workers", type=int, default=1)
    common(p, needs_out=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args._argv = argv
        return args.func(args)
    except BellSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
