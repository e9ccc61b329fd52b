"""``gridfreq`` command-line interface.

Exit codes: 0 success, 1 inconclusive test or tolerance breach, 2 malformed
input, 3 invalid network, 4 nominal stability test failed, 5 simulation
diverged.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .netmodel import (
    InvariantError,
    ScenarioError,
    interaction_spectrum,
    load_network,
    validate_torque_matrix,
)

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_SCHEMA, EXIT_INVARIANT, EXIT_NOMINAL, EXIT_DIVERGED = range(6)


class RunRecorder:
    """Collects emitted files and writes ``manifest.json`` last."""

    def __init__(self, command: str, out: str | Path, inputs: dict, params: dict):
        self.command = command
        self.out = Path(out)
        self.inputs = inputs
        self.params = params
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        self.files.append(p)
        return p

    def write_text(self, name: str, text: str) -> Path:
        p = self.path(name)
        p.write_text(text)
        return p

    def finish(self, exit_code: int) -> int:
        entries = []
        for p in self.files:
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            entries.append({"file": p.name, "sha256": digest})
        manifest = {
            "command": self.command,
            "version": __version__,
            "inputs": self.inputs,
            "parameters": self.params,
            "exit_code": exit_code,
            "outputs": entries,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        return exit_code


def _fail_input(exc: Exception) -> int:
    if isinstance(exc, InvariantError):
        print("invalid network:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_INVARIANT
    print(f"input error: {exc}", file=sys.stderr)
    return EXIT_SCHEMA


# -- validate -------------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        net = load_network(args.scenario)
    except (ScenarioError, InvariantError) as exc:
        return _fail_input(exc)
    report = validate_torque_matrix(net.torque)
    doc = {
        "scenario": str(args.scenario),
        "areas": net.n,
        "mode": net.mode,
        "torque": report.as_dict(),
        "interaction_spectrum": [float(v) for v in interaction_spectrum(net.torque)],
        "valid": True,
    }
    print(f"{args.scenario}: valid {net.mode} network with {net.n} areas")
    for name, ok in report.checks.items():
        print(f"  {name:<18} {'pass' if ok else 'fail'}")
    print(f"  lambda_min         {report.lambda_min:.3e}")
    if args.out:
        rec = RunRecorder("validate", args.out, {"scenario": str(args.scenario)}, {})
        rec.write_text("validation.json", json.dumps(doc, indent=2) + "\n")
        return rec.finish(EXIT_OK)
    return EXIT_OK


# -- analyze --------------------------------------------------------------------

def cmd_analyze(args) -> int:
    from .designkit import DesignInputError, run_design_procedure
    from .tfalg import load_nominal_model

    nominal = "nominal_params.json" if args.nominal == "from-params" else args.nominal
    try:
        net = load_network(args.scenario)
        ms = load_nominal_model(nominal, xi=args.xi)
        if net.mode != "ace_lfc":
            raise ScenarioError(f"analysis needs an ace_lfc scenario, got {net.mode}")
    except (ScenarioError, InvariantError) as exc:
        return _fail_input(exc)
    except ValueError as exc:
        return _fail_input(ScenarioError(str(exc)))
    try:
        report = run_design_procedure(net, ms, oracle=args.oracle)
    except DesignInputError as exc:
        return _fail_input(ScenarioError(str(exc)))
    rec = RunRecorder("analyze", args.out,
                      {"scenario": str(args.scenario), "nominal": str(args.nominal)},
                      {"xi": ms.xi, "oracle": bool(args.oracle)})
    text = report.to_text()
    rec.write_text("report.json", report.to_json())
    rec.write_text("report.txt", text)
    print(text, end="")
    if not report.nominal_pass:
        code = EXIT_NOMINAL
    else:
        code = EXIT_OK if report.overall else EXIT_INCONCLUSIVE
    return rec.finish(code)


# -- simulate -------------------------------------------------------------------

_MODE_OF = {"swing_pi": "swing", "hierarchical": "hierarchical", "ace_lfc": "lfc"}


def cmd_simulate(args) -> int:
    from .plotting import line_plot
    from .sim import AuditError, ScatteringConfig, SimulationError, energy_audit, simulate

    try:
        net = load_network(args.scenario)
    except (ScenarioError, InvariantError) as exc:
        return _fail_input(exc)
    mode = args.mode or _MODE_OF[net.mode]
    if _MODE_OF[net.mode] != mode:
        return _fail_input(ScenarioError(
            f"mode {mode} inconsistent with the scenario's {net.mode} control block"))
    if args.aggregation:
        net = net.replace(aggregation=args.aggregation)
    loads = net.loads
    if args.loads is not None:
        from .netmodel import default_load_scenario
        loads = (loads or default_load_scenario()).with_magnitude(args.loads)
    if loads is not None and args.horizon is not None and args.horizon > loads.horizon:
        from .netmodel import LoadScenario
        loads = LoadScenario(loads.steps, args.horizon)
    kw = {"loads": loads, "step": args.step, "horizon": args.horizon}
    try:
        if mode == "hierarchical":
            kw["scattering"] = ScatteringConfig.from_network(
                net, enabled=False if args.no_scattering else None, alpha=args.alpha)
        trace = simulate(net, mode, **kw)
    except SimulationError as exc:
        return _fail_input(ScenarioError(str(exc)))

    rec = RunRecorder("simulate", args.out, {"scenario": str(args.scenario)},
                      {"mode": mode, "step": args.step, "horizon": args.horizon,
                       "load_magnitude": args.loads, "alpha": args.alpha,
                       "scattering": not args.no_scattering, "record_every": args.record_every,
                       "aggregation": net.aggregation if mode == "hierarchical" else None})
    trace.to_csv(rec.path("trace.csv"), every=args.record_every)
    summary = trace.summary()
    if args.audit:
        try:
            audit = energy_audit(trace)
            rec.write_text("audit.json", audit.to_json())
            summary["audit_passed"] = audit.passed
        except AuditError as exc:
            summary["audit_passed"] = None
            summary["audit_error"] = str(exc)
    if args.plot:
        line_plot(rec.path("omega.svg"), trace.t, trace.omega, "frequency deviation")
        if np.isfinite(trace.ace).all():
            line_plot(rec.path("ace.svg"), trace.t, trace.ace, "area control error")
    rec.write_text("summary.json", json.dumps(summary, indent=2) + "\n")
    for k, v in summary.items():
        print(f"{k:<26} {v:.6g}" if isinstance(v, float) else f"{k:<26} {v}")
    return rec.finish(EXIT_OK if trace.completed else EXIT_DIVERGED)


# -- domain ---------------------------------------------------------------------

def cmd_domain(args) -> int:
    from .gfv import nominal_stability_test, sample_stable_domain
    from .tfalg import load_nominal_model

    try:
        ms = load_nominal_model(args.nominal, xi=0.5)
        spectrum = None
        if args.spectrum_from:
            spectrum = interaction_spectrum(load_network(args.spectrum_from).torque)
    except (ScenarioError, InvariantError) as exc:
        return _fail_input(exc)
    except ValueError as exc:
        return _fail_input(ScenarioError(str(exc)))
    x0, x1, y0, y1 = args.window
    try:
        grid = sample_stable_domain(ms.h_n, (x0, x1), (y0, y1), args.resolution)
    except ValueError as exc:
        return _fail_input(ScenarioError(str(exc)))
    rec = RunRecorder("domain", args.out,
                      {"nominal": str(args.nominal), "spectrum_from": args.spectrum_from},
                      {"window": list(args.window), "resolution": args.resolution})
    grid.to_csv(rec.path("domain.csv"))
    markers = [] if spectrum is None else [l for l in spectrum if abs(l) > 1e-9]
    grid.to_svg(rec.path("domain.svg"), markers)
    code = EXIT_OK
    if spectrum is not None:
        result = nominal_stability_test(ms.h_n, spectrum)
        rec.write_text("membership.json", json.dumps(result.as_list(), indent=2) + "\n")
        for v in result.verdicts:
            print(f"  lambda = {v.eigenvalue:>9.4f}  {v.status}")
        code = EXIT_OK if result.passed else EXIT_INCONCLUSIVE
    print(f"stable-domain grid {len(grid.xs)}x{len(grid.ys)}, "
          f"{100 * grid.inside.mean():.2f}% of the window inside")
    return rec.finish(code)


# -- reproduce ------------------------------------------------------------------

def cmd_reproduce(args) -> int:
    from .reproduce import compare

    cmp = compare(args.table)
    rec = RunRecorder("reproduce", args.out, {"table": args.table}, {})
    text = cmp.to_text()
    rec.write_text(f"reproduce_{args.table}.txt", text)
    rec.write_text(f"reproduce_{args.table}.json", cmp.to_json())
    print(text, end="")
    return rec.finish(EXIT_OK if cmp.ok else EXIT_INCONCLUSIVE)


def build_parser() -> argparse.ArgumentParser:
    from .reproduce import TABLE_IDS

    parser = argparse.ArgumentParser(
        prog="gridfreq",
        description="Stability analysis and simulation of decentralized multi-area frequency control.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.add_argument("--out", default=None, help="directory for validation.json and manifest")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="run the nominal, robust and matching tests")
    p.add_argument("scenario")
    p.add_argument("--xi", type=float, default=None, help="model-matching index (default: from model file)")
    p.add_argument("--nominal", default="eq22.json",
                   help='nominal model file, or "from-params" for the bundled physical parameters')
    p.add_argument("--oracle", action="store_true", help="append the closed-loop spectral abscissa")
    p.add_argument("--out", default="gridfreq_out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="integrate a scenario in time")
    p.add_argument("scenario")
    p.add_argument("--mode", choices=("swing", "hierarchical", "lfc"))
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--loads", type=float, default=None, metavar="DP",
                   help="override every load-step magnitude (p.u.)")
    p.add_argument("--alpha", type=float, default=None, help="scattering parameter override")
    p.add_argument("--no-scattering", action="store_true")
    p.add_argument("--aggregation", choices=("mean", "sum"), default=None,
                   help="how the global integrator combines area frequencies")
    p.add_argument("--audit", action="store_true", help="write energy audit")
    p.add_argument("--plot", action="store_true", help="write SVG line plots")
    p.add_argument("--record-every", type=int, default=10, metavar="K",
                   help="keep every K-th sample in trace.csv")
    p.add_argument("--out", default="gridfreq_out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("domain", help="sample the stable domain of a nominal model")
    p.add_argument("nominal")
    p.add_argument("--window", type=float, nargs=4, default=(-30.0, 2.0, -30.0, 30.0),
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--resolution", type=int, default=300)
    p.add_argument("--spectrum-from", default=None, metavar="SCENARIO")
    p.add_argument("--out", default="gridfreq_out")
    p.set_defaults(func=cmd_domain)

    p = sub.add_parser("reproduce", help="compare computed results with a reference table")
    p.add_argument("table", choices=TABLE_IDS)
    p.add_argument("--out", default="gridfreq_out")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
