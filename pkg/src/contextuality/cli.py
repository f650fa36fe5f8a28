"""Command-line entry point.

    contextuality bounds --inequality eq7
    contextuality simulate --inequality eq7 --visibility 0.7 --shots 100000 --seed 42

Exit codes: 0 success, 1 invalid input, 2 internal consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys

import numpy as np

from contextuality import apparatus, experiment, nchv, pmsquare
from contextuality.errors import ConsistencyError, DegenerateBranchError, InvalidInputError

SUBCOMMANDS = ("bounds", "ideal", "ks-check", "simulate", "sweep-visibility",
               "verify-apparatus", "chsh")
SEED_ENV = "CONTEXTUALITY_SEED"
DEFAULTS = {
    "inequality": "eq7",
    "shots": 100_000,
    "seed": 42,
    "visibility": 1.0,
    "misalignment": 0.0,
    "jitter": 0.0,
    "mode": "abstract",
    "format": "json",
    "output": None,
    "workers": 1,
    "points": 21,
}


_HELP = {
    "bounds": "noncontextual bound by exhaustive enumeration",
    "ideal": "exact quantum value at the configured visibility",
    "ks-check": "parity-contradiction check over all assignments",
    "simulate": "Monte Carlo estimate with finite shots and setting noise",
    "sweep-visibility": "exact values and CHSH on a visibility grid",
    "verify-apparatus": "compare interferometer schemes with abstract contexts",
    "chsh": "CHSH value at optimal settings",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with the same keys as the flags")
    common.add_argument("--inequality", choices=["eq6", "eq7"])
    common.add_argument("--shots", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--visibility", type=float)
    common.add_argument("--misalignment", type=float, help="spin-analyzer cone half-angle (rad)")
    common.add_argument("--jitter", type=float, help="path phase jitter std (rad)")
    common.add_argument("--mode", choices=["abstract", "apparatus"])
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--workers", type=int)
    common.add_argument("--points", type=int, help="grid size for sweep-visibility")
    common.add_argument("--deterministic", action="store_true",
                        help="omit the timestamp so identical inputs give identical bytes")

    parser = _Parser(prog="contextuality",
                     description="Noncontextual bounds and noisy simulation of spin-path contextuality tests.",
                     epilog="Exit codes: 0 success, 1 invalid input, 2 internal consistency failure.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=_HELP[name])
    return parser


def resolve_config(args: argparse.Namespace, environ=None) -> dict:
    """Defaults < CONTEXTUALITY_SEED < --config file < explicit flags."""
    environ = os.environ if environ is None else environ
    cfg = dict(DEFAULTS)
    if environ.get(SEED_ENV):
        try:
            cfg["seed"] = int(environ[SEED_ENV])
        except ValueError:
            raise InvalidInputError(f"{SEED_ENV} must be an integer") from None
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise InvalidInputError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    cfg["inequality"] = pmsquare.Inequality.parse(cfg["inequality"]).value
    cfg["mode"] = experiment.Mode.parse(cfg["mode"]).value
    if cfg["format"] not in ("json", "csv"):
        raise InvalidInputError("format must be json or csv")
    for key in ("shots", "seed", "workers", "points"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool):
            raise InvalidInputError(f"{key} must be an integer")
    if cfg["shots"] < 1 or cfg["workers"] < 1 or cfg["points"] < 2:
        raise InvalidInputError("shots and workers must be >= 1, points >= 2")
    if not 0 <= cfg["seed"] < 2**64:
        raise InvalidInputError("seed must be a 64-bit unsigned integer")
    cfg["command"] = args.command
    return cfg


def _noise(cfg) -> experiment.NoiseModel:
    return experiment.NoiseModel(float(cfg["visibility"]), float(cfg["misalignment"]),
                                 float(cfg["jitter"]))


# ------------------------------------------------------------ subcommands


def cmd_bounds(cfg):
    which = pmsquare.Inequality.parse(cfg["inequality"])
    rep = nchv.bound_report(which)
    results = {
        "inequality": which.value,
        "bound": rep.bound,
        "constrained": rep.constrained,
        "assignments_searched": rep.searched,
        "witness": rep.witnesses[0].as_dict(),
        "witness_count": len(rep.witnesses),
        "table": [dict(a.as_dict(), value=nchv.nchv_value(a, which)) for a in rep.witnesses],
    }
    if which is pmsquare.Inequality.REDUCED:
        control = nchv.bound_report(which, constrained=False)
        results["negative_control"] = {
            "description": "same inequality maximised over all 64 assignments",
            "bound": control.bound,
            "assignments_searched": control.searched,
        }
    return results


def cmd_ideal(cfg):
    rho = experiment.werner_state(float(cfg["visibility"]))
    rows = [{
        "context": c.id,
        "observables": "*".join(lbl.value for lbl in c.labels),
        "coefficient": c.coefficient,
        "expectation": pmsquare.context_expectation(rho, c),
    } for c in pmsquare.contexts()]
    return {
        "visibility": float(cfg["visibility"]),
        "eq6": pmsquare.ideal_inequality_value(rho, "eq6"),
        "eq7": pmsquare.ideal_inequality_value(rho, "eq7"),
        "bound_eq6": nchv.nchv_bound("eq6"),
        "bound_eq7": nchv.nchv_bound("eq7"),
        "table": rows,
    }


def cmd_ks_check(cfg):
    rep = nchv.ks_contradiction_report()
    return {
        "assignments_searched": rep.searched,
        "satisfying_all_five": rep.satisfying_count,
        "max_satisfied": rep.max_satisfied,
        "lhs_product_always_one": rep.lhs_product_always_one,
        "rhs_product": rep.rhs_product,
        "table": [a.as_dict() for a in rep.max_witnesses],
    }


def cmd_simulate(cfg):
    run = experiment.RunConfig(cfg["inequality"], cfg["shots"], _noise(cfg), cfg["seed"],
                               cfg["mode"], cfg["workers"])
    rep = experiment.estimate_inequality(run)
    out = rep.as_dict()
    out["table"] = [dict(vars(t)) for t in rep.terms]
    return out


def cmd_sweep(cfg):
    rows = []
    for v in np.linspace(0.0, 1.0, cfg["points"]):
        v = float(v)
        row = {"visibility": v}
        for which in ("eq6", "eq7"):
            val = experiment.exact_value(which, v)
            row[which] = val
            row[f"{which}_violated"] = val > nchv.nchv_bound(which)
        rows.append(row)
    return {
        "critical_visibility": {w: experiment.critical_visibility(w) for w in ("eq6", "eq7")},
        "bounds": {w: nchv.nchv_bound(w) for w in ("eq6", "eq7")},
        "table": rows,
    }


def cmd_verify(cfg):
    probes = apparatus.tomographic_probes()
    reports = [apparatus.verify_against_abstract(apparatus.scheme_for_context(cid),
                                                 pmsquare.context(cid), probes)
               for cid in pmsquare.CONTEXT_IDS]
    front = apparatus.build_scheme_ii()
    prefix = {f: apparatus.shares_front_end(apparatus.build_scheme_iii(f), front)
              for f in ("XSYP", "YSXP")}
    bell = pmsquare.bell_state()
    mixer = {}
    for f in ("XSYP", "YSXP"):
        res = apparatus.port_distribution(apparatus.build_scheme_iii(f), bell)
        mixer[f] = sorted(set(round(v, 12) for v in res.mixer_success.values()))
    rows = [{
        "apparatus": r.apparatus,
        "context": r.context,
        "criterion": r.criterion,
        "max_joint_deviation": r.max_deviation,
        "max_gate_deviation": r.gated_deviation,
        "passed": r.passed,
    } for r in reports]
    return {
        "probes": len(probes),
        "tol": 1e-10,
        "all_passed": all(r.passed for r in reports) and all(prefix.values()),
        "scheme_iii_reuses_scheme_ii_front_end": prefix,
        "mixer_success_on_bell_state": mixer,
        "table": rows,
    }


def cmd_chsh(cfg):
    setting = experiment.optimal_chsh_setting()
    rows = []
    for v in np.linspace(0.1, 1.0, 10):
        v = float(v)
        rows.append({"visibility": v,
                     "chsh": experiment.chsh_value(experiment.werner_state(v), setting),
                     "two_sqrt2_v": experiment.CHSH_QUANTUM_MAX * v})
    implied = {}
    for key in ("chsh_trapped_ions", "chsh_single_neutrons"):
        v = experiment.visibility_for_chsh(experiment.REFERENCES[key]["value"])
        implied[key] = {"visibility": v, "eq7_at_visibility": experiment.exact_value("eq7", v)}
    return {
        "ideal": experiment.chsh_value(pmsquare.bell_state(), setting),
        "classical_bound": experiment.CHSH_CLASSICAL_BOUND,
        "at_visibility": experiment.chsh_value(
            experiment.werner_state(float(cfg["visibility"])), setting),
        "implied_by_references": implied,
        "table": rows,
    }


COMMANDS = {
    "bounds": cmd_bounds,
    "ideal": cmd_ideal,
    "ks-check": cmd_ks_check,
    "simulate": cmd_simulate,
    "sweep-visibility": cmd_sweep,
    "verify-apparatus": cmd_verify,
    "chsh": cmd_chsh,
}


# ----------------------------------------------------------------- output


def _clean(obj):
    """JSON-safe copy with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        x = float(f"{x:.12g}")
        return 0.0 if x == 0 else x
    return obj


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_clean(report), indent=2) + "\n"
    results = _clean(report["results"])
    buf = io.StringIO()
    if "table" in results:
        rows = results["table"]
        fields = list(rows[0]) if rows else []
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    else:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        for k, v in results.items():
            writer.writerow([k, json.dumps(v) if isinstance(v, (dict, list)) else v])
    return buf.getvalue()


def run(argv=None, environ=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args, environ)
        results = COMMANDS[args.command](cfg)
    except InvalidInputError as exc:
        print(f"contextuality: invalid input: {exc}", file=sys.stderr)
        return 1
    except (ConsistencyError, DegenerateBranchError) as exc:
        print(f"contextuality: internal consistency failure: {exc}", file=sys.stderr)
        return 2
    # worker count is an execution detail; results do not depend on it
    shown = {k: cfg[k] for k in sorted(cfg) if k != "workers"}
    report = {"config": shown, "results": results,
              "references": experiment.REFERENCES}
    if not args.deterministic:
        report["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    text = render(report, cfg["format"])
    if cfg["output"]:
        with open(cfg["output"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.command == "verify-apparatus" and not results["all_passed"]:
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
