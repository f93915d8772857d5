"""Command line entry point: ``mqpc run | montecarlo | verify``.

Settings resolve in this order: command-line flags, then the ``--config``
file (``key=value`` lines, ``#`` comments), then ``MQPC_SEED`` for the seed,
then built-in defaults.
"""

from __future__ import annotations

import argparse
import os
import sys

from .adversary import ATTACKS, BasisPolicy, make_strategy
from .harness import ExperimentSpec, build_report, run_experiment, run_single, verify_shift_invariance, write_report
from .kernels import BACKEND
from .protocol import ProtocolConfig

EXIT_OK, EXIT_USAGE, EXIT_ABORTED = 0, 1, 2

DEFAULTS = {
    "level": 3,
    "parties": None,  # follows --level
    "bits": 4,
    "secrets": None,
    "attack": "none",
    "target": None,
    "basis_policy": "random",
    "decoys": None,  # 2 * bits
    "threshold": 0.0,
    "trials": 1000,
    "seed": 0,
    "out": None,
    "format": "csv",
    "workers": 1,
    "transcript": None,
    "max_level": 16,
}

CONVERTERS = {
    "level": int, "parties": int, "bits": int, "target": int, "decoys": int,
    "threshold": float, "trials": int, "seed": int, "workers": int, "max_level": int,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def read_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key = key.strip().replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value.strip()
    return values


def resolve(args: argparse.Namespace, environ=os.environ) -> dict:
    settings = dict(DEFAULTS)
    if environ.get("MQPC_SEED"):
        settings["seed"] = environ["MQPC_SEED"]
    if args.config:
        settings.update(read_config_file(args.config))
    settings.update({k: v for k, v in vars(args).items() if k in DEFAULTS and v is not None})
    for key, conv in CONVERTERS.items():
        if settings[key] is not None:
            try:
                settings[key] = conv(settings[key])
            except ValueError:
                raise UsageError(f"invalid value for {key}: {settings[key]!r}") from None
    return settings


def _add_protocol_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value settings file")
    p.add_argument("--level", help="qudit level d")
    p.add_argument("--parties", help="number of parties p (must equal --level)")
    p.add_argument("--bits", help="secret bit length L")
    p.add_argument("--secrets", help="comma-separated secrets, one per party (default: random)")
    p.add_argument("--attack", help=f"one of: {', '.join(ATTACKS)}")
    p.add_argument("--target", help="hop (intercept-resend) or party index for the attack")
    p.add_argument("--basis-policy", dest="basis_policy", help="t1 | t2 | random (intercept-resend)")
    p.add_argument("--decoys", help="decoys per hop (default 2L)")
    p.add_argument("--threshold", help="tolerated decoy error rate (default 0)")
    p.add_argument("--seed", help="master seed (env MQPC_SEED is the fallback)")
    p.add_argument("--out", help="report path")
    p.add_argument("--format", choices=["csv", "json"], help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mqpc", description="Multi-party quantum private comparison simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one protocol run")
    _add_protocol_flags(run)
    run.add_argument("--transcript", help="write the message log as JSON lines")

    mc = sub.add_parser("montecarlo", help="detection-rate campaign")
    _add_protocol_flags(mc)
    mc.add_argument("--trials")
    mc.add_argument("--workers", help="worker processes")

    ver = sub.add_parser("verify", help="check the shift action on both bases")
    ver.add_argument("--max-level", dest="max_level", default=None)
    ver.add_argument("--config", help=argparse.SUPPRESS)
    return parser


def _spec(settings: dict, trials: int) -> ExperimentSpec:
    d = settings["level"]
    p = settings["parties"] if settings["parties"] is not None else d
    if p != d:
        raise UsageError(
            f"--parties ({p}) must equal --level ({d}): equal bits sum to 0 or p, "
            "which decodes as equal only when p == d"
        )
    secrets = None
    if settings["secrets"] is not None:
        try:
            secrets = tuple(int(s) for s in str(settings["secrets"]).split(","))
        except ValueError:
            raise UsageError(f"--secrets must be comma-separated integers, got {settings['secrets']!r}") from None
    try:
        BasisPolicy(settings["basis_policy"])
        cfg = ProtocolConfig(d, p, settings["bits"], settings["decoys"], settings["threshold"], settings["seed"])
        attack = make_strategy(settings["attack"], settings["target"], settings["basis_policy"])
        return ExperimentSpec(cfg, secrets, attack, trials, settings["workers"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_run(settings: dict) -> int:
    spec = _spec(settings, 1)
    record, result = run_single(spec, 0)
    print(f"outcome: {result.outcome}")
    print(f"backend: {BACKEND}  seed: {record.seed}")
    for rec in result.transcript.records:
        if rec["type"] == "quantum":
            rate = result.check_rates.get(f"hop-{rec['hop']}")
            shown = "-" if rate is None else f"{rate:.4f}"
            print(f"  hop {rec['hop']}: P{rec['sender']} -> P{rec['receiver']}  "
                  f"{rec['length']} particles  decoy error rate {shown}")
        elif rec["type"] == "reference-check":
            print(f"  reference check: error rate {rec['error_rate']:.4f}")
    if settings["transcript"]:
        result.transcript.write(settings["transcript"])
    if settings["out"]:
        write_report(build_report(spec, [record]), settings["out"], settings["format"])
    return EXIT_ABORTED if record.abort_stage is not None else EXIT_OK


def cmd_montecarlo(settings: dict) -> int:
    spec = _spec(settings, settings["trials"])
    report = run_experiment(spec)
    summary = report.summary()
    if settings["out"]:
        try:
            write_report(report, settings["out"], settings["format"])
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return EXIT_USAGE
    print(f"trials: {summary['trials']}  detected: {summary['detected']}  "
          f"rate: {summary['detection_rate']:.4f}  "
          f"wilson95: [{summary['wilson_low']:.4f}, {summary['wilson_high']:.4f}]")
    if summary["analytic_detection"] is not None:
        print(f"analytic detection: {summary['analytic_detection']:.4f}")
    if "target_stage" in summary:
        line = f"at {summary['target_stage']}: rate {summary['stage_rate']:.4f}"
        if summary["analytic_stage_detection"] is not None:
            line += f"  analytic {summary['analytic_stage_detection']:.4f}"
        print(line)
    if summary["decision_accuracy"] is not None:
        print(f"decision accuracy (non-aborted): {summary['decision_accuracy']:.4f}")
    return EXIT_OK


def cmd_verify(settings: dict) -> int:
    cells = verify_shift_invariance(settings["max_level"])
    ok = True
    for d in range(2, settings["max_level"] + 1):
        grid = [c for c in cells if c.d == d]
        passed = sum(c.passed for c in grid)
        ok &= passed == len(grid)
        print(f"d={d:2d}  {passed}/{len(grid)} pass")
        for k in range(d):
            row = "".join("." if c.passed else "X" for c in grid if c.k == k)
            print(f"    k={k:2d} {row}")
    print("all pass" if ok else "FAILURES")
    return EXIT_OK if ok else EXIT_USAGE


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        settings = resolve(args)
        if args.command == "run":
            return cmd_run(settings)
        if args.command == "montecarlo":
            return cmd_montecarlo(settings)
        if settings["max_level"] < 2:
            raise UsageError("--max-level must be >= 2")
        return cmd_verify(settings)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
