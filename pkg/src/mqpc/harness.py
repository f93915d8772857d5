"""Experiment runner: single runs, Monte Carlo campaigns, report files, shift verification."""

from __future__ import annotations

import cmath
import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .adversary import NoAttack
from .protocol import Aborted, Equal, ProtocolConfig, RunResult, SecretTable, run_protocol
from .qudit import (
    ALGEBRA_TOL,
    Basis,
    BasisState,
    apply_shift,
    equal_up_to_global_phase,
    global_phase,
    prepare,
)
from .stats import DetectionStats

CSV_COLUMNS = ["trial", "seed", "outcome", "abort_stage", "error_rate", "secrets_equal", "correct"]


def trial_seed(master: int, trial: int) -> int:
    """Counter-based child seed; trial t's seed never depends on the trial count."""
    ss = np.random.SeedSequence(entropy=master, spawn_key=(trial,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def draw_secrets(cfg: ProtocolConfig, rng: np.random.Generator) -> SecretTable:
    """Half the draws give all parties one common secret, the rest are independent."""
    top = 2**cfg.L
    if rng.integers(2):
        secrets = [int(rng.integers(top))] * cfg.p
    else:
        secrets = [int(v) for v in rng.integers(top, size=cfg.p)]
    return SecretTable(tuple(secrets), cfg.L)


@dataclass(frozen=True)
class ExperimentSpec:
    cfg: ProtocolConfig
    secrets: tuple[int, ...] | None = None  # None draws fresh secrets per trial
    attack: object = field(default_factory=NoAttack)
    trials: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        self.attack.validate(self.cfg)
        if self.secrets is not None:
            SecretTable(self.secrets, self.cfg.L)
            if len(self.secrets) != self.cfg.p:
                raise ValueError(f"need {self.cfg.p} secrets, got {len(self.secrets)}")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    outcome: str
    abort_stage: str | None
    error_rate: float
    secrets_equal: bool
    correct: bool | None  # None when aborted


def run_single(spec: ExperimentSpec, trial: int) -> tuple[TrialRecord, RunResult]:
    seed = trial_seed(spec.cfg.seed, trial)
    cfg = ProtocolConfig(
        spec.cfg.d, spec.cfg.p, spec.cfg.L, spec.cfg.decoys_per_hop, spec.cfg.threshold, seed
    )
    if spec.secrets is None:
        # separate stream so secret draws never shift protocol randomness
        secrets = draw_secrets(cfg, np.random.default_rng([seed, 1]))
    else:
        secrets = SecretTable(spec.secrets, cfg.L)
    result = run_protocol(cfg, secrets, spec.attack)
    out = result.outcome
    if isinstance(out, Aborted):
        rec = TrialRecord(trial, seed, "Aborted", out.stage, out.error_rate, secrets.all_equal, None)
    else:
        said_equal = isinstance(out, Equal)
        rate = max(result.check_rates.values(), default=0.0)
        rec = TrialRecord(trial, seed, str(out), None, rate, secrets.all_equal, said_equal == secrets.all_equal)
    return rec, result


def _run_trial(args) -> TrialRecord:
    spec, trial = args
    return run_single(spec, trial)[0]


@dataclass
class ExperimentReport:
    config: dict
    seed: int
    trials: list[TrialRecord]
    stats: DetectionStats
    analytic: dict[str, float]
    target_stage: str | None

    def summary(self) -> dict:
        lo, hi = self.stats.wilson()
        decided = [t for t in self.trials if t.correct is not None]
        out = {
            "trials": self.stats.trials,
            "detected": self.stats.detected,
            "detection_rate": self.stats.rate,
            "wilson_low": lo,
            "wilson_high": hi,
            "decided": len(decided),
            "decision_accuracy": (sum(t.correct for t in decided) / len(decided)) if decided else None,
            "analytic_detection": self.analytic.get("detection"),
        }
        if self.target_stage is not None:
            n = self.stats.count_at(self.target_stage)
            slo, shi = DetectionStats(self.stats.trials, n).wilson()
            out.update(
                target_stage=self.target_stage,
                stage_detected=n,
                stage_rate=n / self.stats.trials,
                stage_wilson_low=slo,
                stage_wilson_high=shi,
                analytic_stage_detection=self.analytic.get("stage_detection"),
            )
        return out

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "trials": [asdict(t) for t in self.trials],
            "summary": self.summary(),
            "stages": dict(sorted(self.stats.stages.items())),
        }


def _config_echo(spec: ExperimentSpec) -> dict:
    attack = {"name": spec.attack.name}
    attack.update({k: (v.value if hasattr(v, "value") else v) for k, v in asdict(spec.attack).items()})
    cfg = asdict(spec.cfg)
    cfg.pop("seed")
    return {
        **cfg,
        "secrets": list(spec.secrets) if spec.secrets is not None else "random",
        "attack": attack,
        "trials": spec.trials,
    }


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    jobs = [(spec, t) for t in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            trials = list(pool.map(_run_trial, jobs, chunksize=max(1, spec.trials // (8 * spec.workers))))
    else:
        trials = [_run_trial(j) for j in jobs]
    return build_report(spec, trials)


def build_report(spec: ExperimentSpec, trials: list[TrialRecord]) -> ExperimentReport:
    stats = DetectionStats()
    for t in trials:
        stats.record(t.abort_stage)
    return ExperimentReport(
        _config_echo(spec),
        spec.cfg.seed,
        trials,
        stats,
        spec.attack.analytic(spec.cfg),
        spec.attack.target_stage(spec.cfg),
    )


# --------------------------------------------------------------------------
# report files


def dumps_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def dumps_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for t in report.trials:
        w.writerow([
            t.trial, t.seed, t.outcome, t.abort_stage or "", repr(t.error_rate),
            int(t.secrets_equal), "" if t.correct is None else int(t.correct),
        ])
    data = report.to_dict()
    # footer: "# section.key=<json value>"
    buf.write(f"# seed={json.dumps(data['seed'])}\n")
    for section in ("config", "summary", "stages"):
        for key, value in sorted(data[section].items()):
            buf.write(f"# {section}.{key}={json.dumps(value, sort_keys=True)}\n")
    return buf.getvalue()


def write_report(report: ExperimentReport, path, fmt: str) -> None:
    text = dumps_json(report) if fmt == "json" else dumps_csv(report)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _parse_csv(text: str) -> dict:
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    footer = [line[2:] for line in text.splitlines() if line.startswith("# ")]
    data: dict = {"config": {}, "summary": {}, "stages": {}, "trials": []}
    for line in footer:
        key, _, raw = line.partition("=")
        value = json.loads(raw)
        if "." in key:
            section, sub = key.split(".", 1)
            data[section][sub] = value
        else:
            data[key] = value
    for r in csv.DictReader(rows):
        data["trials"].append({
            "trial": int(r["trial"]),
            "seed": int(r["seed"]),
            "outcome": r["outcome"],
            "abort_stage": r["abort_stage"] or None,
            "error_rate": float(r["error_rate"]),
            "secrets_equal": bool(int(r["secrets_equal"])),
            "correct": None if r["correct"] == "" else bool(int(r["correct"])),
        })
    return data


def read_report(path) -> dict:
    """Load a csv or json report into the json document structure."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return json.loads(text)
    return _parse_csv(text)


# --------------------------------------------------------------------------
# shift/Fourier invariance check


@dataclass(frozen=True)
class VerifyCell:
    d: int
    k: int
    m: int
    invariant: bool  # U_m F|k> equals F|k> up to a phase
    phase_ok: bool  # and that phase is exactly w^(-m k)
    shift_ok: bool  # U_m |k> == |k + m mod d> exactly

    @property
    def passed(self) -> bool:
        return self.invariant and self.phase_ok and self.shift_ok


def verify_shift_invariance(max_level: int, tol: float = ALGEBRA_TOL) -> list[VerifyCell]:
    if max_level < 2:
        raise ValueError("max level must be >= 2")
    cells = []
    for d in range(2, max_level + 1):
        for k in range(d):
            fk = prepare(BasisState(Basis.FOURIER, k), d)
            ek = prepare(BasisState(Basis.COMPUTATIONAL, k), d)
            for m in range(d):
                shifted = apply_shift(fk, m)
                invariant = equal_up_to_global_phase(shifted, fk, tol)
                expected = cmath.exp(-2j * math.pi * m * k / d)
                phase_ok = invariant and abs(global_phase(shifted, fk, tol) - expected) <= tol
                target = prepare(BasisState(Basis.COMPUTATIONAL, (k + m) % d), d)
                shift_ok = bool(np.array_equal(apply_shift(ek, m).amplitudes, target.amplitudes))
                cells.append(VerifyCell(d, k, m, invariant, phase_ok, shift_ok))
    return cells
