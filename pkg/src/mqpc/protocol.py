"""Circular multi-party private comparison with d-level single particles.

Topology: ``P_0 -> P_1 -> ... -> P_p -> P_0`` where ``P_0`` is the
semi-honest third party (TP). Hop ``h`` (1 <= h <= p + 1) carries the
sequence from ``P_{h-1}`` to ``P_h`` (``P_{p+1}`` is the TP again).

TP prepares L groups, each holding a computational particle ``|k_l>`` and a
Fourier particle ``F|k_l>`` in a private random order, and hides them among
decoys. Every party strips the decoys after a two-phase decoy check,
shifts both particles of group l by ``(q_i^l + x_i^l) mod d`` and hides the
groups among fresh decoys of its own. The TP finally checks the Fourier
references and decodes ``D_l = (v_l - k_l - R_l) mod d`` where
``R_l = sum_i q_i^l mod d``; the secrets are equal iff every ``D_l`` is zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qudit import Basis, BasisState
from .registry import ParticleId, Registry

TP = 0


class ProtocolViolation(Exception):
    """A role received a message that breaks the protocol structure."""


# --------------------------------------------------------------------------
# configuration and private tables


@dataclass(frozen=True)
class ProtocolConfig:
    d: int
    p: int
    L: int
    decoys_per_hop: int | None = None
    threshold: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"level d must be >= 2, got {self.d}")
        if self.p != self.d:
            raise ValueError(
                f"party count must equal the level (p={self.p}, d={self.d}): "
                "the decode treats the bit sum mod d as zero only when p == d"
            )
        if self.L < 1:
            raise ValueError(f"bit length L must be >= 1, got {self.L}")
        if self.decoys_per_hop is None:
            object.__setattr__(self, "decoys_per_hop", 2 * self.L)
        if self.decoys_per_hop < 0:
            raise ValueError("decoys_per_hop must be >= 0")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")

    @property
    def hops(self) -> int:
        return self.p + 1

    @property
    def sequence_length(self) -> int:
        return 2 * self.L + self.decoys_per_hop


@dataclass(frozen=True)
class KeyTable:
    """Pre-shared keys; ``rows[i-1][l-1]`` is q_i^l, known to TP and P_i."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        lengths = {len(r) for r in self.rows}
        if len(lengths) > 1:
            raise ValueError("all key sequences must have length L")

    def party(self, i: int) -> tuple[int, ...]:
        return self.rows[i - 1]

    def column_sums(self, d: int) -> list[int]:
        return [sum(col) % d for col in zip(*self.rows)]


@dataclass(frozen=True)
class SecretTable:
    secrets: tuple[int, ...]
    L: int

    def __post_init__(self):
        object.__setattr__(self, "secrets", tuple(int(x) for x in self.secrets))
        for x in self.secrets:
            if not 0 <= x < 2**self.L:
                raise ValueError(f"secret {x} does not fit in {self.L} bits")

    def bits(self, i: int) -> tuple[int, ...]:
        """``(x_i^1, ..., x_i^L)`` with ``x_i = sum_l x_i^l 2^(l-1)``."""
        x = self.secrets[i - 1]
        return tuple((x >> l) & 1 for l in range(self.L))

    @property
    def all_equal(self) -> bool:
        return len(set(self.secrets)) <= 1


def distribute_keys(cfg: ProtocolConfig, rng: np.random.Generator) -> KeyTable:
    """Trusted-setup stand-in for the QKD key pre-sharing."""
    q = rng.integers(0, cfg.d, size=(cfg.p, cfg.L))
    return KeyTable(tuple(tuple(int(v) for v in row) for row in q))


# --------------------------------------------------------------------------
# sequences and records


@dataclass(frozen=True)
class PairRecord:
    payload: ParticleId
    reference: ParticleId
    payload_first: bool
    k: int


@dataclass(frozen=True)
class Decoy:
    position: int
    state: BasisState


@dataclass(frozen=True)
class DecoyRecord:
    decoys: tuple[Decoy, ...]

    def __len__(self):
        return len(self.decoys)

    @property
    def positions(self) -> list[int]:
        return [dc.position for dc in self.decoys]

    def in_basis(self, basis: Basis) -> list[Decoy]:
        return [dc for dc in self.decoys if dc.state.basis is basis]


@dataclass(frozen=True)
class TransmittedSequence:
    particles: tuple[ParticleId, ...]
    record: DecoyRecord  # sender-private


Group = list  # [ParticleId, ParticleId] in transmission order


@dataclass(frozen=True)
class Equal:
    def __str__(self):
        return "Equal"


@dataclass(frozen=True)
class NotEqual:
    first_differing_l: int  # TP-side only; parties learn just the boolean

    def __str__(self):
        return "NotEqual"


@dataclass(frozen=True)
class Aborted:
    stage: str  # "hop-<h>" or "reference-check"
    error_rate: float
    phase: str | None = None

    @property
    def hop(self) -> int | None:
        return int(self.stage.split("-")[1]) if self.stage.startswith("hop-") else None

    def __str__(self):
        return f"Aborted({self.stage}, error_rate={self.error_rate:.4f})"


ComparisonOutcome = Equal | NotEqual | Aborted


class Transcript:
    """Ordered log of every message exchanged during a run."""

    def __init__(self):
        self.records: list[dict] = []

    def log(self, hop: int | None, type_: str, **payload) -> None:
        self.records.append({"hop": hop, "type": type_, **payload})

    def of_type(self, type_: str) -> list[dict]:
        return [r for r in self.records if r["type"] == type_]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.records)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @staticmethod
    def read(path) -> list[dict]:
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]


def insert_decoys(
    carriers: Sequence[ParticleId], n_decoys: int, reg: Registry, rng: np.random.Generator
) -> TransmittedSequence:
    seq: list[tuple[ParticleId, BasisState | None]] = [(pid, None) for pid in carriers]
    for _ in range(n_decoys):
        basis = Basis.FOURIER if rng.integers(2) else Basis.COMPUTATIONAL
        state = BasisState(basis, int(rng.integers(reg.d)))
        pid = reg.create_particle(state)
        seq.insert(int(rng.integers(len(seq) + 1)), (pid, state))
    decoys = tuple(Decoy(pos, st) for pos, (_, st) in enumerate(seq) if st is not None)
    return TransmittedSequence(tuple(pid for pid, _ in seq), DecoyRecord(decoys))


def tp_prepare(
    cfg: ProtocolConfig, reg: Registry, rng: np.random.Generator
) -> tuple[TransmittedSequence, list[PairRecord]]:
    """L groups ``(|k_l>, F|k_l>)`` in random intra-group order, plus decoys."""
    pairs = []
    carriers: list[ParticleId] = []
    for _ in range(cfg.L):
        k = int(rng.integers(cfg.d))
        payload = reg.create_particle(BasisState(Basis.COMPUTATIONAL, k))
        reference = reg.create_particle(BasisState(Basis.FOURIER, k))
        payload_first = bool(rng.integers(2))
        pairs.append(PairRecord(payload, reference, payload_first, k))
        carriers.extend((payload, reference) if payload_first else (reference, payload))
    return insert_decoys(carriers, cfg.decoys_per_hop, reg, rng), pairs


def reinsert_decoys(
    groups: Sequence[Group], cfg: ProtocolConfig, reg: Registry, rng: np.random.Generator
) -> TransmittedSequence:
    """Hide encoded groups among fresh decoys; carrier order is kept."""
    carriers = [pid for g in groups for pid in g]
    return insert_decoys(carriers, cfg.decoys_per_hop, reg, rng)


# --------------------------------------------------------------------------
# eavesdropping checks


@dataclass(frozen=True)
class CheckResult:
    error_rate: float
    passed: bool
    checked: int
    mismatches: int
    failed_phase: str | None = None


def decoy_check(
    record: DecoyRecord,
    received: Sequence[ParticleId],
    reg: Registry,
    rng: np.random.Generator,
    threshold: float = 0.0,
    transcript: Transcript | None = None,
    hop: int | None = None,
) -> CheckResult:
    """Two-phase decoy check between a sender (holding ``record``) and a receiver.

    Fourier decoys are announced and checked first; computational decoys
    only if the first phase stays within ``threshold``. The returned rate
    counts mismatches over all decoys checked so far.
    """
    n = len(received)
    checked = mismatches = 0
    for basis in (Basis.FOURIER, Basis.COMPUTATIONAL):
        batch = record.in_basis(basis)
        positions = [dc.position for dc in batch]
        if any(not 0 <= pos < n for pos in positions):
            raise ProtocolViolation(f"announced decoy position out of range for a sequence of {n}")
        if transcript is not None:
            transcript.log(hop, "announce", phase=basis.short, positions=positions)
        # receiver side: measure the announced particles in the announced basis
        outcomes = [reg.measure_particle(received[pos], basis, rng) for pos in positions]
        if transcript is not None:
            transcript.log(hop, "report", phase=basis.short, outcomes=outcomes)
        # sender side: compare against what was prepared
        bad = sum(o != dc.state.index for o, dc in zip(outcomes, batch))
        checked += len(batch)
        mismatches += bad
        phase_rate = bad / len(batch) if batch else 0.0
        passed = phase_rate <= threshold
        if transcript is not None:
            transcript.log(
                hop, "check", phase=basis.short, checked=len(batch), mismatches=bad,
                error_rate=phase_rate, passed=passed,
            )
        if not passed:
            return CheckResult(mismatches / checked, False, checked, mismatches, basis.short)
    return CheckResult(mismatches / checked if checked else 0.0, True, checked, mismatches)


def strip_decoys(received: Sequence[ParticleId], positions: Sequence[int], L: int) -> list[Group]:
    """Remove the announced decoys and regroup the carriers in pairs."""
    drop = set(positions)
    carriers = [pid for pos, pid in enumerate(received) if pos not in drop]
    if len(carriers) != 2 * L:
        raise ProtocolViolation(f"expected {2 * L} carrier particles, found {len(carriers)}")
    return [carriers[2 * l : 2 * l + 2] for l in range(L)]


def party_encode(
    groups: Sequence[Group], bits: Sequence[int], keys: Sequence[int], reg: Registry
) -> None:
    """Shift both particles of group l by ``(q^l + x^l) mod d``; order untouched."""
    if len(groups) != len(bits) or len(groups) != len(keys):
        raise ProtocolViolation(f"expected {len(bits)} groups, got {len(groups)}")
    for g, x, q in zip(groups, bits, keys):
        if len(g) != 2:
            raise ProtocolViolation("each group must hold exactly two particles")
        m = (q + x) % reg.d
        if m:
            for pid in g:
                reg.shift_particle(pid, m)


def _split_group(g: Group, rec: PairRecord) -> tuple[ParticleId, ParticleId]:
    """(payload, reference) by position, using the TP-private order bit."""
    return (g[0], g[1]) if rec.payload_first else (g[1], g[0])


def tp_reference_check(
    pairs: Sequence[PairRecord], groups: Sequence[Group], reg: Registry, rng: np.random.Generator
) -> float:
    """Measure every reference particle in the Fourier basis; fraction not equal to k_l."""
    if not pairs:
        return 0.0
    bad = 0
    for rec, g in zip(pairs, groups):
        _, ref = _split_group(g, rec)
        bad += reg.measure_particle(ref, Basis.FOURIER, rng) != rec.k
    return bad / len(pairs)


def tp_compute_result(
    pairs: Sequence[PairRecord],
    groups: Sequence[Group],
    keys: KeyTable,
    reg: Registry,
    rng: np.random.Generator,
) -> ComparisonOutcome:
    d = reg.d
    r_sums = keys.column_sums(d)
    for l, (rec, g, r) in enumerate(zip(pairs, groups, r_sums), start=1):
        payload, _ = _split_group(g, rec)
        v = reg.measure_particle(payload, Basis.COMPUTATIONAL, rng)
        if decode_value(v, rec.k, r, d) != 0:
            return NotEqual(l)
    return Equal()


def decode_value(v: int, k: int, r: int, d: int) -> int:
    """``D_l`` from the measured payload value, the initial index and the key sum."""
    return (v + (d - k) - r) % d


# --------------------------------------------------------------------------
# orchestration


class AttackHooks:
    """No-op attack surface. Subclasses in ``mqpc.adversary`` override these.

    Hooks only receive particle handles and public messages, never states.
    """

    def outgoing(self, hop: int, groups: list[Group], ctx: "RunContext") -> list[Group]:
        """The sender's carriers for ``hop`` just before decoys are added."""
        return groups

    def in_transit(self, hop: int, particles: list[ParticleId], ctx: "RunContext") -> list[ParticleId]:
        """The sequence on the quantum channel of ``hop``."""
        return particles

    def received(self, hop: int, groups: list[Group], ctx: "RunContext") -> list[Group]:
        """The receiver's groups after the decoy check and decoy removal."""
        return groups

    @property
    def log(self) -> dict:
        return {}


@dataclass
class RunContext:
    cfg: ProtocolConfig
    reg: Registry
    rng: np.random.Generator
    transcript: Transcript
    keys: KeyTable
    secrets: SecretTable
    last_sequence: TransmittedSequence | None = None

    def receiver(self, hop: int) -> int:
        return hop % (self.cfg.p + 1)


@dataclass
class RunResult:
    outcome: ComparisonOutcome
    transcript: Transcript
    keys: KeyTable
    check_rates: dict[str, float] = field(default_factory=dict)
    attack_log: dict = field(default_factory=dict)

    @property
    def aborted(self) -> bool:
        return isinstance(self.outcome, Aborted)


def run_protocol(
    cfg: ProtocolConfig,
    secrets: SecretTable,
    attack=None,
    *,
    keys: KeyTable | None = None,
) -> RunResult:
    """Execute one full comparison. ``attack`` is an AttackStrategy or None.

    Randomness derives only from ``cfg.seed``, so identical inputs yield
    identical transcripts.
    """
    if len(secrets.secrets) != cfg.p:
        raise ValueError(f"need {cfg.p} secrets, got {len(secrets.secrets)}")
    if secrets.L != cfg.L:
        raise ValueError("secret bit length does not match the config")

    rng = np.random.default_rng(cfg.seed)
    reg = Registry(cfg.d)
    transcript = Transcript()
    if keys is None:
        keys = distribute_keys(cfg, rng)
    elif len(keys.rows) != cfg.p or any(len(r) != cfg.L for r in keys.rows):
        raise ValueError("key table shape does not match the config")

    hooks = attack.make(cfg) if attack is not None else AttackHooks()
    ctx = RunContext(cfg, reg, rng, transcript, keys, secrets)
    rates: dict[str, float] = {}

    def finish(outcome):
        return RunResult(outcome, transcript, keys, rates, hooks.log)

    seq, pairs = tp_prepare(cfg, reg, rng)
    for hop in range(1, cfg.hops + 1):
        sender, receiver = hop - 1, ctx.receiver(hop)
        ctx.last_sequence = seq
        particles = hooks.in_transit(hop, list(seq.particles), ctx)
        transcript.log(hop, "quantum", sender=sender, receiver=receiver, length=len(particles))

        check = decoy_check(seq.record, particles, reg, rng, cfg.threshold, transcript, hop)
        rates[f"hop-{hop}"] = check.error_rate
        if not check.passed:
            outcome = Aborted(f"hop-{hop}", check.error_rate, check.failed_phase)
            transcript.log(hop, "abort", stage=outcome.stage, error_rate=outcome.error_rate)
            return finish(outcome)

        groups = strip_decoys(particles, seq.record.positions, cfg.L)
        groups = hooks.received(hop, groups, ctx)
        transcript.log(hop, "carriers", party=receiver, order=[int(pid) for g in groups for pid in g])
        if receiver == TP:
            break

        party_encode(groups, secrets.bits(receiver), keys.party(receiver), reg)
        if hop < cfg.hops:
            groups = hooks.outgoing(hop + 1, groups, ctx)
            seq = reinsert_decoys(groups, cfg, reg, rng)

    rate = tp_reference_check(pairs, groups, reg, rng)
    rates["reference-check"] = rate
    passed = rate <= cfg.threshold
    transcript.log(cfg.hops, "reference-check", error_rate=rate, passed=passed)
    if not passed:
        outcome = Aborted("reference-check", rate)
        transcript.log(cfg.hops, "abort", stage=outcome.stage, error_rate=rate)
        return finish(outcome)

    outcome = tp_compute_result(pairs, groups, keys, reg, rng)
    transcript.log(None, "result", value="equal" if isinstance(outcome, Equal) else "not-equal")
    return finish(outcome)
