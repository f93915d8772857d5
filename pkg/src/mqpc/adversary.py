"""Attacks on the comparison protocol, as channel taps and misbehaving roles.

Every attack works through particle handles and public announcements
only. An attack strategy is an immutable description; ``make`` builds the
per-run hook object that ``run_protocol`` drives.

Measure-resend and intercept-resend share one implementation: in an exact
simulator the measured particle already is the basis state an attacker
would resend.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .protocol import AttackHooks, Group, ProtocolConfig, RunContext, party_encode
from .qudit import Basis, BasisState
from .registry import ParticleId, Registry


class BasisPolicy(enum.Enum):
    ALWAYS_T1 = "t1"
    ALWAYS_T2 = "t2"
    RANDOM = "random"

    def pick(self, rng: np.random.Generator) -> Basis:
        if self is BasisPolicy.ALWAYS_T1:
            return Basis.COMPUTATIONAL
        if self is BasisPolicy.ALWAYS_T2:
            return Basis.FOURIER
        return Basis.FOURIER if rng.integers(2) else Basis.COMPUTATIONAL


# --------------------------------------------------------------------------
# attack primitives


def tap_intercept_resend(
    particles: list[ParticleId], policy: BasisPolicy, reg: Registry, rng: np.random.Generator
) -> list[tuple[str, int]]:
    """Measure every particle in transit; the collapsed particles travel on."""
    seen = []
    for pid in particles:
        basis = policy.pick(rng)
        seen.append((basis.short, reg.measure_particle(pid, basis, rng)))
    return seen


def premature_measure(groups: list[Group], reg: Registry, rng: np.random.Generator) -> list[list[int]]:
    """A party measures every carrier it holds in the computational basis."""
    return [[reg.measure_particle(pid, Basis.COMPUTATIONAL, rng) for pid in g] for g in groups]


def plant_fakes(L: int, reg: Registry, rng: np.random.Generator) -> tuple[list[Group], list[int]]:
    """L fake groups of two computational particles with attacker-known values."""
    groups, values = [], []
    for _ in range(L):
        v = int(rng.integers(reg.d))
        groups.append([reg.create_particle(BasisState(Basis.COMPUTATIONAL, v)) for _ in range(2)])
        values.append(v)
    return groups, values


def read_fakes(groups: list[Group], values: list[int], reg: Registry, rng: np.random.Generator) -> list[int]:
    """Shift applied to each fake group, recovered by a computational measurement."""
    d = reg.d
    return [(reg.measure_particle(g[0], Basis.COMPUTATIONAL, rng) - v) % d for g, v in zip(groups, values)]


def collude_observe(
    victim_bits, victim_keys, reg: Registry, rng: np.random.Generator
) -> list[int]:
    """Feed a victim known fakes, let it encode, read back ``(q^l + x^l) mod d``."""
    groups, values = plant_fakes(len(victim_bits), reg, rng)
    party_encode(groups, victim_bits, victim_keys, reg)
    return read_fakes(groups, values, reg, rng)


def _shift_groups(groups: list[Group], shifts: list[int], reg: Registry) -> None:
    for g, m in zip(groups, shifts):
        for pid in g:
            reg.shift_particle(pid, m)


# --------------------------------------------------------------------------
# analytic reference values (threshold 0)


def per_decoy_undetected(d: int) -> float:
    """A decoy in a uniformly random basis survives a fixed-basis measurement."""
    return 0.5 + 0.5 / d


def per_decoy_detection(d: int) -> float:
    return (d - 1) / (2 * d)


def reference_survival(d: int, policy: BasisPolicy) -> float:
    """Chance a Fourier reference measured under ``policy`` still reads k_l at the TP."""
    return {
        BasisPolicy.ALWAYS_T1: 1.0 / d,
        BasisPolicy.ALWAYS_T2: 1.0,
        BasisPolicy.RANDOM: per_decoy_undetected(d),
    }[policy]


def positional_guess_success(L: int, decoys: int) -> float:
    """Guessing which positions hold the 2L carriers among 2L + decoys slots."""
    return 1.0 / math.comb(2 * L + decoys, 2 * L)


# --------------------------------------------------------------------------
# strategies


@dataclass(frozen=True)
class NoAttack:
    name = "none"

    def validate(self, cfg: ProtocolConfig) -> None:
        pass

    def make(self, cfg: ProtocolConfig) -> AttackHooks:
        return AttackHooks()

    def analytic(self, cfg: ProtocolConfig) -> dict[str, float]:
        return {"detection": 0.0}

    def target_stage(self, cfg: ProtocolConfig) -> str | None:
        return None


@dataclass(frozen=True)
class InterceptResend:
    """Outsider measuring every particle on one hop."""

    hop: int = 1
    basis_policy: BasisPolicy = BasisPolicy.RANDOM
    name = "intercept-resend"

    def validate(self, cfg):
        if not 1 <= self.hop <= cfg.hops:
            raise ValueError(f"hop must lie in 1..{cfg.hops}, got {self.hop}")

    def make(self, cfg):
        self.validate(cfg)
        return _InterceptHooks(self)

    def target_stage(self, cfg):
        return f"hop-{self.hop}"

    def analytic(self, cfg):
        if cfg.threshold != 0:
            return {}
        hop_pass = per_decoy_undetected(cfg.d) ** cfg.decoys_per_hop
        run_pass = hop_pass * reference_survival(cfg.d, self.basis_policy) ** cfg.L
        return {
            "per_decoy_detection": per_decoy_detection(cfg.d),
            "stage_detection": 1.0 - hop_pass,
            "detection": 1.0 - run_pass,
        }


class _InterceptHooks(AttackHooks):
    def __init__(self, strategy: InterceptResend):
        self.s = strategy
        self.seen: list[tuple[str, int]] = []

    def in_transit(self, hop, particles, ctx):
        if hop == self.s.hop:
            self.seen = tap_intercept_resend(particles, self.s.basis_policy, ctx.reg, ctx.rng)
        return particles

    @property
    def log(self):
        return {"seen": self.seen}


@dataclass(frozen=True)
class PrematureMeasureParty:
    """Party ``i`` measures its decoy-free carriers before encoding."""

    i: int = 2
    name = "premature-measure"

    def validate(self, cfg):
        if not 1 <= self.i <= cfg.p:
            raise ValueError(f"party must lie in 1..{cfg.p}, got {self.i}")

    def make(self, cfg):
        self.validate(cfg)
        return _PrematureHooks(self)

    def target_stage(self, cfg):
        return "reference-check"

    def analytic(self, cfg):
        if cfg.threshold != 0:
            return {}
        rate = 1.0 - cfg.d ** (-cfg.L)
        return {"stage_detection": rate, "detection": rate}


class _PrematureHooks(AttackHooks):
    def __init__(self, strategy):
        self.s = strategy
        self.observed: list[list[int]] = []

    def received(self, hop, groups, ctx):
        if ctx.receiver(hop) == self.s.i:
            self.observed = premature_measure(groups, ctx.reg, ctx.rng)
        return groups

    @property
    def log(self):
        return {"observed": self.observed}


@dataclass(frozen=True)
class FakeSubstitution:
    """Dishonest ``P_i`` swaps in fakes for victim ``P_{i+1}`` and reads them on the next hop.

    Without decoys on the victim's outgoing hop the attacker knows where its
    fakes are, so it forwards the genuine groups shifted by the learned
    amounts and goes unnoticed. With decoys it must guess the carrier
    positions; it measures everything and forwards what it measured.
    """

    i: int = 1
    name = "fake-substitution"

    @property
    def victim(self) -> int:
        return self.i + 1

    def validate(self, cfg):
        if not 1 <= self.i <= cfg.p - 1:
            raise ValueError(f"dishonest party must lie in 1..{cfg.p - 1}, got {self.i}")

    def make(self, cfg):
        self.validate(cfg)
        return _FakeSubstitutionHooks(self)

    def target_stage(self, cfg):
        return f"hop-{self.victim + 1}"

    def analytic(self, cfg):
        if cfg.threshold != 0:
            return {}
        if cfg.decoys_per_hop == 0:
            return {"stage_detection": 0.0, "detection": 0.0, "positional_guess": 1.0}
        hop_pass = per_decoy_undetected(cfg.d) ** cfg.decoys_per_hop
        return {
            "per_decoy_detection": per_decoy_detection(cfg.d),
            "stage_detection": 1.0 - hop_pass,
            "detection": 1.0 - hop_pass * cfg.d ** (-cfg.L),
            "positional_guess": positional_guess_success(cfg.L, cfg.decoys_per_hop),
        }


class _FakeSubstitutionHooks(AttackHooks):
    def __init__(self, strategy: FakeSubstitution):
        self.s = strategy
        self.genuine: list[Group] = []
        self.fakes: list[Group] = []
        self.values: list[int] = []
        self.learned: list[int] = []
        self.located: bool | None = None

    def outgoing(self, hop, groups, ctx):
        if hop == self.s.victim:
            self.genuine = groups
            self.fakes, self.values = plant_fakes(len(groups), ctx.reg, ctx.rng)
            return self.fakes
        return groups

    def in_transit(self, hop, particles, ctx):
        if hop != self.s.victim + 1:
            return particles
        reg, rng, L = ctx.reg, ctx.rng, ctx.cfg.L
        outcomes = [reg.measure_particle(pid, Basis.COMPUTATIONAL, rng) for pid in particles]
        guess = sorted(rng.choice(len(particles), size=2 * L, replace=False).tolist())
        truth = [pos for pos, pid in enumerate(particles) if pid in {q for g in self.fakes for q in g}]
        self.located = guess == truth
        d = reg.d
        self.learned = [(outcomes[guess[2 * l]] - v) % d for l, v in enumerate(self.values)]
        if ctx.cfg.decoys_per_hop > 0:
            return particles
        # carrier positions are certain: forward the genuine groups instead
        _shift_groups(self.genuine, self.learned, reg)
        return [pid for g in self.genuine for pid in g]

    @property
    def log(self):
        return {"learned": self.learned, "located": self.located}


@dataclass(frozen=True)
class ColludeObserve:
    """Every party but ``m`` colludes; the neighbours of ``m`` read its shifts.

    ``P_{m-1}`` keeps the genuine groups and hands ``m`` known fakes;
    ``P_{m+1}`` passes the decoy check honestly, reads the fakes and applies
    the learned shifts to the genuine groups. Nothing is disturbed, so no
    check fires; the colluders learn ``(q_m^l + x_m^l) mod d`` only.
    """

    m: int = 2
    name = "collude-observe"

    def validate(self, cfg):
        if not 2 <= self.m <= cfg.p - 1:
            raise ValueError(f"victim must lie in 2..{cfg.p - 1} (needs colluding neighbours), got {self.m}")

    def make(self, cfg):
        self.validate(cfg)
        return _ColludeHooks(self)

    def target_stage(self, cfg):
        return None

    def analytic(self, cfg):
        return {"stage_detection": 0.0, "detection": 0.0}


class _ColludeHooks(AttackHooks):
    def __init__(self, strategy: ColludeObserve):
        self.s = strategy
        self.genuine: list[Group] = []
        self.fakes: list[Group] = []
        self.values: list[int] = []
        self.learned: list[int] = []

    def outgoing(self, hop, groups, ctx):
        if hop == self.s.m:
            self.genuine = groups
            self.fakes, self.values = plant_fakes(len(groups), ctx.reg, ctx.rng)
            return self.fakes
        return groups

    def received(self, hop, groups, ctx):
        if hop != self.s.m + 1:
            return groups
        self.learned = read_fakes(groups, self.values, ctx.reg, ctx.rng)
        _shift_groups(self.genuine, self.learned, ctx.reg)
        return self.genuine

    @property
    def log(self):
        return {"learned": self.learned}


ATTACKS = {
    "none": NoAttack,
    "intercept-resend": InterceptResend,
    "premature-measure": PrematureMeasureParty,
    "fake-substitution": FakeSubstitution,
    "collude-observe": ColludeObserve,
}


def make_strategy(name: str, target: int | None = None, basis_policy: str = "random"):
    """Build a strategy from CLI-style arguments. ``target`` is a hop or party index."""
    if name not in ATTACKS:
        raise ValueError(f"unknown attack {name!r}; choose from {', '.join(ATTACKS)}")
    if name == "none":
        return NoAttack()
    if name == "intercept-resend":
        return InterceptResend(target if target is not None else 1, BasisPolicy(basis_policy))
    if name == "premature-measure":
        return PrematureMeasureParty(target if target is not None else 2)
    if name == "fake-substitution":
        return FakeSubstitution(target if target is not None else 1)
    return ColludeObserve(target if target is not None else 2)
