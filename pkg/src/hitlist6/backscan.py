"""Backscan planning, alias inference and alias-list comparison.

Each planning interval probes every client address once plus one random
address inside each distinct client /64. A /64 whose random address answers
is treated as aliased. The prober is pluggable: ``MockResponder`` simulates
responses, ``FileProber`` round-trips through plan/response CSV files.
"""
from __future__ import annotations

import csv
import enum
import json
import logging
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Protocol

from .addr import Prefix, format_ipv6, parse_ipv6, parse_prefix, prefix_of
from .errors import UnplannedResponseError
from .observations import Observation
from .prefixmap import PrefixTable

log = logging.getLogger(__name__)

DEFAULT_INTERVAL = 600
MAX_REDRAWS = 8


class ProbeKind(enum.Enum):
    CLIENT = "client"
    RANDOM = "random"


class PlanEntry(NamedTuple):
    kind: ProbeKind
    origin64: int  # network half of the originating /64


@dataclass
class ProbePlan:
    interval_start: int
    targets: dict[int, PlanEntry] = field(default_factory=dict)

    @property
    def derived_from(self) -> dict[int, Prefix]:
        return {t: prefix_of(e.origin64 << 64, 64) for t, e in self.targets.items()
                if e.kind is ProbeKind.RANDOM}

    def of_kind(self, kind: ProbeKind) -> list[int]:
        return [t for t, e in self.targets.items() if e.kind is kind]

    def __len__(self) -> int:
        return len(self.targets)


class ProbeResponse(NamedTuple):
    target: int
    responded: bool
    kind: ProbeKind | None = None


class AliasVerdict(NamedTuple):
    prefix: Prefix
    aliased: bool
    evidence: int


@dataclass
class AliasInference:
    verdicts: list[AliasVerdict]
    client_targets: int
    client_responses: int
    random_targets: int
    random_responses: int

    @property
    def client_hit_rate(self) -> float:
        return self.client_responses / self.client_targets if self.client_targets else 0.0

    @property
    def random_hit_rate(self) -> float:
        return self.random_responses / self.random_targets if self.random_targets else 0.0


@dataclass
class AliasComparison:
    known: int
    new: int
    new_prefixes: list[Prefix]


def _interval_rng(seed: int, interval_start: int) -> random.Random:
    return random.Random(f"backscan/{seed}/{interval_start}")


def plan_interval(clients: Iterable[int], interval_start: int, rng_seed: int) -> ProbePlan:
    """All distinct clients plus one seeded random address per distinct client /64."""
    client_set = {int(c) for c in clients}
    if not client_set:
        raise ValueError("a probe plan needs at least one client")
    plan = ProbePlan(interval_start)
    for c in sorted(client_set):
        plan.targets[c] = PlanEntry(ProbeKind.CLIENT, c >> 64)
    rng = _interval_rng(rng_seed, interval_start)
    for net in sorted({c >> 64 for c in client_set}):
        for _ in range(MAX_REDRAWS):
            t = (net << 64) | rng.getrandbits(64)
            if t not in plan.targets:
                plan.targets[t] = PlanEntry(ProbeKind.RANDOM, net)
                break
        else:
            log.warning("no free random target in %s after %d draws", prefix_of(net << 64, 64), MAX_REDRAWS)
    return plan


def plan_intervals(observations: Iterable[Observation], rng_seed: int,
                   interval_seconds: int = DEFAULT_INTERVAL) -> list[ProbePlan]:
    """One plan per interval of the observation stream, ordered by start time."""
    buckets: dict[int, set[int]] = defaultdict(set)
    for o in observations:
        buckets[o.timestamp - o.timestamp % interval_seconds].add(o.addr)
    return [plan_interval(buckets[s], s, rng_seed) for s in sorted(buckets)]


def infer_aliased(plan: ProbePlan, responses: Iterable[ProbeResponse]) -> AliasInference:
    responded: dict[int, bool] = {}
    for r in responses:
        entry = plan.targets.get(r.target)
        if entry is None:
            raise UnplannedResponseError(f"response for unplanned target {format_ipv6(r.target)}")
        if r.kind is not None and r.kind is not entry.kind:
            raise UnplannedResponseError(
                f"response kind {r.kind.value} does not match plan kind {entry.kind.value} "
                f"for {format_ipv6(r.target)}")
        responded[r.target] = responded.get(r.target, False) or bool(r.responded)

    verdicts = []
    counts = Counter()
    for t, entry in plan.targets.items():
        counts[entry.kind] += 1
        if responded.get(t):
            counts[(entry.kind, True)] += 1
            if entry.kind is ProbeKind.RANDOM:
                verdicts.append(AliasVerdict(prefix_of(t, 64), True, t))
    verdicts.sort(key=lambda v: v.prefix.base)
    return AliasInference(
        verdicts,
        counts[ProbeKind.CLIENT], counts[(ProbeKind.CLIENT, True)],
        counts[ProbeKind.RANDOM], counts[(ProbeKind.RANDOM, True)],
    )


def merge_inferences(parts: Iterable[AliasInference]) -> AliasInference:
    """Combine per-interval results; a /64 keeps its first verdict."""
    seen: dict[int, AliasVerdict] = {}
    tot = [0, 0, 0, 0]
    for p in parts:
        for v in p.verdicts:
            seen.setdefault(v.prefix.base, v)
        tot[0] += p.client_targets
        tot[1] += p.client_responses
        tot[2] += p.random_targets
        tot[3] += p.random_responses
    return AliasInference([seen[k] for k in sorted(seen)], *tot)


def compare_alias_lists(verdicts: Iterable[AliasVerdict], external: PrefixTable) -> AliasComparison:
    known, new = 0, []
    for v in verdicts:
        if external.lookup(v.evidence) is True:
            known += 1
        else:
            new.append(v.prefix)
    return AliasComparison(known, len(new), new)


def clients_in_aliased(clients: Iterable[int], verdicts: Iterable[AliasVerdict],
                       asmap: PrefixTable | None = None) -> tuple[int, Counter]:
    """Clients whose /64 carries an aliased verdict, in total and per ASN."""
    aliased = {v.prefix.base >> 64 for v in verdicts if v.aliased}
    total = 0
    per_as: Counter = Counter()
    for c in set(clients):
        if c >> 64 in aliased:
            total += 1
            if asmap is not None:
                per_as[asmap.lookup(c)] += 1
    return total, per_as


# ---------------------------------------------------------------- probers


class Prober(Protocol):
    def probe(self, plan: ProbePlan) -> list[ProbeResponse]: ...


class MockResponder:
    """Answers every target inside an aliased prefix; others answer at per-kind rates."""

    def __init__(self, aliased: PrefixTable | Iterable[str | Prefix], client_rate: float = 1.0,
                 random_rate: float = 0.0, seed: int = 0):
        if isinstance(aliased, PrefixTable):
            self.aliased = aliased
        else:
            self.aliased = PrefixTable()
            for p in aliased:
                p = p if isinstance(p, Prefix) else parse_prefix(p)
                self.aliased.add_v6(p.base, p.length, True)
            self.aliased.freeze()
        self.rates = {ProbeKind.CLIENT: client_rate, ProbeKind.RANDOM: random_rate}
        self.seed = seed

    def probe(self, plan: ProbePlan) -> list[ProbeResponse]:
        rng = random.Random(f"mock/{self.seed}/{plan.interval_start}")
        out = []
        for t in sorted(plan.targets):
            kind = plan.targets[t].kind
            hit = self.aliased.lookup(t) is True or rng.random() < self.rates[kind]
            out.append(ProbeResponse(t, hit, kind))
        return out


class FileProber:
    """Writes the plan for an external prober and reads its response file back."""

    def __init__(self, plan_path: str | Path, responses_path: str | Path):
        self.plan_path = Path(plan_path)
        self.responses_path = Path(responses_path)

    def probe(self, plan: ProbePlan) -> list[ProbeResponse]:
        write_plan(self.plan_path, plan)
        return read_responses(self.responses_path)


def write_plan(path: str | Path, plan: ProbePlan) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["target", "kind", "origin_slash64"])
        for t in sorted(plan.targets):
            e = plan.targets[t]
            w.writerow([format_ipv6(t), e.kind.value, str(prefix_of(e.origin64 << 64, 64))])


def read_plan(path: str | Path, interval_start: int = 0) -> ProbePlan:
    plan = ProbePlan(interval_start)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            t = parse_ipv6(row["target"])
            if t in plan.targets:
                raise ValueError(f"{path}: target {row['target']} planned twice")
            origin = parse_prefix(row["origin_slash64"])
            plan.targets[int(t)] = PlanEntry(ProbeKind(row["kind"]), origin.base >> 64)
    return plan


def write_responses(path: str | Path, responses: Iterable[ProbeResponse]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["target", "responded"])
        for r in responses:
            w.writerow([format_ipv6(r.target), int(bool(r.responded))])


def read_responses(path: str | Path) -> list[ProbeResponse]:
    with open(path, newline="") as fh:
        return [ProbeResponse(int(parse_ipv6(r["target"])), r["responded"].strip() == "1")
                for r in csv.DictReader(fh)]


def write_verdicts(path: str | Path, verdicts: Iterable[AliasVerdict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["prefix", "evidence"])
        for v in verdicts:
            w.writerow([str(v.prefix), format_ipv6(v.evidence)])


def read_verdicts(path: str | Path) -> list[AliasVerdict]:
    with open(path, newline="") as fh:
        return [AliasVerdict(parse_prefix(r["prefix"]), True, int(parse_ipv6(r["evidence"])))
                for r in csv.DictReader(fh)]


def summary_dict(inference: AliasInference, comparison: AliasComparison | None = None) -> dict:
    return {
        "client_hit_rate": inference.client_hit_rate,
        "random_hit_rate": inference.random_hit_rate,
        "aliased_64_count": len(inference.verdicts),
        "known": comparison.known if comparison else None,
        "new": comparison.new if comparison else None,
    }


def write_summary(path: str | Path, inference: AliasInference, comparison: AliasComparison | None = None) -> None:
    Path(path).write_text(json.dumps(summary_dict(inference, comparison), indent=2) + "\n")
