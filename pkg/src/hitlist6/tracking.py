"""Per-MAC timelines, lifetime statistics and the tracking classifier."""
from __future__ import annotations

import bisect
import csv
import enum
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, NamedTuple

from .addr import MAX64
from .errors import EmptyInputError
from .eui64 import MacAddress, extract_mac, is_apparent_eui64
from .observations import Observation
from .prefixmap import PrefixTable

AS_HIGH = 1
COUNTRY_HIGH = 1
TRANSITIONS_HIGH = 10


class Sighting(NamedTuple):
    timestamp: int
    prefix64: int  # network half of the address
    asn: int | None
    country: str | None


@dataclass
class MacTimeline:
    mac: MacAddress
    sightings: list[Sighting] = field(default_factory=list)

    def sort(self) -> None:
        self.sightings.sort(key=lambda s: (s.timestamp, s.prefix64))

    @property
    def first_seen(self) -> int:
        return self.sightings[0].timestamp

    @property
    def last_seen(self) -> int:
        return self.sightings[-1].timestamp


class Timelines(dict):
    """``MacAddress -> MacTimeline``; ``skipped`` counts non-EUI-64 observations."""

    skipped: int = 0


class FeatureVector(NamedTuple):
    as_count: int
    country_count: int
    transitions: int
    prefix64_count: int


class TrackClass(enum.Enum):
    NOT_TRACKABLE = "NotTrackable"
    MOSTLY_STATIC = "MostlyStatic"
    PREFIX_REASSIGNMENT = "PrefixReassignment"
    MAC_REUSE = "MacReuse"
    CHANGING_PROVIDERS = "ChangingProviders"
    USER_MOVEMENT = "UserMovement"
    AMBIGUOUS = "Ambiguous"


# (AS high, country high, transitions high) -> class
_DECISION = {
    (False, False, False): TrackClass.MOSTLY_STATIC,
    (False, False, True): TrackClass.PREFIX_REASSIGNMENT,
    (True, True, True): TrackClass.MAC_REUSE,
    (True, False, False): TrackClass.CHANGING_PROVIDERS,
    (True, False, True): TrackClass.USER_MOVEMENT,
    (False, True, False): TrackClass.AMBIGUOUS,
    (False, True, True): TrackClass.AMBIGUOUS,
    (True, True, False): TrackClass.AMBIGUOUS,
}


def build_timelines(
    observations: Iterable[Observation],
    asmap: PrefixTable | None = None,
    countrymap: PrefixTable | None = None,
) -> Timelines:
    out = Timelines()
    attr_cache: dict[int, tuple] = {}
    skipped = 0
    for obs in observations:
        addr = obs.addr
        iid = addr & MAX64
        if not is_apparent_eui64(iid):
            skipped += 1
            continue
        attrs = attr_cache.get(addr)
        if attrs is None:
            attrs = attr_cache[addr] = (
                asmap.lookup(addr) if asmap is not None else None,
                countrymap.lookup(addr) if countrymap is not None else None,
            )
        mac = extract_mac(iid)
        tl = out.get(mac)
        if tl is None:
            tl = out[mac] = MacTimeline(mac)
        tl.sightings.append(Sighting(obs.timestamp, addr >> 64, attrs[0], attrs[1]))
    for tl in out.values():
        tl.sort()
    out.skipped = skipped
    return out


def count_transitions(timeline: MacTimeline) -> int:
    s = timeline.sightings
    return sum(1 for i in range(1, len(s)) if s[i].prefix64 != s[i - 1].prefix64)


def feature_vector(timeline: MacTimeline) -> FeatureVector:
    s = timeline.sightings
    if not s:
        raise EmptyInputError("timeline has no sightings")
    return FeatureVector(
        as_count=len({x.asn for x in s if x.asn is not None}),
        country_count=len({x.country for x in s if x.country is not None}),
        transitions=count_transitions(timeline),
        prefix64_count=len({x.prefix64 for x in s}),
    )


def classify_track(fv: FeatureVector) -> TrackClass:
    if fv.prefix64_count <= 1:
        return TrackClass.NOT_TRACKABLE
    key = (fv.as_count > AS_HIGH, fv.country_count > COUNTRY_HIGH, fv.transitions > TRANSITIONS_HIGH)
    return _DECISION[key]


def classify_timelines(timelines: Mapping[MacAddress, MacTimeline]) -> dict[MacAddress, tuple[TrackClass, FeatureVector]]:
    out = {}
    for mac, tl in timelines.items():
        fv = feature_vector(tl)
        out[mac] = (classify_track(fv), fv)
    return out


# ---------------------------------------------------------------- lifetimes


class Lifetime(NamedTuple):
    first_seen: int
    last_seen: int

    @property
    def lifetime(self) -> int:
        return self.last_seen - self.first_seen


_KEYS: dict[str, Callable[[int], int | None]] = {
    "address": lambda a: a,
    "iid": lambda a: a & MAX64,
    "mac": lambda a: extract_mac(a & MAX64) if is_apparent_eui64(a & MAX64) else None,
}


def lifetimes(observations: Iterable[Observation], key: str = "address") -> dict[int, Lifetime]:
    """First/last sighting per address, IID or embedded MAC."""
    try:
        keyfn = _KEYS[key]
    except KeyError:
        raise ValueError(f"key must be one of {sorted(_KEYS)}") from None
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    for obs in observations:
        k = keyfn(obs.addr)
        if k is None:
            continue
        t = obs.timestamp
        f = first.get(k)
        if f is None:
            first[k] = last[k] = t
        else:
            if t < f:
                first[k] = t
            if t > last[k]:
                last[k] = t
    return {k: Lifetime(first[k], last[k]) for k in first}


def ccdf(values: Iterable[float]) -> list[tuple[float, float]]:
    """``(x, P(V > x))`` at each distinct value of ``values``."""
    vals = sorted(values)
    n = len(vals)
    if n == 0:
        raise EmptyInputError("cannot build a CCDF from no values")
    out = []
    for x in sorted(set(vals)):
        out.append((x, (n - bisect.bisect_right(vals, x)) / n))
    return out


def lifetime_ccdf(stats: Mapping[int, Lifetime]) -> list[tuple[float, float]]:
    return ccdf(l.lifetime for l in stats.values())


@dataclass
class PrefixSpread:
    counts: dict[MacAddress, int]
    ccdf: list[tuple[float, float]]
    trackable_fraction: float


def prefix_spread(timelines: Mapping[MacAddress, MacTimeline]) -> PrefixSpread:
    if not timelines:
        raise EmptyInputError("no timelines")
    counts = {mac: len({s.prefix64 for s in tl.sightings}) for mac, tl in timelines.items()}
    trackable = sum(1 for c in counts.values() if c >= 2) / len(counts)
    return PrefixSpread(counts, ccdf(counts.values()), trackable)


# ---------------------------------------------------------------- reports


def write_tracking_report(path: str | Path, timelines: Mapping[MacAddress, MacTimeline]) -> dict[MacAddress, TrackClass]:
    classes = {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mac", "class", "as_count", "country_count", "transitions", "prefix64_count",
                    "first_seen", "last_seen"])
        for mac in sorted(timelines):
            tl = timelines[mac]
            fv = feature_vector(tl)
            cls = classify_track(fv)
            classes[mac] = cls
            w.writerow([str(mac), cls.value, *fv[:2], fv.transitions, fv.prefix64_count,
                        tl.first_seen, tl.last_seen])
    return classes


def read_tracking_report(path: str | Path) -> dict[MacAddress, TrackClass]:
    with open(path, newline="") as fh:
        return {MacAddress.parse(r["mac"]): TrackClass(r["class"]) for r in csv.DictReader(fh)}


def write_ccdf(path: str | Path, points: Iterable[tuple[float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "ccdf"])
        for x, y in points:
            w.writerow([x, f"{y:.6f}"])


def class_counts(classes: Iterable[TrackClass]) -> dict[TrackClass, int]:
    counts: dict[TrackClass, int] = defaultdict(int)
    for c in classes:
        counts[c] += 1
    return {c: counts.get(c, 0) for c in TrackClass}
