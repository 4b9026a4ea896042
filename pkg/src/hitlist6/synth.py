"""Synthetic observation corpora with planted ground truth.

A scenario describes ASes (address pools, addressing-strategy mix, prefix
rotation), mobile devices with explicit AS schedules, aliased /64s and
vendor OUIs with a planted wired-to-BSSID offset. ``generate_corpus`` emits
observations plus every input file the analysis modules read, and a
``GroundTruth`` whose labels are derived here by straight-line rules that do
not share code with the analysis modules.
"""
from __future__ import annotations

import json
import math
import socket
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ScenarioError

STRATEGIES = (
    "Eui64Slaac",
    "RandomPrivacy",
    "LowByte",
    "Low2Bytes",
    "Zeroes",
    "Ipv4EmbeddedHexLow32",
    "Ipv4EmbeddedDecimalHextets",
)
MOBILE_STRATEGIES = ("Eui64Slaac", "RandomPrivacy")
DAY = 86400
_U64 = 1 << 64


# ---------------------------------------------------------------- scenario


def _net6(text: str) -> tuple[int, int]:
    addr, _, plen = text.partition("/")
    try:
        base = int.from_bytes(socket.inet_pton(socket.AF_INET6, addr), "big")
        length = int(plen)
    except (OSError, ValueError):
        raise ScenarioError(f"bad IPv6 prefix {text!r}") from None
    if base & ((1 << (128 - length)) - 1):
        raise ScenarioError(f"host bits set in {text!r}")
    return base, length


def _net4(text: str) -> tuple[int, int]:
    addr, _, plen = text.partition("/")
    try:
        base = int.from_bytes(socket.inet_pton(socket.AF_INET, addr), "big")
        length = int(plen)
    except (OSError, ValueError):
        raise ScenarioError(f"bad IPv4 prefix {text!r}") from None
    if base & ((1 << (32 - length)) - 1):
        raise ScenarioError(f"host bits set in {text!r}")
    return base, length


def _mac_int(text: str) -> int:
    return int(text.replace(":", "").replace("-", ""), 16)


@dataclass
class AsSpec:
    asn: int
    country: str
    v6_prefix: str
    v4_prefix: str | None = None
    devices: int = 0
    strategies: dict[str, float] = field(default_factory=lambda: {"RandomPrivacy": 1.0})
    rotation_period: int | None = None
    location: tuple[float, float] | None = None
    sighting_rate: float | None = None
    sighting_interval: int | None = None


@dataclass
class MobilitySpec:
    device: str
    schedule: list[tuple[int, int]]
    strategy: str = "Eui64Slaac"
    mac: str | None = None
    oui: str | None = None
    sighting_rate: float | None = None
    sighting_interval: int | None = None


@dataclass
class AliasSpec:
    asn: int
    count: int = 1
    clients: int = 1


@dataclass
class OuiSpec:
    oui: str
    vendor: str = ""
    bssid_offset: int | None = None
    decoys: int = 0
    weight: float = 1.0


@dataclass
class ScenarioSpec:
    ases: list[AsSpec]
    duration: int = DAY
    sighting_rate: float = 1.0
    sighting_interval: int | None = None
    mobility: list[MobilitySpec] = field(default_factory=list)
    aliased: list[AliasSpec] = field(default_factory=list)
    ouis: list[OuiSpec] = field(default_factory=list)
    published_alias_fraction: float = 1.0
    vantages: list[str] = field(default_factory=lambda: ["v0"])
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ScenarioSpec":
        d = dict(d)
        try:
            d["ases"] = [AsSpec(**{**a, "location": tuple(a["location"]) if a.get("location") else None})
                         for a in d.get("ases", [])]
            d["mobility"] = [MobilitySpec(**{**m, "schedule": [tuple(x) for x in m["schedule"]]})
                             for m in d.get("mobility", [])]
            d["aliased"] = [AliasSpec(**a) for a in d.get("aliased", [])]
            d["ouis"] = [OuiSpec(**o) for o in d.get("ouis", [])]
            spec = cls(**d)
        except (TypeError, KeyError) as exc:
            raise ScenarioError(f"invalid scenario: {exc}") from None
        spec.validate()
        return spec

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def validate(self) -> None:
        if self.duration <= 0:
            raise ScenarioError("duration must be positive")
        asns = [a.asn for a in self.ases]
        if len(set(asns)) != len(asns):
            raise ScenarioError("duplicate ASN in scenario")
        v6 = []
        v4 = []
        for a in self.ases:
            base, plen = _net6(a.v6_prefix)
            if not 2 <= plen <= 60:
                raise ScenarioError(f"AS{a.asn}: v6 pool length must be between /2 and /60")
            v6.append((base, plen, a.asn))
            if a.v4_prefix:
                b4, l4 = _net4(a.v4_prefix)
                if l4 > 30:
                    raise ScenarioError(f"AS{a.asn}: v4 pool too small")
                v4.append((b4, l4, a.asn))
            if not a.strategies:
                raise ScenarioError(f"AS{a.asn}: empty strategy mix")
            for k, w in a.strategies.items():
                if k not in STRATEGIES:
                    raise ScenarioError(f"AS{a.asn}: unknown strategy {k!r}")
                if w < 0:
                    raise ScenarioError(f"AS{a.asn}: negative weight for {k}")
            if abs(sum(a.strategies.values()) - 1.0) > 1e-9:
                raise ScenarioError(f"AS{a.asn}: strategy weights must sum to 1")
            if any(k.startswith("Ipv4") and a.strategies[k] > 0 for k in a.strategies) and not a.v4_prefix:
                raise ScenarioError(f"AS{a.asn}: IPv4-embedding strategy needs a v4 pool")
            if a.rotation_period is not None and a.rotation_period <= 0:
                raise ScenarioError(f"AS{a.asn}: rotation_period must be positive")
            if len(a.country) != 2:
                raise ScenarioError(f"AS{a.asn}: country must be ISO alpha-2")
        for pools, bits in ((v6, 128), (v4, 32)):
            for i, (b1, l1, a1) in enumerate(pools):
                for b2, l2, a2 in pools[i + 1:]:
                    m = min(l1, l2)
                    if b1 >> (bits - m) == b2 >> (bits - m):
                        raise ScenarioError(f"overlapping prefixes for AS{a1} and AS{a2}")
        known = set(asns)
        for m in self.mobility:
            if not m.schedule:
                raise ScenarioError(f"mobility device {m.device}: empty schedule")
            if m.strategy not in MOBILE_STRATEGIES:
                raise ScenarioError(f"mobility device {m.device}: strategy must be one of {MOBILE_STRATEGIES}")
            if m.mac is not None and m.strategy != "Eui64Slaac":
                raise ScenarioError(f"mobility device {m.device}: explicit MAC needs Eui64Slaac")
            starts = [t for t, _ in m.schedule]
            if starts != sorted(starts) or starts[0] < 0:
                raise ScenarioError(f"mobility device {m.device}: schedule must be sorted from t>=0")
            for _, asn in m.schedule:
                if asn not in known:
                    raise ScenarioError(f"mobility device {m.device}: unknown AS{asn}")
        for al in self.aliased:
            if al.asn not in known:
                raise ScenarioError(f"aliased entry references unknown AS{al.asn}")
        for o in self.ouis:
            v = _mac_int(o.oui)
            if v >> 24:
                raise ScenarioError(f"bad OUI {o.oui!r}")
            if o.bssid_offset is not None and not 0 < abs(o.bssid_offset) < 1 << 23:
                raise ScenarioError(f"OUI {o.oui}: offset must be non-zero and small")
        if not 0.0 <= self.published_alias_fraction <= 1.0:
            raise ScenarioError("published_alias_fraction must be in [0, 1]")
        if not self.vantages:
            raise ScenarioError("at least one vantage is required")


# ---------------------------------------------------------------- truth


@dataclass
class DeviceTruth:
    device: str
    strategy: str
    home_asn: int
    iid: int
    mac: int | None
    sightings: int
    addresses: list[int]
    category: str
    track_class: str | None = None
    transitions: int | None = None
    bssid: int | None = None
    location: tuple[float, float] | None = None


@dataclass
class GroundTruth:
    devices: list[DeviceTruth]
    address_categories: dict[int, str]
    address_asn: dict[int, int]
    mac_track_class: dict[int, str]
    mac_transitions: dict[int, int]
    aliased_64s: list[int]
    published_aliased_64s: list[int]
    alias_clients_per_as: dict[int, int]
    oui_offsets: dict[int, int]
    geolocated: dict[int, tuple[float, float]]
    ipv4_accepted_ases: list[int]
    as_totals: dict[int, int]
    planted_singleton_fraction: float
    observations: int
    unique_addresses: int

    def to_dict(self) -> dict:
        def a6(v: int) -> str:
            return socket.inet_ntop(socket.AF_INET6, v.to_bytes(16, "big"))

        def mac(v: int) -> str:
            return ":".join(f"{v:012x}"[i:i + 2] for i in range(0, 12, 2))

        return {
            "observations": self.observations,
            "unique_addresses": self.unique_addresses,
            "planted_singleton_fraction": self.planted_singleton_fraction,
            "ipv4_accepted_ases": self.ipv4_accepted_ases,
            "as_totals": {str(k): v for k, v in sorted(self.as_totals.items())},
            "address_categories": {a6(k): v for k, v in sorted(self.address_categories.items())},
            "mac_track_class": {mac(k): v for k, v in sorted(self.mac_track_class.items())},
            "mac_transitions": {mac(k): v for k, v in sorted(self.mac_transitions.items())},
            "aliased_64s": [f"{a6(p << 64)}/64" for p in self.aliased_64s],
            "published_aliased_64s": [f"{a6(p << 64)}/64" for p in self.published_aliased_64s],
            "alias_clients_per_as": {str(k): v for k, v in sorted(self.alias_clients_per_as.items())},
            "oui_offsets": {mac(k << 24)[:8]: v for k, v in sorted(self.oui_offsets.items())},
            "geolocated": {mac(k): list(v) for k, v in sorted(self.geolocated.items())},
        }


def _shannon_nibbles(iid: int) -> float:
    digits = f"{iid:016x}"
    h = 0.0
    for n in Counter(digits).values():
        p = n / 16
        h -= p * math.log2(p)
    return h / 4


def _truth_category(iid: int, embedded_ok: bool) -> str:
    if iid == 0:
        return "Zeroes"
    if iid <= 0xFF:
        return "LowByte"
    if iid <= 0xFFFF:
        return "Low2Bytes"
    if embedded_ok:
        return "Ipv4Mapped"
    e = _shannon_nibbles(iid)
    if e > 0.75:
        return "HighEntropy"
    if e < 0.25:
        return "LowEntropy"
    return "MediumEntropy"


def _truth_track(sightings: list[tuple[int, int, int, str]]) -> tuple[str, int]:
    """(class, transitions) from (time, /64, asn, country) sightings."""
    ordered = sorted(sightings, key=lambda s: (s[0], s[1]))
    nets = [s[1] for s in ordered]
    transitions = sum(1 for a, b in zip(nets, nets[1:]) if a != b)
    if len(set(nets)) < 2:
        return "NotTrackable", transitions
    many_as = len({s[2] for s in ordered}) >= 2
    many_cc = len({s[3] for s in ordered}) >= 2
    many_tr = transitions >= 11
    if not many_as and not many_cc:
        return ("PrefixReassignment" if many_tr else "MostlyStatic"), transitions
    if many_as and many_cc and many_tr:
        return "MacReuse", transitions
    if many_as and not many_cc:
        return ("UserMovement" if many_tr else "ChangingProviders"), transitions
    return "Ambiguous", transitions


# ---------------------------------------------------------------- generation


@dataclass
class _Device:
    key: str
    strategy: str
    schedule: list[tuple[int, int]]
    rate: float
    interval: int | None
    pinned64: int | None = None
    mac: int | None = None
    oui: int | None = None
    iid: int = 0
    embedded_v4: int | None = None
    times: list[int] = field(default_factory=list)


@dataclass
class Corpus:
    observations: list  # list[Observation]
    truth: GroundTruth
    geo: list  # list[GeoBssid]
    spec: ScenarioSpec

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        return write_corpus(self, out_dir)


def _largest_remainder(weights: dict[str, float], n: int) -> list[str]:
    kinds = [k for k in STRATEGIES if weights.get(k, 0) > 0]
    raw = {k: weights[k] * n for k in kinds}
    counts = {k: int(math.floor(raw[k])) for k in kinds}
    left = n - sum(counts.values())
    for k in sorted(kinds, key=lambda k: (-(raw[k] - counts[k]), STRATEGIES.index(k)))[:left]:
        counts[k] += 1
    return [k for k in kinds for _ in range(counts[k])]


class _Generator:
    def __init__(self, spec: ScenarioSpec, threshold_count: int, threshold_frac: float):
        self.spec = spec
        self.tc = threshold_count
        self.tf = threshold_frac
        self.rng = np.random.default_rng(spec.seed)
        self.as_by_num = {a.asn: a for a in spec.ases}
        self.v6 = {a.asn: _net6(a.v6_prefix) for a in spec.ases}
        self.v4 = {a.asn: _net4(a.v4_prefix) for a in spec.ases if a.v4_prefix}
        self.used64: set[int] = set()
        self.used_macs: set[int] = set()
        self.net_of: dict[tuple[str, int, int], int] = {}
        oui_w = [(o, o.weight) for o in spec.ouis if o.weight > 0]
        self.ouis = [o for o, _ in oui_w]
        tot = sum(w for _, w in oui_w)
        self.oui_p = [w / tot for _, w in oui_w] if oui_w else []

    # --- draws
    def u64(self) -> int:
        return int(self.rng.integers(0, _U64, dtype=np.uint64))

    def randbits(self, bits: int) -> int:
        return int(self.rng.integers(0, 1 << bits)) if bits <= 62 else self.u64() >> (64 - bits)

    def new_net64(self, asn: int) -> int:
        base, plen = self.v6[asn]
        for _ in range(1000):
            net = (base >> 64) | self.randbits(64 - plen)
            if net not in self.used64:
                self.used64.add(net)
                return net
        raise ScenarioError(f"AS{asn}: v6 pool exhausted")

    def in_any_v4(self, v: int) -> bool:
        return any(v >> (32 - l) == b >> (32 - l) for b, l in self.v4.values())

    def embeddings_clash(self, iid: int) -> bool:
        """True if any IPv4 reading of ``iid`` lands in some AS's v4 pool."""
        readings = [iid & 0xFFFFFFFF, iid >> 32]
        dec = 0
        for s in (48, 32, 16, 0):
            t = f"{(iid >> s) & 0xFFFF:x}"
            if not t.isdigit() or int(t) > 255:
                dec = None
                break
            dec = (dec << 8) | int(t)
        if dec is not None:
            readings.append(dec)
        return any(r >> 24 and self.in_any_v4(r) for r in readings)

    def pick_oui(self) -> OuiSpec | None:
        if not self.ouis:
            return None
        return self.ouis[int(self.rng.choice(len(self.ouis), p=self.oui_p))]

    def draw_mac(self, oui: int | None) -> int:
        for _ in range(10000):
            if oui is None:
                o = self.randbits(24) & ~0x030000  # universal, unicast
            else:
                o = oui
            mac = (o << 24) | self.randbits(24)
            iid = _embed(mac)
            if mac in self.used_macs or self.embeddings_clash(iid):
                continue
            spec = self._oui_spec(o)
            if spec is not None and spec.bssid_offset is not None:
                if not 0 <= (mac & 0xFFFFFF) + spec.bssid_offset < 1 << 24:
                    continue
            self.used_macs.add(mac)
            return mac
        raise ScenarioError("could not draw a fresh MAC")

    def _oui_spec(self, oui: int) -> OuiSpec | None:
        for o in self.ouis:
            if _mac_int(o.oui) == oui:
                return o
        return None

    def draw_iid(self, dev: _Device, asn: int) -> None:
        s = dev.strategy
        if s == "Eui64Slaac":
            if dev.mac is None:
                oui = dev.oui
                if oui is None:
                    spec = self.pick_oui()
                    oui = _mac_int(spec.oui) if spec else None
                dev.mac = self.draw_mac(oui)
            dev.iid = _embed(dev.mac)
        elif s == "RandomPrivacy":
            while True:
                iid = self.u64()
                if (_shannon_nibbles(iid) >= 0.76 and (iid >> 24) & 0xFFFF != 0xFFFE
                        and not self.embeddings_clash(iid)):
                    dev.iid = iid
                    break
        elif s == "LowByte":
            dev.iid = int(self.rng.integers(1, 256))
        elif s == "Low2Bytes":
            dev.iid = int(self.rng.integers(256, 1 << 16))
        elif s == "Zeroes":
            dev.iid = 0
        else:
            base, plen = self.v4[asn]
            while True:
                v4 = base | self.randbits(32 - plen)
                if not v4 >> 24:
                    continue
                if s == "Ipv4EmbeddedHexLow32":
                    iid = v4
                else:
                    iid = 0
                    for sh in (24, 16, 8, 0):
                        iid = (iid << 16) | int(str((v4 >> sh) & 0xFF), 16)
                # HexLow32 IIDs have no other valid reading; decimal ones must not
                # read as a pooled address under either hex encoding
                other = s == "Ipv4EmbeddedDecimalHextets" and any(
                    r >> 24 and self.in_any_v4(r) for r in (iid & 0xFFFFFFFF, iid >> 32))
                if not other:
                    dev.iid, dev.embedded_v4 = iid, v4
                    break

    def draw_times(self, dev: _Device) -> None:
        dur = self.spec.duration
        if dev.interval:
            dev.times = list(range(0, dur, dev.interval))
        else:
            n = int(self.rng.poisson(dev.rate * dur / DAY))
            dev.times = sorted(int(t) for t in self.rng.integers(0, dur, size=n))

    def asn_at(self, dev: _Device, t: int) -> int:
        cur = dev.schedule[0][1]
        for start, asn in dev.schedule:
            if start <= t:
                cur = asn
            else:
                break
        return cur

    def net_at(self, dev: _Device, asn: int, t: int) -> int:
        if dev.pinned64 is not None:
            return dev.pinned64
        period = self.as_by_num[asn].rotation_period
        epoch = t // period if period else 0
        key = (dev.key, asn, epoch)
        net = self.net_of.get(key)
        if net is None:
            net = self.net_of[key] = self.new_net64(asn)
        return net

    # --- main
    def run(self) -> Corpus:
        from .geolink import GeoBssid
        from .observations import Observation

        spec = self.spec
        devices: list[_Device] = []
        for a in spec.ases:
            kinds = _largest_remainder(a.strategies, a.devices)
            order = self.rng.permutation(len(kinds))
            rate = a.sighting_rate if a.sighting_rate is not None else spec.sighting_rate
            interval = a.sighting_interval if a.sighting_interval is not None else spec.sighting_interval
            for i, j in enumerate(order):
                devices.append(_Device(f"AS{a.asn}-{i}", kinds[j], [(0, a.asn)], rate, interval))
        aliased: list[int] = []
        alias_devices: list[_Device] = []
        for al in spec.aliased:
            a = self.as_by_num[al.asn]
            for k in range(al.count):
                net = self.new_net64(al.asn)
                aliased.append(net)
                for c in range(al.clients):
                    alias_devices.append(_Device(
                        f"alias-AS{al.asn}-{k}-{c}", "RandomPrivacy", [(0, al.asn)],
                        a.sighting_rate if a.sighting_rate is not None else spec.sighting_rate,
                        a.sighting_interval if a.sighting_interval is not None else spec.sighting_interval,
                        pinned64=net))
        devices.extend(alias_devices)
        shared_mac: dict[int, list[_Device]] = defaultdict(list)
        for m in spec.mobility:
            dev = _Device(m.device, m.strategy, list(m.schedule),
                          m.sighting_rate if m.sighting_rate is not None else spec.sighting_rate,
                          m.sighting_interval if m.sighting_interval is not None else spec.sighting_interval)
            if m.mac is not None:
                dev.mac = _mac_int(m.mac)
                shared_mac[dev.mac].append(dev)
            elif m.oui is not None:
                dev.oui = _mac_int(m.oui)
            devices.append(dev)
        self.used_macs |= set(shared_mac)

        for dev in devices:
            self.draw_iid(dev, dev.schedule[0][1])
        for dev in devices:
            self.draw_times(dev)

        # emit
        obs = []
        addr_draws: Counter = Counter()
        addr_asn: dict[int, int] = {}
        dev_addrs: dict[str, list[int]] = {}
        dev_sightings: dict[str, list[tuple[int, int, int, str]]] = {}
        n_vant = len(spec.vantages)
        for dev in devices:
            addrs = []
            sightings = []
            vant = self.rng.integers(0, n_vant, size=len(dev.times)) if dev.times else []
            for t, v in zip(dev.times, vant):
                asn = self.asn_at(dev, t)
                net = self.net_at(dev, asn, t)
                addr = (net << 64) | dev.iid
                obs.append(Observation(t, addr, spec.vantages[int(v)]))
                addr_draws[addr] += 1
                addr_asn[addr] = asn
                if not addrs or addrs[-1] != addr:
                    addrs.append(addr)
                sightings.append((t, net, asn, self.as_by_num[asn].country))
            dev_addrs[dev.key] = list(dict.fromkeys(addrs))
            dev_sightings[dev.key] = sightings
        obs.sort(key=lambda o: (o.timestamp, o.addr, o.vantage))

        # IPv4-embedding acceptance, straight from the planted strategies
        as_totals = Counter(addr_asn.values())
        embedded_per_as: Counter = Counter()
        for dev in devices:
            if dev.embedded_v4 is not None:
                for a in dev_addrs[dev.key]:
                    embedded_per_as[addr_asn[a]] += 1
        accepted = sorted(asn for asn, n in embedded_per_as.items()
                          if n >= self.tc and n > self.tf * as_totals[asn])

        truths = []
        address_categories = {}
        mac_sightings: dict[int, list] = defaultdict(list)
        for dev in devices:
            if not dev.times:
                continue
            ok = dev.embedded_v4 is not None and dev.schedule[0][1] in accepted
            cat = _truth_category(dev.iid, ok)
            for a in dev_addrs[dev.key]:
                address_categories[a] = cat
            truths.append(DeviceTruth(dev.key, dev.strategy, dev.schedule[0][1], dev.iid, dev.mac,
                                      len(dev.times), dev_addrs[dev.key], cat))
            if dev.mac is not None:
                mac_sightings[dev.mac].extend(dev_sightings[dev.key])
        mac_class = {}
        mac_trans = {}
        for mac, s in mac_sightings.items():
            mac_class[mac], mac_trans[mac] = _truth_track(s)
        for t in truths:
            if t.mac is not None:
                t.track_class, t.transitions = mac_class[t.mac], mac_trans[t.mac]

        # geolocation corpus
        geo = []
        geolocated = {}
        oui_offsets = {}
        true_bssids: dict[int, set[int]] = defaultdict(set)
        for o in self.ouis:
            if o.bssid_offset is not None:
                oui_offsets[_mac_int(o.oui)] = o.bssid_offset
        for t in truths:
            if t.mac is None or (t.mac >> 24) not in oui_offsets or t.mac in geolocated:
                continue
            home = self.as_by_num[t.home_asn]
            lat0, lon0 = home.location or _default_location(home.asn)
            lat = float(np.clip(lat0 + self.rng.uniform(-0.1, 0.1), -90, 90))
            lon = float(np.clip(lon0 + self.rng.uniform(-0.1, 0.1), -180, 180))
            bssid = t.mac + oui_offsets[t.mac >> 24]
            geo.append(GeoBssid.make(bssid, round(lat, 6), round(lon, 6)))
            true_bssids[t.mac >> 24].add(bssid)
            geolocated[t.mac] = (round(lat, 6), round(lon, 6))
            t.bssid, t.location = bssid, geolocated[t.mac]
        for o in self.ouis:
            oui = _mac_int(o.oui)
            taken = true_bssids[oui] | {m for m in self.used_macs if m >> 24 == oui}
            made = 0
            while made < o.decoys:
                b = (oui << 24) | self.randbits(24)
                if b in taken:
                    continue
                taken.add(b)
                geo.append(GeoBssid.make(b, round(float(self.rng.uniform(-60, 60)), 6),
                                         round(float(self.rng.uniform(-180, 180)), 6)))
                made += 1
        geo.sort(key=lambda g: int(g.bssid))

        n_pub = int(round(spec.published_alias_fraction * len(aliased)))
        published = sorted(aliased[:n_pub])
        alias_clients = Counter(d.schedule[0][1] for d in alias_devices if d.times)
        singles = sum(1 for n in addr_draws.values() if n == 1)
        truth = GroundTruth(
            devices=truths,
            address_categories=address_categories,
            address_asn=addr_asn,
            mac_track_class=mac_class,
            mac_transitions=mac_trans,
            aliased_64s=sorted(aliased),
            published_aliased_64s=published,
            alias_clients_per_as=dict(alias_clients),
            oui_offsets=oui_offsets,
            geolocated=geolocated,
            ipv4_accepted_ases=accepted,
            as_totals=dict(as_totals),
            planted_singleton_fraction=singles / len(addr_draws) if addr_draws else 0.0,
            observations=len(obs),
            unique_addresses=len(addr_draws),
        )
        return Corpus(obs, truth, geo, spec)


def _embed(mac: int) -> int:
    m = mac ^ (0x02 << 40)
    return ((m >> 24) << 40) | (0xFFFE << 24) | (m & 0xFFFFFF)


def _default_location(asn: int) -> tuple[float, float]:
    r = np.random.default_rng(asn)
    return float(r.uniform(-50, 60)), float(r.uniform(-170, 170))


def generate_corpus(scenario: ScenarioSpec | dict, threshold_count: int = 100,
                    threshold_frac: float = 0.10) -> Corpus:
    """Deterministic corpus and ground truth for ``scenario``."""
    spec = scenario if isinstance(scenario, ScenarioSpec) else ScenarioSpec.from_dict(scenario)
    spec.validate()
    return _Generator(spec, threshold_count, threshold_frac).run()


def write_corpus(corpus: Corpus, out_dir: str | Path) -> dict[str, Path]:
    """Write every pipeline input plus ``truth.json`` into ``out_dir``."""
    from .eui64 import OuiDatabase
    from .geolink import CountryGrid, write_geo_corpus
    from .observations import write_log

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = corpus.spec
    paths = {
        "observations": out / "observations.csv",
        "asn": out / "asn.txt",
        "country": out / "country.csv",
        "alias": out / "aliases.txt",
        "aliased_truth": out / "aliased_truth.txt",
        "oui": out / "oui.csv",
        "geo": out / "geo.csv",
        "grid": out / "grid.csv",
        "truth": out / "truth.json",
    }
    write_log(paths["observations"], corpus.observations)

    def a6(v: int) -> str:
        return socket.inet_ntop(socket.AF_INET6, v.to_bytes(16, "big"))

    with open(paths["asn"], "w") as fh:
        for a in spec.ases:
            base, plen = _net6(a.v6_prefix)
            fh.write(f"{a6(base)}/{plen} {a.asn}\n")
            if a.v4_prefix:
                fh.write(f"{a.v4_prefix} {a.asn}\n")
    with open(paths["country"], "w") as fh:
        for a in spec.ases:
            base, plen = _net6(a.v6_prefix)
            fh.write(f"{a6(base)}/{plen},{a.country.upper()}\n")
    with open(paths["alias"], "w") as fh:
        fh.write("# published aliased prefixes\n")
        for net in corpus.truth.published_aliased_64s:
            fh.write(f"{a6(net << 64)}/64\n")
    with open(paths["aliased_truth"], "w") as fh:
        fh.write("# every planted aliased /64, for the mock responder\n")
        for net in corpus.truth.aliased_64s:
            fh.write(f"{a6(net << 64)}/64\n")
    OuiDatabase({_mac_int(o.oui): o.vendor or f"Vendor {o.oui.upper()}" for o in spec.ouis}).to_csv(paths["oui"])
    write_geo_corpus(paths["geo"], corpus.geo)
    boxes = []
    for a in spec.ases:
        lat, lon = a.location or _default_location(a.asn)
        boxes.append((lat - 0.5, lat + 0.5, lon - 0.5, lon + 0.5, a.country.upper()))
    CountryGrid(boxes).to_csv(paths["grid"])
    with open(paths["truth"], "w") as fh:
        json.dump(corpus.truth.to_dict(), fh, indent=1, sort_keys=True)
    return paths


# ---------------------------------------------------------------- focused plants


def plant_bssid_corpus(ouis: list[dict], seed: int = 0):
    """Wired MACs and a geo corpus for offset-recovery checks.

    Each entry is ``{"oui": "..", "offset": k, "devices": n, "decoys": m}``.
    Returns ``(wired_macs, geo_corpus, truth)`` where ``truth`` maps each
    device MAC to its planted ``(lat, lon)``.
    """
    from .geolink import GeoBssid

    rng = np.random.default_rng(seed)
    wired, geo, truth = [], [], {}
    for spec in ouis:
        oui = _mac_int(spec["oui"])
        off = spec["offset"]
        nics: set[int] = set()
        bssids: set[int] = set()
        while len(nics) < spec["devices"]:
            n = int(rng.integers(0, 1 << 24))
            if 0 <= n + off < 1 << 24 and n not in nics and n + off not in bssids and n not in bssids \
                    and n + off not in nics:
                nics.add(n)
                bssids.add(n + off)
        for n in sorted(nics):
            mac = (oui << 24) | n
            lat, lon = round(float(rng.uniform(-60, 60)), 6), round(float(rng.uniform(-180, 180)), 6)
            wired.append(mac)
            geo.append(GeoBssid.make(mac + off, lat, lon))
            truth[mac] = (lat, lon)
        made = 0
        while made < spec.get("decoys", 0):
            n = int(rng.integers(0, 1 << 24))
            if n in bssids or n in nics or n - off in nics:
                continue
            bssids.add(n)
            geo.append(GeoBssid.make((oui << 24) | n, round(float(rng.uniform(-60, 60)), 6),
                                     round(float(rng.uniform(-180, 180)), 6)))
            made += 1
    return wired, geo, truth
