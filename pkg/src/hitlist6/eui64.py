"""Apparent EUI-64 detection, MAC extraction/embedding and OUI vendor lookup."""
from __future__ import annotations

import csv
import re
from collections import Counter
from pathlib import Path
from typing import Iterable, Mapping

from .addr import MAX64
from .errors import NotEui64Error

UNLISTED = "Unlisted"

_MAC_RE = re.compile(r"^[0-9a-fA-F]{2}([:-]?)[0-9a-fA-F]{2}(?:\1[0-9a-fA-F]{2}){4}$")
_OUI_RE = re.compile(r"^[0-9a-fA-F]{2}([:-]?)[0-9a-fA-F]{2}\1[0-9a-fA-F]{2}$")


class MacAddress(int):
    """48-bit MAC address; renders as lowercase colon-separated hex."""

    __slots__ = ()

    def __new__(cls, value: int = 0):
        if not 0 <= value < 1 << 48:
            raise ValueError(f"MAC address out of range: {value:#x}")
        return super().__new__(cls, value)

    @classmethod
    def parse(cls, text: str) -> "MacAddress":
        text = text.strip()
        if not _MAC_RE.match(text):
            raise ValueError(f"malformed MAC address {text!r}")
        return cls(int(re.sub(r"[:-]", "", text), 16))

    def oui(self) -> "Oui":
        return Oui(self >> 24)

    def nic(self) -> int:
        return self & 0xFFFFFF

    def __str__(self) -> str:
        h = f"{int(self):012x}"
        return ":".join(h[i:i + 2] for i in range(0, 12, 2))

    def __repr__(self) -> str:
        return f"MacAddress('{self}')"


class Oui(int):
    """Top 24 bits of a MAC."""

    __slots__ = ()

    def __new__(cls, value: int = 0):
        if not 0 <= value < 1 << 24:
            raise ValueError(f"OUI out of range: {value:#x}")
        return super().__new__(cls, value)

    @classmethod
    def parse(cls, text: str) -> "Oui":
        text = text.strip()
        if len(text) == 6 and all(c in "0123456789abcdefABCDEF" for c in text):
            return cls(int(text, 16))
        if not _OUI_RE.match(text):
            raise ValueError(f"malformed OUI {text!r}")
        return cls(int(re.sub(r"[:-]", "", text), 16))

    def __str__(self) -> str:
        h = f"{int(self):06x}"
        return f"{h[0:2]}:{h[2:4]}:{h[4:6]}"

    def __repr__(self) -> str:
        return f"Oui('{self}')"


def is_apparent_eui64(iid: int) -> bool:
    """True when IID bytes 3 and 4 are 0xFF 0xFE."""
    return (iid >> 24) & 0xFFFF == 0xFFFE


def extract_mac(iid: int) -> MacAddress:
    if not is_apparent_eui64(iid):
        raise NotEui64Error(f"IID {iid & MAX64:016x} has no ff:fe marker in bytes 3-4")
    mac = ((iid >> 40) << 24) | (iid & 0xFFFFFF)
    return MacAddress(mac ^ (0x02 << 40))


def embed_mac(mac: int) -> int:
    """Modified EUI-64 IID for ``mac`` (U/L bit flipped, ff:fe inserted)."""
    mac ^= 0x02 << 40
    return ((mac >> 24) << 40) | (0xFFFE << 24) | (mac & 0xFFFFFF)


def expected_random_apparent(corpus_size: int) -> float:
    """Expected number of uniformly random IIDs that look like EUI-64 (p = 2**-16)."""
    if corpus_size < 0:
        raise ValueError("corpus_size must be non-negative")
    return corpus_size / 65536


class OuiDatabase:
    """OUI -> organization name, read-only after construction."""

    def __init__(self, entries: Mapping[int, str] | None = None):
        self._entries = {int(k): v for k, v in (entries or {}).items()}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, oui: int) -> bool:
        return int(oui) in self._entries

    def lookup(self, oui: int) -> str:
        return self._entries.get(int(oui), UNLISTED)

    @classmethod
    def from_csv(cls, path: str | Path) -> "OuiDatabase":
        """Load the IEEE MA-L registry CSV (Registry, Assignment, Organization Name, ...)."""
        entries = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                assignment = (row.get("Assignment") or "").strip()
                if not assignment:
                    continue
                entries[int(assignment, 16)] = (row.get("Organization Name") or "").strip()
        return cls(entries)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
            w.writerow(["Registry", "Assignment", "Organization Name", "Organization Address"])
            for oui, name in sorted(self._entries.items()):
                w.writerow(["MA-L", f"{oui:06X}", name, ""])


def resolve_vendor(mac: int, db: OuiDatabase) -> str:
    return db.lookup(mac >> 24)


def mac_counts(addresses: Iterable[int]) -> Counter:
    """Distinct-address count per embedded MAC over apparent EUI-64 addresses."""
    counts: Counter = Counter()
    for a in set(addresses):
        iid = a & MAX64
        if is_apparent_eui64(iid):
            counts[extract_mac(iid)] += 1
    return counts


def mac_report_rows(counts: Mapping[int, int], db: OuiDatabase) -> list[tuple[str, str, str, int]]:
    """Rows ``(mac, oui, vendor, count)``, count descending then MAC ascending."""
    rows = []
    for mac, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        m = MacAddress(mac)
        rows.append((str(m), str(m.oui()), resolve_vendor(m, db), n))
    return rows


def vendor_counts(macs: Iterable[int], db: OuiDatabase) -> Counter:
    """Distinct MACs per manufacturer (the per-vendor table shape)."""
    return Counter(resolve_vendor(m, db) for m in set(macs))


def write_mac_report(path: str | Path, counts: Mapping[int, int], db: OuiDatabase) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mac", "oui", "vendor", "count"])
        w.writerows(mac_report_rows(counts, db))


def read_mac_report(path: str | Path) -> dict[MacAddress, int]:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[MacAddress.parse(row["mac"])] = int(row.get("count") or 1)
    return out
