"""Longest-prefix-match tables for ASN, country and alias attribution.

Each address family gets its own per-bit binary trie. Tables are built
single-threaded, then frozen; a frozen table is read-only.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator

from .addr import format_ipv6, parse_ipv4, parse_prefix
from .errors import AddressParseError, PrefixFileError

log = logging.getLogger(__name__)

_NO_VALUE = object()

VALUE_KINDS = ("asn", "country", "alias")


class _BitTrie:
    """Uncompressed binary trie over ``width``-bit keys. Node 0 is the root."""

    __slots__ = ("width", "_zero", "_one", "_val")

    def __init__(self, width: int):
        self.width = width
        self._zero = [0]
        self._one = [0]
        self._val: list[Any] = [_NO_VALUE]

    def insert(self, base: int, length: int, value) -> Any:
        """Store ``value``; returns the previous value or ``_NO_VALUE``."""
        node = 0
        shift = self.width - 1
        for _ in range(length):
            branch = self._one if (base >> shift) & 1 else self._zero
            nxt = branch[node]
            if nxt == 0:
                nxt = len(self._val)
                self._zero.append(0)
                self._one.append(0)
                self._val.append(_NO_VALUE)
                branch[node] = nxt
            node = nxt
            shift -= 1
        old = self._val[node]
        self._val[node] = value
        return old

    def lookup(self, key: int):
        zero, one, val = self._zero, self._one, self._val
        best = val[0]
        node = 0
        shift = self.width - 1
        while shift >= 0:
            node = one[node] if (key >> shift) & 1 else zero[node]
            if node == 0:
                break
            v = val[node]
            if v is not _NO_VALUE:
                best = v
            shift -= 1
        return best

    def freeze(self) -> None:
        self._zero = tuple(self._zero)
        self._one = tuple(self._one)
        self._val = tuple(self._val)

    def items(self) -> Iterator[tuple[int, int, Any]]:
        """Yield ``(base, length, value)`` in depth-first (address) order."""
        stack = [(0, 0, 0)]
        while stack:
            node, base, depth = stack.pop()
            v = self._val[node]
            if v is not _NO_VALUE:
                yield base, depth, v
            one, zero = self._one[node], self._zero[node]
            if one:
                stack.append((one, base | (1 << (self.width - 1 - depth)), depth + 1))
            if zero:
                stack.append((zero, base, depth + 1))


@dataclass
class IngestStats:
    lines: int = 0
    entries: int = 0
    skipped: int = 0


class PrefixTable:
    """Maps IPv6 and IPv4 prefixes to opaque values; longest match wins.

    ``lookup`` takes a 128-bit IPv6 value, ``lookup_v4`` a 32-bit IPv4 value.
    A miss returns ``None``.
    """

    def __init__(self):
        self._v6 = _BitTrie(128)
        self._v4 = _BitTrie(32)
        self._count = 0
        self.frozen = False
        self.stats = IngestStats()

    def __len__(self) -> int:
        return self._count

    def _insert(self, trie: _BitTrie, base: int, length: int, value, label: str) -> None:
        if self.frozen:
            raise RuntimeError("prefix table is frozen")
        old = trie.insert(base, length, value)
        if old is _NO_VALUE:
            self._count += 1
        elif old != value:
            log.warning("prefix %s: %r replaced by %r (last write wins)", label, old, value)

    def add(self, prefix_text: str, value) -> None:
        """Insert an IPv6 or IPv4 prefix given as text."""
        text = prefix_text.strip()
        if ":" in text:
            p = parse_prefix(text)
            self._insert(self._v6, p.base, p.length, value, str(p))
        else:
            base, length = parse_ipv4_prefix(text)
            self._insert(self._v4, base, length, value, text)

    def add_v6(self, base: int, length: int, value) -> None:
        if base & ((1 << (128 - length)) - 1):
            raise ValueError("host bits set below the prefix length")
        self._insert(self._v6, base, length, value, f"{format_ipv6(base)}/{length}")

    def add_v4(self, base: int, length: int, value) -> None:
        if base & ((1 << (32 - length)) - 1):
            raise ValueError("host bits set below the prefix length")
        self._insert(self._v4, base, length, value, f"{base:#010x}/{length}")

    def freeze(self) -> "PrefixTable":
        if not self.frozen:
            self._v6.freeze()
            self._v4.freeze()
            self.frozen = True
        return self

    def lookup(self, addr: int):
        v = self._v6.lookup(addr)
        return None if v is _NO_VALUE else v

    def lookup_v4(self, addr: int):
        v = self._v4.lookup(addr)
        return None if v is _NO_VALUE else v

    def items_v6(self) -> Iterator[tuple[int, int, Any]]:
        return self._v6.items()

    def items_v4(self) -> Iterator[tuple[int, int, Any]]:
        return self._v4.items()


def parse_ipv4_prefix(text: str) -> tuple[int, int]:
    addr_text, sep, len_text = text.partition("/")
    try:
        base = parse_ipv4(addr_text)
    except OSError:
        raise ValueError(f"malformed IPv4 prefix {text!r}") from None
    length = int(len_text) if sep else 32
    if not 0 <= length <= 32:
        raise ValueError(f"IPv4 prefix length out of range in {text!r}")
    if base & ((1 << (32 - length)) - 1):
        raise ValueError(f"host bits set in {text!r}")
    return base, length


def build_table(entries: Iterable[tuple[str, Any]]) -> PrefixTable:
    """Build and freeze a table from ``(prefix_text, value)`` pairs."""
    table = PrefixTable()
    bad = []
    for lineno, (text, value) in enumerate(entries, 1):
        try:
            table.add(text, value)
        except (AddressParseError, ValueError) as exc:
            bad.append((lineno, f"{text} ({exc})"))
    if bad:
        raise PrefixFileError("<entries>", bad, len(bad))
    return table.freeze()


def lookup_longest(table: PrefixTable, addr: int):
    return table.lookup(addr)


def _parse_asn(tok: str) -> int:
    tok = tok.strip()
    if tok[:2].upper() == "AS":
        tok = tok[2:]
    # multi-origin entries ("100_200", "100,200") attribute to the first origin
    for sep in ("_", ","):
        tok = tok.split(sep)[0]
    return int(tok)


def _parse_line(kind: str, line: str):
    if kind == "asn":
        parts = line.split()
        if len(parts) == 2:
            return parts[0], _parse_asn(parts[1])
        if len(parts) == 3:  # CAIDA layout: address, length, asn
            return f"{parts[0]}/{parts[1]}", _parse_asn(parts[2])
        raise ValueError("expected 'prefix asn'")
    if kind == "country":
        row = next(csv.reader(io.StringIO(line)))
        if len(row) != 2:
            raise ValueError("expected 'prefix,iso2'")
        cc = row[1].strip().upper()
        if len(cc) != 2 or not cc.isalpha():
            raise ValueError(f"bad country code {row[1]!r}")
        return row[0].strip(), cc
    if kind == "alias":
        return line.split()[0], True
    raise ValueError(f"unknown value kind {kind!r}")


def ingest_prefix_file(path: str | Path, kind: str) -> PrefixTable:
    """Load a prefix file of the given kind (``asn``, ``country`` or ``alias``).

    Blank lines, ``#`` comments and a leading ``prefix,...`` header are skipped
    and counted in ``table.stats.skipped``. Any malformed line aborts the load.
    """
    if kind not in VALUE_KINDS:
        raise ValueError(f"value kind must be one of {VALUE_KINDS}")
    table = PrefixTable()
    stats = table.stats
    bad: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            stats.lines += 1
            line = raw.split("#", 1)[0].strip()
            if not line or (lineno == 1 and line.lower().startswith("prefix")):
                stats.skipped += 1
                continue
            try:
                text, value = _parse_line(kind, line)
                table.add(text, value)
            except (AddressParseError, ValueError, IndexError) as exc:
                bad.append((lineno, f"{raw.rstrip()} ({exc})"))
                continue
            stats.entries += 1
    if bad:
        raise PrefixFileError(path, bad, len(bad))
    log.info("%s: %d lines, %d entries, %d skipped", path, stats.lines, stats.entries, stats.skipped)
    return table.freeze()


def write_prefix_file(path: str | Path, kind: str, entries: Iterable[tuple[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for text, value in entries:
            if kind == "asn":
                fh.write(f"{text} {value}\n")
            elif kind == "country":
                fh.write(f"{text},{value}\n")
            elif kind == "alias":
                fh.write(f"{text}\n")
            else:
                raise ValueError(f"unknown value kind {kind!r}")
