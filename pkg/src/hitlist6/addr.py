"""IPv6 value types, prefix arithmetic, IID extraction and IID entropy.

Addresses, interface identifiers and prefixes are immutable; addresses and
IIDs are ``int`` subclasses so they hash, sort and mask like plain integers.
"""
from __future__ import annotations

import enum
import math
import socket
from dataclasses import dataclass

from .errors import AddressParseError

MAX128 = (1 << 128) - 1
MAX64 = (1 << 64) - 1

_HEXDIGITS = frozenset("0123456789abcdefABCDEF")


class Ipv6Address(int):
    """A 128-bit IPv6 address. ``str()`` gives the canonical RFC 5952 text."""

    __slots__ = ()

    def __new__(cls, value: int = 0):
        if not 0 <= value <= MAX128:
            raise ValueError(f"IPv6 address value out of range: {value:#x}")
        return super().__new__(cls, value)

    @classmethod
    def parse(cls, text: str) -> "Ipv6Address":
        return parse_ipv6(text)

    def __str__(self) -> str:
        return format_ipv6(self)

    def __repr__(self) -> str:
        return f"Ipv6Address('{format_ipv6(self)}')"

    @property
    def iid(self) -> "InterfaceId":
        return iid_of(self)


class InterfaceId(int):
    """The low 64 bits of an address."""

    __slots__ = ()

    def __new__(cls, value: int = 0):
        if not 0 <= value <= MAX64:
            raise ValueError(f"interface identifier out of range: {value:#x}")
        return super().__new__(cls, value)

    def __str__(self) -> str:
        return ":".join(f"{(self >> s) & 0xFFFF:04x}" for s in (48, 32, 16, 0))

    def __repr__(self) -> str:
        return f"InterfaceId(0x{int(self):016x})"

    def byte(self, i: int) -> int:
        """Byte ``i``, counting from the most significant (0) to the least (7)."""
        return (self >> (8 * (7 - i))) & 0xFF


@dataclass(frozen=True, slots=True)
class Prefix:
    base: Ipv6Address
    length: int

    def __post_init__(self):
        if not 0 <= self.length <= 128:
            raise ValueError(f"prefix length out of range: {self.length}")
        if self.base & host_mask(self.length):
            raise ValueError(f"host bits set in prefix base {format_ipv6(self.base)}/{self.length}")

    def contains(self, addr: int) -> bool:
        return (addr & net_mask(self.length)) == self.base

    def __contains__(self, addr: int) -> bool:
        return self.contains(addr)

    def __str__(self) -> str:
        return f"{format_ipv6(self.base)}/{self.length}"

    @classmethod
    def parse(cls, text: str) -> "Prefix":
        return parse_prefix(text)


def net_mask(length: int) -> int:
    return MAX128 ^ host_mask(length)


def host_mask(length: int) -> int:
    return (1 << (128 - length)) - 1


# ---------------------------------------------------------------- parsing

def parse_ipv6(text: str) -> Ipv6Address:
    """Parse any RFC 4291 textual form (zero compression, embedded dotted quad)."""
    try:
        packed = socket.inet_pton(socket.AF_INET6, text)
    except (OSError, ValueError, TypeError):
        if not isinstance(text, str):
            raise AddressParseError(repr(text), 0, "not a string") from None
        pos, reason = _diagnose(text)
        raise AddressParseError(text, pos, reason) from None
    return Ipv6Address(int.from_bytes(packed, "big"))


def parse_ipv6_int(text: str) -> int:
    """Fast path for bulk ingest: plain int, ``ValueError``/``OSError`` on failure."""
    return int.from_bytes(socket.inet_pton(socket.AF_INET6, text), "big")


def _diagnose(text: str) -> tuple[int, str]:
    """Locate the first offending character of a string inet_pton rejected."""
    if not text:
        return 0, "empty string"
    for i, ch in enumerate(text):
        if ch not in _HEXDIGITS and ch not in ":.":
            return i, f"invalid character {ch!r}"
    first = text.find("::")
    if first >= 0:
        if ":::" in text:
            return text.find(":::"), "run of three colons"
        second = text.find("::", first + 2)
        if second >= 0:
            return second, "second '::' (double compression)"
    if text.startswith(":") and not text.startswith("::"):
        return 0, "leading single colon"
    if text.endswith(":") and not text.endswith("::"):
        return len(text) - 1, "trailing single colon"
    groups = []
    start = 0
    for tok in text.split(":"):
        if tok:
            groups.append((start, tok))
        start += len(tok) + 1
    ngroups = 0
    for i, (start, g) in enumerate(groups):
        if "." in g:
            if i != len(groups) - 1:
                return start, "dotted quad not in final position"
            octets = g.split(".")
            if len(octets) != 4:
                return start, "dotted quad must have four octets"
            off = start
            for o in octets:
                if not o.isdigit() or int(o) > 255 or (len(o) > 1 and o[0] == "0"):
                    return off, f"invalid IPv4 octet {o!r}"
                off += len(o) + 1
            ngroups += 2
        elif g:
            if len(g) > 4:
                return start, f"hextet {g!r} longer than four digits"
            ngroups += 1
    if first < 0 and ngroups != 8:
        return len(text), f"expected 8 hextets, found {ngroups}"
    if first >= 0 and ngroups > 7:
        return first, "'::' used with eight or more explicit hextets"
    return 0, "unrecognised address syntax"


def format_ipv6(value: int) -> str:
    """RFC 5952 text: lowercase, leading zeros dropped, longest zero run (>=2) compressed."""
    text = socket.inet_ntop(socket.AF_INET6, value.to_bytes(16, "big"))
    # libc switches to dotted quads for mapped/compatible forms; keep pure hex
    return _format_hex(value) if "." in text else text


def _format_hex(value: int) -> str:
    hextets = [(value >> s) & 0xFFFF for s in range(112, -16, -16)]
    best_start, best_len = -1, 1
    run_start, run_len = -1, 0
    for i, h in enumerate(hextets):
        if h == 0:
            if run_len == 0:
                run_start = i
            run_len += 1
            if run_len > best_len:
                best_start, best_len = run_start, run_len
        else:
            run_len = 0
    if best_start < 0:
        return ":".join(f"{h:x}" for h in hextets)
    head = ":".join(f"{h:x}" for h in hextets[:best_start])
    tail = ":".join(f"{h:x}" for h in hextets[best_start + best_len:])
    return f"{head}::{tail}"


def parse_prefix(text: str) -> Prefix:
    """``addr/len``; a bare address is a /128. Host bits must be clear."""
    addr_text, sep, len_text = text.strip().partition("/")
    addr = parse_ipv6(addr_text)
    length = 128
    if sep:
        if not len_text.isdigit():
            raise AddressParseError(text, len(addr_text) + 1, f"bad prefix length {len_text!r}")
        length = int(len_text)
    if not 0 <= length <= 128:
        raise AddressParseError(text, len(addr_text) + 1, f"prefix length {length} out of range")
    if addr & host_mask(length):
        raise AddressParseError(text, 0, "host bits set below the prefix length")
    return Prefix(addr, length)


def parse_ipv4(text: str) -> int:
    return int.from_bytes(socket.inet_pton(socket.AF_INET, text), "big")


def format_ipv4(value: int) -> str:
    return socket.inet_ntop(socket.AF_INET, value.to_bytes(4, "big"))


# ---------------------------------------------------------------- IID / prefixes

def iid_of(addr: int) -> InterfaceId:
    return InterfaceId(addr & MAX64)


def prefix_of(addr: int, length: int) -> Prefix:
    if not 0 <= length <= 128:
        raise ValueError(f"prefix length out of range: {length}")
    return Prefix(Ipv6Address(addr & net_mask(length)), length)


def slash64(addr: int) -> int:
    """Network half of an address as a 64-bit int (the /64 key used in hot loops)."""
    return addr >> 64


def slash48(addr: int) -> int:
    return addr >> 80


# ---------------------------------------------------------------- entropy

# c*log2(c) for nibble counts 0..16
_CLOG = tuple(0.0 if c == 0 else c * math.log2(c) for c in range(17))


def normalized_iid_entropy(iid: int) -> float:
    """Shannon entropy of the IID's 16 hex nibbles divided by 4 bits, in [0, 1]."""
    counts = [0] * 16
    v = iid & MAX64
    for _ in range(16):
        counts[v & 0xF] += 1
        v >>= 4
    # H = log2(16) - sum(c log2 c)/16, normalised by 4
    score = 1.0 - sum(_CLOG[c] for c in counts) / 64.0
    return min(1.0, max(0.0, score))


class EntropyBand(enum.Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


def entropy_band(score: float) -> EntropyBand:
    if score < 0.25:
        return EntropyBand.LOW
    if score > 0.75:
        return EntropyBand.HIGH
    return EntropyBand.MEDIUM
