"""Observation records and the ``unix_seconds,ipv6,vantage_id`` log format."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, TextIO

from .addr import format_ipv6, parse_ipv6_int


class Observation(NamedTuple):
    timestamp: int
    addr: int
    vantage: str = ""


def parse_line(line: str) -> Observation:
    ts, addr, vantage = line.rstrip("\r\n").split(",", 2)
    t = int(ts)
    if t < 0:
        raise ValueError("negative timestamp")
    return Observation(t, parse_ipv6_int(addr.strip()), vantage.strip())


def iter_log(source: str | Path | TextIO, skip_malformed: bool = True) -> Iterator[Observation]:
    """Observations from a log file or open text stream; a header line is tolerated."""
    fh = open(source, encoding="utf-8") if isinstance(source, (str, Path)) else source
    try:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or (lineno == 1 and line.startswith("unix_seconds")):
                continue
            try:
                yield parse_line(line)
            except (ValueError, OSError):
                if not skip_malformed:
                    raise ValueError(f"line {lineno}: malformed observation {line.strip()!r}") from None
    finally:
        if fh is not source:
            fh.close()


def read_log(source) -> list[Observation]:
    return list(iter_log(source))


def write_log(path: str | Path, observations: Iterable[Observation]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for o in observations:
            fh.write(f"{o.timestamp},{format_ipv6(o.addr)},{o.vantage}\n")
            n += 1
    return n
