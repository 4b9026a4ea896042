"""Deduplicated on-disk address index, summary statistics and /48 release export.

The index is a flat file of sorted, unique 16-byte big-endian addresses with
a ``counters.json`` sidecar. Ingest buffers at most ``chunk_size`` addresses,
spills sorted runs to disk and merges them block by block, so memory is
bounded by the chunk size rather than by the stream length.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import shutil
import socket
import tempfile
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .addr import format_ipv6, parse_ipv6, parse_prefix
from .errors import IngestError
from .prefixmap import PrefixTable

log = logging.getLogger(__name__)

RECORD = np.dtype([("hi", ">u8"), ("lo", ">u8")])
INDEX_NAME = "index.bin"
COUNTERS_NAME = "counters.json"
DEFAULT_CHUNK = 1 << 20
MAX_MALFORMED_FRAC = 0.01

_AF6 = socket.AF_INET6
_pton = socket.inet_pton


def _to_records(hi: np.ndarray, lo: np.ndarray) -> bytes:
    rec = np.empty(len(hi), dtype=RECORD)
    rec["hi"] = hi
    rec["lo"] = lo
    return rec.tobytes()


def _sort_unique(hi: np.ndarray, lo: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(hi) == 0:
        return hi, lo
    order = np.lexsort((lo, hi))
    hi, lo = hi[order], lo[order]
    keep = np.ones(len(hi), dtype=bool)
    keep[1:] = (hi[1:] != hi[:-1]) | (lo[1:] != lo[:-1])
    return hi[keep], lo[keep]


def _from_buffer(buf: bytes | bytearray) -> tuple[np.ndarray, np.ndarray]:
    rec = np.frombuffer(buf, dtype=RECORD)
    return rec["hi"].astype(np.uint64), rec["lo"].astype(np.uint64)


class _RunReader:
    def __init__(self, path: Path, block: int):
        self.fh = open(path, "rb")
        self.block = block
        self.hi = np.zeros(0, np.uint64)
        self.lo = np.zeros(0, np.uint64)
        self.exhausted = False

    def refill(self) -> None:
        if len(self.hi) or self.exhausted:
            return
        data = self.fh.read(self.block * RECORD.itemsize)
        if len(data) < self.block * RECORD.itemsize:
            self.exhausted = True
        self.hi, self.lo = _from_buffer(data)

    def close(self) -> None:
        self.fh.close()


@dataclass
class IngestStats:
    lines: int = 0
    observations: int = 0
    malformed: int = 0
    runs: int = 0
    merge_rounds: int = 0
    peak_buffered: int = 0


@dataclass
class Counters:
    unique_addresses: int = 0
    unique_48s: int = 0
    unique_64s: int = 0
    unique_asns: int | None = None
    per_country: dict[str, int] | None = None
    observation_log: str | None = None
    ingest: dict = field(default_factory=dict)


class _IndexWriter:
    """Appends sorted unique batches and counts distinct /48s and /64s on the way."""

    def __init__(self, path: Path):
        self.fh = open(path, "wb")
        self.n = 0
        self.n48 = 0
        self.n64 = 0
        self.last_hi: int | None = None

    def write(self, hi: np.ndarray, lo: np.ndarray) -> None:
        if len(hi) == 0:
            return
        self.fh.write(_to_records(hi, lo))
        self.n += len(hi)
        for shift, attr in ((0, "n64"), (16, "n48")):
            key = hi >> np.uint64(shift)
            new = int(np.count_nonzero(key[1:] != key[:-1])) + 1
            if self.last_hi is not None and int(key[0]) == self.last_hi >> shift:
                new -= 1
            setattr(self, attr, getattr(self, attr) + new)
        self.last_hi = int(hi[-1])

    def close(self) -> None:
        self.fh.close()


def _merge_runs(runs: list[Path], out: _IndexWriter, budget: int, stats: IngestStats) -> None:
    """k-way merge of sorted unique runs holding at most ~``budget`` records."""
    block = max(1, budget // (len(runs) + 1))
    readers = [_RunReader(p, block) for p in runs]
    try:
        while True:
            for r in readers:
                r.refill()
            active = [r for r in readers if len(r.hi)]
            if not active:
                break
            stats.peak_buffered = max(stats.peak_buffered, sum(len(r.hi) for r in active))
            # everything <= the smallest buffered tail among unfinished runs is final
            bounds = [(int(r.hi[-1]), int(r.lo[-1])) for r in active if not r.exhausted]
            take_hi, take_lo = [], []
            for r in active:
                if bounds:
                    bh, bl = min(bounds)
                    mask = (r.hi < np.uint64(bh)) | ((r.hi == np.uint64(bh)) & (r.lo <= np.uint64(bl)))
                    k = int(np.count_nonzero(mask))
                else:
                    k = len(r.hi)
                take_hi.append(r.hi[:k])
                take_lo.append(r.lo[:k])
                r.hi, r.lo = r.hi[k:], r.lo[k:]
            hi, lo = _sort_unique(np.concatenate(take_hi), np.concatenate(take_lo))
            out.write(hi, lo)
            stats.merge_rounds += 1
    finally:
        for r in readers:
            r.close()


class CorpusStore:
    """A frozen, sorted, deduplicated address index on disk."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        with open(self.path / COUNTERS_NAME) as fh:
            raw = json.load(fh)
        self.counters = Counters(**raw)

    def __len__(self) -> int:
        return self.counters.unique_addresses

    @property
    def index_path(self) -> Path:
        return self.path / INDEX_NAME

    def iter_blocks(self, block: int = DEFAULT_CHUNK) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        with open(self.index_path, "rb") as fh:
            while True:
                data = fh.read(block * RECORD.itemsize)
                if not data:
                    break
                yield _from_buffer(data)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return _from_buffer(self.index_path.read_bytes())

    def addresses(self) -> Iterator[int]:
        for hi, lo in self.iter_blocks():
            for h, l in zip(hi.tolist(), lo.tolist()):
                yield (h << 64) | l

    def recount(self) -> tuple[int, int, int]:
        """Exact (addresses, /48s, /64s) recomputed from the index."""
        hi, _ = self.arrays()
        return len(hi), len(np.unique(hi >> np.uint64(16))), len(np.unique(hi))

    @classmethod
    def from_addresses(cls, addresses: Iterable[int], path: str | Path) -> "CorpusStore":
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        vals = sorted({int(a) for a in addresses})
        hi = np.array([v >> 64 for v in vals], dtype=np.uint64)
        lo = np.array([v & 0xFFFFFFFFFFFFFFFF for v in vals], dtype=np.uint64)
        w = _IndexWriter(path / INDEX_NAME)
        w.write(hi, lo)
        w.close()
        _write_counters(path, Counters(w.n, w.n48, w.n64))
        return cls(path)


def _write_counters(path: Path, counters: Counters) -> None:
    with open(path / COUNTERS_NAME, "w") as fh:
        json.dump(asdict(counters), fh, indent=2, sort_keys=True)


def _attribute(store: CorpusStore, asmap: PrefixTable | None, countrymap: PrefixTable | None) -> None:
    asns: set[int] = set()
    countries: Counter = Counter()
    for a in store.addresses():
        if asmap is not None:
            asn = asmap.lookup(a)
            if asn is not None:
                asns.add(asn)
        if countrymap is not None:
            cc = countrymap.lookup(a)
            if cc is not None:
                countries[cc] += 1
    if asmap is not None:
        store.counters.unique_asns = len(asns)
    if countrymap is not None:
        store.counters.per_country = dict(sorted(countries.items()))
    _write_counters(store.path, store.counters)


def ingest(
    source: str | Path | Iterable[str],
    store_dir: str | Path,
    chunk_size: int = DEFAULT_CHUNK,
    asmap: PrefixTable | None = None,
    countrymap: PrefixTable | None = None,
    max_malformed_frac: float = MAX_MALFORMED_FRAC,
) -> CorpusStore:
    """Stream ``timestamp,address,vantage`` lines into a deduplicated store.

    Raises ``IngestError`` when more than ``max_malformed_frac`` of the lines
    are malformed; no store is written in that case.
    """
    store_dir = Path(store_dir)
    store_dir.mkdir(parents=True, exist_ok=True)
    log_ref = str(source) if isinstance(source, (str, Path)) else None
    fh = open(source, encoding="utf-8") if isinstance(source, (str, Path)) else source
    stats = IngestStats()
    tmp = Path(tempfile.mkdtemp(prefix="runs-", dir=store_dir))
    runs: list[Path] = []

    def spill(buf: bytearray) -> None:
        hi, lo = _sort_unique(*_from_buffer(buf))
        p = tmp / f"run{len(runs):05d}.bin"
        p.write_bytes(_to_records(hi, lo))
        runs.append(p)

    try:
        buf = bytearray()
        limit = chunk_size * 16
        lines = bad = 0
        for line in fh:
            lines += 1
            try:
                ts, a, _ = line.split(",", 2)
                int(ts)
                try:
                    buf += _pton(_AF6, a)
                except OSError:
                    buf += _pton(_AF6, a.strip())
            except (ValueError, OSError):
                if lines == 1 and line.startswith("unix_seconds"):
                    lines = 0
                    continue
                if not line.strip():
                    lines -= 1
                    continue
                bad += 1
                continue
            if len(buf) >= limit:
                stats.peak_buffered = max(stats.peak_buffered, len(buf) // 16)
                spill(buf)
                buf = bytearray()
        stats.peak_buffered = max(stats.peak_buffered, len(buf) // 16)
        stats.lines, stats.malformed, stats.observations = lines, bad, lines - bad
        if lines and bad / lines > max_malformed_frac:
            raise IngestError(f"{bad} of {lines} lines malformed (limit {max_malformed_frac:.0%})")
        if buf or not runs:
            spill(buf)
        del buf
        stats.runs = len(runs)
        writer = _IndexWriter(store_dir / INDEX_NAME)
        try:
            if len(runs) == 1:
                for hi, lo in _iter_file_blocks(runs[0], chunk_size):
                    writer.write(hi, lo)
            else:
                _merge_runs(runs, writer, chunk_size, stats)
        finally:
            writer.close()
    finally:
        if fh is not source:
            fh.close()
        shutil.rmtree(tmp, ignore_errors=True)

    counters = Counters(writer.n, writer.n48, writer.n64, observation_log=log_ref, ingest=asdict(stats))
    _write_counters(store_dir, counters)
    store = CorpusStore(store_dir)
    if asmap is not None or countrymap is not None:
        _attribute(store, asmap, countrymap)
    log.info("ingested %d lines (%d malformed) -> %d unique addresses in %d run(s)",
             stats.lines, stats.malformed, writer.n, stats.runs)
    return store


def _iter_file_blocks(path: Path, block: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    with open(path, "rb") as fh:
        while True:
            data = fh.read(block * RECORD.itemsize)
            if not data:
                break
            yield _from_buffer(data)


# ---------------------------------------------------------------- summary


def _as_arrays(corpus) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(corpus, CorpusStore):
        return corpus.arrays()
    vals = sorted({int(a) for a in corpus})
    return (np.array([v >> 64 for v in vals], dtype=np.uint64),
            np.array([v & 0xFFFFFFFFFFFFFFFF for v in vals], dtype=np.uint64))


def _common_count(a: tuple[np.ndarray, np.ndarray], b: tuple[np.ndarray, np.ndarray]) -> int:
    """Size of the intersection of two duplicate-free address arrays."""
    hi = np.concatenate([a[0], b[0]])
    lo = np.concatenate([a[1], b[1]])
    if len(hi) < 2:
        return 0
    order = np.lexsort((lo, hi))
    hi, lo = hi[order], lo[order]
    return int(np.count_nonzero((hi[1:] == hi[:-1]) & (lo[1:] == lo[:-1])))


@dataclass
class DatasetStats:
    addresses: int
    asns: int
    slash48s: int
    avg_addrs_per_48: float
    common_addresses: int | None = None
    common_asns: int | None = None
    common_48s: int | None = None


@dataclass
class SummaryReport:
    main: DatasetStats
    top_countries: list[tuple[str, int]]
    comparisons: dict[str, DatasetStats] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "main": asdict(self.main),
            "top_countries": [list(x) for x in self.top_countries],
            "comparisons": {k: asdict(v) for k, v in self.comparisons.items()},
        }

    def write_csv(self, path: str | Path, name: str = "main") -> None:
        cols = ["addresses", "asns", "slash48s", "avg_addrs_per_48", "common_addresses", "common_asns",
                "common_48s"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dataset", *cols])
            for label, st in [(name, self.main), *self.comparisons.items()]:
                row = asdict(st)
                row["avg_addrs_per_48"] = round(row["avg_addrs_per_48"])
                w.writerow([label, *("" if row[c] is None else row[c] for c in cols)])


def _dataset_stats(arrays, asmap: PrefixTable | None) -> tuple[DatasetStats, set[int], set[int]]:
    hi, lo = arrays
    n = len(hi)
    s48 = set(np.unique(hi >> np.uint64(16)).tolist())
    asns: set[int] = set()
    if asmap is not None:
        for h, l in zip(hi.tolist(), lo.tolist()):
            asn = asmap.lookup((h << 64) | l)
            if asn is not None:
                asns.add(asn)
    avg = n / len(s48) if s48 else 0.0
    return DatasetStats(n, len(asns), len(s48), avg), asns, s48


def summarize(
    store: CorpusStore,
    asmap: PrefixTable | None = None,
    countrymap: PrefixTable | None = None,
    comparisons: Mapping[str, CorpusStore | Iterable[int]] | None = None,
    top_n: int = 10,
) -> SummaryReport:
    """Totals (addresses, ASNs, /48s, mean addresses per /48) plus "Common" overlaps."""
    arrays = store.arrays()
    main, main_asns, main_48 = _dataset_stats(arrays, asmap)
    countries: Counter = Counter()
    if countrymap is not None:
        for a in store.addresses():
            cc = countrymap.lookup(a)
            if cc is not None:
                countries[cc] += 1
    report = SummaryReport(main, sorted(countries.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n])
    for name, other in (comparisons or {}).items():
        o_arrays = _as_arrays(other)
        st, o_asns, o_48 = _dataset_stats(o_arrays, asmap)
        st.common_addresses = _common_count(arrays, o_arrays)
        st.common_asns = len(main_asns & o_asns)
        st.common_48s = len(main_48 & o_48)
        report.comparisons[name] = st
    return report


# ---------------------------------------------------------------- release


def export_release(store: CorpusStore, path: str | Path | None = None) -> list[str]:
    """Sorted unique /48 prefixes covering the store; never full addresses."""
    seen: list[int] = []
    for hi, _ in store.iter_blocks():
        u = np.unique(hi >> np.uint64(16))
        for v in u.tolist():
            if not seen or v != seen[-1]:
                seen.append(v)
    lines = [f"{format_ipv6(v << 80)}/48" for v in seen]
    leaks = release_leaks(lines)
    if leaks:
        raise AssertionError(f"release output would leak addresses: {leaks[:3]}")
    if path is not None:
        tmp = Path(f"{path}.tmp")
        tmp.write_text("".join(f"{l}\n" for l in lines))
        os.replace(tmp, path)
    return lines


def release_leaks(lines: Iterable[str]) -> list[str]:
    """Tokens that are not clean /48 prefixes (host bits beyond 48, or bare addresses)."""
    bad = []
    for line in lines:
        for tok in line.split():
            addr_text, sep, plen = tok.partition("/")
            try:
                addr = parse_ipv6(addr_text)
            except ValueError:
                bad.append(tok)
                continue
            if sep != "/" or plen != "48" or addr & ((1 << 80) - 1):
                bad.append(tok)
    return bad


def release_covers(lines: Iterable[str], store: CorpusStore) -> bool:
    nets = {parse_prefix(l).base >> 80 for l in lines}
    return all(int(v) in nets for hi, _ in store.iter_blocks() for v in np.unique(hi >> np.uint64(16)).tolist())
