"""Wired-MAC to WiFi-BSSID offset inference and geolocation linkage."""
from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .eui64 import MacAddress, Oui

NIC_SPACE = 1 << 24
DEFAULT_MIN_PAIRS = 500
_CHUNK_PAIRS = 1 << 22


class GeoBssid(NamedTuple):
    bssid: MacAddress
    lat: float
    lon: float

    @classmethod
    def make(cls, bssid: int, lat: float, lon: float) -> "GeoBssid":
        if not -90.0 <= lat <= 90.0 or not -180.0 <= lon <= 180.0:
            raise ValueError(f"coordinates out of range: {lat}, {lon}")
        return cls(MacAddress(bssid), float(lat), float(lon))


class OffsetModel(NamedTuple):
    oui: Oui
    offset: int
    support: int
    pair_count: int


class GeoResult(NamedTuple):
    mac: MacAddress
    matched_bssid: MacAddress
    lat: float
    lon: float
    model: OffsetModel


class OffsetHistogram(Mapping):
    """Read-only ``offset -> match count`` backed by sorted numpy arrays."""

    def __init__(self, offsets: np.ndarray, counts: np.ndarray):
        self.offsets = offsets
        self.counts = counts

    @classmethod
    def from_dict(cls, d: Mapping[int, int]) -> "OffsetHistogram":
        keys = np.array(sorted(d), dtype=np.int64)
        return cls(keys, np.array([d[int(k)] for k in keys], dtype=np.int64))

    def __getitem__(self, offset: int) -> int:
        i = int(np.searchsorted(self.offsets, offset))
        if i < len(self.offsets) and self.offsets[i] == offset:
            return int(self.counts[i])
        raise KeyError(offset)

    def __iter__(self) -> Iterator[int]:
        return (int(x) for x in self.offsets)

    def __len__(self) -> int:
        return len(self.offsets)

    def total(self) -> int:
        return int(self.counts.sum())


def _by_oui(macs: Iterable[int]) -> dict[int, np.ndarray]:
    groups: dict[int, list[int]] = defaultdict(list)
    for m in set(int(m) for m in macs):
        groups[m >> 24].append(m & 0xFFFFFF)
    return {o: np.array(sorted(v), dtype=np.int64) for o, v in groups.items()}


def _tally_arrays(wired: np.ndarray, bssids: np.ndarray) -> OffsetHistogram:
    if len(wired) == 0 or len(bssids) == 0:
        return OffsetHistogram(np.zeros(0, np.int64), np.zeros(0, np.int64))
    rows = max(1, _CHUNK_PAIRS // len(bssids))
    parts_u, parts_c = [], []
    for i in range(0, len(wired), rows):
        diffs = (bssids[None, :] - wired[i:i + rows, None]).ravel()
        u, c = np.unique(diffs, return_counts=True)
        parts_u.append(u)
        parts_c.append(c)
    u = np.concatenate(parts_u)
    c = np.concatenate(parts_c)
    if len(parts_u) > 1:
        u, inv = np.unique(u, return_inverse=True)
        c = np.bincount(inv, weights=c, minlength=len(u)).astype(np.int64)
    return OffsetHistogram(u.astype(np.int64), c.astype(np.int64))


def tally_offsets(wired: Iterable[int], geo: Iterable[GeoBssid | int], oui: int) -> OffsetHistogram:
    """Histogram of ``bssid.nic - wired.nic`` over every wired x BSSID pair in ``oui``."""
    oui = int(oui)
    w = np.array(sorted({int(m) & 0xFFFFFF for m in wired if int(m) >> 24 == oui}), dtype=np.int64)
    b = np.array(sorted({_bssid(g) & 0xFFFFFF for g in geo if _bssid(g) >> 24 == oui}), dtype=np.int64)
    return _tally_arrays(w, b)


def _bssid(g) -> int:
    return int(g.bssid) if isinstance(g, GeoBssid) else int(g)


def infer_offset(histogram: Mapping[int, int], pair_count: int, min_pairs: int = DEFAULT_MIN_PAIRS,
                 oui: int = 0) -> OffsetModel | None:
    """Pick the better of the most common positive and most common negative offset.

    Ties go to the smaller magnitude, then to the positive side. Returns
    ``None`` below ``min_pairs`` evaluated pairs or with no non-zero offset.
    """
    if pair_count < min_pairs:
        return None
    if isinstance(histogram, OffsetHistogram):
        offs, cnts = histogram.offsets, histogram.counts
    else:
        offs = np.array(list(histogram.keys()), dtype=np.int64)
        cnts = np.array([histogram[int(k)] for k in offs], dtype=np.int64)

    best = []
    for side in (offs > 0, offs < 0):
        o, c = offs[side], cnts[side]
        if len(o) == 0:
            continue
        top = c.max()
        cands = o[c == top]
        best.append((int(top), int(cands[np.argmin(np.abs(cands))])))
    if not best:
        return None
    support, offset = min(best, key=lambda sc: (-sc[0], abs(sc[1]), sc[1] < 0))
    return OffsetModel(Oui(oui), offset, support, pair_count)


def infer_models(wired: Iterable[int], geo: Iterable[GeoBssid], min_pairs: int = DEFAULT_MIN_PAIRS
                 ) -> dict[Oui, OffsetModel]:
    """Tally and infer one model per OUI present on both sides."""
    geo = list(geo)
    w_groups = _by_oui(wired)
    b_groups = _by_oui(g.bssid for g in geo)
    models = {}
    for oui in sorted(w_groups.keys() & b_groups.keys()):
        w, b = w_groups[oui], b_groups[oui]
        pair_count = len(w) * len(b)
        if pair_count < min_pairs:
            continue
        model = infer_offset(_tally_arrays(w, b), pair_count, min_pairs, oui)
        if model is not None:
            models[model.oui] = model
    return models


def apply_offset(mac: int, model: OffsetModel) -> MacAddress | None:
    if mac >> 24 != model.oui:
        raise ValueError(f"MAC {MacAddress(mac)} is not in OUI {model.oui}")
    nic = (mac & 0xFFFFFF) + model.offset
    if not 0 <= nic < NIC_SPACE:
        return None
    return MacAddress((int(model.oui) << 24) | nic)


class CountryGrid:
    """Reverse geocoder over ``lat_min,lat_max,lon_min,lon_max,iso2`` boxes; first match wins."""

    def __init__(self, boxes: Iterable[tuple[float, float, float, float, str]] = ()):
        self.boxes = list(boxes)

    def country(self, lat: float, lon: float) -> str | None:
        for la0, la1, lo0, lo1, cc in self.boxes:
            if la0 <= lat <= la1 and lo0 <= lon <= lo1:
                return cc
        return None

    @classmethod
    def from_csv(cls, path: str | Path) -> "CountryGrid":
        with open(path, newline="") as fh:
            return cls((float(r["lat_min"]), float(r["lat_max"]), float(r["lon_min"]), float(r["lon_max"]),
                        r["iso2"].strip().upper()) for r in csv.DictReader(fh))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lat_min", "lat_max", "lon_min", "lon_max", "iso2"])
            w.writerows(self.boxes)


@dataclass
class Geolocation:
    results: list[GeoResult]
    per_country: Counter


def geolocate_corpus(extracted_macs: Iterable[int], geo_corpus: Iterable[GeoBssid],
                     models: Mapping[int, OffsetModel], grid: CountryGrid | None = None) -> Geolocation:
    index = {}
    for g in geo_corpus:
        index.setdefault(int(g.bssid), g)
    results = []
    per_country: Counter = Counter()
    for mac in sorted(set(int(m) for m in extracted_macs)):
        model = models.get(mac >> 24)
        if model is None:
            continue
        target = apply_offset(mac, model)
        if target is None:
            continue
        g = index.get(int(target))
        if g is None:
            continue
        results.append(GeoResult(MacAddress(mac), g.bssid, g.lat, g.lon, model))
        if grid is not None:
            per_country[grid.country(g.lat, g.lon) or "unknown"] += 1
    return Geolocation(results, per_country)


# ---------------------------------------------------------------- file formats


def read_geo_corpus(path: str | Path) -> list[GeoBssid]:
    with open(path, newline="") as fh:
        return [GeoBssid.make(MacAddress.parse(r["bssid"]), float(r["lat"]), float(r["lon"]))
                for r in csv.DictReader(fh)]


def write_geo_corpus(path: str | Path, corpus: Iterable[GeoBssid]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bssid", "lat", "lon"])
        for g in corpus:
            w.writerow([str(g.bssid), f"{g.lat:.6f}", f"{g.lon:.6f}"])


def write_tallies(path: str | Path, wired: Iterable[int], geo: Iterable[GeoBssid], top: int = 0) -> None:
    """``oui,offset,count,pair_count`` per OUI; ``top`` > 0 keeps only the largest counts."""
    geo = list(geo)
    w_groups = _by_oui(wired)
    b_groups = _by_oui(g.bssid for g in geo)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["oui", "offset", "count", "pair_count"])
        for oui in sorted(w_groups.keys() & b_groups.keys()):
            hist = _tally_arrays(w_groups[oui], b_groups[oui])
            pairs = len(w_groups[oui]) * len(b_groups[oui])
            order = np.lexsort((hist.offsets, -hist.counts))
            if top:
                order = order[:top]
            for i in order:
                out.writerow([str(Oui(oui)), int(hist.offsets[i]), int(hist.counts[i]), pairs])


def read_tallies(path: str | Path) -> dict[Oui, tuple[dict[int, int], int]]:
    out: dict[Oui, tuple[dict[int, int], int]] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            oui = Oui.parse(r["oui"])
            hist, _ = out.setdefault(oui, ({}, int(r["pair_count"])))
            hist[int(r["offset"])] = int(r["count"])
    return out


def write_models(path: str | Path, models: Mapping[int, OffsetModel]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["oui", "offset", "support", "pair_count"])
        for oui in sorted(models):
            m = models[oui]
            w.writerow([str(m.oui), m.offset, m.support, m.pair_count])


def read_models(path: str | Path) -> dict[Oui, OffsetModel]:
    with open(path, newline="") as fh:
        models = (OffsetModel(Oui.parse(r["oui"]), int(r["offset"]), int(r["support"]), int(r["pair_count"]))
                  for r in csv.DictReader(fh))
        return {m.oui: m for m in models}


def write_results(path: str | Path, results: Iterable[GeoResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mac", "bssid", "lat", "lon", "oui", "offset"])
        for r in results:
            w.writerow([str(r.mac), str(r.matched_bssid), f"{r.lat:.6f}", f"{r.lon:.6f}",
                        str(r.model.oui), r.model.offset])
