"""Seven-way addressing-pattern classification and per-AS entropy profiles."""
from __future__ import annotations

import csv
import enum
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

from .addr import MAX64, EntropyBand, entropy_band, normalized_iid_entropy
from .errors import EmptyInputError
from .prefixmap import PrefixTable


class AddressCategory(enum.Enum):
    ZEROES = "Zeroes"
    LOW_BYTE = "LowByte"
    LOW_2_BYTES = "Low2Bytes"
    IPV4_MAPPED = "Ipv4Mapped"
    HIGH_ENTROPY = "HighEntropy"
    MEDIUM_ENTROPY = "MediumEntropy"
    LOW_ENTROPY = "LowEntropy"


CATEGORIES = tuple(AddressCategory)

_BAND_CATEGORY = {
    EntropyBand.HIGH: AddressCategory.HIGH_ENTROPY,
    EntropyBand.MEDIUM: AddressCategory.MEDIUM_ENTROPY,
    EntropyBand.LOW: AddressCategory.LOW_ENTROPY,
}


class Ipv4Encoding(enum.Enum):
    HEX_LOW32 = "HexLow32"
    DECIMAL_HEXTETS = "DecimalHextets"
    HEX_HIGH32 = "HexHigh32"


class Ipv4Candidate(NamedTuple):
    source: int
    embedded: int
    encoding: Ipv4Encoding


def structural_category(iid: int) -> AddressCategory | None:
    if iid == 0:
        return AddressCategory.ZEROES
    if iid < 1 << 8:
        return AddressCategory.LOW_BYTE
    if iid < 1 << 16:
        return AddressCategory.LOW_2_BYTES
    return None


def _decimal_hextets(iid: int) -> int | None:
    value = 0
    for shift in (48, 32, 16, 0):
        digits = f"{(iid >> shift) & 0xFFFF:x}"
        if not digits.isdigit():
            return None
        octet = int(digits)
        if octet > 255:
            return None
        value = (value << 8) | octet
    return value


def detect_ipv4_candidates(addr: int) -> list[Ipv4Candidate]:
    """Every syntactically valid IPv4 embedding of ``addr``'s IID.

    An embedding is discarded when its first octet is 0 (0.0.0.0/8 holds no
    host addresses), which also keeps short structural IIDs out.
    """
    iid = addr & MAX64
    out = []
    low = iid & 0xFFFFFFFF
    if low >> 24:
        out.append(Ipv4Candidate(addr, low, Ipv4Encoding.HEX_LOW32))
    dec = _decimal_hextets(iid)
    if dec is not None and dec >> 24:
        out.append(Ipv4Candidate(addr, dec, Ipv4Encoding.DECIMAL_HEXTETS))
    high = iid >> 32
    if high >> 24:
        out.append(Ipv4Candidate(addr, high, Ipv4Encoding.HEX_HIGH32))
    return out


def validate_ipv4_mapped(
    candidates: Mapping[int, Iterable[Ipv4Candidate]],
    as_totals: Mapping[int, int],
    v4table: PrefixTable,
    threshold_count: int = 100,
    threshold_frac: float = 0.10,
) -> set[int]:
    """Addresses accepted as IPv4-mapped, decided all-or-nothing per AS.

    ``candidates`` is keyed by the source address's ASN. A candidate is
    AS-consistent when its embedded IPv4 maps to that same ASN. An AS is
    accepted when its AS-consistent addresses number at least
    ``threshold_count`` and exceed ``threshold_frac`` of ``as_totals[asn]``.
    """
    accepted: set[int] = set()
    for asn, cands in candidates.items():
        consistent = {c.source for c in cands if v4table.lookup_v4(c.embedded) == asn}
        n = len(consistent)
        if n >= threshold_count and n > threshold_frac * as_totals.get(asn, 0):
            accepted |= consistent
    return accepted


def categorize(addr: int, entropy: float, ipv4_accepted: bool) -> AddressCategory:
    """Structural > IPv4-mapped > entropy band."""
    structural = structural_category(addr & MAX64)
    if structural is not None:
        return structural
    if ipv4_accepted:
        return AddressCategory.IPV4_MAPPED
    return _BAND_CATEGORY[entropy_band(entropy)]


@dataclass
class Classification:
    categories: dict[int, AddressCategory]
    asn: dict[int, int]
    entropy: dict[int, float]
    accepted_ases: set[int]
    unattributed: int = 0


def classify_addresses(
    addresses: Iterable[int],
    asmap: PrefixTable,
    threshold_count: int = 100,
    threshold_frac: float = 0.10,
) -> Classification:
    """Categorise a set of distinct addresses.

    ``asmap`` provides both IPv6 and IPv4 ASN attribution. Addresses without
    an ASN skip IPv4 validation and are counted in ``unattributed``.
    """
    asns: dict[int, int] = {}
    entropy: dict[int, float] = {}
    totals: Counter = Counter()
    cands: dict[int, list[Ipv4Candidate]] = defaultdict(list)
    unattributed = 0
    for a in set(addresses):
        a = int(a)
        entropy[a] = normalized_iid_entropy(a & MAX64)
        asn = asmap.lookup(a)
        if asn is None:
            unattributed += 1
            continue
        asns[a] = asn
        totals[asn] += 1
        cands[asn].extend(detect_ipv4_candidates(a))
    accepted = validate_ipv4_mapped(cands, totals, asmap, threshold_count, threshold_frac)
    cats = {a: categorize(a, e, a in accepted) for a, e in entropy.items()}
    accepted_ases = {asns[a] for a in accepted}
    return Classification(cats, asns, entropy, accepted_ases, unattributed)


# ---------------------------------------------------------------- profiles

N_BINS = 101  # width-0.01 bins; the last holds exactly 1.0


def entropy_bin(score: float) -> int:
    return min(N_BINS - 1, int(score * 100 + 1e-9))


@dataclass
class AsProfile:
    asn: int | None
    counts: Counter = field(default_factory=Counter)
    total: int = 0
    entropy_hist: list[int] = field(default_factory=lambda: [0] * N_BINS)

    def add(self, category: AddressCategory, score: float | None = None) -> None:
        self.counts[category] += 1
        self.total += 1
        if score is not None:
            self.entropy_hist[entropy_bin(score)] += 1

    def fractions(self) -> dict[AddressCategory, float]:
        return {c: self.counts[c] / self.total for c in CATEGORIES}

    def entropy_cdf(self) -> list[tuple[float, float]]:
        n = sum(self.entropy_hist)
        out, acc = [], 0
        for k, c in enumerate(self.entropy_hist):
            acc += c
            out.append((k / 100, acc / n if n else 0.0))
        return out


@dataclass
class DistributionProfile:
    overall: AsProfile
    per_as: dict[int, AsProfile]

    def fractions(self) -> dict[AddressCategory, float]:
        return self.overall.fractions()


def profile_distribution(
    categories: Mapping[int, AddressCategory],
    asmap: PrefixTable | Mapping[int, int] | None = None,
    entropy: Mapping[int, float] | None = None,
) -> DistributionProfile:
    """Global and per-AS category fractions plus entropy histograms."""
    if not categories:
        raise EmptyInputError("cannot profile an empty corpus")
    overall = AsProfile(None)
    per_as: dict[int, AsProfile] = {}
    for a, cat in categories.items():
        if entropy is not None:
            score = entropy.get(a)
        else:
            score = normalized_iid_entropy(a & MAX64)
        overall.add(cat, score)
        if asmap is None:
            continue
        asn = asmap.lookup(a) if isinstance(asmap, PrefixTable) else asmap.get(a)
        if asn is None:
            continue
        prof = per_as.get(asn)
        if prof is None:
            prof = per_as[asn] = AsProfile(asn)
        prof.add(cat, score)
    return DistributionProfile(overall, per_as)


def write_category_report(path: str | Path, profiles: Mapping[str, DistributionProfile]) -> None:
    """``dataset,category,count,fraction`` for each named dataset."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "category", "count", "fraction"])
        for name, prof in profiles.items():
            fr = prof.fractions()
            for c in CATEGORIES:
                w.writerow([name, c.value, prof.overall.counts[c], f"{fr[c]:.6f}"])


def write_as_category_report(path: str | Path, profile: DistributionProfile) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["asn", "category", "count", "fraction"])
        for asn in sorted(profile.per_as):
            prof = profile.per_as[asn]
            fr = prof.fractions()
            for c in CATEGORIES:
                w.writerow([asn, c.value, prof.counts[c], f"{fr[c]:.6f}"])


def write_entropy_cdf(path: str | Path, prof: AsProfile) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["entropy_bin", "cumulative_fraction"])
        for x, y in prof.entropy_cdf():
            w.writerow([f"{x:.2f}", f"{y:.6f}"])


def top_ases(profile: DistributionProfile, n: int = 5) -> list[int]:
    return sorted(profile.per_as, key=lambda a: (-profile.per_as[a].total, a))[:n]
