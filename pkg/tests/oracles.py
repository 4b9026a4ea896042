"""Independent reference implementations used by the test-suite."""
from __future__ import annotations

import numpy as np

M64 = (1 << 64) - 1


def _split(values):
    hi = np.array([v >> 64 for v in values], dtype=np.uint64)
    lo = np.array([v & M64 for v in values], dtype=np.uint64)
    return hi, lo


def _masks(lengths):
    lengths = np.asarray(lengths, dtype=np.int64)
    hi = np.array([(M64 << (64 - min(L, 64))) & M64 for L in lengths.tolist()], dtype=np.uint64)
    lo = np.array([(M64 << (64 - max(L - 64, 0))) & M64 for L in lengths.tolist()], dtype=np.uint64)
    return hi, lo


def linear_lpm(entries: list[tuple[int, int, object]], addrs: list[int], batch: int = 1000) -> list:
    """Longest containing prefix by scanning every entry for every address.

    ``entries`` are ``(base, length, value)`` with distinct prefixes.
    """
    if not entries:
        return [None] * len(addrs)
    bases = [b for b, _, _ in entries]
    lengths = np.array([L for _, L, _ in entries], dtype=np.int64)
    values = [v for _, _, v in entries]
    b_hi, b_lo = _split(bases)
    m_hi, m_lo = _masks(lengths)
    out = []
    for i in range(0, len(addrs), batch):
        a_hi, a_lo = _split(addrs[i:i + batch])
        hit = ((a_hi[:, None] & m_hi[None, :]) == b_hi[None, :]) & ((a_lo[:, None] & m_lo[None, :]) == b_lo[None, :])
        score = np.where(hit, lengths[None, :], -1)
        best = score.argmax(axis=1)
        found = score[np.arange(len(best)), best] >= 0
        out.extend(values[j] if f else None for j, f in zip(best.tolist(), found.tolist()))
    return out


def brute_offsets(wired: list[int], bssids: list[int]) -> dict[int, int]:
    """Offset histogram by the obvious double loop."""
    hist: dict[int, int] = {}
    for w in set(wired):
        for b in set(bssids):
            d = (b & 0xFFFFFF) - (w & 0xFFFFFF)
            hist[d] = hist.get(d, 0) + 1
    return hist
