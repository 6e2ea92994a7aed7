"""Size sequences, flow size differences and sliding windows.

The detection metric is the absolute difference between consecutive flows'
sizes. A window spans ``w`` flows and therefore contributes ``w - 1``
difference samples; differences never cross a window boundary, so every
window's score depends on its own flows only.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import CapabilityError
from .ingest import FlowDataset


class SizeUnit(Enum):
    BYTES = "bytes"
    PACKETS = "packets"


@dataclass(frozen=True)
class WindowSpec:
    """Window size ``w`` and slide step ``s``, both in flows.

    ``s`` defaults to w // 2 (at least 1), the representative half-overlap
    step; s = 1 gives the densest analysis.
    """

    w: int
    s: int | None = None

    def __post_init__(self):
        if self.w < 1:
            raise ValueError("window size must be a positive flow count")
        if self.s is None:
            object.__setattr__(self, "s", max(1, self.w // 2))
        if not 1 <= self.s <= self.w:
            raise ValueError("slide step must satisfy 1 <= s <= w")


@dataclass(frozen=True)
class WindowIndex:
    """Half-open flow index range [start, end) of one complete window."""

    start: int
    end: int


def size_sequence(dataset: FlowDataset, unit: SizeUnit) -> np.ndarray:
    """Per-flow sizes in dataset order, as an int64 array."""
    if unit is SizeUnit.BYTES:
        return np.fromiter((f.bytes_total for f in dataset.flows), dtype=np.int64, count=len(dataset.flows))
    values = np.empty(len(dataset.flows), dtype=np.int64)
    for i, f in enumerate(dataset.flows):
        if f.packets_total is None:
            raise CapabilityError(
                f"dataset {dataset.source_name!r} has no packet counts (flow seq_no={f.seq_no})"
            )
        values[i] = f.packets_total
    return values


def difference_sequence(sizes) -> np.ndarray:
    """Absolute differences of consecutive sizes; length n - 1, sign ignored."""
    arr = np.asarray(sizes, dtype=np.int64)
    if arr.size < 2:
        return np.empty(0, dtype=np.int64)
    return np.abs(np.diff(arr))


def windows(n_flows: int, spec: WindowSpec) -> list[WindowIndex]:
    """All complete windows over n_flows: starts 0, s, 2s, ... while start + w <= n."""
    if n_flows < spec.w:
        return []
    starts = range(0, n_flows - spec.w + 1, spec.s)
    return [WindowIndex(start=i, end=i + spec.w) for i in starts]


def window_differences(dataset: FlowDataset, unit: SizeUnit, window: WindowIndex) -> np.ndarray:
    """Difference sequence restricted to one window's flows (length w - 1)."""
    if not (0 <= window.start <= window.end <= len(dataset.flows)):
        raise ValueError(f"window {window} out of range for {len(dataset.flows)} flows")
    span = dataset.flows[window.start : window.end]
    if unit is SizeUnit.BYTES:
        sizes = np.fromiter((f.bytes_total for f in span), dtype=np.int64, count=len(span))
    else:
        sizes = np.empty(len(span), dtype=np.int64)
        for i, f in enumerate(span):
            if f.packets_total is None:
                raise CapabilityError(
                    f"dataset {dataset.source_name!r} has no packet counts (flow seq_no={f.seq_no})"
                )
            sizes[i] = f.packets_total
    return difference_sequence(sizes)
