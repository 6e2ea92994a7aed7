"""Window scoring, alert decisions and window ground-truth labeling.

Each window's digit histogram of flow size differences is compared against
the first-digit reference; the oriented deviation is the anomaly score and
an alert fires when it reaches the decision threshold T. For labeled
datasets a window's ground truth is 1 when it contains at least T_l
malicious flows (boundary inclusive: exactly T_l counts as malicious).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from . import similarity
from .benford import DigitDistribution, ZeroPolicy, digit_histogram, leading_digits
from .errors import CapabilityError, EmptyHistogramError
from .ingest import FlowDataset, OrderingScheme, order_flows
from .similarity import KldParams, SimilarityMetric
from .windowing import (
    SizeUnit,
    WindowIndex,
    WindowSpec,
    difference_sequence,
    size_sequence,
    window_differences,
    windows,
)

#: Anomaly score assigned to windows whose digit histogram is empty
#: (all differences zero under SKIP_ZEROS). Such traffic is maximally
#: repetitive, so these windows always alert instead of abstaining.
INVALID_SCORE = math.inf


@dataclass(frozen=True)
class LabelingRule:
    """Ground-truth threshold: absolute flow count or fraction of a window."""

    absolute: int | None = None
    relative: float | None = None

    def __post_init__(self):
        if (self.absolute is None) == (self.relative is None):
            raise ValueError("exactly one of absolute/relative must be set")
        if self.absolute is not None and self.absolute < 1:
            raise ValueError("absolute labeling threshold must be >= 1")
        if self.relative is not None and not 0.0 < self.relative <= 1.0:
            raise ValueError("relative labeling threshold must be in (0, 1]")

    def describe(self) -> str:
        if self.absolute is not None:
            return f"abs:{self.absolute}"
        return f"rel:{self.relative:g}"


def resolve_labeling_threshold(labeling: LabelingRule, w: int) -> int:
    """Absolute threshold for a window of w flows.

    A relative threshold maps to ceil(t * w) clamped into [1, w]. The small
    epsilon neutralizes binary float artifacts so that e.g. 0.05 * 200
    resolves to 10, the exact product, not 11.
    """
    if w < 1:
        raise ValueError("window size must be positive")
    if labeling.absolute is not None:
        return labeling.absolute
    raw = labeling.relative * w
    return min(w, max(1, math.ceil(raw - 1e-9)))


def label_window(flow_labels: Sequence[int | None], window: WindowIndex, t_l_abs: int) -> int:
    """Window truth: 1 iff the window holds at least t_l_abs malicious flows."""
    if t_l_abs < 1:
        raise ValueError("labeling threshold must be >= 1")
    count = 0
    for value in flow_labels[window.start : window.end]:
        if value is None:
            raise CapabilityError("window labeling requires a fully labeled dataset")
        count += value
    return 1 if count - t_l_abs >= 0 else 0


@dataclass(frozen=True)
class DetectorConfig:
    """All tunable knobs of one detector run."""

    window: WindowSpec
    metric: SimilarityMetric = SimilarityMetric.CHI_SQUARE
    unit: SizeUnit = SizeUnit.BYTES
    zero_policy: ZeroPolicy = ZeroPolicy.COUNT_ZEROS
    ordering: OrderingScheme = OrderingScheme.START_END
    threshold_t: float = 0.4
    kld: KldParams = field(default_factory=KldParams)
    labeling: LabelingRule | None = None

    def __post_init__(self):
        if not self.threshold_t >= 0.0:
            raise ValueError("decision threshold must be non-negative")


@dataclass(frozen=True)
class WindowScore:
    window: WindowIndex
    score: float
    decision: int
    truth: int | None = None
    valid: bool = True


def score_window(dataset: FlowDataset, config: DetectorConfig, window: WindowIndex) -> WindowScore:
    """Score one window; truth is left unset."""
    diffs = window_differences(dataset, config.unit, window)
    try:
        hist = digit_histogram(diffs, config.zero_policy)
    except EmptyHistogramError:
        return WindowScore(window=window, score=INVALID_SCORE, decision=1, valid=False)
    raw = similarity.compute(config.metric, hist, kld=config.kld)
    score = similarity.anomaly_score(config.metric, raw)
    return WindowScore(window=window, score=score, decision=int(score >= config.threshold_t))


def _window_digit_counts(digits: np.ndarray, starts: np.ndarray, length: int) -> np.ndarray:
    """Digit counts (rows of 10) for slices [start, start + length) of digits.

    Switches to cumulative-count lookups when per-window bincounts would
    touch far more elements than the sequence holds (dense slides).
    """
    k = len(starts)
    counts = np.zeros((k, 10), dtype=np.int64)
    if length == 0 or k == 0:
        return counts
    if k * length <= 16 * digits.size:
        for i, s in enumerate(starts):
            counts[i] = np.bincount(digits[s : s + length], minlength=10)
        return counts
    cum = np.zeros((10, digits.size + 1), dtype=np.int64)
    for d in range(10):
        np.cumsum(digits == d, out=cum[d, 1:])
    ends = starts + length
    for d in range(10):
        counts[:, d] = cum[d, ends] - cum[d, starts]
    return counts


def _scores_from_counts(
    counts: np.ndarray, policy: ZeroPolicy, metric: SimilarityMetric, kld: KldParams
) -> tuple[np.ndarray, np.ndarray]:
    """(anomaly scores, validity) per window from per-window digit counts.

    Arithmetic matches digit_histogram + compute exactly: identical integer
    counts divide by identical totals, so batch and single-window paths
    agree bit for bit.
    """
    k = counts.shape[0]
    scores = np.full(k, INVALID_SCORE)
    valid = np.zeros(k, dtype=bool)
    for i in range(k):
        row = counts[i]
        if policy is ZeroPolicy.SKIP_ZEROS:
            retained = int(row[1:].sum())
            if retained == 0:
                continue
            hist = DigitDistribution(probs=row[1:] / retained, sample_count=retained, extended=False)
        else:
            total = int(row.sum())
            if total == 0:
                continue
            hist = DigitDistribution(probs=row / total, sample_count=total, extended=True)
        raw = similarity.compute(metric, hist, kld=kld)
        scores[i] = similarity.anomaly_score(metric, raw)
        valid[i] = True
    return scores, valid


def run_detector(dataset: FlowDataset, config: DetectorConfig) -> list[WindowScore]:
    """Order the flows, score every window, and attach ground truth.

    Output is ordered by window start and is a pure function of the inputs,
    so results are identical across runs regardless of how callers schedule
    the work. Truth fields are filled only when the dataset is labeled and
    the config carries a labeling rule.
    """
    ordered = order_flows(dataset, config.ordering)
    n = len(ordered.flows)
    wlist = windows(n, config.window)
    if not wlist:
        return []

    sizes = size_sequence(ordered, config.unit)
    digits = leading_digits(difference_sequence(sizes))
    starts = np.fromiter((w.start for w in wlist), dtype=np.int64, count=len(wlist))
    counts = _window_digit_counts(digits, starts, config.window.w - 1)
    scores, valid = _scores_from_counts(counts, config.zero_policy, config.metric, config.kld)

    truths: np.ndarray | None = None
    if ordered.labeled and config.labeling is not None:
        t_abs = resolve_labeling_threshold(config.labeling, config.window.w)
        labels = np.fromiter((f.label for f in ordered.flows), dtype=np.int64, count=n)
        cum = np.concatenate(([0], np.cumsum(labels)))
        truths = (cum[starts + config.window.w] - cum[starts] >= t_abs).astype(np.int64)

    out = []
    for i, win in enumerate(wlist):
        score = float(scores[i])
        out.append(
            WindowScore(
                window=win,
                score=score,
                decision=int(score >= config.threshold_t),
                truth=None if truths is None else int(truths[i]),
                valid=bool(valid[i]),
            )
        )
    return out


SCORES_CSV_HEADER = "window_index,start_flow,end_flow,score,decision,truth,valid"


def write_scores_csv(scores: Sequence[WindowScore], sink: IO[str]) -> None:
    """Window-score CSV; truth stays blank when unknown, score 'inf' when invalid."""
    sink.write(SCORES_CSV_HEADER + "\n")
    for i, s in enumerate(scores):
        truth = "" if s.truth is None else str(s.truth)
        sink.write(
            f"{i},{s.window.start},{s.window.end},{s.score!r},{s.decision},{truth},{int(s.valid)}\n"
        )
