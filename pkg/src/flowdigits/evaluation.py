"""ROC/AUC benchmarking, divergence statistics and parameter-grid sweeps."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .benford import leading_digits
from .detector import (
    DetectorConfig,
    LabelingRule,
    WindowScore,
    _scores_from_counts,
    _window_digit_counts,
    resolve_labeling_threshold,
)
from .errors import CapabilityError, DegenerateLabelsError, EmptyStatsError
from .ingest import FlowDataset, order_flows
from .similarity import SimilarityMetric
from .windowing import WindowSpec, difference_sequence, size_sequence, windows


@dataclass(frozen=True)
class RocCurve:
    """(threshold, fpr, tpr) points in descending threshold order, plus AUC.

    The alert rule is score >= threshold. The curve always starts at (0, 0)
    and ends at (1, 1); AUC is the trapezoidal area, which equals the
    pairwise ranking statistic P(pos > neg) + 0.5 * P(pos == neg) exactly.
    """

    points: tuple[tuple[float, float, float], ...]
    auc: float


def roc_auc(pairs: Iterable[tuple[float, int]]) -> RocCurve:
    """ROC curve and AUC for (score, truth) pairs.

    Thresholds sweep the distinct scores. Infinite scores rank above every
    finite score; tied scores collapse into one curve point, which gives
    tied positive/negative pairs half credit. The AUC numerator accumulates
    in integers, so equal inputs can be compared for exact equality.
    """
    data = []
    for s, t in pairs:
        s = float(s)
        if math.isnan(s):
            raise ValueError("scores must not be NaN")
        if t not in (0, 1):
            raise ValueError(f"truth labels must be 0 or 1, got {t!r}")
        data.append((s, t))
    n_pos = sum(t for _, t in data)
    n_neg = len(data) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError("ROC needs at least one positive and one negative window")

    data.sort(key=lambda p: p[0], reverse=True)
    points = [(math.inf, 0.0, 0.0)]
    tp = fp = 0
    auc_num = 0
    i = 0
    while i < len(data):
        threshold = data[i][0]
        dtp = dfp = 0
        while i < len(data) and data[i][0] == threshold:
            dtp += data[i][1]
            dfp += 1 - data[i][1]
            i += 1
        auc_num += dfp * (2 * tp + dtp)
        tp += dtp
        fp += dfp
        points.append((threshold, fp / n_neg, tp / n_pos))
    return RocCurve(points=tuple(points), auc=auc_num / (2 * n_pos * n_neg))


@dataclass(frozen=True)
class DivergenceStats:
    """Average/median/min/max of the valid windows' anomaly scores.

    Invalid (empty-histogram) windows are excluded so the statistics stay
    finite; their count is reported alongside.
    """

    average: float
    median: float
    minimum: float
    maximum: float
    n_valid: int
    n_invalid: int


def divergence_stats(scores: Sequence[WindowScore]) -> DivergenceStats:
    values = np.array([s.score for s in scores if s.valid], dtype=float)
    n_invalid = sum(1 for s in scores if not s.valid)
    if values.size == 0:
        raise EmptyStatsError("no valid windows to aggregate")
    return DivergenceStats(
        average=float(values.mean()),
        median=float(np.median(values)),
        minimum=float(values.min()),
        maximum=float(values.max()),
        n_valid=int(values.size),
        n_invalid=n_invalid,
    )


@dataclass(frozen=True)
class SweepCell:
    """One grid point: coords along the sweep axes, a value or an absence reason."""

    coords: tuple
    value: float | None
    reason: str | None = None


@dataclass(frozen=True)
class SweepResult:
    axes: tuple[str, ...]
    cells: tuple[SweepCell, ...]

    def best(self) -> SweepCell | None:
        present = [c for c in self.cells if c.value is not None]
        return max(present, key=lambda c: c.value) if present else None


def _prepared_digits(dataset: FlowDataset, config: DetectorConfig) -> tuple[FlowDataset, np.ndarray]:
    ordered = order_flows(dataset, config.ordering)
    sizes = size_sequence(ordered, config.unit)
    return ordered, leading_digits(difference_sequence(sizes))


def window_size_sweep(
    dataset: FlowDataset,
    config: DetectorConfig,
    w_grid: Sequence[int],
    step: int | None = None,
) -> SweepResult:
    """Mean anomaly score per window size.

    ``step`` fixes the slide for every grid point; by default each W slides
    by W // 2. Grid points larger than the dataset are reported absent with
    a warning instead of aborting the sweep.
    """
    ordered, digits = _prepared_digits(dataset, config)
    n = len(ordered.flows)
    cells = []
    for w in w_grid:
        if w > n:
            warnings.warn(f"window size {w} exceeds flow count {n}; cell skipped", RuntimeWarning)
            cells.append(SweepCell(coords=(w,), value=None, reason="insufficient flows"))
            continue
        spec = WindowSpec(w, step)
        wlist = windows(n, spec)
        starts = np.fromiter((x.start for x in wlist), dtype=np.int64, count=len(wlist))
        counts = _window_digit_counts(digits, starts, w - 1)
        scores, valid = _scores_from_counts(counts, config.zero_policy, config.metric, config.kld)
        if not valid.any():
            cells.append(SweepCell(coords=(w,), value=None, reason="no valid windows"))
            continue
        cells.append(SweepCell(coords=(w,), value=float(scores[valid].mean())))
    return SweepResult(axes=("w",), cells=tuple(cells))


def grid_evaluate(
    dataset: FlowDataset,
    base_config: DetectorConfig,
    w_grid: Sequence[int],
    labeling_grid: Sequence[LabelingRule],
    metric_set: Sequence[SimilarityMetric],
    step: int | None = None,
    threads: int = 1,
) -> SweepResult:
    """AUC per (window size, labeling threshold, metric) grid cell.

    Scores are shared across labeling thresholds and ground truths across
    metrics, so each cell costs one ROC computation. Each grid W slides by
    ``step`` (default W // 2). Cells whose window labels come out
    single-class are absent with reason "degenerate labels". Grid points
    evaluate independently (optionally on a thread pool); the result table
    is assembled in grid order either way.
    """
    if not dataset.labeled:
        raise CapabilityError("grid evaluation requires a labeled dataset")
    ordered, digits = _prepared_digits(dataset, base_config)
    n = len(ordered.flows)
    labels = np.fromiter((f.label for f in ordered.flows), dtype=np.int64, count=n)
    label_cum = np.concatenate(([0], np.cumsum(labels)))

    def eval_w(w: int) -> list[SweepCell]:
        out: list[SweepCell] = []
        if w > n:
            for labeling in labeling_grid:
                for metric in metric_set:
                    out.append(
                        SweepCell(
                            coords=(w, labeling.describe(), metric.value),
                            value=None,
                            reason="insufficient flows",
                        )
                    )
            return out
        wlist = windows(n, WindowSpec(w, step))
        starts = np.fromiter((x.start for x in wlist), dtype=np.int64, count=len(wlist))
        counts = _window_digit_counts(digits, starts, w - 1)
        window_labels = label_cum[starts + w] - label_cum[starts]
        score_vectors = {
            metric: _scores_from_counts(counts, base_config.zero_policy, metric, base_config.kld)[0]
            for metric in metric_set
        }
        for labeling in labeling_grid:
            t_abs = resolve_labeling_threshold(labeling, w)
            truths = (window_labels >= t_abs).astype(np.int64)
            degenerate = bool(truths.all()) or not bool(truths.any())
            for metric in metric_set:
                coords = (w, labeling.describe(), metric.value)
                if degenerate:
                    out.append(SweepCell(coords=coords, value=None, reason="degenerate labels"))
                    continue
                curve = roc_auc(zip(score_vectors[metric].tolist(), truths.tolist()))
                out.append(SweepCell(coords=coords, value=curve.auc))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_w = list(pool.map(eval_w, w_grid))
    else:
        per_w = [eval_w(w) for w in w_grid]

    cells = [cell for chunk in per_w for cell in chunk]
    return SweepResult(axes=("w", "labeling", "metric"), cells=tuple(cells))


def write_roc_csv(curve: RocCurve, sink: IO[str]) -> None:
    """threshold,fpr,tpr rows with a trailing '# auc=' comment."""
    sink.write("threshold,fpr,tpr\n")
    for threshold, fpr, tpr in curve.points:
        sink.write(f"{threshold!r},{fpr!r},{tpr!r}\n")
    sink.write(f"# auc={curve.auc!r}\n")


def write_sweep_csv(result: SweepResult, sink: IO[str]) -> None:
    """One row per cell; absent cells keep an empty value and a comment line."""
    value_name = "auc" if len(result.axes) > 1 else "mean_score"
    sink.write(",".join(result.axes + (value_name,)) + "\n")
    absent = []
    for cell in result.cells:
        coords = ",".join(str(c) for c in cell.coords)
        if cell.value is None:
            sink.write(f"{coords},\n")
            absent.append(f"# absent: {coords} reason={cell.reason}\n")
        else:
            sink.write(f"{coords},{cell.value!r}\n")
    for line in absent:
        sink.write(line)
