"""Goodness-of-fit and deviation metrics against the first-digit reference.

All metrics compare the observed digit 1-9 probabilities with the reference
without renormalizing: an extended observation keeps its raw 1-9 entries, so
mass sitting on digit 0 depresses every other digit and still moves the
metric. Only the modified KLD charges digit 0 explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .benford import BENFORD_P, DigitDistribution, benford_reference


class SimilarityMetric(Enum):
    CHI_SQUARE = "chi2"
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    CANBERRA = "canberra"
    PEARSON_CC = "pearson"
    COSINE = "cosine"
    MODIFIED_KLD = "mkld"


#: Metrics where 0 means perfect fit and larger means worse.
DIVERGENCES = frozenset(
    {
        SimilarityMetric.CHI_SQUARE,
        SimilarityMetric.EUCLIDEAN,
        SimilarityMetric.MANHATTAN,
        SimilarityMetric.CANBERRA,
        SimilarityMetric.MODIFIED_KLD,
    }
)

#: Metrics where 1 means perfect fit and smaller means worse.
SIMILARITIES = frozenset({SimilarityMetric.PEARSON_CC, SimilarityMetric.COSINE})

#: Unit contribution of digit 0 to the modified KLD: 2*log2(1/P(9)), the
#: heuristic that full mass on digit 0 diverges twice as hard as full mass
#: on digit 9 would.
DEFAULT_KLD_THETA = 2.0 * math.log2(1.0 / BENFORD_P[8])

_STANDARD_REF = None


@dataclass(frozen=True)
class KldParams:
    """Tunable weight of the digit-0 term in the modified KLD."""

    theta: float = DEFAULT_KLD_THETA

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")


def _reference(ref: DigitDistribution | None) -> np.ndarray:
    global _STANDARD_REF
    if ref is not None:
        return ref.leading
    if _STANDARD_REF is None:
        _STANDARD_REF = benford_reference(extended=False)
    return _STANDARD_REF.leading


def chi_square(obs: DigitDistribution, ref: DigitDistribution | None = None) -> float:
    """Pearson chi-square divergence, sum over digits 1-9 of (o-r)^2/r."""
    o = obs.leading
    r = _reference(ref)
    return float(np.sum((o - r) ** 2 / r))


def euclidean(obs: DigitDistribution, ref: DigitDistribution | None = None) -> float:
    o = obs.leading
    r = _reference(ref)
    return float(np.sqrt(np.sum((o - r) ** 2)))


def manhattan(obs: DigitDistribution, ref: DigitDistribution | None = None) -> float:
    o = obs.leading
    r = _reference(ref)
    return float(np.sum(np.abs(o - r)))


def canberra(obs: DigitDistribution, ref: DigitDistribution | None = None) -> float:
    """Sum of |o-r|/(o+r) over digits 1-9; a zero denominator contributes 0."""
    o = obs.leading
    r = _reference(ref)
    denom = o + r
    terms = np.zeros(9)
    nz = denom > 0
    terms[nz] = np.abs(o[nz] - r[nz]) / denom[nz]
    return float(terms.sum())


def pearson_cc(obs: DigitDistribution, ref: DigitDistribution | None = None) -> float:
    """Sample correlation of the two 9-vectors.

    A zero-variance observation (all nine entries equal, e.g. a uniform or
    an all-zero histogram) has no defined correlation; it returns 0 so that
    an all-equal histogram never silently scores as a perfect fit.
    """
    o = obs.leading
    r = _reference(ref)
    if np.ptp(o) == 0:
        return 0.0
    oc = o - o.mean()
    rc = r - r.mean()
    so = np.sqrt(np.sum(oc**2))
    sr = np.sqrt(np.sum(rc**2))
    if so == 0.0 or sr == 0.0:
        return 0.0
    return float(np.sum(oc * rc) / (so * sr))


def cosine(obs: DigitDistribution, ref: DigitDistribution | None = None) -> float:
    """Cosine similarity of the digit 1-9 vectors; an all-zero observation
    (every value had first digit 0) returns 0 by convention."""
    o = obs.leading
    r = _reference(ref)
    no = np.sqrt(np.sum(o**2))
    if no == 0.0:
        return 0.0
    nr = np.sqrt(np.sum(r**2))
    return float(np.sum(o * r) / (no * nr))


def modified_kld(
    obs: DigitDistribution,
    ref: DigitDistribution | None = None,
    params: KldParams | None = None,
) -> float:
    """Kullback-Leibler-style divergence with an explicit digit-0 charge.

    Computes p0*theta + sqrt(sum over digits 1-9 of o*log2(o/r)), with the
    0*log(0/r) = 0 convention. When p0 > 0 the observed 1-9 entries sum
    below 1 and the inner sum can go negative; it is clamped at 0 before
    the square root since the p0*theta term already accounts for that mass.
    """
    theta = (params or KldParams()).theta
    o = obs.leading
    r = _reference(ref)
    nz = o > 0
    inner = float(np.sum(o[nz] * np.log2(o[nz] / r[nz]))) if nz.any() else 0.0
    if inner < 0.0:
        inner = 0.0
    return obs.zero_mass * theta + math.sqrt(inner)


_METRIC_FUNCS = {
    SimilarityMetric.CHI_SQUARE: chi_square,
    SimilarityMetric.EUCLIDEAN: euclidean,
    SimilarityMetric.MANHATTAN: manhattan,
    SimilarityMetric.CANBERRA: canberra,
    SimilarityMetric.PEARSON_CC: pearson_cc,
    SimilarityMetric.COSINE: cosine,
}


def compute(
    metric: SimilarityMetric,
    obs: DigitDistribution,
    ref: DigitDistribution | None = None,
    kld: KldParams | None = None,
) -> float:
    """Raw metric value, in the metric's native orientation."""
    if metric is SimilarityMetric.MODIFIED_KLD:
        return modified_kld(obs, ref, kld)
    return _METRIC_FUNCS[metric](obs, ref)


def anomaly_score(metric: SimilarityMetric, raw: float) -> float:
    """Orient any metric so 0 means perfect fit and larger means worse.

    Divergences pass through; similarities map to 1 - raw, with the Pearson
    coefficient clamped below at 0 first so anti-correlation saturates at 1.
    """
    if metric in DIVERGENCES:
        return raw
    if metric is SimilarityMetric.PEARSON_CC:
        raw = max(raw, 0.0)
    return 1.0 - raw
