"""Flow-based anomaly detection from first-digit statistics of flow size differences.

Normal TCP traffic's consecutive flow-size differences follow the
logarithmic first-digit distribution closely; scripted attack traffic tends
not to. This package ingests flow datasets, scores sliding windows by their
deviation from that reference under a choice of seven metrics, and
benchmarks detection quality with ROC/AUC over parameter grids.
"""

__version__ = "0.1.0"

from .benford import (
    BENFORD_P,
    DigitDistribution,
    ZeroPolicy,
    benford_reference,
    digit_histogram,
    first_digit,
    leading_digits,
)
from .detector import (
    DetectorConfig,
    LabelingRule,
    WindowScore,
    label_window,
    resolve_labeling_threshold,
    run_detector,
    score_window,
    write_scores_csv,
)
from .errors import (
    CapabilityError,
    DegenerateLabelsError,
    EmptyHistogramError,
    EmptyStatsError,
    FlowDigitsError,
    FormatError,
    GeneratorSpecError,
    ParseError,
)
from .evaluation import (
    DivergenceStats,
    RocCurve,
    SweepCell,
    SweepResult,
    divergence_stats,
    grid_evaluate,
    roc_auc,
    window_size_sweep,
    write_roc_csv,
    write_sweep_csv,
)
from .ingest import (
    FlowDataset,
    FlowRecord,
    OrderingScheme,
    adapt_kdd,
    order_flows,
    parse_flow_csv,
    parse_tshark_conversations,
    write_flow_csv,
)
from .similarity import (
    DEFAULT_KLD_THETA,
    KldParams,
    SimilarityMetric,
    anomaly_score,
    canberra,
    chi_square,
    compute,
    cosine,
    euclidean,
    manhattan,
    modified_kld,
    pearson_cc,
)
from .synth import AttackBurst, ConstantSize, GeneratorSpec, UniformSize, describe, generate
from .windowing import (
    SizeUnit,
    WindowIndex,
    WindowSpec,
    difference_sequence,
    size_sequence,
    window_differences,
    windows,
)
