"""Command-line entry point: score, evaluate, sweep and generate.

Exit codes are stable: 0 success, 2 input problems (unreadable or malformed
data, missing labels), 3 configuration problems (invalid parameter values,
inconsistent generator specs). Every file written gets a side-car
``<file>.manifest.json`` recording the resolved configuration, the input
fingerprint and the tool version, so results stay attributable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .benford import ZeroPolicy
from .detector import DetectorConfig, LabelingRule, run_detector, write_scores_csv
from .errors import (
    CapabilityError,
    DegenerateLabelsError,
    EmptyStatsError,
    GeneratorSpecError,
    ParseError,
)
from .evaluation import grid_evaluate, roc_auc, window_size_sweep, write_roc_csv, write_sweep_csv
from .ingest import FlowDataset, OrderingScheme, adapt_kdd, parse_flow_csv, parse_tshark_conversations, write_flow_csv
from .similarity import KldParams, SimilarityMetric
from .synth import AttackBurst, ConstantSize, GeneratorSpec, UniformSize, describe, generate
from .windowing import SizeUnit, WindowSpec

#: Relative labeling thresholds evaluated when --tl gives a range.
DEFAULT_REL_GRID = (
    0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09,
    0.1, 0.12, 0.14, 0.16, 0.18, 0.2,
    0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
)

#: Absolute labeling thresholds evaluated when --labeling-abs gives a range.
DEFAULT_ABS_GRID = tuple(
    list(range(1, 10))
    + list(range(10, 100, 10))
    + list(range(100, 1000, 100))
    + [1000, 2000, 3000, 4000, 5000]
)

DEFAULT_SWEEP_GRID = tuple(range(500, 20_001, 250))


def _threads_default() -> int:
    value = os.environ.get("FLOWDIGITS_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _load_dataset(path: str, fmt: str, max_flows: int | None) -> FlowDataset:
    name = Path(path).name
    if fmt == "kdd":
        return adapt_kdd(path, source_name=name, max_flows=max_flows)
    if fmt == "tshark":
        dataset = parse_tshark_conversations(path, source_name=name)
    else:
        dataset = parse_flow_csv(path, source_name=name)
    if max_flows is not None and len(dataset.flows) > max_flows:
        dataset = FlowDataset(
            flows=dataset.flows[:max_flows], labeled=dataset.labeled, source_name=dataset.source_name
        )
    return dataset


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_dict(config: DetectorConfig) -> dict:
    return {
        "window": {"w": config.window.w, "s": config.window.s},
        "metric": config.metric.value,
        "unit": config.unit.value,
        "zero_policy": config.zero_policy.value,
        "ordering": config.ordering.value,
        "threshold_t": config.threshold_t,
        "kld_theta": config.kld.theta,
        "labeling": None if config.labeling is None else config.labeling.describe(),
    }


def _write_manifest(output: str, command: str, config: dict, input_path: str | None) -> None:
    manifest = {
        "tool": "flowdigits",
        "version": __version__,
        "command": command,
        "config": config,
        "input": input_path,
        "input_sha256": _sha256(input_path) if input_path else None,
        "output": output,
        "output_sha256": _sha256(output),
    }
    with open(f"{output}.manifest.json", "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _labeling_from_args(args) -> LabelingRule | None:
    if getattr(args, "tl", None) is not None and getattr(args, "labeling_abs", None) is not None:
        raise ValueError("--tl and --labeling-abs are mutually exclusive")
    if getattr(args, "tl", None) is not None:
        return LabelingRule(relative=float(args.tl))
    if getattr(args, "labeling_abs", None) is not None:
        return LabelingRule(absolute=int(args.labeling_abs))
    return None


def _config_from_args(args, labeling: LabelingRule | None = None) -> DetectorConfig:
    kld = KldParams(theta=args.theta) if args.theta is not None else KldParams()
    return DetectorConfig(
        window=WindowSpec(args.window, args.step),
        metric=SimilarityMetric(args.metric),
        unit=SizeUnit(args.unit),
        zero_policy=ZeroPolicy(args.zeros),
        ordering=OrderingScheme(args.ordering),
        threshold_t=args.threshold,
        kld=kld,
        labeling=labeling,
    )


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _parse_labeling_grid(text: str | None, absolute: bool) -> list[LabelingRule]:
    """A comma list of values, or "lo..hi" selecting from the built-in grid."""
    if absolute:
        default_grid = DEFAULT_ABS_GRID
        make = lambda v: LabelingRule(absolute=int(v))
        convert = int
    else:
        default_grid = DEFAULT_REL_GRID
        make = lambda v: LabelingRule(relative=float(v))
        convert = float
    if text is None:
        return [make(v) for v in default_grid]
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        lo, hi = convert(lo_text), convert(hi_text)
        chosen = [v for v in default_grid if lo <= v <= hi]
        if not chosen:
            raise ValueError(f"no grid values inside {text!r}")
        return [make(v) for v in chosen]
    return [make(convert(part)) for part in text.split(",") if part.strip()]


def _parse_burst(text: str) -> AttackBurst:
    parts = text.split(":")
    kind = parts[0] if parts else ""
    try:
        if kind == "const" and len(parts) == 4:
            value, start, length = (int(p) for p in parts[1:])
            return AttackBurst(start_index=start, length=length, pattern=ConstantSize(value))
        if kind == "uniform" and len(parts) == 5:
            lo, hi, start, length = (int(p) for p in parts[1:])
            return AttackBurst(start_index=start, length=length, pattern=UniformSize(lo, hi))
    except GeneratorSpecError:
        raise
    except ValueError:
        raise ValueError(f"burst fields must be integers: {text!r}") from None
    raise ValueError(f"burst must look like const:SIZE:START:LEN or uniform:LO:HI:START:LEN, got {text!r}")


def _add_common_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "tshark", "kdd"), default="csv", help="input format")
    p.add_argument("--metric", choices=[m.value for m in SimilarityMetric], default="chi2")
    p.add_argument("--window", type=int, default=2500, help="flows per window (W)")
    p.add_argument("--step", type=int, default=None, help="window slide in flows (S), default W/2")
    p.add_argument("--threshold", type=float, default=0.4, help="alert threshold on the anomaly score (T)")
    p.add_argument("--zeros", choices=("skip", "count"), default="count", help="zero-difference handling")
    p.add_argument(
        "--ordering",
        choices=[o.value for o in OrderingScheme],
        default="start-end",
        help="flow ordering applied before windowing",
    )
    p.add_argument("--unit", choices=("bytes", "packets"), default="bytes", help="flow size unit")
    p.add_argument("--theta", type=float, default=None, help="digit-0 weight for the modified KLD")
    p.add_argument("--max-flows", type=int, default=None, help="truncate the dataset after this many flows")


def cmd_score(args) -> int:
    labeling = _labeling_from_args(args)
    config = _config_from_args(args, labeling)
    dataset = _load_dataset(args.input, args.format, args.max_flows)
    scores = run_detector(dataset, config)
    if args.output is None:
        write_scores_csv(scores, sys.stdout)
        return 0
    with open(args.output, "w", encoding="utf-8", newline="") as handle:
        write_scores_csv(scores, handle)
    _write_manifest(args.output, "score", _config_dict(config), args.input)
    alerts = sum(s.decision for s in scores)
    print(f"scored {len(scores)} windows, {alerts} alerts -> {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    base_labeling = None
    if args.roc:
        text = args.labeling_abs if args.labeling_abs is not None else args.tl
        if text is None or "," in str(text) or ".." in str(text):
            raise ValueError("--roc needs a single --tl or --labeling-abs value")
        if args.labeling_abs is not None:
            base_labeling = LabelingRule(absolute=int(args.labeling_abs))
        else:
            base_labeling = LabelingRule(relative=float(args.tl))
    config = _config_from_args(args, base_labeling)
    dataset = _load_dataset(args.input, args.format, args.max_flows)
    if not dataset.labeled:
        raise CapabilityError("evaluation requires a labeled dataset")

    if args.roc:
        scores = run_detector(dataset, config)
        curve = roc_auc((s.score, s.truth) for s in scores)
        output = args.output or "roc.csv"
        with open(output, "w", encoding="utf-8", newline="") as handle:
            write_roc_csv(curve, handle)
        _write_manifest(output, "evaluate --roc", _config_dict(config), args.input)
        print(f"roc over {len(scores)} windows, auc={curve.auc:.9f} -> {output}")
        return 0

    if args.tl is not None and args.labeling_abs is not None:
        raise ValueError("--tl and --labeling-abs are mutually exclusive")
    absolute = args.labeling_abs is not None
    labeling_grid = _parse_labeling_grid(args.labeling_abs if absolute else args.tl, absolute)
    w_grid = _parse_int_list(args.windows)
    metric_set = [SimilarityMetric(m.strip()) for m in args.metrics.split(",") if m.strip()]
    result = grid_evaluate(
        dataset,
        config,
        w_grid,
        labeling_grid,
        metric_set,
        step=args.step,
        threads=_threads_default(),
    )
    output = args.output or "sweep.csv"
    with open(output, "w", encoding="utf-8", newline="") as handle:
        write_sweep_csv(result, handle)
    _write_manifest(output, "evaluate", _config_dict(config), args.input)
    best = result.best()
    if best is None:
        print("no evaluable grid cells (all degenerate)")
        return 2
    coords = dict(zip(result.axes, best.coords))
    print(
        f"best auc={best.value:.9f} at w={coords['w']} labeling={coords['labeling']} "
        f"metric={coords['metric']} -> {output}"
    )
    return 0


def cmd_sweep(args) -> int:
    config = _config_from_args(args, None)
    dataset = _load_dataset(args.input, args.format, args.max_flows)
    w_grid = _parse_int_list(args.windows) if args.windows else list(DEFAULT_SWEEP_GRID)
    result = window_size_sweep(dataset, config, w_grid, step=args.step)
    output = args.output or "wsweep.csv"
    with open(output, "w", encoding="utf-8", newline="") as handle:
        write_sweep_csv(result, handle)
    _write_manifest(output, "sweep", _config_dict(config), args.input)
    present = sum(1 for c in result.cells if c.value is not None)
    print(f"swept {len(result.cells)} window sizes ({present} evaluable) -> {output}")
    return 0


def cmd_generate(args) -> int:
    try:
        lo_text, hi_text = args.decades.split(":", 1)
        decades = (int(lo_text), int(hi_text))
    except ValueError:
        raise ValueError(f"--decades must look like LO:HI, got {args.decades!r}") from None
    spec = GeneratorSpec(
        seed=args.seed,
        n_normal=args.normal,
        size_decades=decades,
        attacks=tuple(_parse_burst(b) for b in args.burst),
        size_model=args.size_model,
        pareto_alpha=args.pareto_alpha,
    )
    dataset = generate(spec)
    with open(args.output, "w", encoding="utf-8", newline="") as handle:
        write_flow_csv(dataset, handle)
    _write_manifest(
        args.output,
        "generate",
        {
            "seed": spec.seed,
            "n_normal": spec.n_normal,
            "size_decades": list(spec.size_decades),
            "size_model": spec.size_model,
            "bursts": [
                {
                    "start_index": b.start_index,
                    "length": b.length,
                    "pattern": b.pattern.__class__.__name__,
                }
                for b in spec.attacks
            ],
        },
        None,
    )
    print(describe(spec))
    print(f"wrote {spec.total_flows} flows -> {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowdigits",
        description="First-digit analysis of TCP flow size differences for anomaly detection.",
    )
    parser.add_argument("--version", action="version", version=f"flowdigits {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="score sliding windows and write a window-score CSV")
    _add_common_detector_flags(p_score)
    p_score.add_argument("--tl", type=float, default=None, help="relative labeling threshold (adds a truth column)")
    p_score.add_argument("--labeling-abs", type=int, default=None, help="absolute labeling threshold")
    p_score.add_argument("input")
    p_score.add_argument("-o", "--output", default=None)
    p_score.set_defaults(func=cmd_score)

    p_eval = sub.add_parser("evaluate", help="ROC/AUC evaluation over a parameter grid")
    _add_common_detector_flags(p_eval)
    p_eval.add_argument("--metrics", default="chi2", help="comma-separated metric list for the grid")
    p_eval.add_argument("--windows", default="100,200,500,1000,2500,5000", help="comma-separated window sizes")
    p_eval.add_argument("--tl", default=None, help="relative thresholds: comma list or LO..HI from the built-in grid")
    p_eval.add_argument("--labeling-abs", default=None, help="absolute thresholds: comma list or LO..HI")
    p_eval.add_argument("--roc", action="store_true", help="write a single ROC curve for --window and one threshold")
    p_eval.add_argument("input")
    p_eval.add_argument("-o", "--output", default=None)
    p_eval.set_defaults(func=cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="mean anomaly score as a function of window size")
    _add_common_detector_flags(p_sweep)
    p_sweep.add_argument("--windows", default=None, help="comma-separated window sizes (default 500..20000 step 250)")
    p_sweep.add_argument("input")
    p_sweep.add_argument("-o", "--output", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_gen = sub.add_parser("generate", help="write a deterministic labeled synthetic dataset")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--normal", type=int, required=True, help="number of normal flows")
    p_gen.add_argument("--decades", default="1:7", help="size exponents LO:HI, sizes drawn in [10^LO, 10^HI)")
    p_gen.add_argument(
        "--burst",
        action="append",
        default=[],
        help="const:SIZE:START:LEN or uniform:LO:HI:START:LEN (repeatable)",
    )
    p_gen.add_argument("--size-model", choices=("loguniform", "pareto"), default="loguniform")
    p_gen.add_argument("--pareto-alpha", type=float, default=1.16)
    p_gen.add_argument("-o", "--output", required=True)
    p_gen.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, OSError, CapabilityError, DegenerateLabelsError, EmptyStatsError) as exc:
        print(f"flowdigits: input error: {exc}", file=sys.stderr)
        return 2
    except (GeneratorSpecError, ValueError) as exc:
        print(f"flowdigits: configuration error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
