"""Deterministic labeled synthetic flow datasets.

Normal traffic draws byte sizes log-uniformly over a span of decades, which
is scale-invariant within the range and therefore lands close to the
first-digit reference; attack bursts splice in flows whose sizes are
constant (repeated same-size flows, the DDoS / port-scan signature) or
drawn from a narrow uniform band. All randomness comes from numpy's PCG64
generator seeded from the spec, so an identical spec reproduces the dataset
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeneratorSpecError
from .ingest import FlowDataset, FlowRecord

#: Fixed nominal packet size (bytes) used to derive packet counts.
NOMINAL_PACKET_BYTES = 500

#: Spacing of consecutive flow start times, seconds.
START_SPACING_S = 0.05


@dataclass(frozen=True)
class ConstantSize:
    """Every flow in the burst has exactly this byte size."""

    value: int

    def __post_init__(self):
        if self.value < 1:
            raise GeneratorSpecError("constant burst size must be >= 1")


@dataclass(frozen=True)
class UniformSize:
    """Burst flow sizes drawn uniformly from [lo, hi], inclusive."""

    lo: int
    hi: int

    def __post_init__(self):
        if not 1 <= self.lo <= self.hi:
            raise GeneratorSpecError("uniform burst needs 1 <= lo <= hi")


@dataclass(frozen=True)
class AttackBurst:
    """A run of malicious flows occupying [start_index, start_index + length)
    of the final flow stream."""

    start_index: int
    length: int
    pattern: ConstantSize | UniformSize

    def __post_init__(self):
        if self.start_index < 0:
            raise GeneratorSpecError("burst start_index must be >= 0")
        if self.length < 1:
            raise GeneratorSpecError("burst length must be >= 1")


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int
    n_normal: int
    size_decades: tuple[int, int] = (1, 7)
    attacks: tuple[AttackBurst, ...] = ()
    size_model: str = "loguniform"
    pareto_alpha: float = 1.16

    def __post_init__(self):
        if self.n_normal < 1:
            raise GeneratorSpecError("n_normal must be >= 1")
        lo, hi = self.size_decades
        if hi - lo < 4:
            raise GeneratorSpecError("size_decades must span at least 4 decades")
        if lo < 0:
            raise GeneratorSpecError("size_decades low exponent must be >= 0")
        if self.size_model not in ("loguniform", "pareto"):
            raise GeneratorSpecError(f"unknown size model {self.size_model!r}")
        total = self.total_flows
        spans = sorted((b.start_index, b.start_index + b.length) for b in self.attacks)
        prev_end = 0
        for start, end in spans:
            if start < prev_end:
                raise GeneratorSpecError("attack bursts overlap")
            prev_end = end
        if spans and spans[-1][1] > total:
            raise GeneratorSpecError("attack burst extends past the end of the flow stream")

    @property
    def n_malicious(self) -> int:
        return sum(b.length for b in self.attacks)

    @property
    def total_flows(self) -> int:
        return self.n_normal + self.n_malicious


def _normal_sizes(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    lo, hi = spec.size_decades
    if spec.size_model == "loguniform":
        exponents = rng.uniform(lo, hi, spec.n_normal)
        return np.floor(10.0**exponents).astype(np.int64)
    # Pareto with scale 10^lo: heavy-tailed alternative for robustness runs.
    draws = (1.0 + rng.pareto(spec.pareto_alpha, spec.n_normal)) * 10.0**lo
    return np.floor(draws).astype(np.int64)


def _burst_sizes(burst: AttackBurst, rng: np.random.Generator) -> np.ndarray:
    if isinstance(burst.pattern, ConstantSize):
        return np.full(burst.length, burst.pattern.value, dtype=np.int64)
    return rng.integers(burst.pattern.lo, burst.pattern.hi, size=burst.length, endpoint=True, dtype=np.int64)


def generate(spec: GeneratorSpec) -> FlowDataset:
    """Build the labeled dataset described by the spec.

    Normal flows fill every index not claimed by a burst, in draw order.
    Flow start times increase strictly; burst flows share one destination
    endpoint per burst (scripted traffic hammers one target) while sources
    stay random.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    total = spec.total_flows

    sizes = np.empty(total, dtype=np.int64)
    labels = np.zeros(total, dtype=np.int64)
    burst_mask = np.zeros(total, dtype=bool)
    for burst in sorted(spec.attacks, key=lambda b: b.start_index):
        burst_mask[burst.start_index : burst.start_index + burst.length] = True

    sizes[~burst_mask] = _normal_sizes(spec, rng)
    for burst in sorted(spec.attacks, key=lambda b: b.start_index):
        span = slice(burst.start_index, burst.start_index + burst.length)
        sizes[span] = _burst_sizes(burst, rng)
        labels[span] = 1

    packets = np.maximum(1, sizes // NOMINAL_PACKET_BYTES)
    durations = rng.uniform(0.0, 1.0, total)
    src_octets = rng.integers(0, 256, size=(total, 3), dtype=np.int64)
    src_ports = rng.integers(1024, 65536, size=total, dtype=np.int64)
    dst_octets = rng.integers(0, 256, size=(total, 2), dtype=np.int64)
    dst_ports = rng.integers(1, 65536, size=total, dtype=np.int64)

    # One fixed target endpoint per burst: scripted traffic hammers a single
    # destination while sources stay random.
    burst_targets = {}
    for burst in sorted(spec.attacks, key=lambda b: b.start_index):
        target = rng.integers(0, 256, size=2)
        port = int(rng.integers(1, 65536))
        burst_targets[burst.start_index] = (f"172.16.{target[0]}.{target[1]}", port)

    flows = []
    burst_ends = {b.start_index: b.start_index + b.length for b in spec.attacks}
    active_target: tuple[str, int] | None = None
    active_end = -1
    for i in range(total):
        if i in burst_ends:
            active_target = burst_targets[i]
            active_end = burst_ends[i]
        if active_target is not None and i < active_end:
            dst_ip, dst_port = active_target
        else:
            dst_ip = f"192.168.{dst_octets[i, 0]}.{dst_octets[i, 1]}"
            dst_port = int(dst_ports[i])
        flows.append(
            FlowRecord(
                src_ip=f"10.{src_octets[i, 0]}.{src_octets[i, 1]}.{src_octets[i, 2]}",
                src_port=int(src_ports[i]),
                dst_ip=dst_ip,
                dst_port=dst_port,
                packets_total=int(packets[i]),
                bytes_total=int(sizes[i]),
                rel_start=i * START_SPACING_S,
                duration=float(durations[i]),
                label=int(labels[i]),
                seq_no=i,
            )
        )
    return FlowDataset(
        flows=tuple(flows),
        labeled=True,
        source_name=f"synthetic(seed={spec.seed})",
    )


def describe(spec: GeneratorSpec) -> str:
    """Human-readable summary of what generate() will produce."""
    lo, hi = spec.size_decades
    lines = [
        f"synthetic flow dataset, seed {spec.seed}",
        f"  normal flows:    {spec.n_normal} ({spec.size_model}, sizes in [10^{lo}, 10^{hi}))",
        f"  attack bursts:   {len(spec.attacks)}",
    ]
    for burst in sorted(spec.attacks, key=lambda b: b.start_index):
        if isinstance(burst.pattern, ConstantSize):
            shape = f"constant {burst.pattern.value} B"
        else:
            shape = f"uniform [{burst.pattern.lo}, {burst.pattern.hi}] B"
        lines.append(
            f"    flows [{burst.start_index}, {burst.start_index + burst.length}): {shape}"
        )
    lines.append(f"  malicious flows: {spec.n_malicious}")
    lines.append(f"  total flows:     {spec.total_flows}")
    return "\n".join(lines)
