"""Flow workloads: synthetic generation by size class and flow-table compression.

Flow demands are expressed as a fraction of the smallest link capacity, so a
"big" flow always claims half a bottleneck link regardless of the capacity
scale. Compression merges the long tail of sub-threshold flows that share an
endpoint pair, shrinking the gene count the solver has to optimize.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FlowFormatError
from .topology import Topology, to_units

# Demand as a fraction of the minimum link capacity, per size class.
CLASS_FRACTION = {
    "micro": 0.005,
    "small": 0.02,
    "medium": 0.2,
    "big": 0.5,
}

FLOW_CLASSES = (*CLASS_FRACTION, "custom")

# 10 Kb/s when the bandwidth unit is Mb/s: the usual small-flow threshold.
DEFAULT_COMPRESS_LOWER = 0.01


def default_compression_bounds(topology: Topology) -> tuple[float, float]:
    """Small-flow threshold plus an upper bound keeping merges routable.

    The upper bound is half the smallest link capacity so a merged flow can
    always ride a single path without monopolizing it.
    """
    min_cap = min(cap for _, _, cap in topology.links)
    return DEFAULT_COMPRESS_LOWER, 0.5 * min_cap


@dataclass(frozen=True)
class Flow:
    """One unidirectional demand between two switches."""

    id: int
    src: int
    dst: int
    demand: float
    cls: str = "custom"

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"flow {self.id}: src equals dst ({self.src})")
        if self.demand <= 0:
            raise ValueError(f"flow {self.id}: demand must be positive")
        if self.cls not in FLOW_CLASSES:
            raise ValueError(f"flow {self.id}: unknown class {self.cls!r}")


@dataclass(frozen=True)
class FlowSet:
    """Ordered flows with ids dense 1..count."""

    flows: tuple[Flow, ...]

    def __post_init__(self):
        for i, flow in enumerate(self.flows, start=1):
            if flow.id != i:
                raise ValueError(f"flow ids must be dense 1..N, got {flow.id} at {i}")

    @property
    def count(self) -> int:
        return len(self.flows)

    def demand_units(self) -> np.ndarray:
        """int64 demands in milli-units, index i holds flow i+1."""
        return np.array([to_units(f.demand) for f in self.flows], dtype=np.int64)

    def pairs(self) -> list[tuple[int, int]]:
        return [(f.src, f.dst) for f in self.flows]


@dataclass(frozen=True)
class CompressionMap:
    """Bookkeeping to map a compressed flow set back to the original flows.

    merged maps a compressed flow id to the original ids it absorbed;
    passthrough maps compressed ids of untouched flows to their original id.
    """

    merged: dict[int, tuple[int, ...]]
    passthrough: dict[int, int]
    lower_bound: float
    upper_bound: float
    original_demand: dict[int, float] = field(default_factory=dict)


def generate_flows(
    topology: Topology,
    n_flows: int,
    class_mix: dict[str, float] | None = None,
    plr: float = 0.5,
    seed: int | None = None,
) -> FlowSet:
    """Draw a synthetic workload of n_flows demands.

    Sources are uniform over the topology's edge switches. With probability
    plr a flow leaves its originating pod (destination uniform over other
    pods' edge switches), otherwise it stays pod-local. Pod-less topologies
    are treated as one pod covering every switch and require plr == 0.
    Deterministic for a fixed seed.
    """
    class_mix = class_mix or {"micro": 0.25, "small": 0.25, "medium": 0.25, "big": 0.25}
    if abs(sum(class_mix.values()) - 1.0) > 1e-9:
        raise ValueError("class mix fractions must sum to 1")
    unknown = set(class_mix) - set(CLASS_FRACTION)
    if unknown:
        raise ValueError(f"unknown flow classes in mix: {sorted(unknown)}")
    if not 0.0 <= plr <= 1.0:
        raise ValueError("plr must lie in [0, 1]")
    if not topology.pod_of and plr > 0:
        raise ValueError("pod-leave probability needs a pod-labeled topology")

    edge_switches = topology.edge_switches()
    if len(edge_switches) < 2:
        raise ValueError("need at least 2 edge switches to generate flows")
    min_cap = min(cap for _, _, cap in topology.links)

    pods: dict[int, list[int]] = {}
    for sw in edge_switches:
        pods.setdefault(topology.pod_of.get(sw, 0), []).append(sw)

    rng = np.random.default_rng(seed)
    classes = sorted(class_mix)
    probs = np.array([class_mix[c] for c in classes])

    flows = []
    for fid in range(1, n_flows + 1):
        cls = classes[rng.choice(len(classes), p=probs)]
        src = edge_switches[rng.integers(len(edge_switches))]
        pod = topology.pod_of.get(src, 0)
        local = [s for s in pods[pod] if s != src]
        remote = [s for s in edge_switches if topology.pod_of.get(s, 0) != pod]
        leave = bool(remote) and (rng.random() < plr or not local)
        pool = remote if leave else local
        dst = pool[rng.integers(len(pool))]
        flows.append(
            Flow(id=fid, src=src, dst=dst, demand=CLASS_FRACTION[cls] * min_cap, cls=cls)
        )
    return FlowSet(flows=tuple(flows))


def compress_flows(
    flowset: FlowSet, lower_bound: float, upper_bound: float
) -> tuple[FlowSet, CompressionMap]:
    """Merge sub-threshold flows that share a (src, dst) pair.

    Flows with demand < lower_bound are packed first-fit decreasing into
    merged flows whose demand never exceeds upper_bound; a group that would
    overflow is closed and a new one opened. Larger flows pass through
    untouched. Total demand per pair is conserved exactly. lower_bound == 0
    disables merging.
    """
    if lower_bound < 0 or (lower_bound > 0 and lower_bound > upper_bound):
        raise ValueError("bounds must satisfy 0 <= lower_bound <= upper_bound")

    small_by_pair: dict[tuple[int, int], list[Flow]] = {}
    passthrough_flows: list[Flow] = []
    for flow in flowset.flows:
        if flow.demand < lower_bound:
            small_by_pair.setdefault((flow.src, flow.dst), []).append(flow)
        else:
            passthrough_flows.append(flow)

    merged: dict[int, tuple[int, ...]] = {}
    passthrough: dict[int, int] = {}
    out_flows: list[Flow] = []

    for flow in passthrough_flows:
        new_id = len(out_flows) + 1
        passthrough[new_id] = flow.id
        out_flows.append(
            Flow(id=new_id, src=flow.src, dst=flow.dst, demand=flow.demand, cls=flow.cls)
        )

    for pair in sorted(small_by_pair):
        group = sorted(small_by_pair[pair], key=lambda f: (-f.demand, f.id))
        bins: list[list[Flow]] = []
        sums: list[float] = []
        for flow in group:
            for i, total in enumerate(sums):
                if total + flow.demand <= upper_bound:
                    bins[i].append(flow)
                    sums[i] += flow.demand
                    break
            else:
                bins.append([flow])
                sums.append(flow.demand)
        for members in bins:
            new_id = len(out_flows) + 1
            merged[new_id] = tuple(sorted(f.id for f in members))
            out_flows.append(
                Flow(
                    id=new_id,
                    src=pair[0],
                    dst=pair[1],
                    demand=sum(f.demand for f in members),
                    cls="custom" if len(members) > 1 else members[0].cls,
                )
            )

    cmap = CompressionMap(
        merged=merged,
        passthrough=passthrough,
        lower_bound=lower_bound,
        upper_bound=upper_bound,
        original_demand={f.id: f.demand for f in flowset.flows},
    )
    return FlowSet(flows=tuple(out_flows)), cmap


def expand_metrics(
    metrics: dict[int, float], cmap: CompressionMap
) -> dict[int, float]:
    """Distribute per-compressed-flow metrics back to the original flows.

    A merged flow's value is split across members proportionally to their
    demand share, with the last member absorbing rounding so member values
    sum exactly to the merged value. Pass-through flows keep their value.
    """
    out: dict[int, float] = {}
    for new_id, value in metrics.items():
        if new_id in cmap.passthrough:
            out[cmap.passthrough[new_id]] = value
        elif new_id in cmap.merged:
            members = cmap.merged[new_id]
            demands = [cmap.original_demand[m] for m in members]
            total = sum(demands)
            assigned = 0.0
            for m, d in zip(members[:-1], demands[:-1]):
                share = value * d / total
                out[m] = share
                assigned += share
            out[members[-1]] = value - assigned
        else:
            raise KeyError(f"metric for unknown compressed flow id {new_id}")
    return out


def save_flows(flowset: FlowSet, path) -> None:
    """Write flows as `flow <id> <src> <dst> <demand> <class>` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for f in flowset.flows:
            fh.write(f"flow {f.id} {f.src} {f.dst} {f.demand:g} {f.cls}\n")


def load_flows(path) -> FlowSet:
    flows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6 or parts[0] != "flow":
                raise FlowFormatError(f"line {line_no}: unrecognized record {line!r}")
            try:
                flows.append(
                    Flow(
                        id=int(parts[1]),
                        src=int(parts[2]),
                        dst=int(parts[3]),
                        demand=float(parts[4]),
                        cls=parts[5],
                    )
                )
            except ValueError as exc:
                raise FlowFormatError(f"line {line_no}: {exc}") from exc
    return FlowSet(flows=tuple(flows))
