"""Fluid-flow evaluation of routings: delivered rates, throughput, and loss.

Rates are allocated at the flow level without packet dynamics. The default
max-min model water-fills link capacities among path-constrained flows; the
cheaper bottleneck model scales each flow by its worst oversubscribed link
and then repairs any remaining overload in one pass. Either way, delivered
rates never exceed demands and per-link delivered load never exceeds
capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .routing import RoutingMatrix, flow_edge_csr
from .topology import Topology
from .traffic import FlowSet

MODELS = ("maxmin", "bottleneck")


@dataclass(frozen=True)
class SimResult:
    """Delivered rates and roll-ups for one routing under one workload.

    mu is the maximum utilization of the *offered* loads (it may exceed 1);
    link_utilization holds the post-allocation (delivered) utilizations,
    which are capped at 1 by construction.
    """

    per_flow_rate: dict[int, float]
    link_utilization: dict[tuple[int, int], float]
    mu: float
    total_offered: float
    total_delivered: float
    loss_pct: float
    model: str = "maxmin"

    def transferred(self, interval: float) -> float:
        """Data volume delivered over an interval at these rates."""
        return self.total_delivered * interval


@dataclass(frozen=True)
class ComparisonReport:
    result_a: SimResult
    result_b: SimResult
    throughput_ratio: float
    loss_ratio: float


def _ratio(numerator: float, denominator: float) -> float:
    if numerator == denominator:
        return 1.0
    if denominator == 0:
        return float("inf")
    return numerator / denominator


def _bottleneck_rates(
    ptr: np.ndarray, edges: np.ndarray, demands: np.ndarray, caps: np.ndarray
) -> np.ndarray:
    """Scale each flow by its most oversubscribed link, then repair.

    The first pass uses offered loads; the single repair pass walks edges in
    id order and rescales the flows crossing any still-overloaded edge, which
    only lowers rates, so every edge ends at or below capacity.
    """
    n_edges = len(caps)
    offered = np.bincount(
        edges, weights=np.repeat(demands, np.diff(ptr)), minlength=n_edges
    )
    with np.errstate(divide="ignore"):
        edge_factor = np.minimum(1.0, caps / np.where(offered > 0, offered, 1.0))
    rates = demands.astype(np.float64).copy()
    for f in range(len(demands)):
        path = edges[ptr[f] : ptr[f + 1]]
        if path.size:
            rates[f] = demands[f] * edge_factor[path].min()

    crossing: list[list[int]] = [[] for _ in range(n_edges)]
    for f in range(len(demands)):
        for e in edges[ptr[f] : ptr[f + 1]]:
            crossing[e].append(f)
    for e in range(n_edges):
        if not crossing[e]:
            continue
        load = sum(rates[f] for f in crossing[e])
        if load > caps[e]:
            scale = caps[e] / load
            for f in crossing[e]:
                rates[f] *= scale
    return rates


def simulate(
    routing_matrix: RoutingMatrix,
    flowset: FlowSet,
    topology: Topology,
    model: str = "maxmin",
) -> SimResult:
    """Allocate delivered rates for every flow under the chosen model."""
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")

    sorted_links = topology.sorted_links()
    caps = np.array([c for _, _, c in sorted_links], dtype=np.float64)
    ptr, edges = flow_edge_csr(routing_matrix, flowset, topology)
    demands = np.array([f.demand for f in flowset.flows], dtype=np.float64)

    if flowset.count == 0:
        return SimResult(
            per_flow_rate={},
            link_utilization={(s, d): 0.0 for s, d, _ in sorted_links},
            mu=0.0,
            total_offered=0.0,
            total_delivered=0.0,
            loss_pct=0.0,
            model=model,
        )

    if model == "maxmin":
        rates = kernels.maxmin_rates(ptr, edges, demands, caps)
    else:
        rates = _bottleneck_rates(ptr, edges, demands, caps)

    delivered_load = np.bincount(
        edges, weights=np.repeat(rates, np.diff(ptr)), minlength=len(caps)
    )
    utilization = {
        (s, d): float(delivered_load[i] / caps[i])
        for i, (s, d, _) in enumerate(sorted_links)
    }
    offered = float(demands.sum())
    delivered = float(rates.sum())
    return SimResult(
        per_flow_rate={f.id: float(rates[i]) for i, f in enumerate(flowset.flows)},
        link_utilization=utilization,
        mu=routing_matrix.mu,
        total_offered=offered,
        total_delivered=delivered,
        loss_pct=0.0 if offered == 0 else 100.0 * (1.0 - delivered / offered),
        model=model,
    )


def compare(
    matrix_a: RoutingMatrix,
    matrix_b: RoutingMatrix,
    flowset: FlowSet,
    topology: Topology,
    model: str = "maxmin",
) -> ComparisonReport:
    """Side-by-side simulation of two routings for the same workload.

    throughput_ratio is a over b; loss_ratio is b over a, so both read
    "higher favors a".
    """
    result_a = simulate(matrix_a, flowset, topology, model)
    result_b = simulate(matrix_b, flowset, topology, model)
    return ComparisonReport(
        result_a=result_a,
        result_b=result_b,
        throughput_ratio=_ratio(result_a.total_delivered, result_b.total_delivered),
        loss_ratio=_ratio(result_b.loss_pct, result_a.loss_pct),
    )


@dataclass(frozen=True)
class VolumeStep:
    step: int
    transferred: float
    active_flows: int


def run_volume_schedule(
    routing_matrix: RoutingMatrix,
    flowset: FlowSet,
    topology: Topology,
    volumes: dict[int, float],
    interval: float = 1.0,
    model: str = "maxmin",
    max_steps: int = 10_000,
) -> list[VolumeStep]:
    """Step fixed intervals until every flow has shipped its volume.

    Each step allocates rates among the still-active flows, transfers
    rate x interval (clipped to the remaining volume), and retires finished
    flows so their capacity is freed for the rest.
    """
    if interval <= 0:
        raise ValueError("interval must be positive")
    remaining = {f.id: float(volumes.get(f.id, 0.0)) for f in flowset.flows}
    steps: list[VolumeStep] = []
    for step in range(max_steps):
        active = tuple(f for f in flowset.flows if remaining[f.id] > 0)
        if not active:
            break
        renumbered = FlowSet(
            flows=tuple(
                type(f)(id=i + 1, src=f.src, dst=f.dst, demand=f.demand, cls=f.cls)
                for i, f in enumerate(active)
            )
        )
        submatrix = RoutingMatrix(
            indicator={
                i + 1: routing_matrix.indicator[f.id] for i, f in enumerate(active)
            },
            link_load={},
            mu=routing_matrix.mu,
        )
        result = simulate(submatrix, renumbered, topology, model)
        moved = 0.0
        for i, f in enumerate(active):
            shipped = min(result.per_flow_rate[i + 1] * interval, remaining[f.id])
            remaining[f.id] -= shipped
            if remaining[f.id] < 1e-12:
                remaining[f.id] = 0.0
            moved += shipped
        steps.append(VolumeStep(step=step, transferred=moved, active_flows=len(active)))
    return steps
