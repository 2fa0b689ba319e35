"""Exhaustive optimal routing over the path table, for desk-scale oracles.

Enumerates every per-flow label assignment depth-first with incremental
integer link loads, pruning branches whose running utilization already
exceeds the incumbent. Utilization comparisons are exact (integer
cross-multiplication), so tie-breaking never depends on float rounding.
"""

from __future__ import annotations

import numpy as np

from .errors import NoFeasiblePathError, SearchBudgetExceededError
from .routing import RoutingAssignment
from .topology import Topology
from .traffic import FlowSet
from .xpath import XPathTable, feasible_labels


def _ratio_gt(load_a: int, cap_a: int, load_b: int, cap_b: int) -> bool:
    """load_a/cap_a > load_b/cap_b without division."""
    return load_a * cap_b > load_b * cap_a


def solve_exact(
    flowset: FlowSet,
    xpath_table: XPathTable,
    topology: Topology,
    budget: int = 1_000_000,
) -> tuple[RoutingAssignment, float]:
    """Return the assignment minimizing maximum link utilization.

    Ties are broken by total hop count, then by the lexicographically
    smallest label vector, which makes the result deterministic. Raises
    SearchBudgetExceededError when the assignment space is larger than
    budget and NoFeasiblePathError when some flow has no candidate path.
    """
    n_flows = flowset.count
    if n_flows == 0:
        return RoutingAssignment(choice={}), 0.0

    options: list[tuple[int, ...]] = []
    space = 1
    for flow in flowset.flows:
        labels = feasible_labels(xpath_table, flow.src, flow.dst)
        if not labels:
            raise NoFeasiblePathError(flow.id, flow.src, flow.dst)
        options.append(labels)
        space *= len(labels)
        if space > budget:
            raise SearchBudgetExceededError(budget)

    edge_ids = topology.edge_index()
    cap_units = topology.capacity_units()
    demands = flowset.demand_units()
    label_edges = {
        label: np.array([edge_ids[e] for e in path.edges()], dtype=np.int64)
        for label, path in xpath_table.paths.items()
    }
    hop_cost = {label: path.edge_count for label, path in xpath_table.paths.items()}

    loads = np.zeros(len(cap_units), dtype=np.int64)
    chosen = [0] * n_flows

    best_labels: list[int] | None = None
    best_load, best_cap = 0, 1
    best_hops = 0

    def search(level: int, max_load: int, max_cap: int, hops: int):
        nonlocal best_labels, best_load, best_cap, best_hops
        if best_labels is not None and _ratio_gt(max_load, max_cap, best_load, best_cap):
            return
        if level == n_flows:
            better = best_labels is None or _ratio_gt(
                best_load, best_cap, max_load, max_cap
            )
            if not better and not _ratio_gt(max_load, max_cap, best_load, best_cap):
                better = (hops, chosen) < (best_hops, best_labels)
            if better:
                best_labels = list(chosen)
                best_load, best_cap, best_hops = max_load, max_cap, hops
            return
        demand = demands[level]
        for label in options[level]:
            edges = label_edges[label]
            loads[edges] += demand
            new_load, new_cap = max_load, max_cap
            for e in edges:
                if _ratio_gt(int(loads[e]), int(cap_units[e]), new_load, new_cap):
                    new_load, new_cap = int(loads[e]), int(cap_units[e])
            chosen[level] = label
            search(level + 1, new_load, new_cap, hops + hop_cost[label])
            loads[edges] -= demand

    search(0, 0, 1, 0)
    assert best_labels is not None
    choice = {flow.id: best_labels[i] for i, flow in enumerate(flowset.flows)}
    return RoutingAssignment(choice=choice), best_load / best_cap
