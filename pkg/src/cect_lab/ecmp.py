"""Hash-based equal-cost multipath baseline router.

Each flow is pinned to one of its minimum-hop paths, selected by a 64-bit
FNV-1a hash of (src, dst, flow id) modulo the number of candidates. The hash
is fixed and documented so that assignments are reproducible anywhere.
"""

from __future__ import annotations

from collections import deque

from .errors import UnreachableFlowError
from .routing import RoutingAssignment
from .topology import Topology
from .traffic import FlowSet
from .xpath import XPathTable, feasible_labels, precompute_xpaths

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(*values: int) -> int:
    """FNV-1a over each value as 8 little-endian two's-complement bytes."""
    digest = _FNV_OFFSET
    for value in values:
        for byte in int(value).to_bytes(8, "little", signed=True):
            digest ^= byte
            digest = (digest * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return digest


def bfs_distance(topology: Topology, src: int) -> dict[int, int]:
    """Hop distance from src to every reachable switch."""
    dist = {src: 0}
    queue = deque([src])
    while queue:
        node = queue.popleft()
        for nxt in topology.out_neighbors(node):
            if nxt not in dist:
                dist[nxt] = dist[node] + 1
                queue.append(nxt)
    return dist


def route_ecmp(
    flowset: FlowSet,
    topology: Topology,
    xpath_table: XPathTable | None = None,
    max_paths: int | None = None,
) -> RoutingAssignment:
    """Assign every flow to a hash-selected minimum-hop path.

    Candidates for a flow are all its shortest paths in the table, in label
    order (labels sort by hop count then hop sequence); max_paths, when set,
    keeps only the first max_paths candidates before hashing. Without a
    table, one is enumerated on the fly with the hop bound needed to cover
    the flows' shortest paths.
    """
    distances: dict[int, dict[int, int]] = {}

    def dist(src: int, dst: int) -> int | None:
        if src not in distances:
            distances[src] = bfs_distance(topology, src)
        return distances[src].get(dst)

    if xpath_table is None:
        needed = 1
        for flow in flowset.flows:
            d = dist(flow.src, flow.dst)
            if d is None:
                raise UnreachableFlowError(flow.id, flow.src, flow.dst)
            needed = max(needed, d)
        xpath_table = precompute_xpaths(topology, x=needed)

    choice: dict[int, int] = {}
    for flow in flowset.flows:
        labels = feasible_labels(xpath_table, flow.src, flow.dst)
        if not labels:
            if dist(flow.src, flow.dst) is None:
                raise UnreachableFlowError(flow.id, flow.src, flow.dst)
            raise ValueError(
                f"flow {flow.id}: table hop bound {xpath_table.x} is below the "
                f"shortest-path distance {dist(flow.src, flow.dst)}"
            )
        min_hops = xpath_table.paths[labels[0]].edge_count
        candidates = [
            lab for lab in labels if xpath_table.paths[lab].edge_count == min_hops
        ]
        if max_paths is not None:
            candidates = candidates[: max(1, max_paths)]
        choice[flow.id] = candidates[fnv1a64(flow.src, flow.dst, flow.id) % len(candidates)]
    return RoutingAssignment(choice=choice)
