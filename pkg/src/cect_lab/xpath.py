"""Offline enumeration of bounded-hop loop-free paths.

Every simple directed path with 1..x edges is enumerated once per topology
and given a small-integer label; the genetic solver's genes are these
labels. Labels are assigned breadth-first by path length, then by (source,
destination, hop sequence), which keeps label assignment stable across runs
and matches the published labeling of the reference topologies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import Topology


@dataclass(frozen=True)
class XPath:
    """A loop-free directed path, labeled uniquely within its table."""

    label: int
    hops: tuple[int, ...]

    def __post_init__(self):
        if len(self.hops) < 2:
            raise ValueError("a path needs at least one edge")
        if len(set(self.hops)) != len(self.hops):
            raise ValueError(f"path {self.hops} revisits a switch")

    @property
    def src(self) -> int:
        return self.hops[0]

    @property
    def dst(self) -> int:
        return self.hops[-1]

    @property
    def edge_count(self) -> int:
        return len(self.hops) - 1

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.hops[:-1], self.hops[1:]))


@dataclass(frozen=True)
class XPathTable:
    """All retained x-paths of a topology, indexed by label and by endpoint pair."""

    x: int
    paths: dict[int, XPath]
    by_pair: dict[tuple[int, int], tuple[int, ...]]
    cap_c: int | None = None

    @property
    def path_count(self) -> int:
        return len(self.paths)

    def hops_of(self, label: int) -> tuple[int, ...]:
        return self.paths[label].hops

    def label_edge_csr(self, topology: Topology) -> tuple[np.ndarray, np.ndarray]:
        """CSR view (row ptr, edge ids) of every path's edge list.

        Row i holds the edges of label i+1, using topology.edge_index() ids.
        Cached on the table; the arrays feed the load-accumulation kernels.
        """
        cached = getattr(self, "_csr", None)
        if cached is not None:
            return cached
        edge_ids = topology.edge_index()
        ptr = np.zeros(len(self.paths) + 1, dtype=np.int64)
        flat: list[int] = []
        for label in range(1, len(self.paths) + 1):
            for edge in self.paths[label].edges():
                flat.append(edge_ids[edge])
            ptr[label] = len(flat)
        csr = (ptr, np.array(flat, dtype=np.int64))
        object.__setattr__(self, "_csr", csr)
        return csr


def _simple_paths_from(
    topology: Topology, start: int, max_edges: int
) -> list[tuple[int, ...]]:
    """Depth-first enumeration of all simple paths of 1..max_edges edges."""
    found: list[tuple[int, ...]] = []
    path = [start]
    on_path = {start}

    def extend():
        if len(path) > max_edges:
            return
        for nxt in topology.out_neighbors(path[-1]):
            if nxt in on_path:
                continue
            path.append(nxt)
            on_path.add(nxt)
            found.append(tuple(path))
            extend()
            on_path.remove(nxt)
            path.pop()

    extend()
    return found


def precompute_xpaths(
    topology: Topology, x: int = 10, cap_c: int | None = None
) -> XPathTable:
    """Enumerate all simple paths with at most x edges and label them.

    When cap_c is given, each (src, dst) pair keeps only its cap_c shortest
    paths (ties broken by hop sequence). Labels are dense 1..N over the
    retained paths, ordered by (length, src, dst, hop sequence).
    """
    if x < 1:
        raise ValueError("hop bound x must be >= 1")
    if cap_c is not None and cap_c < 1:
        raise ValueError("per-pair cap must be >= 1")

    all_paths: list[tuple[int, ...]] = []
    for node in topology.nodes:
        all_paths.extend(_simple_paths_from(topology, node, x))
    all_paths.sort(key=lambda hops: (len(hops), hops[0], hops[-1], hops))

    if cap_c is not None:
        kept: list[tuple[int, ...]] = []
        pair_counts: dict[tuple[int, int], int] = {}
        for hops in all_paths:
            pair = (hops[0], hops[-1])
            if pair_counts.get(pair, 0) < cap_c:
                pair_counts[pair] = pair_counts.get(pair, 0) + 1
                kept.append(hops)
        all_paths = kept

    paths: dict[int, XPath] = {}
    by_pair: dict[tuple[int, int], list[int]] = {}
    for label, hops in enumerate(all_paths, start=1):
        paths[label] = XPath(label=label, hops=hops)
        by_pair.setdefault((hops[0], hops[-1]), []).append(label)

    return XPathTable(
        x=x,
        paths=paths,
        by_pair={pair: tuple(labels) for pair, labels in by_pair.items()},
        cap_c=cap_c,
    )


def feasible_labels(table: XPathTable, src: int, dst: int) -> tuple[int, ...]:
    """Labels of every retained path from src to dst, shortest first."""
    return table.by_pair.get((src, dst), ())


def grow_xpaths(topology: Topology, x: int = 10) -> set[tuple[int, ...]]:
    """Alternate enumeration by iterative one-hop extension.

    Grows the 1-edge paths tier by tier instead of depth-first; retained as
    an independent construction for cross-checking precompute_xpaths.
    """
    if x < 1:
        raise ValueError("hop bound x must be >= 1")
    frontier = {
        (src, dst) for src, dst, _ in topology.links
    }
    result: set[tuple[int, ...]] = set(frontier)
    for _ in range(x - 1):
        grown = set()
        for hops in frontier:
            for nxt in topology.out_neighbors(hops[-1]):
                if nxt not in hops:
                    grown.add(hops + (nxt,))
        if not grown:
            break
        result |= grown
        frontier = grown
    return result


def format_table(table: XPathTable) -> str:
    """Text dump, one `label <n>: s1 -> s2 -> ...` line per path."""
    lines = []
    for label in range(1, table.path_count + 1):
        hops = " -> ".join(str(h) for h in table.paths[label].hops)
        lines.append(f"label {label}: {hops}")
    return "\n".join(lines) + ("\n" if lines else "")
