"""Congestion-aware traffic-engineering laboratory.

Builds capacitated switch fabrics, enumerates bounded-hop paths, generates
flow workloads, and routes them with a genetic minimizer of maximum link
utilization, benchmarked against hash-based ECMP and an exhaustive oracle.
A fluid-flow simulator turns routings into throughput and loss metrics.
"""

__version__ = "0.1.0"
