"""Fully decoded schedules: partitioning, per-subgraph processor and config
choices, and the network priority order."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .costs import DeviceProfile, ProcessorConfig, ProfileDB, best_config
from .graph import (
    NetworkGraph,
    PartitionedNetwork,
    decode_mapping,
    decode_partition,
    subgraph_hash,
)


@dataclass(frozen=True)
class NetworkPlan:
    graph: NetworkGraph
    pn: PartitionedNetwork
    mapping_genes: tuple[int, ...]
    processors: tuple[str, ...]
    configs: tuple[ProcessorConfig, ...]
    times: tuple[float, ...]
    digests: tuple[bytes, ...]

    @property
    def n_subgraphs(self) -> int:
        return self.pn.n_subgraphs


@dataclass(frozen=True)
class Solution:
    plans: Mapping[str, NetworkPlan]
    priority: tuple[str, ...]  # network names, first runs ahead of later ones

    def priority_rank(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.priority)}


def plan_network(
    graph: NetworkGraph,
    cut_bits: Sequence[int],
    layer_prefs: Sequence[int],
    profile: DeviceProfile,
    db: Optional[ProfileDB] = None,
) -> NetworkPlan:
    """Decode one network's genes and price each subgraph at its best config."""
    pn = decode_partition(graph, cut_bits)
    proc_idx = decode_mapping(pn, layer_prefs, graph, len(profile.processors))
    processors = tuple(profile.processors[i] for i in proc_idx)
    digests = tuple(subgraph_hash(sg, graph) for sg in pn.subgraphs)
    configs = []
    times = []
    for sg, proc, digest in zip(pn.subgraphs, processors, digests):
        cfg, t = best_config(sg, proc, profile, db, digest)
        configs.append(cfg)
        times.append(t)
    return NetworkPlan(
        graph=graph,
        pn=pn,
        mapping_genes=tuple(int(p) for p in layer_prefs),
        processors=processors,
        configs=tuple(configs),
        times=tuple(times),
        digests=digests,
    )


def build_solution(
    networks: Sequence[NetworkGraph],
    partitions: Sequence[Sequence[int]],
    mappings: Sequence[Sequence[int]],
    priority: Sequence[int],
    profile: DeviceProfile,
    db: Optional[ProfileDB] = None,
) -> Solution:
    """Decode a full genome; priority holds network indices, best first."""
    plans = {
        g.name: plan_network(g, bits, prefs, profile, db)
        for g, bits, prefs in zip(networks, partitions, mappings)
    }
    order = tuple(networks[i].name for i in priority)
    return Solution(plans=plans, priority=order)
