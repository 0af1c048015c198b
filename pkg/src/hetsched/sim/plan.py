"""Flattening of a solution + scenario into the static task system the
event-loop kernel consumes.

One template task per (network, subgraph); the kernel input replicates the
template once per request. Communication, quantization, and host I/O delays
are all static, so they are priced here, outside the hot loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..costs import MIB, DeviceProfile, comm_cost, quant_cost
from ..graph import Scenario
from ..solution import Solution


@dataclass
class SinkSet:
    """Template task indices completing one network, with host return delays."""

    template_idx: np.ndarray
    host_delay: np.ndarray


@dataclass
class SimPlan:
    n_template: int
    n_procs: int
    proc_names: tuple[str, ...]
    group_ids: tuple[int, ...]
    group_networks: dict[int, tuple[str, ...]]
    # per template task
    group_pos: np.ndarray   # position of the task's group in group_ids
    net_idx: np.ndarray     # into net_names
    sg_idx: np.ndarray      # topological index within the network
    proc_idx: np.ndarray
    base_exec: np.ndarray
    quant: np.ndarray
    host_in: np.ndarray
    input_mib: np.ndarray
    prio: np.ndarray        # network precedence rank, 0 = first
    sigma: np.ndarray       # relative noise per task (processor-dependent)
    # template dependency edges (already sorted by dst, then src)
    dep_src: np.ndarray
    dep_dst: np.ndarray
    dep_delay: np.ndarray
    net_names: tuple[str, ...]
    sinks: dict[tuple[int, str], SinkSet]  # (group id, network) -> completion set


#: Relative execution-time jitter per processor when noise is enabled.
DEFAULT_NOISE_SIGMA = {"CPU": 0.05}
_DEFAULT_SIGMA_OTHER = 0.01


def noise_sigma_for(processor: str, overrides=None) -> float:
    if overrides is not None and processor in overrides:
        return overrides[processor]
    return DEFAULT_NOISE_SIGMA.get(processor, _DEFAULT_SIGMA_OTHER)


def build_plan(solution: Solution, scenario: Scenario, profile: DeviceProfile) -> SimPlan:
    rank_of = solution.priority_rank()
    group_ids = tuple(sorted(g.id for g in scenario.groups))
    groups = {g.id: g for g in scenario.groups}

    group_pos, net_idx, sg_idx, proc_idx = [], [], [], []
    base_exec, quant, host_in, input_mib, prio, sigma = [], [], [], [], [], []
    dep_src, dep_dst, dep_delay = [], [], []
    net_names: list[str] = []
    sinks: dict[tuple[int, str], SinkSet] = {}

    for gpos, gid in enumerate(group_ids):
        for name in groups[gid].networks:
            plan = solution.plans[name]
            graph = plan.graph
            ni = len(net_names)
            net_names.append(name)
            base = len(group_pos)  # template index of this network's first task
            sink_idx, sink_delay = [], []
            for si, sg in enumerate(plan.pn.subgraphs):
                proc = plan.processors[si]
                in_bytes = 0.0
                q = 0.0
                for ei, src_sg in sg.boundary_in:
                    e = graph.edges[ei]
                    in_bytes += e.tensor_bytes
                    src_proc = plan.processors[src_sg]
                    dep_src.append(base + src_sg)
                    dep_dst.append(base + si)
                    dep_delay.append(comm_cost(e.tensor_bytes, src_proc, proc, profile.comm))
                    if plan.configs[src_sg].dtype != plan.configs[si].dtype:
                        q += quant_cost(e.tensor_bytes, profile)
                h_in = 0.0
                if sg.has_host_input:
                    h_in = comm_cost(graph.input_bytes, profile.host, proc, profile.comm)
                    in_bytes += graph.input_bytes
                if not sg.boundary_out:
                    sink_idx.append(base + si)
                    sink_delay.append(comm_cost(graph.output_bytes, proc, profile.host, profile.comm))
                group_pos.append(gpos)
                net_idx.append(ni)
                sg_idx.append(si)
                proc_idx.append(profile.processor_index(proc))
                base_exec.append(plan.times[si])
                quant.append(q)
                host_in.append(h_in)
                input_mib.append(in_bytes / MIB)
                prio.append(rank_of[name])
                sigma.append(noise_sigma_for(proc))
            sinks[(gid, name)] = SinkSet(
                np.asarray(sink_idx, dtype=np.int64),
                np.asarray(sink_delay, dtype=np.float64),
            )

    order = np.lexsort((np.asarray(dep_src), np.asarray(dep_dst))) if dep_src else np.array([], dtype=np.int64)
    return SimPlan(
        n_template=len(group_pos),
        n_procs=len(profile.processors),
        proc_names=profile.processors,
        group_ids=group_ids,
        group_networks={gid: groups[gid].networks for gid in group_ids},
        group_pos=np.asarray(group_pos, dtype=np.int64),
        net_idx=np.asarray(net_idx, dtype=np.int64),
        sg_idx=np.asarray(sg_idx, dtype=np.int64),
        proc_idx=np.asarray(proc_idx, dtype=np.int64),
        base_exec=np.asarray(base_exec, dtype=np.float64),
        quant=np.asarray(quant, dtype=np.float64),
        host_in=np.asarray(host_in, dtype=np.float64),
        input_mib=np.asarray(input_mib, dtype=np.float64),
        prio=np.asarray(prio, dtype=np.int64),
        sigma=np.asarray(sigma, dtype=np.float64),
        dep_src=np.asarray(dep_src, dtype=np.int64)[order],
        dep_dst=np.asarray(dep_dst, dtype=np.int64)[order],
        dep_delay=np.asarray(dep_delay, dtype=np.float64)[order],
        net_names=tuple(net_names),
        sinks=sinks,
    )
