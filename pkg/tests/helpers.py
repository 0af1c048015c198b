"""Shared builders for hand-sized networks, profiles, and solutions."""

import numpy as np

from hetsched.costs import CommCostParams, DeviceProfile, NonLinearityParams, ProcessorConfig
from hetsched.graph import Edge, Layer, ModelGroup, NetworkGraph, Scenario
from hetsched.solution import build_solution

ZERO_COMM = CommCostParams(bandwidth=1e18, rpc_small=(0.0, 0.0), rpc_large=(0.0, 0.0))

FLAT_NONLIN = {
    "CPU": NonLinearityParams(),
    "GPU": NonLinearityParams(),
    "NPU": NonLinearityParams(),
}


def build_net(name, n_layers, tensor=1 << 20, extra_edges=(), input_bytes=0, output_bytes=0):
    layers = [Layer(i, "conv") for i in range(n_layers)]
    edges = [Edge(i, i + 1, tensor) for i in range(n_layers - 1)]
    edges += [Edge(s, d, b) for s, d, b in extra_edges]
    return NetworkGraph(name, layers, edges, input_bytes=input_bytes, output_bytes=output_bytes)


def build_profile(
    nets,
    times,
    processors=("CPU", "GPU", "NPU"),
    dtypes=None,
    comm=ZERO_COMM,
    nonlin=None,
    quant_throughput=5000.0,
):
    """One config per processor; times[name][proc] prices each layer.

    With the default flat non-linearity a subgraph costs exactly the sum of
    its layer times, which keeps expectations hand-computable.
    """
    dtypes = dtypes or {}
    configs = tuple(
        ProcessorConfig(p, "default", dtypes.get(p, "fp16")) for p in processors
    )
    layer_costs = {}
    for g in nets:
        layer_costs[g.name] = {}
        for cfg in configs:
            per_layer = times[g.name][cfg.processor]
            layer_costs[g.name][cfg.key] = np.asarray(per_layer, dtype=np.float64)
    return DeviceProfile(
        processors=tuple(processors),
        configs=configs,
        layer_costs=layer_costs,
        nonlin=nonlin or dict(FLAT_NONLIN),
        comm=comm,
        quant_throughput=quant_throughput,
        host="CPU",
    )


def make_solution(nets, profile, cuts, prefs, priority=None):
    """cuts/prefs keyed by network name; prefs hold processor names."""
    proc_idx = {p: i for i, p in enumerate(profile.processors)}
    partitions = [cuts[g.name] for g in nets]
    mappings = [[proc_idx[p] for p in prefs[g.name]] for g in nets]
    names = [g.name for g in nets]
    order = [names.index(n) for n in (priority or names)]
    return build_solution(nets, partitions, mappings, order, profile)


def one_group_scenario(nets, gid=0):
    return Scenario(groups=(ModelGroup(id=gid, networks=tuple(g.name for g in nets)),))
