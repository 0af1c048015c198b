"""Exhaustive generator of tiny scheduling instances for oracle comparison:
up to 2 networks x 2 subgraphs x 2 processors x 2 requests, with and without
communication costs and dtype-conversion delays."""

import random
from itertools import product

import numpy as np

from hetsched.costs import CommCostParams, DeviceProfile, NonLinearityParams, ProcessorConfig
from hetsched.graph import Edge, Layer, ModelGroup, NetworkGraph, Scenario
from hetsched.sim import SimConfig, build_plan, instantiate
from hetsched.solution import build_solution

REAL_COMM = CommCostParams()
ZERO_COMM = CommCostParams(bandwidth=1e18, rpc_small=(0.0, 0.0), rpc_large=(0.0, 0.0))

_PREF_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


def _two_layer_net(name, rng):
    return NetworkGraph(
        name,
        [Layer(0, "conv"), Layer(1, "conv")],
        [Edge(0, 1, rng.randrange(1 << 16, 1 << 21))],
        input_bytes=rng.randrange(0, 1 << 20),
        output_bytes=rng.randrange(0, 1 << 18),
    )


def _profile(nets, rng, comm, mismatch):
    configs = (
        ProcessorConfig("P0", "default", "fp16"),
        ProcessorConfig("P1", "default", "int8" if mismatch else "fp16"),
    )
    layer_costs = {
        g.name: {
            c.key: np.array([float(rng.randrange(50, 500)) for _ in g.layers])
            for c in configs
        }
        for g in nets
    }
    return DeviceProfile(
        processors=("P0", "P1"),
        configs=configs,
        layer_costs=layer_costs,
        nonlin={"P0": NonLinearityParams(), "P1": NonLinearityParams()},
        comm=comm,
        quant_throughput=5000.0,
        host="P0",
    )


def iter_oracle_instances():
    """Yield (label, TaskSystem) pairs; > 200 structurally distinct cases."""
    case = 0
    combos = product(
        (1, 2),                      # networks
        (0, 1),                      # cut net a
        (0, 1),                      # cut net b
        _PREF_PAIRS,                 # layer prefs net a
        ((0, 0), (1, 0)),            # layer prefs net b (reduced)
        (1, 2),                      # requests
        (False, True),               # reversed priority
    )
    for n_nets, cut_a, cut_b, prefs_a, prefs_b, horizon, rev in combos:
        if n_nets == 1 and (cut_b, prefs_b, rev) != (0, (0, 0), False):
            continue  # net b absent: skip redundant variants
        rng = random.Random(9_000 + case)
        comm = REAL_COMM if case % 2 == 0 else ZERO_COMM
        mismatch = case % 3 == 0
        nets = [_two_layer_net("a", rng)]
        cuts = [[cut_a]]
        prefs = [list(prefs_a)]
        if n_nets == 2:
            nets.append(_two_layer_net("b", rng))
            cuts.append([cut_b])
            prefs.append(list(prefs_b))
        profile = _profile(nets, rng, comm, mismatch)
        priority = list(range(n_nets))[::-1] if rev else list(range(n_nets))
        solution = build_solution(nets, cuts, prefs, priority, profile)
        scenario = Scenario(groups=(ModelGroup(0, tuple(g.name for g in nets)),))
        period = float(rng.randrange(200, 2500))  # often tight: requests overlap
        config = SimConfig(horizon=horizon, periods={0: period})
        plan = build_plan(solution, scenario, profile)
        yield f"case{case}", instantiate(plan, config)
        case += 1
