"""Built-in nine-model catalog with synthetic layer DAGs and a matching
device profile.

Whole-model times per processor config are measured values for a Snapdragon
8 Gen 2 class device; per-layer times are back-solved from them through the
non-linearity model so the model-level processor ratios are preserved
exactly. DAG shapes, tensor sizes, and per-layer weights are synthetic but
deterministic.
"""

from __future__ import annotations

import random
import zlib

import numpy as np

from .costs import (
    DEFAULT_NONLIN,
    CommCostParams,
    DeviceProfile,
    ProcessorConfig,
)
from .graph import Edge, Layer, NetworkGraph

#: name, MACs (millions), params (millions), synthetic layer count
MODEL_TABLE = (
    ("mediapipe-face-det", 39.2, 0.6, 10),
    ("mediapipe-selfie-seg", 72.3, 0.1, 12),
    ("mediapipe-hand-det", 410.8, 2.0, 14),
    ("mediapipe-pose-det", 444.2, 3.4, 14),
    ("tcmonodepth", 2313.2, 0.2, 18),
    ("fast-scnn", 2358.9, 1.1, 18),
    ("yolov8n", 4891.3, 3.2, 20),
    ("mosaic-seg", 22055.1, 1.8, 24),
    ("fastsam-s", 22325.1, 11.8, 24),
)

#: whole-model ms per config, model order as in MODEL_TABLE; None = backend
#: does not support the model and is priced at a 10x penalty so it never wins
CONFIG_TIMES_MS: dict[tuple[str, str, str], list[float | None]] = {
    ("CPU", "default", "fp32"): [2.6, 4.3, 24.3, 16.3, 93.8, 73.2, 73.0, 582.5, 314.6],
    ("CPU", "default", "fp16"): [6.0, 3.5, 5.8, 6.1, 73.2, 37.3, 58.6, 252.6, 220.3],
    ("CPU", "xnnpack", "fp32"): [1.6, 3.1, 8.5, 8.7, None, None, 74.5, 373.7, 297.4],
    ("CPU", "xnnpack", "fp16"): [5.5, 3.6, 7.9, 8.0, None, None, 61.6, 213.0, 192.4],
    ("GPU", "default", "fp16"): [1.9, 6.5, 4.9, 4.9, 31.7, 12.9, 16.0, 83.8, 43.4],
    ("NPU", "default", "fp16"): [0.3, 1.0, 1.2, 1.1, 32.4, 22.0, 5.3, 163.9, 9.1],
}

PROCESSORS = ("CPU", "GPU", "NPU")

_OP_KINDS = ("conv3x3", "dwconv", "conv1x1", "pool", "matmul", "add")

_SKIP_SPAN = 5          # one skip edge per ~5 chain layers
_BASE_EDGE_BYTES = 524_288


def _model_rng(name: str, what: str) -> random.Random:
    return random.Random(zlib.crc32(f"{name}:{what}".encode()))


def _weights(name: str, what: str, n: int) -> np.ndarray:
    rng = _model_rng(name, what)
    w = np.array([rng.uniform(0.5, 1.5) for _ in range(n)])
    return w / w.sum()


def build_networks() -> list[NetworkGraph]:
    """Synthetic layer DAGs: a chain plus one skip edge per ~5 layers."""
    nets = []
    seen_params: set[tuple[str, int]] = set()
    for idx, (name, macs_m, params_m, n) in enumerate(MODEL_TABLE):
        op_rng = _model_rng(name, "ops")
        mac_w = _weights(name, "macs", n)
        par_w = _weights(name, "params", n)
        layers = []
        for i in range(n):
            op = op_rng.choice(_OP_KINDS)
            pb = int(round(par_w[i] * params_m * 1e6 * 4))
            while (op, pb) in seen_params:  # keep structure -> cost well defined
                pb += 1
            seen_params.add((op, pb))
            layers.append(Layer(i, op, pb, int(round(mac_w[i] * macs_m * 1e6))))
        size_rng = _model_rng(name, "tensors")
        edges = [
            Edge(i, i + 1, int(round(_BASE_EDGE_BYTES * size_rng.uniform(0.3, 1.6))))
            for i in range(n - 1)
        ]
        for i in range(0, n - _SKIP_SPAN, _SKIP_SPAN):
            edges.append(
                Edge(i, i + _SKIP_SPAN, int(round(_BASE_EDGE_BYTES * 0.5 * size_rng.uniform(0.3, 1.6))))
            )
        out_bytes = int(round(65_536 * size_rng.uniform(0.5, 2.0)))
        nets.append(NetworkGraph(name, layers, edges, output_bytes=out_bytes))
    return nets


def build_profile(networks: list[NetworkGraph] | None = None) -> DeviceProfile:
    """Device profile pricing every built-in model on every config."""
    if networks is None:
        networks = build_networks()
    by_name = {g.name: g for g in networks}
    names = [name for name, *_ in MODEL_TABLE]
    configs = tuple(ProcessorConfig(p, b, d) for (p, b, d) in CONFIG_TIMES_MS)
    nonlin = dict(DEFAULT_NONLIN)
    layer_costs: dict[str, dict[str, np.ndarray]] = {name: {} for name in names}
    for (proc, backend, dtype), times_ms in CONFIG_TIMES_MS.items():
        cfg = ProcessorConfig(proc, backend, dtype)
        fallback = CONFIG_TIMES_MS[(proc, "default", "fp32")] if proc == "CPU" else None
        for mi, name in enumerate(names):
            t_ms = times_ms[mi]
            if t_ms is None:
                t_ms = fallback[mi] * 10.0
            n = by_name[name].n_layers
            params = nonlin[proc]
            total = (t_ms * 1e3 - params.launch - n * params.dispatch) / params.contraction(n)
            if total <= 0:
                raise ValueError(f"non-linearity overheads exceed model time for {name}/{cfg.key}")
            layer_costs[name][cfg.key] = _weights(name, "macs", n) * total
    return DeviceProfile(
        processors=PROCESSORS,
        configs=configs,
        layer_costs=layer_costs,
        nonlin=nonlin,
        comm=CommCostParams(),
        host="CPU",
    )


def default_catalog() -> tuple[list[NetworkGraph], DeviceProfile]:
    nets = build_networks()
    return nets, build_profile(nets)
