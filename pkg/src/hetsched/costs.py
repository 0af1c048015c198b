"""Execution-time and communication cost model.

Subgraph times come from a synthetic non-linear model: per-layer times are
summed, contracted by a processor-specific factor that strengthens with
subgraph size, plus per-invocation launch and per-layer dispatch overheads.
Inter-processor transfers pay a piecewise-linear RPC overhead plus data
movement at memory bandwidth. All times are microseconds, sizes bytes.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .graph import Subgraph

MIB = float(1 << 20)

DTYPES = ("fp32", "fp16", "int8")


class MissingCostError(KeyError):
    """A (network, config) pair has no layer prices in the profile."""


class ProfileConflictError(ValueError):
    """Insert-once violation: a digest/config key re-priced with a new value."""


@dataclass(frozen=True)
class ProcessorConfig:
    processor: str
    backend: str
    dtype: str

    @property
    def key(self) -> str:
        return f"{self.processor}/{self.backend}/{self.dtype}"

    @staticmethod
    def from_key(key: str) -> "ProcessorConfig":
        proc, backend, dtype = key.split("/")
        return ProcessorConfig(proc, backend, dtype)


@dataclass(frozen=True)
class NonLinearityParams:
    launch: float = 0.0       # µs per subgraph invocation
    dispatch: float = 0.0     # µs per layer
    rho_inf: float = 1.0      # asymptotic contraction of the layer-time sum

    def contraction(self, n_layers: int) -> float:
        return self.rho_inf + (1.0 - self.rho_inf) / n_layers


@dataclass(frozen=True)
class CommCostParams:
    bandwidth: float = 40e9                          # bytes/second
    rpc_small: tuple[float, float] = (40.0, 30.0)    # (µs per MiB, µs) below 1 MiB
    rpc_large: tuple[float, float] = (25.0, 45.0)    # at or above 1 MiB


#: Defaults chosen continuous at the 1 MiB regime boundary.
DEFAULT_COMM = CommCostParams()

DEFAULT_NONLIN = {
    "CPU": NonLinearityParams(0.0, 0.0, 1.0),
    "GPU": NonLinearityParams(300.0, 10.0, 0.95),
    "NPU": NonLinearityParams(200.0, 0.0, 0.30),
}

DEFAULT_QUANT_THROUGHPUT = 5000.0  # bytes per µs of dtype conversion


@dataclass
class DeviceProfile:
    """Everything needed to price a schedule on one device."""

    processors: tuple[str, ...]
    configs: tuple[ProcessorConfig, ...]
    layer_costs: dict[str, dict[str, np.ndarray]]  # network -> config key -> µs per layer
    nonlin: dict[str, NonLinearityParams]
    comm: CommCostParams = field(default_factory=CommCostParams)
    quant_throughput: float = DEFAULT_QUANT_THROUGHPUT
    host: str = "CPU"

    def processor_index(self, processor: str) -> int:
        return self.processors.index(processor)

    def configs_for(self, processor: str) -> tuple[ProcessorConfig, ...]:
        return tuple(c for c in self.configs if c.processor == processor)

    def layer_times(self, network: str, config: ProcessorConfig) -> np.ndarray:
        by_net = self.layer_costs.get(network)
        if by_net is None or config.key not in by_net:
            raise MissingCostError(f"no layer costs for ({network}, {config.key})")
        return by_net[config.key]


def comm_cost(n_bytes: float, src: str, dst: str, params: CommCostParams) -> float:
    """Transfer cost in µs: RPC overhead plus bandwidth-limited data movement.

    Zero when both endpoints are the same processor. The RPC regression is
    piecewise linear in the tensor size with a regime change at 1 MiB.
    """
    if src == dst:
        return 0.0
    size_mib = n_bytes / MIB
    slope, intercept = params.rpc_small if n_bytes < MIB else params.rpc_large
    rpc = slope * size_mib + intercept
    return rpc + n_bytes / params.bandwidth * 1e6


def subgraph_time(
    sg: Subgraph,
    config: ProcessorConfig,
    profile: DeviceProfile,
    db: Optional["ProfileDB"] = None,
    digest: bytes | None = None,
) -> float:
    """Execution time of a subgraph under one processor config.

    t = launch + n * dispatch + rho(n) * sum(layer times), where rho shrinks
    from 1 at n=1 toward the processor's asymptotic contraction factor. When
    a ProfileDB and the subgraph digest are supplied the result is cached
    insert-once under (digest, config).
    """
    if db is not None and digest is not None:
        cached = db.get(digest, config.key)
        if cached is not None:
            return cached
    times = profile.layer_times(sg.network, config)
    n = len(sg.layer_ids)
    ids = list(sg.layer_ids)
    if max(ids) >= len(times):
        raise MissingCostError(f"layer id {max(ids)} unpriced for ({sg.network}, {config.key})")
    total = float(times[ids].sum())
    params = profile.nonlin[config.processor]
    t = params.launch + n * params.dispatch + params.contraction(n) * total
    if db is not None and digest is not None:
        db.put(digest, config.key, t)
    return t


def best_config(
    sg: Subgraph,
    processor: str,
    profile: DeviceProfile,
    db: Optional["ProfileDB"] = None,
    digest: bytes | None = None,
) -> tuple[ProcessorConfig, float]:
    """Fastest (config, time) for a subgraph on a processor; ties keep the
    earlier config in enumeration order."""
    configs = profile.configs_for(processor)
    if not configs:
        raise MissingCostError(f"no configs for processor {processor}")
    best: tuple[ProcessorConfig, float] | None = None
    for cfg in configs:
        t = subgraph_time(sg, cfg, profile, db, digest)
        if best is None or t < best[1]:
            best = (cfg, t)
    return best


def whole_model_time(network: str, config: ProcessorConfig, profile: DeviceProfile) -> float:
    """Time of the unpartitioned network under one config."""
    times = profile.layer_times(network, config)
    n = len(times)
    params = profile.nonlin[config.processor]
    return params.launch + n * params.dispatch + params.contraction(n) * float(times.sum())


def best_model_time(network: str, processor: str, profile: DeviceProfile) -> tuple[ProcessorConfig, float]:
    """Fastest (config, time) for the whole network on a processor."""
    configs = profile.configs_for(processor)
    if not configs:
        raise MissingCostError(f"no configs for processor {processor}")
    best: tuple[ProcessorConfig, float] | None = None
    for cfg in configs:
        t = whole_model_time(network, cfg, profile)
        if best is None or t < best[1]:
            best = (cfg, t)
    return best


def quant_cost(n_bytes: float, profile: DeviceProfile) -> float:
    """Dtype-conversion cost for one tensor crossing a subgraph boundary."""
    return n_bytes / profile.quant_throughput


class ProfileDB:
    """Insert-once cache of subgraph times keyed by (digest, config key).

    Safe for concurrent readers; writes are serialized. Optionally persisted
    as an append-only JSON-lines file.
    """

    def __init__(self) -> None:
        self._data: dict[tuple[bytes, str], float] = {}
        self._lock = threading.Lock()
        self._dirty: list[tuple[bytes, str, float]] = []

    def __len__(self) -> int:
        return len(self._data)

    def get(self, digest: bytes, config_key: str) -> float | None:
        return self._data.get((digest, config_key))

    def put(self, digest: bytes, config_key: str, time_us: float) -> None:
        if time_us <= 0:
            raise ValueError("profiled times must be positive")
        with self._lock:
            existing = self._data.get((digest, config_key))
            if existing is not None:
                if existing != time_us:
                    raise ProfileConflictError(
                        f"{digest.hex()[:12]}/{config_key}: {existing} vs {time_us}"
                    )
                return
            self._data[(digest, config_key)] = time_us
            self._dirty.append((digest, config_key, time_us))

    @classmethod
    def load(cls, path) -> "ProfileDB":
        db = cls()
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                db.put(bytes.fromhex(rec["digest"]), rec["config"], rec["time_us"])
        db._dirty.clear()
        return db

    def append_to(self, path) -> int:
        """Flush entries added since the last flush; returns how many."""
        with self._lock:
            new = list(self._dirty)
            self._dirty.clear()
        with open(path, "a") as fh:
            for digest, key, t in new:
                fh.write(json.dumps({"digest": digest.hex(), "config": key, "time_us": t}) + "\n")
        return len(new)
