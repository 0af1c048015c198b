"""Deterministic discrete-event simulation of the runtime.

Requests for each model group arrive on a fixed period, one per network in
the group. Subgraph tasks become ready once every predecessor's output has
reached their processor (communication plus any dtype-conversion delay);
each processor executes one task at a time, non-preemptively, picking among
ready tasks by network precedence, then request id, then topological index.
Dtype conversion runs on a second worker lane and may overlap a different
task's execution on the same processor.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import IO, Mapping

import numpy as np

from ..costs import DeviceProfile
from ..graph import Scenario
from ..solution import Solution
from .plan import DEFAULT_NOISE_SIGMA, SimPlan, noise_sigma_for
from .plan import build_plan as _build_plan

_backend = None
_backend_name = None


def _load_backend(name: str | None = None):
    global _backend, _backend_name
    if name is None:
        name = os.environ.get("HETSCHED_SIM_BACKEND", "auto")
    if name == "auto" and _backend is not None:
        return _backend, _backend_name
    if name in ("auto", "c"):
        try:
            from . import _core

            if name == "auto":
                _backend, _backend_name = _core, "c"
            return _core, "c"
        except ImportError:
            if name == "c":
                raise
    elif name != "py":
        raise ValueError(f"unknown simulator backend {name!r}")
    from . import _core_py

    if name == "auto":
        _backend, _backend_name = _core_py, "py"
    return _core_py, "py"


def sim_backend_name() -> str:
    return _load_backend()[1]


@dataclass(frozen=True)
class SimConfig:
    """Horizon, per-group periods, and optional jitter / overhead knobs."""

    horizon: int
    periods: Mapping[int, float]  # µs per group id
    noise_seed: int | None = None
    noise_sigma: Mapping[str, float] | None = None
    alloc_overhead: float = 0.0   # µs per task
    copy_overhead: float = 0.0    # µs per MiB of task input

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        for gid, p in self.periods.items():
            if p <= 0:
                raise ValueError(f"period for group {gid} must be > 0")
        if self.noise_sigma:
            for s in self.noise_sigma.values():
                if s < 0:
                    raise ValueError("noise sigma must be >= 0")


@dataclass
class Trace:
    """Timestamped result of one simulation run."""

    group_ids: tuple[int, ...]
    group_networks: dict[int, tuple[str, ...]]
    net_names: tuple[str, ...]
    proc_names: tuple[str, ...]
    horizon: int
    arrivals: dict[int, np.ndarray]          # group id -> (J,)
    completions: dict[int, np.ndarray]       # group id -> (J, n nets) host-side finish
    # per task instance
    task_group: np.ndarray
    task_request: np.ndarray
    task_net: np.ndarray                     # index into net_names
    task_subgraph: np.ndarray
    task_proc: np.ndarray                    # index into proc_names
    task_ready: np.ndarray
    task_start: np.ndarray
    task_finish: np.ndarray
    task_arrival: np.ndarray

    CSV_COLUMNS = (
        "group", "request", "network", "subgraph", "processor",
        "ready", "start", "finish", "arrival",
    )

    def n_tasks(self) -> int:
        return len(self.task_start)

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for i in range(self.n_tasks()):
            w.writerow(
                (
                    int(self.task_group[i]),
                    int(self.task_request[i]),
                    self.net_names[self.task_net[i]],
                    int(self.task_subgraph[i]),
                    self.proc_names[self.task_proc[i]],
                    repr(float(self.task_ready[i])),
                    repr(float(self.task_start[i])),
                    repr(float(self.task_finish[i])),
                    repr(float(self.task_arrival[i])),
                )
            )


def build_plan(solution: Solution, scenario: Scenario, profile: DeviceProfile) -> SimPlan:
    return _build_plan(solution, scenario, profile)


@dataclass
class TaskSystem:
    """The task template instantiated over the horizon: the kernel's input."""

    n_procs: int
    proc: np.ndarray
    exec_dur: np.ndarray
    quant_dur: np.ndarray
    release: np.ndarray
    rank: np.ndarray           # dispatch precedence, lower wins
    task_of_rank: np.ndarray
    dep_n: np.ndarray
    succ_ptr: np.ndarray
    succ_dst: np.ndarray
    succ_delay: np.ndarray
    # dependency triples (dst-major) kept for independent checkers
    dep_src: np.ndarray
    dep_dst: np.ndarray
    dep_delay: np.ndarray

    def run(self, core):
        return core.run(
            self.proc, self.exec_dur, self.quant_dur, self.release,
            self.rank, self.task_of_rank, self.dep_n,
            self.succ_ptr, self.succ_dst, self.succ_delay, self.n_procs,
        )


def instantiate(plan: SimPlan, config: SimConfig) -> TaskSystem:
    """Replicate the template once per request with period-spaced releases."""
    T = plan.n_template
    J = config.horizon
    n = T * J
    period = np.array([config.periods[g] for g in plan.group_ids], dtype=np.float64)

    req = np.repeat(np.arange(J, dtype=np.int64), T)
    tmpl = np.tile(np.arange(T, dtype=np.int64), J)
    arrival = np.repeat(np.arange(J, dtype=np.float64), T) * period[plan.group_pos[tmpl]]
    release = arrival + np.tile(plan.host_in, J)

    exec_dur = np.tile(plan.base_exec, J)
    if config.noise_seed is not None:
        if config.noise_sigma is not None:
            by_proc = np.array(
                [noise_sigma_for(p, config.noise_sigma) for p in plan.proc_names]
            )
            sig = by_proc[np.tile(plan.proc_idx, J)]
        else:
            sig = np.tile(plan.sigma, J)
        rng = np.random.Generator(np.random.Philox(config.noise_seed))
        z = rng.standard_normal(n)
        exec_dur = exec_dur * np.exp(z * sig - sig * sig / 2.0)
    if config.alloc_overhead or config.copy_overhead:
        exec_dur = exec_dur + config.alloc_overhead + config.copy_overhead * np.tile(plan.input_mib, J)

    order = np.lexsort((np.tile(plan.sg_idx, J), req, np.tile(plan.prio, J)))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n, dtype=np.int64)

    n_dep_t = np.bincount(plan.dep_dst, minlength=T).astype(np.int64)
    dep_n = np.tile(n_dep_t, J)

    s_order = np.lexsort((plan.dep_dst, plan.dep_src))
    t_succ_src = plan.dep_src[s_order]
    t_succ_dst = plan.dep_dst[s_order]
    t_succ_delay = plan.dep_delay[s_order]
    n_succ_t = np.bincount(t_succ_src, minlength=T).astype(np.int64)
    offsets = (np.arange(J, dtype=np.int64) * T)[:, None]
    succ_dst = (offsets + t_succ_dst[None, :]).ravel()
    succ_delay = np.tile(t_succ_delay, J)
    succ_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.tile(n_succ_t, J), out=succ_ptr[1:])

    return TaskSystem(
        n_procs=plan.n_procs,
        proc=np.tile(plan.proc_idx, J),
        exec_dur=np.ascontiguousarray(exec_dur),
        quant_dur=np.tile(plan.quant, J),
        release=np.ascontiguousarray(release),
        rank=rank,
        task_of_rank=order,
        dep_n=dep_n,
        succ_ptr=succ_ptr,
        succ_dst=np.ascontiguousarray(succ_dst),
        succ_delay=np.ascontiguousarray(succ_delay),
        dep_src=(offsets + plan.dep_src[None, :]).ravel(),
        dep_dst=(offsets + plan.dep_dst[None, :]).ravel(),
        dep_delay=np.tile(plan.dep_delay, J),
    )


def run_plan(plan: SimPlan, config: SimConfig, backend: str | None = None) -> Trace:
    """Instantiate the task template over the horizon and run the kernel."""
    core, _ = _load_backend(backend)
    T = plan.n_template
    J = config.horizon
    period = np.array([config.periods[g] for g in plan.group_ids], dtype=np.float64)
    req = np.repeat(np.arange(J, dtype=np.int64), T)
    tmpl = np.tile(np.arange(T, dtype=np.int64), J)
    arrival = np.repeat(np.arange(J, dtype=np.float64), T) * period[plan.group_pos[tmpl]]

    system = instantiate(plan, config)
    ready, start, finish = system.run(core)

    fin_by_req = finish.reshape(J, T)
    arrivals: dict[int, np.ndarray] = {}
    completions: dict[int, np.ndarray] = {}
    for gpos, gid in enumerate(plan.group_ids):
        arrivals[gid] = np.arange(J, dtype=np.float64) * period[gpos]
        nets = plan.group_networks[gid]
        cols = []
        for name in nets:
            s = plan.sinks[(gid, name)]
            cols.append((fin_by_req[:, s.template_idx] + s.host_delay[None, :]).max(axis=1))
        completions[gid] = np.stack(cols, axis=1)

    gid_arr = np.asarray(plan.group_ids, dtype=np.int64)
    return Trace(
        group_ids=plan.group_ids,
        group_networks=plan.group_networks,
        net_names=plan.net_names,
        proc_names=plan.proc_names,
        horizon=J,
        arrivals=arrivals,
        completions=completions,
        task_group=gid_arr[plan.group_pos[tmpl]],
        task_request=req,
        task_net=np.tile(plan.net_idx, J),
        task_subgraph=np.tile(plan.sg_idx, J),
        task_proc=np.tile(plan.proc_idx, J),
        task_ready=ready,
        task_start=start,
        task_finish=finish,
        task_arrival=arrival,
    )


def simulate(
    solution: Solution,
    scenario: Scenario,
    profile: DeviceProfile,
    config: SimConfig,
    backend: str | None = None,
) -> Trace:
    """Full run: flatten the solution into a task system and execute it."""
    missing = [n for n in scenario.network_names if n not in solution.plans]
    if missing:
        raise ValueError(f"solution lacks plans for scenario networks: {missing}")
    plan = build_plan(solution, scenario, profile)
    return run_plan(plan, config, backend)


ObjectiveVector = np.ndarray


def evaluate_objectives(trace: Trace, scenario: Scenario) -> ObjectiveVector:
    """Per group (sorted by id): average and nearest-rank 90th percentile of
    the request makespans, concatenated into a 2N-vector to be minimized."""
    from .. import metrics

    if trace.horizon < 1 or not trace.group_ids:
        raise ValueError("empty trace")
    out = []
    for gid in sorted(g.id for g in scenario.groups):
        spans = metrics.makespans(trace, gid)
        out.append(float(spans.mean()))
        out.append(metrics.percentile_nearest_rank(spans, 0.9))
    return np.asarray(out, dtype=np.float64)
