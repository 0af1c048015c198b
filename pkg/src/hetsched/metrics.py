"""Real-time QoS scoring and period machinery.

Each request's makespan is measured from the group's arrival instant to the
last network's host-side completion. Scores combine a sigmoid deadline
proximity term with the fraction of requests finishing inside the deadline,
averaged over model groups to a value in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .costs import DeviceProfile, best_model_time
from .graph import ModelGroup, Scenario

DEFAULT_SENSITIVITY = 15.0
DEFAULT_EPSILON = 0.1
SATURATION_THRESHOLD = 0.995  # the sigmoid never reaches 1.0 exactly


def base_period(
    group: ModelGroup, profile: DeviceProfile, n_groups: int, epsilon: float = DEFAULT_EPSILON
) -> float:
    """Sum of each model's fastest whole-model time, scaled by the group
    count and a slack constant; µs."""
    total = 0.0
    for name in group.networks:
        total += min(best_model_time(name, p, profile)[1] for p in profile.processors)
    return total * n_groups * (1.0 + epsilon)


def scaled_period(alpha: float, base: float) -> float:
    if alpha <= 0:
        raise ValueError("period multiplier must be > 0")
    return alpha * base


@dataclass(frozen=True)
class PeriodSpec:
    """Base periods per group plus the knobs that produced them."""

    base: Mapping[int, float]
    epsilon: float = DEFAULT_EPSILON
    n_groups: int = 1

    @staticmethod
    def from_profile(
        scenario: Scenario, profile: DeviceProfile, epsilon: float = DEFAULT_EPSILON
    ) -> "PeriodSpec":
        n = len(scenario.groups)
        base = {g.id: base_period(g, profile, n, epsilon) for g in scenario.groups}
        return PeriodSpec(base=base, epsilon=epsilon, n_groups=n)

    def scaled(self, alpha: float) -> dict[int, float]:
        return {gid: scaled_period(alpha, b) for gid, b in self.base.items()}


def makespans(trace, group_id: int) -> np.ndarray:
    """Per request: latest host-side completion minus the arrival instant."""
    spans = trace.completions[group_id].max(axis=1) - trace.arrivals[group_id]
    return np.asarray(spans, dtype=np.float64)


def percentile_nearest_rank(values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile: the ceil(q*n)-th smallest value."""
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if arr.size == 0:
        raise ValueError("empty sample")
    k = max(1, math.ceil(q * arr.size))
    return float(arr[k - 1])


def qoe_score(spans: Sequence[float], deadline: float) -> float:
    """Fraction of requests completing within the deadline."""
    if deadline <= 0:
        raise ValueError("deadline must be > 0")
    arr = np.asarray(spans, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no requests")
    return float(np.count_nonzero(arr <= deadline) / arr.size)


def realtime_score(span: float, deadline: float, k: float = DEFAULT_SENSITIVITY) -> float:
    """Sigmoid deadline-proximity score in (0, 1); 0.5 exactly on-deadline.

    The exponent uses the deadline-normalized slack so the sensitivity k is
    meaningful regardless of the workload's time scale.
    """
    if deadline <= 0:
        raise ValueError("deadline must be > 0")
    z = k * (span - deadline) / deadline
    if z > 700.0:
        return 0.0
    if z < -700.0:
        return 1.0
    return 1.0 / (1.0 + math.exp(z))


def realtime_scores(spans: Sequence[float], deadline: float, k: float = DEFAULT_SENSITIVITY) -> np.ndarray:
    return np.array([realtime_score(float(s), deadline, k) for s in spans])


@dataclass(frozen=True)
class GroupScore:
    makespans: np.ndarray
    qoe: float
    rt_mean: float
    requests: int


@dataclass(frozen=True)
class ScoreReport:
    groups: Mapping[int, GroupScore]
    k: float
    periods: Mapping[int, float]

    @property
    def score(self) -> float:
        return scenario_score(self)


def score_report(trace, periods: Mapping[int, float], k: float = DEFAULT_SENSITIVITY) -> ScoreReport:
    groups: dict[int, GroupScore] = {}
    for gid in trace.group_ids:
        spans = makespans(trace, gid)
        deadline = periods[gid]
        groups[gid] = GroupScore(
            makespans=spans,
            qoe=qoe_score(spans, deadline),
            rt_mean=float(realtime_scores(spans, deadline, k).mean()),
            requests=len(spans),
        )
    return ScoreReport(groups=groups, k=k, periods=dict(periods))


def scenario_score(report: ScoreReport) -> float:
    """Mean over groups of (mean realtime score x QoE); in [0, 1]."""
    vals = [g.rt_mean * g.qoe for g in report.groups.values()]
    return float(sum(vals) / len(vals))


@dataclass(frozen=True)
class AlphaGrid:
    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not (self.lo < self.hi and self.step > 0):
            raise ValueError(f"malformed grid {self.lo}:{self.hi}:{self.step}")

    @staticmethod
    def parse(text: str) -> "AlphaGrid":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be lo:hi:step, got {text!r}")
        return AlphaGrid(float(parts[0]), float(parts[1]), float(parts[2]))

    def values(self) -> list[float]:
        n = int(math.floor((self.hi - self.lo) / self.step + 1e-9))
        return [round(self.lo + i * self.step, 10) for i in range(n + 1)]


def select_saturation(
    scores_by_alpha: Iterable[tuple[float, float]], threshold: float = SATURATION_THRESHOLD
) -> float | None:
    """Smallest alpha whose (median) score reaches the saturation threshold."""
    for alpha, score in sorted(scores_by_alpha):
        if score >= threshold:
            return alpha
    return None


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    score_median: float
    score_min: float
    score_max: float
    objective_medians: np.ndarray  # per group: median avg / p90 makespan across solutions


@dataclass(frozen=True)
class SaturationResult:
    alpha_star: float | None
    grid: AlphaGrid
    rows: tuple[SweepRow, ...]

    def label(self) -> str:
        return "above %.10g" % self.grid.hi if self.alpha_star is None else "%.10g" % self.alpha_star


def saturation_multiplier(
    solutions: Sequence,
    scenario: Scenario,
    profile: DeviceProfile,
    grid: AlphaGrid,
    horizon: int = 20,
    epsilon: float = DEFAULT_EPSILON,
    k: float = DEFAULT_SENSITIVITY,
    threshold: float = SATURATION_THRESHOLD,
    noise_seed: int | None = None,
    backend: str | None = None,
) -> SaturationResult:
    """Sweep the period multiplier grid and find where the median score
    across the given solutions saturates."""
    from .sim import SimConfig, build_plan, evaluate_objectives, run_plan

    if not solutions:
        raise ValueError("no solutions to sweep")
    spec = PeriodSpec.from_profile(scenario, profile, epsilon)
    plans = [build_plan(sol, scenario, profile) for sol in solutions]
    rows = []
    table = []
    for alpha in grid.values():
        periods = spec.scaled(alpha)
        cfg = SimConfig(horizon=horizon, periods=periods, noise_seed=noise_seed)
        scores = []
        objs = []
        for plan in plans:
            trace = run_plan(plan, cfg, backend)
            scores.append(scenario_score(score_report(trace, periods, k)))
            objs.append(evaluate_objectives(trace, scenario))
        rows.append(
            SweepRow(
                alpha=alpha,
                score_median=float(np.median(scores)),
                score_min=float(min(scores)),
                score_max=float(max(scores)),
                objective_medians=np.median(np.stack(objs), axis=0),
            )
        )
        table.append((alpha, rows[-1].score_median))
    return SaturationResult(select_saturation(table, threshold), grid, tuple(rows))
