from .engine import (
    DEFAULT_NOISE_SIGMA,
    ObjectiveVector,
    SimConfig,
    TaskSystem,
    Trace,
    build_plan,
    evaluate_objectives,
    instantiate,
    run_plan,
    simulate,
    sim_backend_name,
)

__all__ = [
    "DEFAULT_NOISE_SIGMA",
    "ObjectiveVector",
    "SimConfig",
    "TaskSystem",
    "Trace",
    "build_plan",
    "evaluate_objectives",
    "instantiate",
    "run_plan",
    "simulate",
    "sim_backend_name",
]
