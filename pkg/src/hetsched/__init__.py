"""Design-time scheduler for periodic multi-model DNN workloads on
heterogeneous processors: DAG partitioning, processor mapping, and priority
assignment searched with a many-objective genetic algorithm against a
deterministic discrete-event simulator."""

__version__ = "0.1.0"
