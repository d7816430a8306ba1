"""Benchmark suite for two automotive quantum-optimization reference problems.

Robot seam routing (a traveling-salesman variant over welding/sealing seams)
and vehicle test-configuration (a MAX-SAT variant over component dependencies)
are generated, encoded as QUBO/PUBO/Ising problems, solved with an exhaustive
oracle, simulated annealing and a simulated QAOA, and scored with standardized
quality metrics.
"""

from .bench import (
    BenchmarkRecord,
    QScoreResult,
    SolverSpec,
    SweepConfig,
    approximation_quality,
    default_sweeps,
    exact_mean_energy,
    qscore_sweep,
    run_benchmark,
    success_probability,
)
from .encoding import (
    PenaltyWeights,
    QuadratizationMap,
    SeamInfeasibility,
    SeamVarMap,
    decode_seam_solution,
    encode_sat_pubo,
    encode_seam_qubo,
    greedy_vehicle_cover,
    quadratize,
    vehicle_config_objective,
)
from .errors import (
    AutoQBenchError,
    CapExceededError,
    ConfigurationError,
    ValidationError,
)
from .generator import (
    SatGeneratorConfig,
    SeamGeneratorConfig,
    gen_sat_instance,
    gen_seam_instance,
)
from .model import (
    Assignment,
    IsingModel,
    Pubo,
    Qubo,
    SatInstance,
    SeamInstance,
    Tour,
    count_unsat,
    ising_energy,
    pubo_energy,
    qubo_energy,
    qubo_to_ising,
    tour_cost,
)
from .solvers import (
    AnnealSchedule,
    QaoaConfig,
    SolveResult,
    brute_force,
    brute_force_tour,
    qaoa_expectation,
    qaoa_optimize,
    qaoa_statevector,
    simulated_anneal,
)

__version__ = "0.1.0"
