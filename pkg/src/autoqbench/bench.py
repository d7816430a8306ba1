"""Benchmark harness: taxonomy-labelled sweep cells with standardized metrics.

Every cell is one (problem domain, problem class, formulation, algorithm,
size, seed) combination.  Metrics per cell: best energy, a reference optimum
(exhaustive oracle, planted optimum, or best-known across the sweep),
approximation quality normalized between a uniform-random baseline (0) and the
optimum (1), and for sampling solvers the probability mass on true optima.

The size-scaling score reports the largest problem size at which a solver's
mean quality stays above a threshold, walking sizes in increasing order and
stopping at the first failure.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, TextIO

import numpy as np

from .encoding import (
    QuadratizationMap,
    SeamVarMap,
    decode_seam_solution,
    encode_sat_pubo,
    encode_seam_qubo,
    quadratize,
)
from .errors import CapExceededError, ConfigurationError, ValidationError
from .generator import (
    SatGeneratorConfig,
    SeamGeneratorConfig,
    gen_sat_instance,
    gen_seam_instance,
)
from .model import Assignment, Pubo, Qubo, SatInstance, SeamInstance, Tour, count_unsat
from .solvers import (
    AnnealSchedule,
    QaoaConfig,
    SolveResult,
    brute_force,
    brute_force_tour,
    energies_for_bits,
    qaoa_optimize,
    random_guess,
    simulated_anneal,
)

PROBLEM_DOMAINS = ("optimization",)
PROBLEM_CLASSES = ("tsp", "max_sat")
FORMULATIONS = ("qubo", "pubo", "ising")
ALGORITHMS = ("oracle", "simulated_annealing", "qaoa", "random")
OPTIMUM_KINDS = ("oracle", "planted", "best_known")

FAMILIES = ("seams", "sat")

CSV_COLUMNS = (
    "domain",
    "class",
    "formulation",
    "algorithm",
    "size",
    "variables",
    "seed",
    "energy",
    "optimum",
    "quality",
    "success_prob",
    "feasible",
    "wall_time_s",
)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def approximation_quality(found: float, optimum: float, random_baseline: float) -> float:
    """Normalized solution quality in [0, 1] for minimization.

    1 at the optimum, 0 at the random baseline, clamped outside; a flat
    instance (baseline == optimum) scores 1.
    """
    if random_baseline < optimum:
        raise ValidationError(
            f"random baseline {random_baseline} below optimum {optimum}"
        )
    if random_baseline == optimum:
        return 1.0
    quality = (random_baseline - found) / (random_baseline - optimum)
    return min(1.0, max(0.0, quality))


def success_probability(
    result: SolveResult, optima: Iterable[Sequence[int] | int]
) -> float | None:
    """Probability mass the solver's distribution puts on optimal bitstrings.

    Returns None for solvers that do not report a distribution.
    """
    if result.distribution is None:
        return None
    total = 0.0
    for opt in optima:
        if isinstance(opt, (int, np.integer)):
            index = int(opt)
        else:
            index = 0
            for i, b in enumerate(opt):
                if b:
                    index |= 1 << i
        total += float(result.distribution[index])
    return total


def exact_mean_energy(problem: Qubo | Pubo) -> float:
    """Mean energy over all bitstrings, in closed form.

    Uniform bits are independent fair coins, so a term over k distinct
    variables contributes its coefficient times 2**-k.
    """
    if isinstance(problem, Qubo):
        total = problem.offset
        for (i, j), c in problem.coeffs.items():
            total += c * (0.5 if i == j else 0.25)
        return float(total)
    total = problem.offset
    for c, vs in problem.terms:
        total += c * 2.0 ** (-len(vs))
    return float(total)


def sampled_mean_energy(
    problem: Qubo | Pubo, num_samples: int = 10_000, seed: int = 0
) -> tuple[float, float]:
    """Monte-Carlo estimate of the mean energy: ``(mean, standard_error)``."""
    if num_samples < 2:
        raise ConfigurationError("num_samples must be >= 2")
    rng = np.random.Generator(np.random.PCG64(seed))
    bits = rng.integers(0, 2, size=(num_samples, problem.n), dtype=np.uint8)
    energies = energies_for_bits(problem, bits)
    return float(energies.mean()), float(energies.std(ddof=1) / math.sqrt(num_samples))


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkRecord:
    """One harness cell; a failed cell carries an ``error`` and no energy."""

    problem_domain: str
    problem_class: str
    formulation: str
    algorithm: str
    instance_id: str
    seed: int
    size: int
    num_variables: int
    best_energy: float | None = None
    oracle_optimum: float | None = None
    optimum_kind: str | None = None
    approximation_quality: float | None = None
    success_probability: float | None = None
    feasible: bool | None = None
    wall_time_s: float = 0.0
    timed_out: bool = False
    error: str | None = None

    def __post_init__(self):
        if self.problem_domain not in PROBLEM_DOMAINS:
            raise ValidationError(f"unknown problem domain {self.problem_domain!r}")
        if self.problem_class not in PROBLEM_CLASSES:
            raise ValidationError(f"unknown problem class {self.problem_class!r}")
        if self.formulation not in FORMULATIONS:
            raise ValidationError(f"unknown formulation {self.formulation!r}")
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {self.algorithm!r}")
        if self.optimum_kind is not None and self.optimum_kind not in OPTIMUM_KINDS:
            raise ValidationError(f"unknown optimum kind {self.optimum_kind!r}")
        if self.approximation_quality is not None and not (
            0.0 <= self.approximation_quality <= 1.0
        ):
            raise ValidationError(
                f"approximation quality {self.approximation_quality} outside [0, 1]"
            )

    def to_json_dict(self) -> dict:
        return {
            "problem_domain": self.problem_domain,
            "problem_class": self.problem_class,
            "formulation": self.formulation,
            "algorithm": self.algorithm,
            "instance_id": self.instance_id,
            "seed": self.seed,
            "size": self.size,
            "num_variables": self.num_variables,
            "best_energy": self.best_energy,
            "oracle_optimum": self.oracle_optimum,
            "optimum_kind": self.optimum_kind,
            "approximation_quality": self.approximation_quality,
            "success_probability": self.success_probability,
            "feasible": self.feasible,
            "wall_time_s": self.wall_time_s,
            "timed_out": self.timed_out,
            "error": self.error,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BenchmarkRecord":
        return cls(**data)

    def to_csv_row(self) -> list:
        def blank(v):
            return "" if v is None else v

        return [
            self.problem_domain,
            self.problem_class,
            self.formulation,
            self.algorithm,
            self.size,
            self.num_variables,
            self.seed,
            blank(self.best_energy),
            blank(self.oracle_optimum),
            blank(self.approximation_quality),
            blank(self.success_probability),
            blank(self.feasible),
            self.wall_time_s,
        ]


def write_records_jsonl(records: Iterable[BenchmarkRecord], fh: TextIO) -> None:
    for rec in records:
        fh.write(json.dumps(rec.to_json_dict(), sort_keys=True) + "\n")
    fh.flush()


def read_records_jsonl(path) -> list[BenchmarkRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(BenchmarkRecord.from_json_dict(json.loads(line)))
    return records


def write_records_csv(records: Iterable[BenchmarkRecord], fh: TextIO) -> None:
    writer = csv.writer(fh)
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.to_csv_row())


# ---------------------------------------------------------------------------
# Solver specs and sweep configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverSpec:
    """One solver column of a sweep: algorithm label plus its backend config."""

    algorithm: str
    anneal: AnnealSchedule | None = None
    qaoa: QaoaConfig | None = None
    random_samples: int = 1
    oracle_cap: int = 24

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(
                f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}"
            )


@dataclass(frozen=True)
class SweepConfig:
    """A Cartesian sweep over one instance family.

    The cell grid is ``sizes x num_seeds x solvers``; the formulation is a
    function of the family ("auto": seams -> qubo, sat -> pubo) so the record
    count equals the product of the three explicit dimensions (failed cells
    are still emitted, marked with an error).
    """

    family: str
    sizes: tuple[int, ...]
    num_seeds: int = 5
    base_seed: int = 0
    solvers: tuple[SolverSpec, ...] = (SolverSpec("oracle"),)
    formulation: str = "auto"
    quality_threshold: float = 0.2
    time_budget_s: float = 120.0
    workers: int = 1
    # instance-family knobs
    seam_box: float = 1000.0
    seam_min_length: float = 50.0
    seam_max_length: float = 300.0
    sat_clauses_per_component: float = 3.0
    sat_max_clause_size: int = 3
    sat_planted: bool = True
    tour_oracle_cap: int = 8
    oracle_cap: int = 24

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}")
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigurationError(f"sizes must be strictly increasing, got {sizes}")
        if not 0.0 < self.quality_threshold < 1.0:
            raise ConfigurationError("quality_threshold must lie in (0, 1)")
        if self.num_seeds < 1:
            raise ConfigurationError("num_seeds must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        object.__setattr__(self, "solvers", tuple(self.solvers))
        resolved = self.formulation
        if resolved == "auto":
            resolved = "qubo" if self.family == "seams" else "pubo"
        if resolved not in FORMULATIONS:
            raise ConfigurationError(f"unknown formulation {self.formulation!r}")
        if self.family == "seams" and resolved != "qubo":
            raise ConfigurationError("seam instances are encoded as qubo only")
        if self.family == "sat" and resolved == "ising":
            raise ConfigurationError("sat instances are encoded as pubo or qubo")
        object.__setattr__(self, "formulation", resolved)


def _derive_seed(base_seed: int, *key: int) -> int:
    state = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(key))
    return int(state.generate_state(1, np.uint64)[0])


@dataclass
class _InstanceContext:
    """Everything shared by the solver cells of one generated instance."""

    config: SweepConfig
    size: int
    seed_index: int
    instance_seed: int
    instance_id: str
    problem_class: str
    problem: Qubo | Pubo
    num_variables: int
    baseline: float
    seam_instance: SeamInstance | None = None
    var_map: SeamVarMap | None = None
    sat_instance: SatInstance | None = None
    quad_map: QuadratizationMap | None = None
    optimum: float | None = None
    optimum_kind: str | None = None


def _build_context(cfg: SweepConfig, size: int, seed_index: int) -> _InstanceContext:
    fam_code = FAMILIES.index(cfg.family)
    instance_seed = _derive_seed(cfg.base_seed, fam_code, size, seed_index)
    instance_id = f"{cfg.family}-n{size}-s{seed_index}"
    if cfg.family == "seams":
        gen = SeamGeneratorConfig(
            seed=instance_seed,
            num_seams=size,
            box_max=(cfg.seam_box, cfg.seam_box, cfg.seam_box),
            min_length=cfg.seam_min_length,
            max_length=cfg.seam_max_length,
        )
        inst = gen_seam_instance(gen)
        qubo, var_map = encode_seam_qubo(inst)
        ctx = _InstanceContext(
            config=cfg,
            size=size,
            seed_index=seed_index,
            instance_seed=instance_seed,
            instance_id=instance_id,
            problem_class="tsp",
            problem=qubo,
            num_variables=qubo.n,
            baseline=exact_mean_energy(qubo),
            seam_instance=inst,
            var_map=var_map,
        )
        if size <= cfg.tour_oracle_cap:
            _, cost = brute_force_tour(inst, cap=cfg.tour_oracle_cap)
            ctx.optimum = cost
            ctx.optimum_kind = "oracle"
        return ctx
    gen = SatGeneratorConfig(
        seed=instance_seed,
        num_components=size,
        num_clauses=max(1, round(cfg.sat_clauses_per_component * size)),
        max_clause_size=min(cfg.sat_max_clause_size, size),
        planted=cfg.sat_planted,
    )
    inst, planted = gen_sat_instance(gen)
    pubo = encode_sat_pubo(inst)
    problem: Qubo | Pubo = pubo
    quad_map = None
    if cfg.formulation == "qubo":
        problem, quad_map = quadratize(pubo)
    ctx = _InstanceContext(
        config=cfg,
        size=size,
        seed_index=seed_index,
        instance_seed=instance_seed,
        instance_id=instance_id,
        problem_class="max_sat",
        problem=problem,
        num_variables=problem.n,
        baseline=exact_mean_energy(problem),
        sat_instance=inst,
        quad_map=quad_map,
    )
    if planted is not None:
        ctx.optimum = 0.0
        ctx.optimum_kind = "planted"
    elif problem.n <= cfg.oracle_cap:
        ctx.optimum = brute_force(problem, cap=cfg.oracle_cap).best_energy
        ctx.optimum_kind = "oracle"
    return ctx


def _run_solver(ctx: _InstanceContext, spec: SolverSpec, solver_index: int) -> SolveResult:
    fam_code = FAMILIES.index(ctx.config.family)
    seed = _derive_seed(
        ctx.config.base_seed, fam_code, ctx.size, ctx.seed_index, solver_index
    )
    if spec.algorithm == "oracle":
        return brute_force(ctx.problem, cap=spec.oracle_cap)
    if spec.algorithm == "simulated_annealing":
        return simulated_anneal(ctx.problem, sched=spec.anneal, seed=seed)
    if spec.algorithm == "qaoa":
        return qaoa_optimize(ctx.problem, cfg=spec.qaoa, seed=seed)
    return random_guess(ctx.problem, samples=spec.random_samples, seed=seed)


def _decode_feasible(ctx: _InstanceContext, bits: Sequence[int]) -> bool:
    if ctx.config.family == "seams":
        assert ctx.var_map is not None
        return isinstance(decode_seam_solution(bits, ctx.var_map), Tour)
    assert ctx.sat_instance is not None
    native = tuple(bits[: ctx.sat_instance.num_components])
    return count_unsat(ctx.sat_instance, Assignment(native)) == 0


def _cell_record(
    ctx: _InstanceContext, spec: SolverSpec, solver_index: int
) -> BenchmarkRecord:
    base = dict(
        problem_domain="optimization",
        problem_class=ctx.problem_class,
        formulation=ctx.config.formulation,
        algorithm=spec.algorithm,
        instance_id=ctx.instance_id,
        seed=ctx.instance_seed,
        size=ctx.size,
        num_variables=ctx.num_variables,
        oracle_optimum=ctx.optimum,
        optimum_kind=ctx.optimum_kind,
    )
    start = time.perf_counter()
    try:
        result = _run_solver(ctx, spec, solver_index)
    except CapExceededError as exc:
        return BenchmarkRecord(
            **base, wall_time_s=time.perf_counter() - start, error=str(exc)
        )
    wall = time.perf_counter() - start
    quality = None
    if ctx.optimum is not None and ctx.baseline >= ctx.optimum:
        quality = approximation_quality(result.best_energy, ctx.optimum, ctx.baseline)
    return BenchmarkRecord(
        **base,
        best_energy=result.best_energy,
        approximation_quality=quality,
        success_probability=result.success_probability,
        feasible=_decode_feasible(ctx, result.best_bits),
        wall_time_s=wall,
        timed_out=wall > ctx.config.time_budget_s,
    )


def run_benchmark(
    cfg: SweepConfig, out_path=None, append: bool = False
) -> list[BenchmarkRecord]:
    """Run the full cell grid of one sweep configuration.

    Records are appended to ``out_path`` (JSON lines) as soon as their metrics
    are final, so an interrupted sweep keeps everything already written.  Cell
    failures (for example an exact backend refusing an oversized problem) are
    recorded as failed cells and never abort the sweep.
    """
    records: list[BenchmarkRecord] = []
    mode = "a" if append else "w"
    sink = open(out_path, mode, encoding="utf-8") if out_path is not None else None
    try:
        for size in cfg.sizes:
            for seed_index in range(cfg.num_seeds):
                try:
                    ctx = _build_context(cfg, size, seed_index)
                except Exception as exc:  # cell bookkeeping must survive anything
                    for spec in cfg.solvers:
                        rec = BenchmarkRecord(
                            problem_domain="optimization",
                            problem_class="tsp" if cfg.family == "seams" else "max_sat",
                            formulation=cfg.formulation,
                            algorithm=spec.algorithm,
                            instance_id=f"{cfg.family}-n{size}-s{seed_index}",
                            seed=0,
                            size=size,
                            num_variables=0,
                            error=f"instance construction failed: {exc}",
                        )
                        records.append(rec)
                        if sink:
                            write_records_jsonl([rec], sink)
                    continue
                cell_records = _run_instance_cells(ctx)
                records.extend(cell_records)
                if sink:
                    write_records_jsonl(cell_records, sink)
    finally:
        if sink:
            sink.close()
    return records


def _run_instance_cells(ctx: _InstanceContext) -> list[BenchmarkRecord]:
    cfg = ctx.config
    indexed = list(enumerate(cfg.solvers))
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            cell_records = list(
                pool.map(lambda pair: _cell_record(ctx, pair[1], pair[0]), indexed)
            )
    else:
        cell_records = [_cell_record(ctx, spec, i) for i, spec in indexed]
    if ctx.optimum is None:
        # No oracle or plant at this size: score against the best energy any
        # solver in the sweep found for this instance.
        energies = [r.best_energy for r in cell_records if r.best_energy is not None]
        if energies:
            best_known = min(energies)
            rescored = []
            for rec in cell_records:
                if rec.best_energy is None or ctx.baseline < best_known:
                    rescored.append(rec)
                    continue
                rescored.append(
                    replace(
                        rec,
                        oracle_optimum=best_known,
                        optimum_kind="best_known",
                        approximation_quality=approximation_quality(
                            rec.best_energy, best_known, ctx.baseline
                        ),
                    )
                )
            cell_records = rescored
    return cell_records


# ---------------------------------------------------------------------------
# Size-scaling score
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QScoreSizeResult:
    size: int
    mean_quality: float
    qualities: tuple[float, ...]
    passed: bool


@dataclass(frozen=True)
class QScoreResult:
    """Largest size whose mean quality clears the threshold (None: none did)."""

    threshold: float
    per_size: tuple[QScoreSizeResult, ...]
    largest_passing: int | None

    def to_json_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "largest_passing": self.largest_passing,
            "per_size": [
                {
                    "size": r.size,
                    "mean_quality": r.mean_quality,
                    "qualities": list(r.qualities),
                    "passed": r.passed,
                }
                for r in self.per_size
            ],
        }


def qscore_sweep(cfg: SweepConfig, solver: SolverSpec) -> QScoreResult:
    """Walk sizes in increasing order until the solver's mean quality drops
    below the threshold; requires a reference optimum at every visited size
    (exhaustive oracle within caps, or a planted optimum)."""
    per_size: list[QScoreSizeResult] = []
    largest: int | None = None
    for size in cfg.sizes:
        qualities: list[float] = []
        for seed_index in range(cfg.num_seeds):
            ctx = _build_context(cfg, size, seed_index)
            if ctx.optimum is None:
                raise CapExceededError(
                    f"no reference optimum available for {cfg.family} size {size}; "
                    f"use planted instances or sizes within the oracle caps"
                )
            record = _cell_record(ctx, solver, 0)
            if record.error is not None:
                raise CapExceededError(
                    f"solver failed at size {size}: {record.error}"
                )
            assert record.approximation_quality is not None
            qualities.append(record.approximation_quality)
        mean_quality = sum(qualities) / len(qualities)
        passed = mean_quality >= cfg.quality_threshold
        per_size.append(
            QScoreSizeResult(
                size=size,
                mean_quality=mean_quality,
                qualities=tuple(qualities),
                passed=passed,
            )
        )
        if not passed:
            break
        largest = size
    return QScoreResult(
        threshold=cfg.quality_threshold,
        per_size=tuple(per_size),
        largest_passing=largest,
    )


def default_sweeps(
    base_seed: int = 0,
    solvers: tuple[SolverSpec, ...] | None = None,
    num_seeds: int = 5,
) -> tuple[SweepConfig, SweepConfig]:
    """The suite's default grid: seam sizes 3..6 and SAT sizes 8..16."""
    if solvers is None:
        solvers = (
            SolverSpec("oracle"),
            SolverSpec("simulated_annealing"),
            SolverSpec(
                "qaoa",
                qaoa=QaoaConfig(grid_resolution=12, refinement_iterations=60),
            ),
        )
    seams = SweepConfig(
        family="seams",
        sizes=(3, 4, 5, 6),
        num_seeds=num_seeds,
        base_seed=base_seed,
        solvers=solvers,
    )
    sat = SweepConfig(
        family="sat",
        sizes=(8, 10, 12, 14, 16),
        num_seeds=num_seeds,
        base_seed=base_seed,
        solvers=solvers,
    )
    return seams, sat
