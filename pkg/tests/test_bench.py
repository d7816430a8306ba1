import csv
import io
import json
import math

import numpy as np
import pytest

from autoqbench.bench import (
    CSV_COLUMNS,
    BenchmarkRecord,
    SolverSpec,
    SweepConfig,
    approximation_quality,
    exact_mean_energy,
    qscore_sweep,
    read_records_jsonl,
    run_benchmark,
    sampled_mean_energy,
    success_probability,
    write_records_csv,
)
from autoqbench.errors import ConfigurationError, ValidationError
from autoqbench.model import Pubo, Qubo
from autoqbench.solvers import (
    QaoaConfig,
    SolveResult,
    full_energies,
    optimal_indices,
    qaoa_optimize,
)
from conftest import rand_pubo, rand_qubo


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def test_quality_endpoints():
    assert approximation_quality(found=-5.0, optimum=-5.0, random_baseline=0.0) == 1.0
    assert approximation_quality(found=0.0, optimum=-5.0, random_baseline=0.0) == 0.0
    assert approximation_quality(found=3.0, optimum=-5.0, random_baseline=0.0) == 0.0
    assert approximation_quality(found=-9.0, optimum=-5.0, random_baseline=0.0) == 1.0
    assert approximation_quality(found=7.0, optimum=2.0, random_baseline=2.0) == 1.0
    with pytest.raises(ValidationError):
        approximation_quality(found=0.0, optimum=1.0, random_baseline=0.0)


def test_exact_mean_energy_matches_enumeration():
    q = rand_qubo(12, seed=44, offset=0.25)
    assert exact_mean_energy(q) == pytest.approx(float(full_energies(q).mean()), abs=1e-9)
    p = rand_pubo(10, seed=45, num_terms=15, max_degree=4, offset=-1.0)
    assert exact_mean_energy(p) == pytest.approx(float(full_energies(p).mean()), abs=1e-9)


def test_sampled_baseline_agrees_within_three_standard_errors():
    q = rand_qubo(12, seed=46)
    exact = exact_mean_energy(q)
    est, stderr = sampled_mean_energy(q, num_samples=10_000, seed=0)
    assert abs(est - exact) <= 3.0 * stderr


def test_success_probability_trivials():
    flat = np.full(16, 1.0 / 16.0)
    result = SolveResult(
        best_bits=(0, 0, 0, 0), best_energy=0.0, wall_time=0.0, evaluations=0,
        distribution=flat,
    )
    assert success_probability(result, range(16)) == pytest.approx(1.0)
    assert success_probability(result, []) == 0.0
    concentrated = np.zeros(16)
    concentrated[3] = 1.0
    result2 = SolveResult(
        best_bits=(1, 1, 0, 0), best_energy=0.0, wall_time=0.0, evaluations=0,
        distribution=concentrated,
    )
    assert success_probability(result2, [(0, 1, 0, 0)]) == 0.0
    assert success_probability(result2, [(1, 1, 0, 0)]) == 1.0


def test_success_probability_missing_distribution_is_none():
    result = SolveResult(best_bits=(0,), best_energy=0.0, wall_time=0.0, evaluations=1)
    assert success_probability(result, [0]) is None


def test_success_probability_matches_statevector_sum():
    q = Qubo.from_terms(2, [(0, 0, -1.0), (1, 1, -1.0), (0, 1, 2.0)])
    result = qaoa_optimize(
        q, QaoaConfig(layers=1, grid_resolution=16, refinement_iterations=200), seed=9
    )
    optima = optimal_indices(q)
    direct = float(result.distribution[optima].sum())
    assert success_probability(result, optima.tolist()) == pytest.approx(direct, abs=1e-12)
    assert result.success_probability == pytest.approx(direct, abs=1e-12)


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------


def make_record(**overrides):
    base = dict(
        problem_domain="optimization",
        problem_class="max_sat",
        formulation="pubo",
        algorithm="oracle",
        instance_id="sat-n6-s0",
        seed=1,
        size=6,
        num_variables=6,
        best_energy=0.0,
        oracle_optimum=0.0,
        optimum_kind="planted",
        approximation_quality=1.0,
        feasible=True,
        wall_time_s=0.01,
    )
    base.update(overrides)
    return BenchmarkRecord(**base)


def test_record_rejects_unknown_labels():
    with pytest.raises(ValidationError):
        make_record(problem_domain="cooking")
    with pytest.raises(ValidationError):
        make_record(algorithm="guessing")
    with pytest.raises(ValidationError):
        make_record(approximation_quality=1.5)


def test_record_json_roundtrip():
    record = make_record(success_probability=0.25)
    assert BenchmarkRecord.from_json_dict(record.to_json_dict()) == record


def test_csv_column_order():
    fh = io.StringIO()
    write_records_csv([make_record()], fh)
    rows = list(csv.reader(io.StringIO(fh.getvalue())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1][0] == "optimization"
    assert rows[1][4] == "6"


# ---------------------------------------------------------------------------
# run_benchmark
# ---------------------------------------------------------------------------


def test_empty_sizes_give_empty_records():
    cfg = SweepConfig(family="sat", sizes=(), num_seeds=2)
    assert run_benchmark(cfg) == []


def test_record_count_law():
    cfg = SweepConfig(
        family="sat",
        sizes=(5, 7),
        num_seeds=3,
        base_seed=11,
        solvers=(SolverSpec("oracle"), SolverSpec("random")),
    )
    records = run_benchmark(cfg)
    assert len(records) == 2 * 3 * 2
    for record in records:
        assert record.error is None
        assert record.approximation_quality is not None
        assert 0.0 <= record.approximation_quality <= 1.0


def test_oracle_cells_have_quality_one():
    cfg = SweepConfig(family="sat", sizes=(6,), num_seeds=3, base_seed=2)
    for record in run_benchmark(cfg):
        assert record.algorithm == "oracle"
        assert record.approximation_quality == 1.0
        assert record.feasible is True


def test_rerun_is_deterministic():
    cfg = SweepConfig(
        family="seams",
        sizes=(2, 3),
        num_seeds=2,
        base_seed=5,
        solvers=(SolverSpec("oracle"), SolverSpec("simulated_annealing")),
    )
    first = run_benchmark(cfg)
    second = run_benchmark(cfg)
    assert [r.best_energy for r in first] == [r.best_energy for r in second]
    assert [r.approximation_quality for r in first] == [
        r.approximation_quality for r in second
    ]


def test_records_persist_incrementally(tmp_path):
    out = tmp_path / "records.jsonl"
    cfg = SweepConfig(family="sat", sizes=(5,), num_seeds=2, base_seed=3)
    records = run_benchmark(cfg, out_path=out)
    loaded = read_records_jsonl(out)
    assert loaded == records


def test_oversized_oracle_cell_is_marked_failed_not_fatal():
    cfg = SweepConfig(
        family="seams",
        sizes=(3, 4),  # N=4 encodes to 32 > 24 variables
        num_seeds=1,
        base_seed=7,
        solvers=(SolverSpec("oracle"), SolverSpec("simulated_annealing")),
    )
    records = run_benchmark(cfg)
    assert len(records) == 4
    failed = [r for r in records if r.error is not None]
    assert len(failed) == 1
    assert failed[0].algorithm == "oracle" and failed[0].size == 4
    assert "cap" in failed[0].error
    # the annealer cell of the same instance still succeeded
    ok = [r for r in records if r.size == 4 and r.algorithm == "simulated_annealing"]
    assert ok[0].best_energy is not None


def test_seam_records_score_against_tour_oracle():
    cfg = SweepConfig(
        family="seams", sizes=(3,), num_seeds=2, base_seed=1,
        solvers=(SolverSpec("oracle"),),
    )
    for record in run_benchmark(cfg):
        assert record.optimum_kind == "oracle"
        assert record.best_energy == pytest.approx(record.oracle_optimum, abs=1e-9)
        assert record.approximation_quality == 1.0


def test_best_known_rescoring_without_oracle():
    cfg = SweepConfig(
        family="seams",
        sizes=(9,),  # beyond both the tour cap (8) and the qubo oracle cap
        num_seeds=1,
        base_seed=13,
        solvers=(
            SolverSpec("simulated_annealing"),
            SolverSpec("random"),
        ),
    )
    records = run_benchmark(cfg)
    assert all(r.optimum_kind == "best_known" for r in records)
    best = min(r.best_energy for r in records)
    winners = [r for r in records if r.best_energy == best]
    assert all(r.approximation_quality == 1.0 for r in winners)


def test_sweep_config_validation():
    with pytest.raises(ConfigurationError):
        SweepConfig(family="soup", sizes=(3,))
    with pytest.raises(ConfigurationError):
        SweepConfig(family="sat", sizes=(5, 5))
    with pytest.raises(ConfigurationError):
        SweepConfig(family="sat", sizes=(5,), quality_threshold=1.5)
    with pytest.raises(ConfigurationError):
        SweepConfig(family="seams", sizes=(3,), formulation="pubo")


def test_parallel_workers_match_sequential():
    base = dict(
        family="sat",
        sizes=(6,),
        num_seeds=2,
        base_seed=9,
        solvers=(SolverSpec("oracle"), SolverSpec("random")),
    )
    seq = run_benchmark(SweepConfig(**base, workers=1))
    par = run_benchmark(SweepConfig(**base, workers=2))
    strip = lambda rs: [(r.instance_id, r.algorithm, r.best_energy) for r in rs]
    assert strip(seq) == strip(par)


# ---------------------------------------------------------------------------
# qscore sweep
# ---------------------------------------------------------------------------


def test_qscore_oracle_passes_all_sizes_within_cap():
    cfg = SweepConfig(family="sat", sizes=(6, 8, 10), num_seeds=2, base_seed=21)
    result = qscore_sweep(cfg, SolverSpec("oracle"))
    assert result.largest_passing == 10
    assert all(r.mean_quality == 1.0 and r.passed for r in result.per_size)


def test_qscore_random_fails_smallest_size():
    cfg = SweepConfig(family="sat", sizes=(10, 12), num_seeds=10, base_seed=3)
    result = qscore_sweep(cfg, SolverSpec("random"))
    assert result.largest_passing is None
    assert len(result.per_size) == 1
    assert result.per_size[0].mean_quality < 0.2


def test_qscore_annealer_is_reproducible_and_monotone_walk():
    cfg = SweepConfig(family="seams", sizes=(3, 4, 5), num_seeds=2, base_seed=29)
    solver = SolverSpec("simulated_annealing")
    first = qscore_sweep(cfg, solver)
    second = qscore_sweep(cfg, solver)
    assert first == second
    sizes = [r.size for r in first.per_size]
    assert sizes == sorted(sizes)
    if first.largest_passing is not None:
        assert all(r.passed for r in first.per_size[:-1])
