"""Command-line entry point: generate -> encode -> solve -> bench -> report.

Every subcommand reads and writes plain files (JSON, JSON lines, CSV), so a
whole pipeline can be reproduced from its artifacts alone.  All randomness
flows from the ``--seed`` flags; rerunning a command with the same inputs
produces byte-identical outputs except for recorded wall times.

Exit codes: 0 success, 1 invalid flags or inputs, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .bench import (
    BenchmarkRecord,
    SolverSpec,
    SweepConfig,
    qscore_sweep,
    run_benchmark,
    write_records_csv,
)
from .encoding import (
    PenaltyWeights,
    encode_sat_pubo,
    encode_seam_qubo,
    quadratize,
)
from .errors import AutoQBenchError, ValidationError
from .generator import (
    SatGeneratorConfig,
    SeamGeneratorConfig,
    gen_sat_instance,
    gen_seam_instance,
)
from .model import (
    SeamInstance,
    load_instance,
    load_problem,
    save_json,
)
from .solvers import (
    AnnealSchedule,
    QaoaConfig,
    SolveResult,
    brute_force,
    qaoa_optimize,
    random_guess,
    simulated_anneal,
)

_SOLVER_ALIASES = {
    "oracle": "oracle",
    "anneal": "simulated_annealing",
    "qaoa": "qaoa",
    "random": "random",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports flag problems through exit code 1, not 2."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="autoqbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a reference-problem instance")
    gen.add_argument("--family", choices=("seams", "sat"), required=True)
    gen.add_argument("--n", type=int, required=True, help="seam count / component count")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--box", type=float, default=1000.0, help="cubic box edge (mm)")
    gen.add_argument("--min-len", type=float, default=50.0)
    gen.add_argument("--max-len", type=float, default=300.0)
    gen.add_argument("--closed", action="store_true", help="seam tour returns to start")
    gen.add_argument("--clauses", type=int, default=None, help="default: 3 per component")
    gen.add_argument("--max-clause-size", type=int, default=3)
    planted = gen.add_mutually_exclusive_group()
    planted.add_argument("--planted", dest="planted", action="store_true", default=True)
    planted.add_argument("--no-planted", dest="planted", action="store_false")

    enc = sub.add_parser("encode", help="encode an instance as qubo/pubo")
    enc.add_argument("--in", dest="input", required=True)
    enc.add_argument("--formulation", choices=("qubo", "pubo"), required=True)
    enc.add_argument("--out", required=True)
    enc.add_argument("--var-map", default=None, help="default: <out>.varmap.json")
    enc.add_argument("--penalty-a", type=float, default=None,
                     help="constraint penalty (default: derived from the instance)")
    enc.add_argument("--objective-scale", type=float, default=1.0)
    enc.add_argument("--clause-weight", type=float, default=1.0)

    sol = sub.add_parser("solve", help="solve an encoded problem")
    sol.add_argument("--backend", choices=tuple(_SOLVER_ALIASES), required=True)
    sol.add_argument("--in", dest="input", required=True)
    sol.add_argument("--out", required=True)
    sol.add_argument("--seed", type=int, default=0)
    sol.add_argument("--cap", type=int, default=24, help="oracle variable cap")
    sol.add_argument("--t-initial", type=float, default=None)
    sol.add_argument("--alpha", type=float, default=0.95)
    sol.add_argument("--sweeps", type=int, default=250)
    sol.add_argument("--restarts", type=int, default=3)
    sol.add_argument("--layers", type=int, default=1)
    sol.add_argument("--grid", type=int, default=32)
    sol.add_argument("--refine-iters", type=int, default=200)
    sol.add_argument("--samples", type=int, default=4096)
    sol.add_argument("--max-qubits", type=int, default=24)
    sol.add_argument("--random-samples", type=int, default=1)

    ben = sub.add_parser("bench", help="run a benchmark sweep")
    ben.add_argument("--family", choices=("seams", "sat", "both"), default="both")
    ben.add_argument("--sizes", default=None, help="comma-separated, e.g. 3,4,5")
    ben.add_argument("--seeds", type=int, default=5, help="instances per size")
    ben.add_argument("--solvers", default="oracle,anneal",
                     help=f"comma-separated from {','.join(_SOLVER_ALIASES)}")
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--out", required=True, help="JSON-lines records file")
    ben.add_argument("--csv", default=None)
    ben.add_argument("--threshold", type=float, default=0.2)
    ben.add_argument("--budget", type=float, default=120.0, help="per-cell seconds")
    ben.add_argument("--workers", type=int, default=1)

    qs = sub.add_parser("qscore", help="largest size a solver still optimizes")
    qs.add_argument("--family", choices=("seams", "sat"), required=True)
    qs.add_argument("--solver", choices=tuple(_SOLVER_ALIASES), required=True)
    qs.add_argument("--sizes", default=None)
    qs.add_argument("--seeds", type=int, default=5)
    qs.add_argument("--seed", type=int, default=0)
    qs.add_argument("--threshold", type=float, default=0.2)
    qs.add_argument("--out", default=None, help="optional JSON result file")

    rep = sub.add_parser("report", help="summarize a JSON-lines records file")
    rep.add_argument("--in", dest="input", required=True)
    rep.add_argument("--csv", default=None)
    rep.add_argument("--threshold", type=float, default=0.2)

    return parser


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_generate(args) -> int:
    if args.family == "seams":
        cfg = SeamGeneratorConfig(
            seed=args.seed,
            num_seams=args.n,
            box_max=(args.box, args.box, args.box),
            min_length=args.min_len,
            max_length=args.max_len,
            closed_tour=args.closed,
        )
        instance = gen_seam_instance(cfg)
        sidecar = cfg.to_json_dict()
    else:
        cfg = SatGeneratorConfig(
            seed=args.seed,
            num_components=args.n,
            num_clauses=args.clauses if args.clauses is not None else 3 * args.n,
            max_clause_size=args.max_clause_size,
            planted=args.planted,
        )
        instance, planted_assignment = gen_sat_instance(cfg)
        sidecar = cfg.to_json_dict()
        if planted_assignment is not None:
            sidecar["planted_assignment"] = list(planted_assignment.bits)
    save_json(args.out, instance.to_json_dict())
    save_json(str(args.out) + ".config.json", sidecar)
    return 0


def _cmd_encode(args) -> int:
    instance = load_instance(args.input)
    var_map_path = args.var_map or str(args.out) + ".varmap.json"
    weights = PenaltyWeights(
        constraint_penalty=args.penalty_a,
        objective_scale=args.objective_scale,
        clause_weight=args.clause_weight,
    )
    if isinstance(instance, SeamInstance):
        if args.formulation != "qubo":
            raise ValidationError("seam instances support --formulation qubo only")
        qubo, var_map = encode_seam_qubo(instance, weights)
        save_json(args.out, qubo.to_json_dict())
        sidecar = var_map.to_json_dict()
        sidecar["objective_scale"] = weights.objective_scale
        save_json(var_map_path, sidecar)
        return 0
    pubo = encode_sat_pubo(instance, weights)
    if args.formulation == "pubo":
        save_json(args.out, pubo.to_json_dict())
        save_json(
            var_map_path,
            {"type": "identity", "num_variables": pubo.n,
             "clause_weight": weights.clause_weight},
        )
        return 0
    qubo, quad_map = quadratize(pubo)
    save_json(args.out, qubo.to_json_dict())
    sidecar = quad_map.to_json_dict()
    sidecar["clause_weight"] = weights.clause_weight
    save_json(var_map_path, sidecar)
    return 0


def _result_json(backend: str, result: SolveResult, n: int) -> dict:
    data = {
        "backend": backend,
        "num_variables": n,
        "best_bits": list(result.best_bits),
        "best_energy": result.best_energy,
        "evaluations": result.evaluations,
        "feasible": result.feasible,
        "seed": result.seed,
        "wall_time_s": result.wall_time,
        "optima_count": result.optima_count,
        "success_probability": result.success_probability,
        "angles": None,
        "distribution_top": None,
    }
    if result.angles is not None:
        data["angles"] = {"gammas": list(result.angles[0]), "betas": list(result.angles[1])}
    if result.distribution is not None:
        probs = result.distribution
        top = min(32, len(probs))
        order = np.lexsort((np.arange(len(probs)), -probs))[:top]
        data["distribution_top"] = [
            [format(int(z), f"0{n}b")[::-1], float(probs[z])] for z in order
        ]
    return data


def _cmd_solve(args) -> int:
    problem = load_problem(args.input)
    backend = args.backend
    if backend == "oracle":
        result = brute_force(problem, cap=args.cap)
    elif backend == "anneal":
        if args.t_initial is None:
            sched = AnnealSchedule.scaled_to(
                problem, alpha=args.alpha, sweeps=args.sweeps, restarts=args.restarts
            )
        else:
            sched = AnnealSchedule(
                t_initial=args.t_initial,
                alpha=args.alpha,
                sweeps=args.sweeps,
                restarts=args.restarts,
            )
        result = simulated_anneal(problem, sched=sched, seed=args.seed)
    elif backend == "qaoa":
        cfg = QaoaConfig(
            layers=args.layers,
            grid_resolution=args.grid,
            refinement_iterations=args.refine_iters,
            samples=args.samples,
            max_qubits=args.max_qubits,
        )
        result = qaoa_optimize(problem, cfg=cfg, seed=args.seed)
    else:
        result = random_guess(problem, samples=args.random_samples, seed=args.seed)
    save_json(args.out, _result_json(backend, result, problem.n))
    return 0


def _parse_sizes(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        sizes = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ValidationError(f"--sizes must be comma-separated integers: {exc}")
    if not sizes:
        raise ValidationError("--sizes must name at least one size")
    return sizes


def _parse_solvers(text: str) -> tuple[SolverSpec, ...]:
    specs = []
    for part in text.split(","):
        name = part.strip()
        if name not in _SOLVER_ALIASES:
            raise ValidationError(
                f"--solvers: unknown solver {name!r}; choose from {','.join(_SOLVER_ALIASES)}"
            )
        specs.append(SolverSpec(_SOLVER_ALIASES[name]))
    return tuple(specs)


_DEFAULT_SIZES = {"seams": (3, 4, 5, 6), "sat": (8, 10, 12, 14, 16)}


def _cmd_bench(args) -> int:
    sizes = _parse_sizes(args.sizes)
    solvers = _parse_solvers(args.solvers)
    families = ("seams", "sat") if args.family == "both" else (args.family,)
    if args.family == "both" and sizes is not None:
        raise ValidationError("--sizes cannot be combined with --family both "
                              "(each family has its own size axis)")
    all_records: list[BenchmarkRecord] = []
    for position, family in enumerate(families):
        cfg = SweepConfig(
            family=family,
            sizes=sizes or _DEFAULT_SIZES[family],
            num_seeds=args.seeds,
            base_seed=args.seed,
            solvers=solvers,
            quality_threshold=args.threshold,
            time_budget_s=args.budget,
            workers=args.workers,
        )
        all_records.extend(run_benchmark(cfg, out_path=args.out, append=position > 0))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            write_records_csv(all_records, fh)
    print(f"wrote {len(all_records)} records to {args.out}")
    return 0


def _cmd_qscore(args) -> int:
    cfg = SweepConfig(
        family=args.family,
        sizes=_parse_sizes(args.sizes) or _DEFAULT_SIZES[args.family],
        num_seeds=args.seeds,
        base_seed=args.seed,
        quality_threshold=args.threshold,
    )
    solver = SolverSpec(_SOLVER_ALIASES[args.solver])
    result = qscore_sweep(cfg, solver)
    for row in result.per_size:
        status = "pass" if row.passed else "FAIL"
        print(f"size {row.size:>4}  mean quality {row.mean_quality:8.4f}  {status}")
    if result.largest_passing is None:
        print(f"no size passed the threshold {result.threshold}")
    else:
        print(f"largest passing size: {result.largest_passing} "
              f"(threshold {result.threshold})")
    if args.out:
        save_json(args.out, result.to_json_dict())
    return 0


def _cmd_report(args) -> int:
    groups: dict[tuple[str, int], list[BenchmarkRecord]] = {}
    total = 0
    with open(args.input, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = BenchmarkRecord.from_json_dict(json.loads(line))
            except Exception as exc:
                print(f"line {lineno}: skipping malformed record: {exc}", file=sys.stderr)
                continue
            total += 1
            groups.setdefault((record.algorithm, record.size), []).append(record)

    header = ("solver", "size", "cells", "scored", "mean_quality", "min_quality", "status")
    rows = []
    for (algorithm, size) in sorted(groups):
        records = groups[(algorithm, size)]
        qualities = [
            r.approximation_quality for r in records if r.approximation_quality is not None
        ]
        if qualities:
            mean_q = sum(qualities) / len(qualities)
            min_q = min(qualities)
            status = "pass" if mean_q >= args.threshold else "fail"
            rows.append(
                (algorithm, str(size), str(len(records)), str(len(qualities)),
                 f"{mean_q:.4f}", f"{min_q:.4f}", status)
            )
        else:
            rows.append((algorithm, str(size), str(len(records)), "0", "", "", "n/a"))

    widths = [max(len(header[c]), *(len(r[c]) for r in rows)) if rows else len(header[c])
              for c in range(len(header))]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip())
    for row in rows:
        print("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    print(f"{total} records, {len(rows)} solver/size groups")

    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "encode": _cmd_encode,
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "qscore": _cmd_qscore,
    "report": _cmd_report,
}


def dispatch(argv: list[str] | None = None) -> int:
    """Parse and run; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (AutoQBenchError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
