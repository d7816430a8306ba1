"""Solver backends sharing one result type.

Three backends: an exhaustive oracle (exact optimum and degeneracy count), a
single-bit-flip Metropolis annealer with a geometric temperature schedule, and
a statevector QAOA simulator whose angles are tuned by a seeded coarse grid
plus Nelder-Mead refinement.

Every backend is deterministic for a fixed seed.  Basis-state integers follow
the package convention: variable i is bit i of the index.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import CapExceededError, ConfigurationError, ValidationError
from .model import (
    Pubo,
    Qubo,
    SeamInstance,
    Tour,
    coeff_arrays,
    index_to_bits,
    pubo_energy,
    qubo_energy,
    tour_cost,
)

Problem = Qubo | Pubo

DEFAULT_ORACLE_CAP = 24
DEFAULT_TOUR_CAP = 8
STATEVECTOR_CAP = 24


@dataclass(frozen=True)
class SolveResult:
    """Common solver output.

    ``distribution`` (QAOA only) holds the exact basis-state probabilities of
    the final statevector, indexed by basis integer.  ``feasible`` is filled
    by callers that can decode back to the native problem.
    """

    best_bits: tuple[int, ...]
    best_energy: float
    wall_time: float
    evaluations: int
    seed: int | None = None
    feasible: bool | None = None
    distribution: np.ndarray | None = None
    angles: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    success_probability: float | None = None
    optima_count: int | None = None

    def with_feasible(self, feasible: bool) -> "SolveResult":
        return replace(self, feasible=feasible)


def problem_energy(problem: Problem, bits: Sequence[int]) -> float:
    if isinstance(problem, Qubo):
        return qubo_energy(problem, bits)
    return pubo_energy(problem, bits)


# ---------------------------------------------------------------------------
# Vectorized energy evaluation over basis states
# ---------------------------------------------------------------------------


def _bit_columns(indices: np.ndarray, n: int) -> np.ndarray:
    """(len(indices), n) uint8 matrix of bits; variable i is bit i."""
    cols = [(indices >> i) & 1 for i in range(n)]
    return np.stack(cols, axis=1).astype(np.uint8) if n else np.zeros((len(indices), 0), np.uint8)


def energies_for_bits(problem: Problem, bits: np.ndarray) -> np.ndarray:
    """Energies of the rows of a (num_states, n) 0/1 matrix (float64)."""
    bits = np.asarray(bits, dtype=np.uint8)
    out = np.full(bits.shape[0], float(problem.offset))
    if isinstance(problem, Qubo):
        lo, hi, c = coeff_arrays(problem.coeffs)
        for i, j, cc in zip(lo.tolist(), hi.tolist(), c.tolist()):
            if i == j:
                out += cc * bits[:, i]
            else:
                out += cc * (bits[:, i] & bits[:, j])
    else:
        for c, vs in problem.terms:
            prod = bits[:, vs[0]].copy()
            for v in vs[1:]:
                prod &= bits[:, v]
            out += c * prod
    return out


def energies_for_indices(problem: Problem, indices: np.ndarray) -> np.ndarray:
    """Energies of the given basis states (float64)."""
    bits = _bit_columns(np.asarray(indices, dtype=np.int64), problem.n)
    return energies_for_bits(problem, bits)


def iter_energy_chunks(
    problem: Problem, chunk_bits: int = 18
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(start_index, energies)`` blocks covering all 2^n basis states."""
    n = problem.n
    total = 1 << n
    step = 1 << min(chunk_bits, n)
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.int64)
        yield start, energies_for_indices(problem, idx)


def full_energies(problem: Problem, cap: int = STATEVECTOR_CAP) -> np.ndarray:
    """Dense vector of all 2^n energies; refuses above ``cap`` qubits."""
    n = problem.n
    if n > cap:
        raise CapExceededError(
            f"full energy table needs 2^{n} entries; cap is {cap} variables"
        )
    out = np.empty(1 << n)
    for start, chunk in iter_energy_chunks(problem):
        out[start : start + len(chunk)] = chunk
    return out


# ---------------------------------------------------------------------------
# Exhaustive oracles
# ---------------------------------------------------------------------------


def brute_force(problem: Problem, cap: int = DEFAULT_ORACLE_CAP) -> SolveResult:
    """Exact global minimum with the exact number of optimal bitstrings.

    The reported argmin is the optimal state with the lowest basis index.
    """
    n = problem.n
    if n > cap:
        raise CapExceededError(
            f"brute_force refused: {n} variables exceed the cap of {cap}; "
            f"pass a larger cap to force an exhaustive solve"
        )
    t0 = time.perf_counter()
    best_energy = math.inf
    best_index = 0
    count = 0
    for start, chunk in iter_energy_chunks(problem):
        chunk_min = float(chunk.min())
        if chunk_min < best_energy:
            best_energy = chunk_min
            best_index = start + int(np.flatnonzero(chunk == chunk_min)[0])
            count = int(np.count_nonzero(chunk == chunk_min))
        elif chunk_min == best_energy:
            count += int(np.count_nonzero(chunk == chunk_min))
    bits = index_to_bits(best_index, n)
    return SolveResult(
        best_bits=bits,
        best_energy=problem_energy(problem, bits),
        wall_time=time.perf_counter() - t0,
        evaluations=1 << n,
        optima_count=count,
    )


def optimal_indices(
    problem: Problem, cap: int = DEFAULT_ORACLE_CAP, limit: int = 1 << 20
) -> np.ndarray:
    """Basis indices of all global minima (ascending), for success metrics."""
    n = problem.n
    if n > cap:
        raise CapExceededError(f"optimal_indices refused: {n} variables exceed cap {cap}")
    target = math.inf
    for _, chunk in iter_energy_chunks(problem):
        target = min(target, float(chunk.min()))
    found = []
    total = 0
    for start, chunk in iter_energy_chunks(problem):
        idx = np.flatnonzero(chunk == target)
        total += len(idx)
        if total > limit:
            raise CapExceededError(f"more than {limit} optimal states")
        found.append(start + idx)
    return np.concatenate(found)


def brute_force_tour(inst: SeamInstance, cap: int = DEFAULT_TOUR_CAP) -> tuple[Tour, float]:
    """Exhaustive search over all N! * 2^N tours.

    Returns the lexicographically smallest optimal tour (steps compared as
    ``(seam, direction)`` sequences).
    """
    n = inst.n
    if n > cap:
        raise CapExceededError(
            f"brute_force_tour refused: {n} seams exceed the cap of {cap} "
            f"({math.factorial(n)} * 2^{n} tours)"
        )
    lengths = [inst.seam_length(s) for s in range(n)]
    total_len = sum(lengths)
    exits = [inst.exit_point(k // 2, k % 2) for k in range(2 * n)]
    entries = [inst.entry_point(k // 2, k % 2) for k in range(2 * n)]
    gap = [
        [math.dist(exits[a], entries[b]) for b in range(2 * n)] for a in range(2 * n)
    ]
    best_cost = math.inf
    best_steps: tuple[tuple[int, int], ...] | None = None
    for perm in itertools.permutations(range(n)):
        for dirs in itertools.product((0, 1), repeat=n):
            cost = total_len
            ks = [2 * s + d for s, d in zip(perm, dirs)]
            for a, bk in zip(ks, ks[1:]):
                cost += gap[a][bk]
            if inst.closed_tour:
                cost += gap[ks[-1]][ks[0]]
            steps = tuple(zip(perm, dirs))
            if cost < best_cost or (cost == best_cost and steps < best_steps):
                best_cost = cost
                best_steps = steps
    assert best_steps is not None
    return Tour(best_steps), best_cost


# ---------------------------------------------------------------------------
# Simulated annealing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling: sweep k runs at temperature ``t_initial * alpha**k``."""

    t_initial: float
    alpha: float = 0.95
    sweeps: int = 250
    restarts: int = 3

    def __post_init__(self):
        if self.t_initial <= 0:
            raise ConfigurationError("t_initial must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError("alpha must lie in (0, 1)")
        if self.sweeps < 1:
            raise ConfigurationError("sweeps must be >= 1")
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1")

    @classmethod
    def scaled_to(cls, problem: Problem, **overrides) -> "AnnealSchedule":
        """Default schedule with the start temperature tied to the coefficient scale."""
        if isinstance(problem, Qubo):
            scale = problem.max_abs_coeff()
        else:
            scale = max((abs(c) for c, _ in problem.terms), default=0.0)
        t_initial = overrides.pop("t_initial", 2.0 * scale if scale > 0 else 1.0)
        return cls(t_initial=t_initial, **overrides)


class _QuboFlipper:
    """Incremental single-flip energy deltas via cached local fields."""

    def __init__(self, q: Qubo):
        n = q.n
        self.linear = np.zeros(n)
        self.sym = np.zeros((n, n))
        lo, hi, c = coeff_arrays(q.coeffs)
        diag = lo == hi
        self.linear[lo[diag]] = c[diag]
        off = ~diag
        self.sym[lo[off], hi[off]] = c[off]
        self.sym[hi[off], lo[off]] = c[off]
        self.offset = q.offset
        self.x = np.zeros(n, dtype=np.int8)
        self.fields = np.zeros(n)
        self.energy = q.offset

    def reset(self, x: np.ndarray) -> None:
        self.x = x.astype(np.int8).copy()
        self.fields = self.linear + self.sym @ self.x
        self.energy = self.offset + float(
            self.x @ self.linear + 0.5 * self.x @ (self.sym @ self.x)
        )

    def delta(self, i: int) -> float:
        return (1 - 2 * self.x[i]) * self.fields[i]

    def flip(self, i: int) -> None:
        delta = 1 - 2 * self.x[i]
        self.energy += delta * self.fields[i]
        self.x[i] += delta
        self.fields += delta * self.sym[:, i]

    def full_energy(self) -> float:
        return self.offset + float(self.x @ self.linear + 0.5 * self.x @ (self.sym @ self.x))


class _PuboFlipper:
    """Single-flip deltas for higher-order terms via per-variable term lists."""

    def __init__(self, p: Pubo):
        self.p = p
        self.by_var: list[list[tuple[float, tuple[int, ...]]]] = [[] for _ in range(p.n)]
        for c, vs in p.terms:
            for v in vs:
                self.by_var[v].append((c, vs))
        self.x = np.zeros(p.n, dtype=np.int8)
        self.energy = p.offset

    def reset(self, x: np.ndarray) -> None:
        self.x = x.astype(np.int8).copy()
        self.energy = pubo_energy(self.p, self.x)

    def delta(self, i: int) -> float:
        acc = 0.0
        for c, vs in self.by_var[i]:
            prod = 1
            for v in vs:
                if v != i and not self.x[v]:
                    prod = 0
                    break
            if prod:
                acc += c
        return (1 - 2 * self.x[i]) * acc

    def flip(self, i: int) -> None:
        self.energy += self.delta(i)
        self.x[i] = 1 - self.x[i]

    def full_energy(self) -> float:
        return pubo_energy(self.p, self.x)


def simulated_anneal(
    problem: Problem,
    sched: AnnealSchedule | None = None,
    seed: int = 0,
    debug: bool = False,
    trace: list | None = None,
) -> SolveResult:
    """Metropolis single-bit-flip annealing, best-ever state across restarts.

    All restarts draw from one seeded stream, so raising ``restarts`` can only
    improve (never change) the result of the shared prefix.  With ``debug`` the
    incrementally tracked energy is re-validated against a full evaluation
    after every sweep.  ``trace``, if given, receives the current energy after
    each accepted move.
    """
    sched = sched or AnnealSchedule.scaled_to(problem)
    rng = np.random.Generator(np.random.PCG64(seed))
    n = problem.n
    flipper = _QuboFlipper(problem) if isinstance(problem, Qubo) else _PuboFlipper(problem)
    best_energy = math.inf
    best_bits = np.zeros(n, dtype=np.int8)
    evaluations = 0
    t0 = time.perf_counter()
    for _ in range(sched.restarts):
        flipper.reset(rng.integers(0, 2, size=n))
        evaluations += 1
        if flipper.energy < best_energy:
            best_energy = flipper.energy
            best_bits = flipper.x.copy()
        temperature = sched.t_initial
        for _ in range(sched.sweeps):
            for i in rng.permutation(n):
                delta = float(flipper.delta(i))
                evaluations += 1
                if delta <= 0.0:
                    accept = True
                elif temperature <= 0.0:
                    accept = False
                else:
                    exponent = -delta / temperature
                    prob = math.exp(exponent) if exponent > -700.0 else 0.0
                    accept = rng.random() < prob
                if accept:
                    flipper.flip(i)
                    if trace is not None:
                        trace.append(flipper.energy)
                    if flipper.energy < best_energy:
                        best_energy = flipper.energy
                        best_bits = flipper.x.copy()
            if debug:
                full = flipper.full_energy()
                drift = abs(flipper.energy - full)
                if drift > 1e-6 * max(1.0, abs(full)):
                    raise AssertionError(
                        f"incremental energy drifted by {drift} from full evaluation"
                    )
            temperature *= sched.alpha
    bits = tuple(int(b) for b in best_bits)
    return SolveResult(
        best_bits=bits,
        best_energy=problem_energy(problem, bits),
        wall_time=time.perf_counter() - t0,
        evaluations=evaluations,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# QAOA statevector simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QaoaConfig:
    """Depth, classical-search effort and sampling budget of the simulator."""

    layers: int = 1
    grid_resolution: int = 32
    refinement_iterations: int = 200
    samples: int = 4096
    max_qubits: int = STATEVECTOR_CAP

    def __post_init__(self):
        if self.layers < 1:
            raise ConfigurationError("layers must be >= 1")
        if self.grid_resolution < 2:
            raise ConfigurationError("grid_resolution must be >= 2")
        if self.refinement_iterations < 0:
            raise ConfigurationError("refinement_iterations must be >= 0")
        if self.samples < 1:
            raise ConfigurationError("samples must be >= 1")
        if self.max_qubits < 1:
            raise ConfigurationError("max_qubits must be >= 1")


def _num_qubits(cost: np.ndarray) -> int:
    size = len(cost)
    n = size.bit_length() - 1
    if size != 1 << n:
        raise ValidationError(f"cost table length {size} is not a power of two")
    return n


def qaoa_statevector(
    cost: np.ndarray,
    gammas: Sequence[float],
    betas: Sequence[float],
    max_qubits: int = STATEVECTOR_CAP,
) -> np.ndarray:
    """Final state of p alternating phase/mixer layers on |+...+>.

    Layer k applies the diagonal phase ``exp(-i * gamma_k * cost)`` followed by
    an X rotation by ``2 * beta_k`` on every qubit.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n = _num_qubits(cost)
    if n > max_qubits:
        raise CapExceededError(f"statevector refused: {n} qubits exceed cap {max_qubits}")
    if len(gammas) != len(betas):
        raise ValidationError(f"need equally many gammas and betas, got "
                              f"{len(gammas)} vs {len(betas)}")
    amp = np.full(1 << n, 1.0 / math.sqrt(1 << n), dtype=np.complex128)
    for gamma, beta in zip(gammas, betas):
        amp *= np.exp(-1j * gamma * cost)
        c = math.cos(beta)
        s = -1j * math.sin(beta)
        for q in range(n):
            view = amp.reshape(1 << (n - q - 1), 2, 1 << q)
            a0 = view[:, 0, :].copy()
            a1 = view[:, 1, :]
            view[:, 0, :] = c * a0 + s * a1
            view[:, 1, :] = s * a0 + c * a1
    return amp


def qaoa_expectation(
    cost: np.ndarray,
    gammas: Sequence[float],
    betas: Sequence[float],
    max_qubits: int = STATEVECTOR_CAP,
) -> float:
    """Energy expectation of the QAOA state; checks statevector norm drift."""
    amp = qaoa_statevector(cost, gammas, betas, max_qubits=max_qubits)
    probs = np.abs(amp) ** 2
    norm = float(probs.sum())
    if abs(norm - 1.0) > 1e-10:
        raise AssertionError(f"statevector norm drifted to {norm}")
    return float(probs @ np.asarray(cost, dtype=np.float64))


def _bit_reverse(z: int, n: int) -> int:
    out = 0
    for i in range(n):
        out = (out << 1) | ((z >> i) & 1)
    return out


def qaoa_optimize(
    problem: Problem, cfg: QaoaConfig | None = None, seed: int = 0
) -> SolveResult:
    """Full QAOA run: angle search, statevector, measurement sampling.

    For one layer the angle search is a seeded coarse grid over
    ``[0, pi)^2`` refined by Nelder-Mead; deeper circuits start from the best
    of ``grid_resolution`` random angle vectors.  The reported best bitstring
    is the lowest-energy sampled measurement (ties broken lexicographically);
    the exact final distribution and the probability mass on true optima are
    recorded alongside.
    """
    cfg = cfg or QaoaConfig()
    n = problem.n
    if n > cfg.max_qubits:
        raise CapExceededError(
            f"qaoa refused: {n} variables exceed max_qubits {cfg.max_qubits}"
        )
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.PCG64(seed))
    cost = full_energies(problem, cap=cfg.max_qubits)
    evaluations = 0

    def objective(params: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        p = len(params) // 2
        return qaoa_expectation(cost, params[:p], params[p:], max_qubits=cfg.max_qubits)

    p = cfg.layers
    if p == 1:
        axis = np.linspace(0.0, math.pi, cfg.grid_resolution, endpoint=False)
        best_val = math.inf
        best_params = np.zeros(2)
        for gamma in axis:
            for beta in axis:
                val = objective(np.array([gamma, beta]))
                if val < best_val:
                    best_val = val
                    best_params = np.array([gamma, beta])
    else:
        starts = rng.uniform(0.0, math.pi, size=(cfg.grid_resolution, 2 * p))
        values = np.array([objective(s) for s in starts])
        best_params = starts[int(np.argmin(values))]

    if cfg.refinement_iterations > 0:
        result = minimize(
            objective,
            best_params,
            method="Nelder-Mead",
            options={
                "maxiter": cfg.refinement_iterations,
                "xatol": 1e-10,
                "fatol": 1e-12,
            },
        )
        if result.fun <= objective(best_params):
            best_params = np.asarray(result.x)

    gammas = tuple(float(g) for g in best_params[:p])
    betas = tuple(float(b) for b in best_params[p:])
    amp = qaoa_statevector(cost, gammas, betas, max_qubits=cfg.max_qubits)
    probs = np.abs(amp) ** 2

    sampled = rng.choice(1 << n, size=cfg.samples, p=probs / probs.sum())
    candidates = np.unique(sampled)
    cand_energies = cost[candidates]
    lowest = cand_energies.min()
    tied = candidates[cand_energies == lowest]
    best_index = int(min(tied, key=lambda z: _bit_reverse(int(z), n)))
    bits = index_to_bits(best_index, n)

    optima = np.flatnonzero(cost == cost.min())
    success = float(probs[optima].sum())
    return SolveResult(
        best_bits=bits,
        best_energy=problem_energy(problem, bits),
        wall_time=time.perf_counter() - t0,
        evaluations=evaluations,
        seed=seed,
        distribution=probs,
        angles=(gammas, betas),
        success_probability=success,
    )


def random_guess(problem: Problem, samples: int = 1, seed: int = 0) -> SolveResult:
    """Uniform-random baseline solver: best of ``samples`` uniform bitstrings."""
    if samples < 1:
        raise ConfigurationError("samples must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    t0 = time.perf_counter()
    best_bits: tuple[int, ...] | None = None
    best_energy = math.inf
    for _ in range(samples):
        bits = tuple(int(b) for b in rng.integers(0, 2, size=problem.n))
        energy = problem_energy(problem, bits)
        if energy < best_energy:
            best_energy = energy
            best_bits = bits
    assert best_bits is not None
    return SolveResult(
        best_bits=best_bits,
        best_energy=best_energy,
        wall_time=time.perf_counter() - t0,
        evaluations=samples,
        seed=seed,
    )
