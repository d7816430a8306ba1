"""Mappings between native problems and binary-polynomial formulations.

Seam routing becomes a time-indexed QUBO with 2*N^2 variables x[s,d,t]
(seam s traversed in direction d at slot t): one-hot penalties keep exactly
one selection per slot and one visit per seam, quadratic terms between
consecutive slots carry the travel gaps, and the constant part collects the
seam lengths, so every feasible configuration's energy equals the scaled tour
cost exactly.

Vehicle configuration becomes a PUBO whose value counts unsatisfied clauses;
higher-order clause terms can be reduced to a QUBO by ancilla substitution
when a quadratic solver is required.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, ValidationError
from .model import (
    Assignment,
    CoeffMap,
    Pubo,
    Qubo,
    SatInstance,
    SeamInstance,
    Tour,
    count_unsat,
)


@dataclass(frozen=True)
class PenaltyWeights:
    """Weights of the encoded objectives.

    ``constraint_penalty`` (A) prices one-hot violations in the seam QUBO;
    ``None`` means "derive from the instance" so that any single violation
    costs more than any feasible tour.  ``objective_scale`` (B) multiplies
    travel cost.  ``clause_weight`` prices an unsatisfied clause and
    ``coverage_weight`` rewards building in a not-yet-covered component in the
    vehicle-configuration objective.
    """

    constraint_penalty: float | None = None
    objective_scale: float = 1.0
    clause_weight: float = 1.0
    coverage_weight: float = 1.0

    def __post_init__(self):
        if self.constraint_penalty is not None and self.constraint_penalty <= 0:
            raise ConfigurationError("constraint_penalty must be positive")
        if self.objective_scale <= 0:
            raise ConfigurationError("objective_scale must be positive")
        if self.clause_weight <= 0:
            raise ConfigurationError("clause_weight must be positive")
        if self.coverage_weight < 0:
            raise ConfigurationError("coverage_weight must be >= 0")


@dataclass(frozen=True)
class SeamVarMap:
    """Bijection (seam s, direction d, slot t) <-> flat index ``(2s+d)*N + t``."""

    num_seams: int

    @property
    def num_variables(self) -> int:
        return 2 * self.num_seams**2

    def index_of(self, s: int, d: int, t: int) -> int:
        n = self.num_seams
        if not (0 <= s < n and d in (0, 1) and 0 <= t < n):
            raise ValidationError(f"(s={s}, d={d}, t={t}) out of range for N={n}")
        return (2 * s + d) * n + t

    def triple_of(self, index: int) -> tuple[int, int, int]:
        n = self.num_seams
        if not 0 <= index < self.num_variables:
            raise ValidationError(f"variable index {index} out of range for N={n}")
        k, t = divmod(index, n)
        s, d = divmod(k, 2)
        return s, d, t

    def to_json_dict(self) -> dict:
        return {
            "type": "seam_time_onehot",
            "num_seams": self.num_seams,
            "num_variables": self.num_variables,
            "vars": [list(self.triple_of(i)) for i in range(self.num_variables)],
        }


def _gap_matrix(inst: SeamInstance) -> np.ndarray:
    """gap[k, k'] = distance from exit of option k to entry of option k'.

    Option index k = 2s + d.
    """
    n = inst.n
    exits = np.array([inst.exit_point(k // 2, k % 2) for k in range(2 * n)])
    entries = np.array([inst.entry_point(k // 2, k % 2) for k in range(2 * n)])
    diff = exits[:, None, :] - entries[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def default_constraint_penalty(inst: SeamInstance, objective_scale: float = 1.0) -> float:
    """A = B*(N*c_max + L + 1): one violation outweighs any feasible tour."""
    gaps = _gap_matrix(inst)
    c_max = float(gaps.max())
    total_len = inst.total_seam_length()
    return objective_scale * (inst.n * c_max + total_len + 1.0)


def encode_seam_qubo(
    inst: SeamInstance, weights: PenaltyWeights | None = None
) -> tuple[Qubo, SeamVarMap]:
    """Time-indexed one-hot QUBO over 2*N^2 variables.

    For every feasible (both one-hot families satisfied) bit vector, the QUBO
    energy equals ``objective_scale * tour_cost`` of the decoded tour exactly;
    with the derived default penalty every infeasible vector costs strictly
    more than any feasible one.
    """
    weights = weights or PenaltyWeights()
    n = inst.n
    var_map = SeamVarMap(num_seams=n)
    a_pen = weights.constraint_penalty
    if a_pen is None:
        a_pen = default_constraint_penalty(inst, weights.objective_scale)
    b = weights.objective_scale
    gaps = _gap_matrix(inst)
    num_vars = var_map.num_variables

    # The term groups below are pairwise disjoint (distinguished by whether the
    # two variables share a seam and/or a slot), so the arrays are already the
    # canonical merged form and no sort/merge pass is needed.

    # Linear part of both one-hot families: each variable sits in exactly one
    # slot constraint and one seam constraint, contributing -A twice.
    all_vars = np.arange(num_vars, dtype=np.int64)
    lin_c = np.full(num_vars, -2.0 * a_pen)
    if inst.closed_tour and n == 1:
        # Single-seam cycle: the return hop depends only on the chosen direction.
        lin_c += b * np.diagonal(gaps)

    # Slot t holds variables {k*N + t : k}; seam s holds the contiguous block
    # [2sN, 2sN + 2N).  Cross terms of (1 - sum x)^2 add +2A per pair; a pair
    # sharing both its seam and its slot belongs to both families (+4A).
    k1, k2 = np.triu_indices(2 * n, k=1)
    slots = np.arange(n, dtype=np.int64)
    cross_seam = (k1 // 2) != (k2 // 2)
    c1, c2 = k1[cross_seam], k2[cross_seam]
    slot_i = (c1[:, None] * n + slots[None, :]).ravel()
    slot_j = (c2[:, None] * n + slots[None, :]).ravel()
    m1, m2 = np.triu_indices(2 * n, k=1)
    cross_slot = (m1 % n) != (m2 % n)
    m1, m2 = m1[cross_slot], m2[cross_slot]
    bases = 2 * n * np.arange(n, dtype=np.int64)
    seam_i = (m1[:, None] + bases[None, :]).ravel()
    seam_j = (m2[:, None] + bases[None, :]).ravel()
    both_i = (bases[:, None] + slots[None, :]).ravel()
    both_j = both_i + n
    pair_c = np.concatenate(
        [
            np.full(slot_i.size + seam_i.size, 2.0 * a_pen),
            np.full(both_i.size, 4.0 * a_pen),
        ]
    )

    # Travel gaps between consecutive slots (and the closing hop when the tour
    # is a cycle).  Same-seam transitions are skipped: they are infeasible and
    # already penalized.  A two-seam cycle walks the same slot pair both ways,
    # which folds into one term with the round-trip gap.
    k_from, k_to = np.meshgrid(np.arange(2 * n), np.arange(2 * n), indexing="ij")
    cross = (k_from // 2) != (k_to // 2)
    k_from, k_to = k_from[cross], k_to[cross]
    gap_c = b * gaps[k_from, k_to]
    t_from = np.arange(n - 1, dtype=np.int64)
    t_to = t_from + 1
    if inst.closed_tour and n == 2:
        gap_c = gap_c + b * gaps[k_to, k_from]
    elif inst.closed_tour and n > 2:
        t_from = np.append(t_from, n - 1)
        t_to = np.append(t_to, 0)
    raw_i = (k_from[:, None] * n + t_from[None, :]).ravel()
    raw_j = (k_to[:, None] * n + t_to[None, :]).ravel()
    trans_i = np.minimum(raw_i, raw_j)
    trans_j = np.maximum(raw_i, raw_j)
    trans_c = np.broadcast_to(gap_c[:, None], (gap_c.size, t_from.size)).ravel()

    lo = np.concatenate([all_vars, slot_i, seam_i, both_i, trans_i])
    hi = np.concatenate([all_vars, slot_j, seam_j, both_j, trans_j])
    coeff = np.concatenate([lin_c, pair_c, trans_c])
    keep = coeff != 0.0
    offset = 2.0 * a_pen * n + b * inst.total_seam_length()
    qubo = Qubo(
        n=num_vars, coeffs=CoeffMap(lo[keep], hi[keep], coeff[keep]), offset=offset
    )
    return qubo, var_map


@dataclass(frozen=True)
class ConstraintViolation:
    """One broken one-hot constraint: a slot or a seam selected ``count`` times."""

    kind: str  # "time_slot" | "seam"
    index: int
    count: int

    def describe(self) -> str:
        noun = "time slot" if self.kind == "time_slot" else "seam"
        return f"{noun} {self.index} selected {self.count} times (expected 1)"


@dataclass(frozen=True)
class SeamInfeasibility:
    """Decoder outcome for a bit vector that is not a valid tour."""

    violations: tuple[ConstraintViolation, ...]

    def describe(self) -> str:
        return "; ".join(v.describe() for v in self.violations)


def decode_seam_solution(
    bits: Sequence[int], var_map: SeamVarMap
) -> Tour | SeamInfeasibility:
    """Recover the tour, or report every violated one-hot constraint."""
    n = var_map.num_seams
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.shape[0] != var_map.num_variables:
        raise ValidationError(
            f"expected {var_map.num_variables} bits for N={n}, got shape {arr.shape}"
        )
    grid = arr.reshape(2 * n, n)  # [k, t] with k = 2s + d
    slot_counts = grid.sum(axis=0)
    seam_counts = grid.reshape(n, 2, n).sum(axis=(1, 2))
    violations = [
        ConstraintViolation("time_slot", int(t), int(c))
        for t, c in enumerate(slot_counts)
        if c != 1
    ]
    violations += [
        ConstraintViolation("seam", int(s), int(c)) for s, c in enumerate(seam_counts) if c != 1
    ]
    if violations:
        return SeamInfeasibility(tuple(violations))
    steps = []
    for t in range(n):
        k = int(np.flatnonzero(grid[:, t])[0])
        steps.append((k // 2, k % 2))
    return Tour(tuple(steps))


# ---------------------------------------------------------------------------
# SAT -> PUBO
# ---------------------------------------------------------------------------


def _clause_penalty(clause) -> dict[frozenset, float]:
    """Multilinear expansion of the product that is 1 iff the clause fails.

    A positive literal contributes the factor (1 - x), a negated one x.
    """
    poly: dict[frozenset, float] = {frozenset(): 1.0}
    for comp, negated in clause:
        new: dict[frozenset, float] = {}
        for vs, c in poly.items():
            if negated:
                key = vs | {comp}
                new[key] = new.get(key, 0.0) + c
            else:
                new[vs] = new.get(vs, 0.0) + c
                key = vs | {comp}
                new[key] = new.get(key, 0.0) - c
        poly = new
    return poly


def encode_sat_pubo(inst: SatInstance, weights: PenaltyWeights | None = None) -> Pubo:
    """PUBO whose value is ``clause_weight * count_unsat`` for every assignment.

    The polynomial degree equals the largest clause size.
    """
    weights = weights or PenaltyWeights()
    w = weights.clause_weight
    acc: dict[frozenset, float] = {}
    for clause in inst.clauses:
        for vs, c in _clause_penalty(clause).items():
            acc[vs] = acc.get(vs, 0.0) + w * c
    offset = acc.pop(frozenset(), 0.0)
    return Pubo.from_terms(
        inst.num_components, ((c, tuple(sorted(vs))) for vs, c in acc.items()), offset=offset
    )


# ---------------------------------------------------------------------------
# PUBO -> QUBO quadratization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AncillaRecord:
    """Ancilla ``z`` standing in for the product of a variable pair."""

    ancilla: int
    pair: tuple[int, int]


@dataclass(frozen=True)
class QuadratizationMap:
    """Bookkeeping of a PUBO -> QUBO reduction.

    Ancilla indices are contiguous starting at ``original_n``; ``penalty`` is
    the weight of each product-consistency penalty.
    """

    original_n: int
    ancillae: tuple[AncillaRecord, ...]
    penalty: float

    @property
    def total_n(self) -> int:
        return self.original_n + len(self.ancillae)

    def to_json_dict(self) -> dict:
        return {
            "type": "quadratized",
            "original_n": self.original_n,
            "penalty": self.penalty,
            "ancillae": [[r.ancilla, r.pair[0], r.pair[1]] for r in self.ancillae],
        }


def quadratize(p: Pubo) -> tuple[Qubo, QuadratizationMap]:
    """Reduce a PUBO to a QUBO by substituting products of variable pairs.

    Repeatedly picks the pair occurring most often in terms of degree >= 3
    (ties broken by lowest pair), replaces it by a fresh ancilla z and adds the
    consistency penalty ``P*(xy - 2xz - 2yz + 3z)``, which vanishes iff
    ``z == x*y`` and costs at least P otherwise.  With
    ``P = 1 + sum |coefficients|`` of the source, minimizing the QUBO over the
    ancillae reproduces the PUBO value on every original assignment.
    """
    terms: dict[frozenset, float] = {frozenset(vs): c for c, vs in p.terms}
    penalty = 1.0 + p.sum_abs_coeffs()
    next_ancilla = p.n
    records: list[AncillaRecord] = []

    def add(vs: frozenset, c: float):
        terms[vs] = terms.get(vs, 0.0) + c
        if terms[vs] == 0.0:
            del terms[vs]

    while True:
        counts: Counter = Counter()
        for vs in terms:
            if len(vs) >= 3:
                counts.update(itertools.combinations(sorted(vs), 2))
        if not counts:
            break
        pair = min(counts, key=lambda ij: (-counts[ij], ij))
        i, j = pair
        z = next_ancilla
        next_ancilla += 1
        records.append(AncillaRecord(ancilla=z, pair=pair))
        replaced = [vs for vs in terms if len(vs) >= 3 and i in vs and j in vs]
        moved = [(vs, terms.pop(vs)) for vs in replaced]
        for vs, c in moved:
            add((vs - {i, j}) | {z}, c)
        add(frozenset((i, j)), penalty)
        add(frozenset((i, z)), -2.0 * penalty)
        add(frozenset((j, z)), -2.0 * penalty)
        add(frozenset((z,)), 3.0 * penalty)

    triples = []
    for vs, c in terms.items():
        if len(vs) == 1:
            (i,) = vs
            triples.append((i, i, c))
        else:
            i, j = sorted(vs)
            triples.append((i, j, c))
    qubo = Qubo.from_terms(next_ancilla, triples, offset=p.offset)
    qmap = QuadratizationMap(original_n=p.n, ancillae=tuple(records), penalty=penalty)
    return qubo, qmap


# ---------------------------------------------------------------------------
# Vehicle-configuration covering objective
# ---------------------------------------------------------------------------


def vehicle_config_objective(
    inst: SatInstance, covered: Iterable[int], weights: PenaltyWeights | None = None
) -> Pubo:
    """Objective for one test vehicle: respect dependencies, reward new coverage.

    Hard clause penalties (``clause_weight`` each) minus ``coverage_weight``
    for every not-yet-covered component that gets built in.  Requires
    ``clause_weight > coverage_weight * V`` so no coverage reward can ever pay
    for breaking a clause.
    """
    weights = weights or default_cover_weights(inst)
    v = inst.num_components
    covered = set(int(i) for i in covered)
    if not covered <= set(range(v)):
        raise ValidationError(f"covered set {sorted(covered)} not within 0..{v - 1}")
    if not weights.clause_weight > weights.coverage_weight * v:
        raise ConfigurationError(
            f"need clause_weight > coverage_weight * V "
            f"({weights.clause_weight} <= {weights.coverage_weight} * {v})"
        )
    base = encode_sat_pubo(inst, weights)
    reward = [(-weights.coverage_weight, (i,)) for i in range(v) if i not in covered]
    return Pubo.from_terms(v, list(base.terms) + reward, offset=base.offset)


def default_cover_weights(inst: SatInstance) -> PenaltyWeights:
    return PenaltyWeights(clause_weight=float(inst.num_components + 1), coverage_weight=1.0)


@dataclass(frozen=True)
class VehicleCoverResult:
    """Outcome of the greedy multi-vehicle covering loop."""

    vehicles: tuple[Assignment, ...]
    covered: tuple[int, ...]
    uncovered: tuple[int, ...]


def greedy_vehicle_cover(
    inst: SatInstance,
    solve_pubo: Callable[[Pubo], Sequence[int]],
    weights: PenaltyWeights | None = None,
    max_vehicles: int | None = None,
) -> VehicleCoverResult:
    """Cover components with as few dependency-respecting vehicles as the
    greedy loop manages: each round solves one single-vehicle objective and
    marks the newly built-in components as covered.

    Stops when everything is covered, a round adds no new coverage (the
    remaining components admit no feasible vehicle containing them), a round
    produces an infeasible vehicle, or ``max_vehicles`` is reached.
    """
    weights = weights or default_cover_weights(inst)
    v = inst.num_components
    limit = v if max_vehicles is None else max_vehicles
    covered: set[int] = set()
    vehicles: list[Assignment] = []
    while len(covered) < v and len(vehicles) < limit:
        objective = vehicle_config_objective(inst, covered, weights)
        bits = tuple(int(b) for b in solve_pubo(objective))
        assignment = Assignment(bits)
        if count_unsat(inst, assignment) != 0:
            break
        newly = {i for i in range(v) if bits[i] == 1 and i not in covered}
        if not newly:
            break
        covered |= newly
        vehicles.append(assignment)
    return VehicleCoverResult(
        vehicles=tuple(vehicles),
        covered=tuple(sorted(covered)),
        uncovered=tuple(i for i in range(v) if i not in covered),
    )
