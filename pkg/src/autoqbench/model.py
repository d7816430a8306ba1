"""Domain types for the two reference problems and their mathematical formulations.

Two native problem families live here: weighted seam graphs traversed by a
sealing robot (``SeamInstance`` / ``Tour``) and boolean component-dependency
systems (``SatInstance`` / ``Assignment``).  The three solver-facing
formulations are ``Qubo``, ``Pubo`` and ``IsingModel``, each with an exact
energy evaluator.

All types are immutable after construction; evaluators are pure functions.

Bit convention used throughout the package: a candidate solution is a vector
``x`` of 0/1 ints indexed by variable, and the basis-state integer of ``x`` is
``sum(x[i] << i)`` (variable i sits on bit i).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

Vec3 = tuple[float, float, float]


def _as_vec3(value, what: str) -> Vec3:
    try:
        x, y, z = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what} must be a 3-vector of numbers, got {value!r}") from exc
    vec = (x, y, z)
    if not all(math.isfinite(v) for v in vec):
        raise ValidationError(f"{what} must be finite, got {vec}")
    return vec


def _distance(p: Vec3, q: Vec3) -> float:
    return math.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + (p[2] - q[2]) ** 2)


def bits_to_index(bits: Sequence[int]) -> int:
    """Basis-state integer of a bit vector (variable i on bit i)."""
    z = 0
    for i, b in enumerate(bits):
        if b:
            z |= 1 << i
    return z


def index_to_bits(z: int, n: int) -> tuple[int, ...]:
    """Inverse of :func:`bits_to_index`."""
    return tuple((z >> i) & 1 for i in range(n))


def check_bits(bits: Sequence[int], n: int, what: str = "bits") -> np.ndarray:
    """Validate a 0/1 vector of length ``n`` and return it as an int8 array."""
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise ValidationError(f"{what} must have length {n}, got shape {arr.shape}")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValidationError(f"{what} must contain only 0/1 values")
    return arr.astype(np.int8)


# ---------------------------------------------------------------------------
# Seam routing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeamInstance:
    """A set of seams in 3-space (millimeters) that a robot must traverse.

    Each seam is a pair of endpoints; traversing it in direction 0 means
    entering at ``endpoint_a`` and exiting at ``endpoint_b``, direction 1 the
    reverse.  ``closed_tour`` asks the robot to return to its starting point.
    """

    seams: tuple[tuple[Vec3, Vec3], ...]
    closed_tour: bool = False

    def __post_init__(self):
        if len(self.seams) < 1:
            raise ValidationError("a seam instance needs at least one seam")
        canonical = tuple(
            (_as_vec3(a, f"seam {i} endpoint_a"), _as_vec3(b, f"seam {i} endpoint_b"))
            for i, (a, b) in enumerate(self.seams)
        )
        object.__setattr__(self, "seams", canonical)

    @property
    def n(self) -> int:
        return len(self.seams)

    def seam_length(self, s: int) -> float:
        a, b = self.seams[s]
        return _distance(a, b)

    def total_seam_length(self) -> float:
        return sum(self.seam_length(s) for s in range(self.n))

    def entry_point(self, s: int, direction: int) -> Vec3:
        a, b = self.seams[s]
        return a if direction == 0 else b

    def exit_point(self, s: int, direction: int) -> Vec3:
        a, b = self.seams[s]
        return b if direction == 0 else a

    def to_json_dict(self) -> dict:
        return {
            "seams": [[list(a), list(b)] for a, b in self.seams],
            "closed_tour": self.closed_tour,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "SeamInstance":
        _require_keys(data, required={"seams"}, optional={"closed_tour"}, what="SeamInstance")
        seams = tuple((tuple(pair[0]), tuple(pair[1])) for pair in data["seams"])
        return cls(seams=seams, closed_tour=bool(data.get("closed_tour", False)))


@dataclass(frozen=True)
class Tour:
    """An ordered traversal: one ``(seam_index, direction)`` step per seam."""

    steps: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "steps", tuple((int(s), int(d)) for s, d in self.steps)
        )

    def reversed(self) -> "Tour":
        """Same cycle walked backwards (each seam flips direction)."""
        return Tour(tuple((s, 1 - d) for s, d in reversed(self.steps)))


def validate_tour(instance: SeamInstance, tour: Tour) -> None:
    n = instance.n
    if len(tour.steps) != n:
        raise ValidationError(f"tour has {len(tour.steps)} steps, instance has {n} seams")
    seen = [s for s, _ in tour.steps]
    if sorted(seen) != list(range(n)):
        raise ValidationError(f"tour seam indices {seen} are not a permutation of 0..{n - 1}")
    for s, d in tour.steps:
        if d not in (0, 1):
            raise ValidationError(f"tour direction must be 0 or 1, got {d} for seam {s}")


def tour_cost(instance: SeamInstance, tour: Tour) -> float:
    """Total traversed length in millimeters: seams plus inter-seam gaps.

    When ``closed_tour`` is set the gap from the last exit back to the first
    entry is added.
    """
    validate_tour(instance, tour)
    total = sum(instance.seam_length(s) for s, _ in tour.steps)
    for (s, d), (s2, d2) in zip(tour.steps, tour.steps[1:]):
        total += _distance(instance.exit_point(s, d), instance.entry_point(s2, d2))
    if instance.closed_tour:
        s_last, d_last = tour.steps[-1]
        s_first, d_first = tour.steps[0]
        total += _distance(
            instance.exit_point(s_last, d_last), instance.entry_point(s_first, d_first)
        )
    return total


# ---------------------------------------------------------------------------
# Vehicle configuration (SAT)
# ---------------------------------------------------------------------------

Literal = tuple[int, int]  # (component index, negated flag)


@dataclass(frozen=True)
class SatInstance:
    """Boolean dependency system over ``num_components`` build-in decisions.

    Each clause is a disjunction of literals ``(component, negated)``; an
    assignment sets component i to 1 (built in) or 0 (left out).
    """

    num_components: int
    clauses: tuple[tuple[Literal, ...], ...]

    def __post_init__(self):
        v = int(self.num_components)
        if v < 1:
            raise ValidationError("num_components must be >= 1")
        object.__setattr__(self, "num_components", v)
        canonical = []
        for ci, clause in enumerate(self.clauses):
            lits = tuple((int(i), int(neg)) for i, neg in clause)
            if len(lits) < 1:
                raise ValidationError(f"clause {ci} is empty")
            comps = [i for i, _ in lits]
            if len(set(comps)) != len(comps):
                raise ValidationError(f"clause {ci} mentions a component twice: {comps}")
            for i, neg in lits:
                if not 0 <= i < v:
                    raise ValidationError(f"clause {ci} references component {i} >= {v}")
                if neg not in (0, 1):
                    raise ValidationError(f"clause {ci} has negation flag {neg}, expected 0/1")
            canonical.append(lits)
        object.__setattr__(self, "clauses", tuple(canonical))

    def to_json_dict(self) -> dict:
        return {
            "num_components": self.num_components,
            "clauses": [[[i, neg] for i, neg in clause] for clause in self.clauses],
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "SatInstance":
        _require_keys(
            data, required={"num_components", "clauses"}, optional=set(), what="SatInstance"
        )
        clauses = tuple(tuple((lit[0], lit[1]) for lit in clause) for clause in data["clauses"])
        return cls(num_components=data["num_components"], clauses=clauses)


@dataclass(frozen=True)
class Assignment:
    """A 0/1 choice per component."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValidationError("assignment bits must be 0/1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)


def count_unsat(instance: SatInstance, assignment: Assignment | Sequence[int]) -> int:
    """Number of clauses with no satisfied literal under ``assignment``."""
    bits = assignment.bits if isinstance(assignment, Assignment) else tuple(assignment)
    if len(bits) != instance.num_components:
        raise ValidationError(
            f"assignment length {len(bits)} != num_components {instance.num_components}"
        )
    unsat = 0
    for clause in instance.clauses:
        if not any(bits[i] != neg for i, neg in clause):
            unsat += 1
    return unsat


# ---------------------------------------------------------------------------
# QUBO / PUBO / Ising formulations
# ---------------------------------------------------------------------------


class CoeffMap(Mapping):
    """Sparse upper-triangular coefficient map backed by parallel arrays.

    Behaves like a read-only ``{(i, j): coeff}`` dict but defers building the
    Python dict until key access is actually needed, which keeps encoders of
    large instances (millions of terms) at numpy speed.  Arrays are assumed
    canonical: unique keys with i <= j, no zero coefficients.  Iteration order
    follows the arrays (like a dict follows insertion order).
    """

    __slots__ = ("_lo", "_hi", "_c", "_cache")

    def __init__(self, lo: np.ndarray, hi: np.ndarray, c: np.ndarray):
        self._lo = lo
        self._hi = hi
        self._c = c
        self._cache: dict | None = None

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self._lo, self._hi, self._c

    def _dict(self) -> dict:
        if self._cache is None:
            self._cache = dict(
                zip(zip(self._lo.tolist(), self._hi.tolist()), self._c.tolist())
            )
        return self._cache

    def __getitem__(self, key):
        return self._dict()[key]

    def __iter__(self):
        return iter(self._dict())

    def __len__(self) -> int:
        return len(self._c)

    def __eq__(self, other):
        if isinstance(other, CoeffMap):
            if (
                np.array_equal(self._lo, other._lo)
                and np.array_equal(self._hi, other._hi)
                and np.array_equal(self._c, other._c)
            ):
                return True
            return self._dict() == other._dict()
        if isinstance(other, Mapping):
            return self._dict() == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        return f"CoeffMap({len(self._c)} terms)"


def coeff_arrays(coeffs: Mapping) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(i, j, c) arrays of a coefficient mapping, zero-copy for CoeffMap."""
    if isinstance(coeffs, CoeffMap):
        return coeffs.arrays()
    if not coeffs:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, np.empty(0)
    keys = np.array(list(coeffs.keys()), dtype=np.int64)
    return keys[:, 0], keys[:, 1], np.fromiter(coeffs.values(), dtype=np.float64)


@dataclass(frozen=True)
class Qubo:
    """Quadratic binary polynomial ``offset + sum_{i<=j} Q[i,j] x_i x_j``.

    ``coeffs`` is sparse and canonical: keys are ``(i, j)`` with ``i <= j``,
    duplicates merged, exact zeros dropped.
    """

    n: int
    coeffs: Mapping[tuple[int, int], float]
    offset: float = 0.0

    def __post_init__(self):
        n = int(self.n)
        if n < 0:
            raise ValidationError("variable count must be >= 0")
        if not math.isfinite(self.offset):
            raise ValidationError("offset must be finite")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "offset", float(self.offset))
        if isinstance(self.coeffs, CoeffMap):
            lo, hi, c = self.coeffs.arrays()
            if len(lo) and not (
                (lo >= 0).all() and (lo <= hi).all() and (hi < n).all()
            ):
                raise ValidationError(f"coefficient index out of range for n={n}")
            if len(c) and (not np.isfinite(c).all() or (c == 0.0).any()):
                raise ValidationError("coefficients must be finite and nonzero")
            return
        for (i, j), c in self.coeffs.items():
            if not (0 <= i <= j < n):
                raise ValidationError(f"coefficient index ({i},{j}) out of range for n={n}")
            if c == 0.0:
                raise ValidationError(f"explicit zero coefficient at ({i},{j})")
            if not math.isfinite(c):
                raise ValidationError(f"coefficient at ({i},{j}) must be finite")

    @classmethod
    def from_terms(
        cls, n: int, terms: Iterable[tuple[int, int, float]], offset: float = 0.0
    ) -> "Qubo":
        """Build from ``(i, j, coeff)`` triples, merging duplicates either way round."""
        acc: dict[tuple[int, int], float] = {}
        for i, j, c in terms:
            key = (i, j) if i <= j else (j, i)
            acc[key] = acc.get(key, 0.0) + float(c)
        coeffs = {k: v for k, v in sorted(acc.items()) if v != 0.0}
        return cls(n=n, coeffs=coeffs, offset=offset)

    @classmethod
    def from_arrays(
        cls, n: int, i: np.ndarray, j: np.ndarray, c: np.ndarray, offset: float = 0.0
    ) -> "Qubo":
        """Vectorized variant of :meth:`from_terms` for large encoders."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        c = np.asarray(c, dtype=np.float64)
        if len(c) == 0:
            empty = np.empty(0, dtype=np.int64)
            return cls(n=n, coeffs=CoeffMap(empty, empty, np.empty(0)), offset=offset)
        keys = np.minimum(i, j) * n + np.maximum(i, j)
        order = np.argsort(keys, kind="stable")
        keys, c = keys[order], c[order]
        boundary = np.empty(len(keys), dtype=bool)
        boundary[0] = True
        np.not_equal(keys[1:], keys[:-1], out=boundary[1:])
        starts = np.flatnonzero(boundary)
        sums = np.add.reduceat(c, starts)
        uniq = keys[starts]
        keep = sums != 0.0
        return cls(
            n=n,
            coeffs=CoeffMap((uniq // n)[keep], (uniq % n)[keep], sums[keep]),
            offset=offset,
        )

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "offset": self.offset,
            "terms": [[i, j, c] for (i, j), c in sorted(self.coeffs.items())],
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Qubo":
        _require_keys(data, required={"n", "offset", "terms"}, optional=set(), what="Qubo")
        return cls.from_terms(
            data["n"], ((t[0], t[1], t[2]) for t in data["terms"]), offset=data["offset"]
        )

    def max_abs_coeff(self) -> float:
        _, _, c = coeff_arrays(self.coeffs)
        return float(np.abs(c).max()) if len(c) else 0.0


def qubo_energy(q: Qubo, bits: Sequence[int]) -> float:
    """Exact polynomial value, offset included."""
    x = check_bits(bits, q.n)
    total = q.offset
    for (i, j), c in q.coeffs.items():
        if x[i] and x[j]:
            total += c
    return float(total)


@dataclass(frozen=True)
class Pubo:
    """Polynomial binary form ``offset + sum_t c_t * prod_{i in vars_t} x_i``.

    Terms are canonical: variable sets sorted and duplicate-free, at most one
    term per distinct set, no empty sets (constants live in ``offset``).
    """

    n: int
    terms: tuple[tuple[float, tuple[int, ...]], ...]
    offset: float = 0.0

    def __post_init__(self):
        n = int(self.n)
        if n < 0:
            raise ValidationError("variable count must be >= 0")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "offset", float(self.offset))
        seen = set()
        for c, vs in self.terms:
            if len(vs) == 0:
                raise ValidationError("constant terms belong in offset, not in terms")
            if list(vs) != sorted(set(vs)):
                raise ValidationError(f"term variables {vs} must be sorted and duplicate-free")
            if vs in seen:
                raise ValidationError(f"duplicate term for variables {vs}")
            seen.add(vs)
            if not (0 <= vs[0] and vs[-1] < n):
                raise ValidationError(f"term variables {vs} out of range for n={n}")
            if c == 0.0:
                raise ValidationError(f"explicit zero coefficient for variables {vs}")
            if not math.isfinite(c):
                raise ValidationError(f"coefficient for {vs} must be finite")

    @classmethod
    def from_terms(
        cls, n: int, terms: Iterable[tuple[float, Iterable[int]]], offset: float = 0.0
    ) -> "Pubo":
        acc: dict[tuple[int, ...], float] = {}
        extra_offset = 0.0
        for c, vs in terms:
            key = tuple(sorted(set(int(v) for v in vs)))
            if not key:
                extra_offset += float(c)
                continue
            acc[key] = acc.get(key, 0.0) + float(c)
        canon = tuple(
            (v, k) for k, v in sorted(acc.items(), key=lambda kv: (len(kv[0]), kv[0])) if v != 0.0
        )
        return cls(n=n, terms=canon, offset=offset + extra_offset)

    def degree(self) -> int:
        return max((len(vs) for _, vs in self.terms), default=0)

    def sum_abs_coeffs(self) -> float:
        return sum(abs(c) for c, _ in self.terms)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "offset": self.offset,
            "terms": [[c, list(vs)] for c, vs in self.terms],
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Pubo":
        _require_keys(data, required={"n", "offset", "terms"}, optional=set(), what="Pubo")
        return cls.from_terms(
            data["n"], ((t[0], t[1]) for t in data["terms"]), offset=data["offset"]
        )


def pubo_energy(p: Pubo, bits: Sequence[int]) -> float:
    """Exact polynomial value, offset included."""
    x = check_bits(bits, p.n)
    total = p.offset
    for c, vs in p.terms:
        prod = 1
        for v in vs:
            if not x[v]:
                prod = 0
                break
        if prod:
            total += c
    return float(total)


@dataclass(frozen=True)
class IsingModel:
    """Spin form ``offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j`` over s in {-1,+1}.

    Produced from a :class:`Qubo` under the fixed map ``x_i = (1 - s_i) / 2``;
    its diagonal is the cost operator driven by the QAOA simulator.
    """

    n: int
    h: tuple[float, ...]
    j: Mapping[tuple[int, int], float]
    offset: float = 0.0

    def __post_init__(self):
        if len(self.h) != self.n:
            raise ValidationError(f"h has length {len(self.h)}, expected n={self.n}")
        object.__setattr__(self, "h", tuple(float(v) for v in self.h))
        for (a, b), c in self.j.items():
            if not (0 <= a < b < self.n):
                raise ValidationError(f"coupling index ({a},{b}) invalid for n={self.n}")
            if not math.isfinite(c):
                raise ValidationError(f"coupling ({a},{b}) must be finite")


def ising_energy(m: IsingModel, spins: Sequence[int]) -> float:
    s = np.asarray(spins)
    if s.ndim != 1 or s.shape[0] != m.n:
        raise ValidationError(f"spins must have length {m.n}, got shape {s.shape}")
    if s.size and not np.all((s == 1) | (s == -1)):
        raise ValidationError("spins must be +1/-1")
    total = m.offset + float(np.dot(m.h, s))
    for (a, b), c in m.j.items():
        total += c * s[a] * s[b]
    return float(total)


def qubo_to_ising(q: Qubo) -> IsingModel:
    """Rewrite a QUBO over spins with ``x_i = (1 - s_i) / 2``.

    Energies agree exactly: ``ising_energy(result, s) == qubo_energy(q, x(s))``
    for every spin vector.
    """
    h = [0.0] * q.n
    j: dict[tuple[int, int], float] = {}
    offset = q.offset
    for (a, b), c in q.coeffs.items():
        if a == b:
            # c * x = c/2 - c/2 * s
            offset += c / 2.0
            h[a] -= c / 2.0
        else:
            # c * x_a x_b = c/4 * (1 - s_a - s_b + s_a s_b)
            offset += c / 4.0
            h[a] -= c / 4.0
            h[b] -= c / 4.0
            j[(a, b)] = j.get((a, b), 0.0) + c / 4.0
    j = {k: v for k, v in sorted(j.items()) if v != 0.0}
    return IsingModel(n=q.n, h=tuple(h), j=j, offset=offset)


def spins_from_bits(bits: Sequence[int]) -> tuple[int, ...]:
    """The fixed variable map: x=0 -> s=+1, x=1 -> s=-1."""
    return tuple(1 - 2 * int(b) for b in bits)


# ---------------------------------------------------------------------------
# JSON plumbing
# ---------------------------------------------------------------------------


def _require_keys(data: Mapping, required: set, optional: set, what: str) -> None:
    keys = set(data.keys())
    missing = required - keys
    if missing:
        raise ValidationError(f"{what} JSON missing fields: {sorted(missing)}")
    unknown = keys - required - optional
    if unknown:
        raise ValidationError(f"{what} JSON has unknown fields: {sorted(unknown)}")


def dumps_canonical(data) -> str:
    """Stable JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


def save_json(path, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(data))


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_instance(path) -> SeamInstance | SatInstance:
    """Load either instance family, dispatching on the JSON schema."""
    data = load_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    if "seams" in data:
        return SeamInstance.from_json_dict(data)
    if "num_components" in data:
        return SatInstance.from_json_dict(data)
    raise ValidationError(f"{path}: not a recognized instance schema")


def load_problem(path) -> Qubo | Pubo:
    """Load a formulation file, dispatching on the term shape.

    QUBO terms are ``[i, j, coeff]``; PUBO terms are ``[coeff, [i, ...]]``.
    A problem with no terms loads as a (constant) QUBO.
    """
    data = load_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    terms = data.get("terms")
    if terms is None:
        raise ValidationError(f"{path}: missing 'terms'")
    if terms and isinstance(terms[0][1], list):
        return Pubo.from_json_dict(data)
    return Qubo.from_json_dict(data)
