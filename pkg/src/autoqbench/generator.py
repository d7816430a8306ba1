"""Seeded instance generators for both reference-problem families.

Randomness comes from numpy's PCG64 generator, so a config (seed included)
maps to exactly one instance on every run.  SAT generation supports planting:
each clause is redrawn until a fixed hidden assignment satisfies it, which
gives a known optimum (zero unsatisfied clauses) at any size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .model import Assignment, SatInstance, SeamInstance, Vec3

_MAX_SEED = 2**64


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < _MAX_SEED:
        raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SeamGeneratorConfig:
    """Random seam layouts: anchors uniform in a box, random direction and length.

    Lengths are drawn uniformly from ``[min_length, max_length]``; the free
    endpoint is clamped back into the box, which may shorten a seam that would
    poke out.  All dimensions are millimeters.
    """

    seed: int
    num_seams: int
    box_min: Vec3 = (0.0, 0.0, 0.0)
    box_max: Vec3 = (1000.0, 1000.0, 1000.0)
    min_length: float = 50.0
    max_length: float = 300.0
    closed_tour: bool = False

    def __post_init__(self):
        object.__setattr__(self, "seed", _check_seed(self.seed))
        if self.num_seams < 1:
            raise ConfigurationError("num_seams must be >= 1")
        lo = tuple(float(v) for v in self.box_min)
        hi = tuple(float(v) for v in self.box_max)
        object.__setattr__(self, "box_min", lo)
        object.__setattr__(self, "box_max", hi)
        if any(h <= l for l, h in zip(lo, hi)):
            raise ConfigurationError(f"box must have positive extent, got {lo}..{hi}")
        if not 0.0 <= self.min_length <= self.max_length:
            raise ConfigurationError(
                f"need 0 <= min_length <= max_length, got {self.min_length}, {self.max_length}"
            )
        diagonal = math.dist(lo, hi)
        if self.min_length > diagonal:
            raise ConfigurationError(
                f"min_length {self.min_length} exceeds box diagonal {diagonal:.3f}"
            )

    def to_json_dict(self) -> dict:
        return {
            "family": "seams",
            "seed": self.seed,
            "num_seams": self.num_seams,
            "box_min": list(self.box_min),
            "box_max": list(self.box_max),
            "min_length": self.min_length,
            "max_length": self.max_length,
            "closed_tour": self.closed_tour,
        }


def gen_seam_instance(cfg: SeamGeneratorConfig) -> SeamInstance:
    rng = _rng(cfg.seed)
    lo = np.array(cfg.box_min)
    hi = np.array(cfg.box_max)
    seams = []
    for _ in range(cfg.num_seams):
        a = rng.uniform(lo, hi)
        direction = rng.normal(size=3)
        while np.linalg.norm(direction) < 1e-12:
            direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        length = rng.uniform(cfg.min_length, cfg.max_length)
        b = np.clip(a + length * direction, lo, hi)
        seams.append((tuple(a.tolist()), tuple(b.tolist())))
    return SeamInstance(seams=tuple(seams), closed_tour=cfg.closed_tour)


@dataclass(frozen=True)
class SatGeneratorConfig:
    """Random clause systems over ``num_components`` booleans.

    Clause sizes are uniform in ``1..max_clause_size`` and literals are drawn
    without replacement.  With ``planted=True`` a hidden satisfying assignment
    is drawn first and every clause is resampled until it satisfies it.
    """

    seed: int
    num_components: int
    num_clauses: int
    max_clause_size: int = 3
    planted: bool = True

    def __post_init__(self):
        object.__setattr__(self, "seed", _check_seed(self.seed))
        if self.num_components < 1:
            raise ConfigurationError("num_components must be >= 1")
        if self.num_clauses < 0:
            raise ConfigurationError("num_clauses must be >= 0")
        if not 1 <= self.max_clause_size <= self.num_components:
            raise ConfigurationError(
                f"need 1 <= max_clause_size <= num_components, got "
                f"{self.max_clause_size} vs {self.num_components}"
            )

    def to_json_dict(self) -> dict:
        return {
            "family": "sat",
            "seed": self.seed,
            "num_components": self.num_components,
            "num_clauses": self.num_clauses,
            "max_clause_size": self.max_clause_size,
            "planted": self.planted,
        }


def gen_sat_instance(cfg: SatGeneratorConfig) -> tuple[SatInstance, Assignment | None]:
    """Returns the instance and, when planting, the hidden satisfying assignment."""
    rng = _rng(cfg.seed)
    v = cfg.num_components
    planted_bits = rng.integers(0, 2, size=v) if cfg.planted else None
    clauses = []
    for _ in range(cfg.num_clauses):
        while True:
            size = int(rng.integers(1, cfg.max_clause_size + 1))
            comps = np.sort(rng.choice(v, size=size, replace=False))
            negs = rng.integers(0, 2, size=size)
            clause = tuple((int(c), int(neg)) for c, neg in zip(comps, negs))
            if planted_bits is None:
                break
            if any(planted_bits[c] != neg for c, neg in clause):
                break
        clauses.append(clause)
    instance = SatInstance(num_components=v, clauses=tuple(clauses))
    planted = Assignment(tuple(int(b) for b in planted_bits)) if cfg.planted else None
    return instance, planted
