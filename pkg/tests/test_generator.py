import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autoqbench.errors import ConfigurationError
from autoqbench.generator import (
    SatGeneratorConfig,
    SeamGeneratorConfig,
    gen_sat_instance,
    gen_seam_instance,
)
from autoqbench.model import count_unsat, dumps_canonical, index_to_bits


def test_seam_generation_is_deterministic():
    cfg = SeamGeneratorConfig(seed=123, num_seams=6)
    a = dumps_canonical(gen_seam_instance(cfg).to_json_dict())
    b = dumps_canonical(gen_seam_instance(cfg).to_json_dict())
    assert a == b


def test_fixed_length_seams():
    # Box large enough (and seed checked) that clamping never triggers.
    cfg = SeamGeneratorConfig(
        seed=2024,
        num_seams=50,
        box_max=(100_000.0, 100_000.0, 100_000.0),
        min_length=10.0,
        max_length=10.0,
    )
    inst = gen_seam_instance(cfg)
    for s in range(inst.n):
        assert inst.seam_length(s) == pytest.approx(10.0, abs=1e-9)


def test_large_instance_satisfies_invariants():
    cfg = SeamGeneratorConfig(seed=9, num_seams=1000)
    inst = gen_seam_instance(cfg)
    assert inst.n == 1000
    lo, hi = cfg.box_min, cfg.box_max
    for a, b in inst.seams:
        for p in (a, b):
            assert all(math.isfinite(v) for v in p)
            assert all(l - 1e-9 <= v <= h + 1e-9 for v, l, h in zip(p, lo, hi))
        assert math.dist(a, b) >= 0.0


def test_seam_config_validation():
    with pytest.raises(ConfigurationError):
        SeamGeneratorConfig(seed=1, num_seams=0)
    with pytest.raises(ConfigurationError):
        SeamGeneratorConfig(seed=1, num_seams=2, min_length=5.0, max_length=1.0)
    with pytest.raises(ConfigurationError):
        SeamGeneratorConfig(seed=1, num_seams=2, box_min=(0, 0, 0), box_max=(0, 1, 1))
    with pytest.raises(ConfigurationError):
        # min length longer than the box diagonal is unrealizable
        SeamGeneratorConfig(
            seed=1, num_seams=2, box_max=(1, 1, 1), min_length=100.0, max_length=200.0
        )
    with pytest.raises(ConfigurationError):
        SeamGeneratorConfig(seed=-1, num_seams=2)


@settings(max_examples=1000, deadline=None)
@given(
    seed=st.integers(0, 2**64 - 1),
    n=st.integers(1, 8),
    edge=st.floats(10.0, 5000.0),
    lengths=st.tuples(st.floats(0.0, 9.0), st.floats(0.0, 9.0)),
)
def test_seam_generator_property(seed, n, edge, lengths):
    lo, hi = sorted(lengths)
    cfg = SeamGeneratorConfig(
        seed=seed,
        num_seams=n,
        box_max=(edge, edge, edge),
        min_length=lo,
        max_length=hi,
    )
    inst = gen_seam_instance(cfg)
    assert inst.n == n
    for a, b in inst.seams:
        assert all(0.0 - 1e-9 <= v <= edge + 1e-9 for v in a + b)
        assert math.dist(a, b) <= hi + 1e-9


def test_sat_generation_is_deterministic():
    cfg = SatGeneratorConfig(seed=77, num_components=12, num_clauses=30)
    inst_a, planted_a = gen_sat_instance(cfg)
    inst_b, planted_b = gen_sat_instance(cfg)
    assert inst_a == inst_b
    assert planted_a == planted_b


def test_planted_assignment_satisfies_everything():
    cfg = SatGeneratorConfig(seed=5, num_components=15, num_clauses=60, max_clause_size=4)
    inst, planted = gen_sat_instance(cfg)
    assert planted is not None
    assert count_unsat(inst, planted) == 0


def test_unplanted_returns_no_assignment():
    cfg = SatGeneratorConfig(seed=5, num_components=6, num_clauses=10, planted=False)
    inst, planted = gen_sat_instance(cfg)
    assert planted is None
    assert len(inst.clauses) == 10


def test_planted_instance_brute_force_optimum_is_zero():
    cfg = SatGeneratorConfig(seed=31, num_components=10, num_clauses=40, max_clause_size=3)
    inst, planted = gen_sat_instance(cfg)
    best = min(count_unsat(inst, index_to_bits(z, 10)) for z in range(1024))
    assert best == 0
    assert count_unsat(inst, planted) == 0


def test_sat_config_validation():
    with pytest.raises(ConfigurationError):
        SatGeneratorConfig(seed=1, num_components=0, num_clauses=1)
    with pytest.raises(ConfigurationError):
        SatGeneratorConfig(seed=1, num_components=3, num_clauses=-1)
    with pytest.raises(ConfigurationError):
        SatGeneratorConfig(seed=1, num_components=3, num_clauses=1, max_clause_size=4)
    with pytest.raises(ConfigurationError):
        SatGeneratorConfig(seed=1, num_components=3, num_clauses=1, max_clause_size=0)


@settings(max_examples=1000, deadline=None)
@given(
    seed=st.integers(0, 2**64 - 1),
    v=st.integers(1, 12),
    clauses=st.integers(0, 25),
    planted=st.booleans(),
    data=st.data(),
)
def test_sat_generator_property(seed, v, clauses, planted, data):
    max_size = data.draw(st.integers(1, v))
    cfg = SatGeneratorConfig(
        seed=seed,
        num_components=v,
        num_clauses=clauses,
        max_clause_size=max_size,
        planted=planted,
    )
    inst, hidden = gen_sat_instance(cfg)
    assert len(inst.clauses) == clauses
    for clause in inst.clauses:
        comps = [c for c, _ in clause]
        assert 1 <= len(clause) <= max_size
        assert len(set(comps)) == len(comps)
        assert all(0 <= c < v for c in comps)
    if planted:
        assert hidden is not None and count_unsat(inst, hidden) == 0
    else:
        assert hidden is None
