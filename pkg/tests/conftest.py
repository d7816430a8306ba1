import numpy as np

from autoqbench.model import Pubo, Qubo


def rand_qubo(n: int, seed: int, density: float = 1.0, offset: float = 0.0) -> Qubo:
    """Dense-ish random QUBO with standard-normal coefficients."""
    rng = np.random.default_rng(seed)
    terms = []
    for i in range(n):
        for j in range(i, n):
            if rng.random() <= density:
                terms.append((i, j, float(rng.normal())))
    return Qubo.from_terms(n, terms, offset=offset)


def rand_pubo(
    n: int, seed: int, num_terms: int = 12, max_degree: int = 4, offset: float = 0.0
) -> Pubo:
    """Random PUBO with small integer coefficients (keeps float sums exact)."""
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(num_terms):
        degree = int(rng.integers(1, max_degree + 1))
        vs = tuple(sorted(rng.choice(n, size=degree, replace=False).tolist()))
        coeff = int(rng.integers(-8, 9)) or 1
        terms.append((float(coeff), vs))
    return Pubo.from_terms(n, terms, offset=offset)
