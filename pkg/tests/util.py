"""Shared randomized-instance builders for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction

from lotbench import DirectMechanism, Instance


def random_pmf(rng: random.Random, n: int, full_support: bool = True):
    lo = 1 if full_support else 0
    weights = [rng.randint(lo, 9) for _ in range(n)]
    if sum(weights) == 0:
        weights[rng.randrange(n)] = 1
    total = sum(weights)
    return tuple(Fraction(w, total) for w in weights)


def random_convex_instance(rng: random.Random, n_min=3, n_max=8) -> Instance:
    """Non-increasing type pmf, which makes 1/F discretely convex."""
    n = rng.randint(n_min, n_max)
    weights = sorted((rng.randint(1, 9) for _ in range(n)), reverse=True)
    total = sum(weights)
    f = tuple(Fraction(w, total) for w in weights)
    g = random_pmf(rng, n, full_support=False)
    d = Fraction(rng.randint(1, 8), rng.randint(1, 4))
    return Instance(n=n, f=f, g=g, d=d)


def random_instance(rng: random.Random, n_min=2, n_max=8) -> Instance:
    n = rng.randint(n_min, n_max)
    return Instance(
        n=n,
        f=random_pmf(rng, n),
        g=random_pmf(rng, n, full_support=False),
        d=Fraction(rng.randint(1, 8), rng.randint(1, 4)),
    )


def random_supported_matrix(rng: random.Random, n: int) -> DirectMechanism:
    """Arbitrary cell values in [0, 1] on the acceptable support."""
    rows = tuple(
        tuple(
            Fraction(rng.randint(0, 24), 24) if i <= k else Fraction(0)
            for i in range(n)
        )
        for k in range(n)
    )
    return DirectMechanism(a=rows)


def random_feasible_lottery(rng: random.Random, n: int):
    """Nonnegative offer vector with total at most one."""
    raw = [Fraction(rng.randint(0, 9)) for _ in range(n)]
    total = sum(raw)
    denom = rng.randint(max(1, int(total)), int(total) + 9) if total else 1
    return tuple(v / denom for v in raw)
