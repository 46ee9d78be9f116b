"""Capped random priority: serve agents in uniform-priority order against
per-position caps, from the best position down.

In the continuum, the top position is taken by the first caps/F slice of
agents, the next position by the following slice, and so on; each slice's
agents whose outside option exceeds the position's quality exit unmatched.
The induced conditional allocation probabilities form exactly the
expansion of a common lottery, which is the equivalence this module makes
testable, both analytically and by finite-market Monte Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BadQuota, CapsInfeasible
from .instance import Instance
from .mechanism import CommonLottery, DirectMechanism, PositionMasses, expand_common_lottery

ZERO = Fraction(0)


@dataclass(frozen=True)
class Threshold:
    """One step of the priority scan."""

    step: int
    position: int
    cutoff: Fraction  # cumulative agent mass consumed after this step
    position_exhausted: bool  # False when the agents ran out first


@dataclass(frozen=True)
class CrpResult:
    thresholds: tuple[Threshold, ...]
    allocation: DirectMechanism
    caps: PositionMasses


def continuum_crp(inst: Instance, caps: PositionMasses) -> CrpResult:
    """Exact limit allocation of capped random priority.

    Positions are consumed from the top; a position with cap s_k occupies
    the next s_k / F(x_k) of agent mass.  If the agent mass runs out
    mid-position, every remaining agent with an acceptable type gets that
    position and the scan stops.  An exact tie counts as the position
    being exhausted.
    """
    if len(caps.s) != inst.n:
        raise CapsInfeasible("caps length must equal N")
    for k, sk in enumerate(caps.s):
        if sk < 0:
            raise CapsInfeasible(f"cap at position {k} is negative")
        if sk > inst.g[k]:
            raise CapsInfeasible(
                f"cap {sk} at position {k} exceeds capacity {inst.g[k]}"
            )
    n = inst.n
    rows = [[ZERO] * n for _ in range(n)]
    thresholds = []
    consumed = ZERO
    step = 0
    for k in range(n - 1, -1, -1):
        if caps.s[k] == 0:
            continue
        step += 1
        need = caps.s[k] / inst.cdf(k)
        remaining = inst.d - consumed
        if need <= remaining:
            prob = caps.s[k] / (inst.d * inst.cdf(k))
            for i in range(k + 1):
                rows[k][i] = prob
            consumed += need
            thresholds.append(Threshold(step, k, consumed, True))
            if consumed == inst.d:
                break
        else:
            prob = remaining / inst.d
            for i in range(k + 1):
                rows[k][i] = prob
            consumed = inst.d
            thresholds.append(Threshold(step, k, consumed, False))
            break
    return CrpResult(
        thresholds=tuple(thresholds),
        allocation=DirectMechanism(a=tuple(tuple(r) for r in rows)),
        caps=caps,
    )


def caps_from_lottery(inst: Instance, cl: CommonLottery) -> PositionMasses:
    """Caps under which the priority scan reproduces the lottery exactly."""
    expand_common_lottery(inst, cl)  # validates feasibility
    return PositionMasses(
        s=tuple(inst.d * cl.c[k] * inst.cdf(k) for k in range(inst.n))
    )


@dataclass(frozen=True)
class SimulationResult:
    """Aggregated finite-market draws.

    empirical[k][i] is the fraction of type-i agents assigned position k
    across all replications; stderr holds the matching binomial standard
    errors (0 where a type was never drawn).
    """

    empirical: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    type_totals: np.ndarray
    quotas: tuple[int, ...]
    n_agents: int
    replications: int
    seed: int


def simulate_finite(
    inst: Instance,
    caps: PositionMasses,
    n_agents: int,
    replications: int,
    seed: int,
) -> SimulationResult:
    """Monte Carlo of the finite market: i.i.d. types, uniform priorities,
    integer quotas floor(n_agents * s_k / D), serial dictatorship where an
    agent takes the best open position at or above its outside option.
    """
    if n_agents < 1:
        raise BadQuota(f"need at least one agent, got {n_agents}")
    if replications < 1:
        raise BadQuota(f"need at least one replication, got {replications}")
    if any(sk < 0 for sk in caps.s):
        raise BadQuota("caps must be nonnegative")
    n = inst.n
    quotas = tuple(int(n_agents * sk / inst.d) for sk in caps.s)
    cdf = np.array([float(inst.cdf(i)) for i in range(n)])

    counts = np.zeros((n, n), dtype=np.int64)
    type_totals = np.zeros(n, dtype=np.int64)
    streams = np.random.SeedSequence(seed).spawn(replications)
    for stream in streams:
        rng = np.random.default_rng(stream)
        # i.i.d. types in arrival order; arrival order is the priority order
        types = np.searchsorted(cdf, rng.random(n_agents), side="right")
        type_totals += np.bincount(types, minlength=n)
        unassigned = np.ones(n_agents, dtype=bool)
        for k in range(n - 1, -1, -1):
            if quotas[k] == 0:
                continue
            eligible = np.flatnonzero(unassigned & (types <= k))
            winners = eligible[: quotas[k]]
            if winners.size:
                unassigned[winners] = False
                counts[k] += np.bincount(types[winners], minlength=n)

    with np.errstate(divide="ignore", invalid="ignore"):
        empirical = np.where(type_totals > 0, counts / type_totals, 0.0)
        stderr = np.where(
            type_totals > 0,
            np.sqrt(empirical * (1 - empirical) / np.maximum(type_totals, 1)),
            0.0,
        )
    return SimulationResult(
        empirical=empirical,
        stderr=stderr,
        counts=counts,
        type_totals=type_totals,
        quotas=quotas,
        n_agents=n_agents,
        replications=replications,
        seed=seed,
    )
