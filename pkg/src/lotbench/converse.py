"""Strict improvement over the best common lottery when 1/F is not convex.

The construction works in two stages.  Stage one spreads the offer
probabilities of one low type across a row triple (k-1, k, k+1) around a
convexity violation at k, compensating the remaining types so that every
position mass is unchanged; the spread releases exactly
eps_prime = -eps * f_i * (1/F_{k-1} - 2/F_k + 1/F_{k+1}) > 0 of offer
probability from every type at or below k-1.  Stage two spends that slack
by offering an unfilled low position to all of its acceptable types, which
strictly raises the filled mass.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import PreconditionViolation
from .instance import Instance, convexity_report
from .mechanism import (
    CommonLottery,
    DirectMechanism,
    Fill,
    Linear,
    Objective,
    evaluate_objective,
    expand_common_lottery,
    feasibility_report,
    position_masses,
)
from .optimizer import lottery_from_masses, optimal_lottery_fill, optimal_masses

ZERO = Fraction(0)
ONE = Fraction(1)


def find_violation(inst: Instance):
    """Smallest interior index where 1/F has a negative second difference."""
    report = convexity_report(inst)
    return report.violation_indices[0] if report.violation_indices else None


def second_difference(inst: Instance, k: int) -> Fraction:
    return (
        ONE / inst.cdf(k - 1) - 2 * (ONE / inst.cdf(k)) + ONE / inst.cdf(k + 1)
    )


def _require(cond: bool, message: str):
    if not cond:
        raise PreconditionViolation(message)


def perturb(
    inst: Instance,
    base: CommonLottery,
    k: int,
    i: int,
    epsilon: Fraction,
    delta: Fraction,
    fill_index: int,
) -> DirectMechanism:
    """Apply the two-stage improvement to the expansion of a common lottery.

    Stage one moves 2*epsilon of type i's row-k offer outward to rows k-1
    and k+1 and rebalances every touched row across its accepting types so
    position masses are unchanged.  Stage two adds delta to row fill_index
    for all of its accepting types.  Every violated requirement raises
    PreconditionViolation naming the failed inequality.
    """
    n = inst.n
    _require(0 <= i < k < n - 1, f"need 0 <= i < k < N-1, got i={i}, k={k}")
    _require(0 <= fill_index < n, f"fill_index {fill_index} outside the grid")
    _require(epsilon >= 0, f"epsilon must be >= 0, got {epsilon}")
    _require(delta >= 0, f"delta must be >= 0, got {delta}")
    c = base.c
    _require(len(c) == n, "lottery length must equal N")
    for r in (k - 1, k, k + 1):
        _require(c[r] > 0, f"base lottery must offer position {r}: c_{r} = {c[r]}")
    eps_prime = -epsilon * inst.f[i] * second_difference(inst, k)
    _require(
        delta <= eps_prime,
        f"delta = {delta} exceeds the released slack eps_prime = {eps_prime}",
    )

    mech = expand_common_lottery(inst, base)
    rows = [list(row) for row in mech.a]
    fi = inst.f[i]
    # spread type i's odds at k outward, rebalancing each touched row
    rows[k][i] += 2 * epsilon - 2 * epsilon * fi / inst.cdf(k)
    rows[k - 1][i] += -epsilon + epsilon * fi / inst.cdf(k - 1)
    rows[k + 1][i] += -epsilon + epsilon * fi / inst.cdf(k + 1)
    for j in range(k + 1):
        if j != i:
            rows[k][j] -= 2 * epsilon * fi / inst.cdf(k)
    for j in range(k):
        if j != i:
            rows[k - 1][j] += epsilon * fi / inst.cdf(k - 1)
    for j in range(k + 2):
        if j != i:
            rows[k + 1][j] += epsilon * fi / inst.cdf(k + 1)
    # spend the released slack on the unfilled position
    for j in range(fill_index + 1):
        rows[fill_index][j] += delta

    result = DirectMechanism(a=tuple(tuple(r) for r in rows))
    report = feasibility_report(inst, result)
    if not report.is_feasible:
        _describe_infeasibility(report)
    return result


def _describe_infeasibility(report):
    n = len(report.participation)
    for k in range(n):
        for i in range(n):
            if report.ic_slack[k][i] < 0:
                raise PreconditionViolation(
                    f"truth-telling ({k} vs {i}) fails by {-report.ic_slack[k][i]}"
                )
    for k, ps in enumerate(report.position_slack):
        if ps < 0:
            raise PreconditionViolation(f"position {k} overfilled by {-ps}")
    for i, asl in enumerate(report.agent_slack):
        if asl < 0:
            raise PreconditionViolation(
                f"type {i} offer probability exceeds 1 by {-asl}"
            )
    raise PreconditionViolation("a cell left [0, 1] or ex-post acceptance failed")


@dataclass(frozen=True)
class Improvement:
    mechanism: DirectMechanism
    base: CommonLottery
    gain: Fraction
    d: Fraction
    k: int
    i: int
    fill_index: int
    epsilon: Fraction
    delta: Fraction


def auto_improve(inst: Instance, obj: Objective = Fill(), search_d: bool = True):
    """Search for a mechanism strictly better than every common lottery.

    Returns (Improvement | None, diagnostic).  The search tries the
    instance's own agent mass first and, when allowed, a 32-point
    geometric grid between the cost of filling the top position and the
    cost of filling everything.  The smallest improving agent mass wins.
    """
    if not isinstance(obj, (Fill, Linear)):
        raise TypeError("improvement search supports mass-increasing objectives only")
    if isinstance(obj, Linear) and any(w <= 0 for w in obj.weights):
        raise TypeError("improvement search needs strictly positive weights")
    report = convexity_report(inst)
    if report.is_convex:
        return None, "convex"
    k = report.violation_indices[0]

    candidates = [inst.d]
    if search_d:
        candidates += _d_grid(inst)
    diagnostics = set()
    for d in candidates:
        trial = Instance(n=inst.n, f=inst.f, g=inst.g, d=d)
        found, why = _improve_at(trial, obj, k)
        if found is not None:
            return found, "improved"
        diagnostics.add(why)
    if diagnostics == {"full-fill feasible"}:
        return None, "full-fill feasible"
    return None, "no supported window"


def _d_grid(inst: Instance, points: int = 32):
    """Geometric grid of agent masses spanning scarce to abundant."""
    lo = float(inst.g[inst.n - 1] / inst.cdf(inst.n - 1))
    hi = float(sum(gk / inst.cdf(kk) for kk, gk in enumerate(inst.g)))
    if lo <= 0:
        lo = hi / 1024 if hi > 0 else 1.0
    out = []
    for t in range(points):
        v = lo * (hi / lo) ** (t / (points - 1)) if hi > lo else lo
        out.append(Fraction(v).limit_denominator(10**6))
    return [v for v in out if v > 0]


def _improve_at(inst: Instance, obj: Objective, k: int):
    """Try the construction at one agent mass; returns (Improvement|None, why)."""
    i = 0  # the lowest type always accepts all three rows of the triple
    if isinstance(obj, Fill):
        base = optimal_lottery_fill(inst).lottery
        base_value = evaluate_objective(Fill(), masses_of(inst, base))
    else:
        sol = optimal_masses(inst, obj)
        base = lottery_from_masses(inst, sol.masses)
        base_value = sol.value
    c = base.c
    total = base.total()
    if total < 1:
        return None, "full-fill feasible"
    if not (c[k - 1] > 0 and c[k] > 0 and c[k + 1] > 0):
        return None, "no supported window"

    epsilon = _max_epsilon(inst, c, k, i) / 2
    if epsilon <= 0:
        return None, "no supported window"
    eps_prime = -epsilon * inst.f[i] * second_difference(inst, k)
    if eps_prime <= 0:
        return None, "no supported window"

    # lowest position with spare capacity among those every offered-to type
    # accepts with certainty (all types below the lottery's support)
    support_start = next(kk for kk in range(inst.n) if c[kk] > 0)
    s = masses_of(inst, base)
    fill_index = next(
        (kk for kk in range(support_start + 1) if s.s[kk] < inst.g[kk]), None
    )
    if fill_index is None:
        return None, "no supported window"
    room = (inst.g[fill_index] - s.s[fill_index]) / (inst.d * inst.cdf(fill_index))
    delta = min(eps_prime, room)
    if delta <= 0:
        return None, "no supported window"

    try:
        mech = perturb(inst, base, k, i, epsilon, delta, fill_index)
    except PreconditionViolation:
        return None, "no supported window"
    gain = evaluate_objective(obj, position_masses(inst, mech)) - base_value
    if gain <= 0:
        return None, "no supported window"
    return (
        Improvement(
            mechanism=mech, base=base, gain=gain, d=inst.d, k=k, i=i,
            fill_index=fill_index, epsilon=epsilon, delta=delta,
        ),
        "improved",
    )


def masses_of(inst: Instance, cl: CommonLottery):
    return position_masses(inst, expand_common_lottery(inst, cl))


def _max_epsilon(inst: Instance, c, k: int, i: int) -> Fraction:
    """Largest spread size keeping every touched cell and agent budget valid."""
    fi = inst.f[i]
    bounds = []
    # donor cells at k-1 and k+1 must stay nonnegative
    for r in (k - 1, k + 1):
        coef = 1 - fi / inst.cdf(r)
        if coef > 0:
            bounds.append(c[r] / coef)
    # other types' row-k cells shrink by 2 eps f_i / F_k
    if k >= 1:
        bounds.append(c[k] * inst.cdf(k) / (2 * fi))
    # type i's row-k cell grows toward 1
    grow = 2 * (1 - fi / inst.cdf(k))
    if grow > 0:
        bounds.append((1 - c[k]) / grow)
    # type k+1 only gains offer probability, so its budget must have slack
    p_above = sum(c[k + 1:], ZERO)
    bounds.append((1 - p_above) * inst.cdf(k + 1) / fi)
    # receiving cells in rows k-1 and k+1 stay at most 1
    for r in (k - 1, k + 1):
        bounds.append((1 - c[r]) * inst.cdf(r) / fi)
    return min(bounds) if bounds else ZERO
