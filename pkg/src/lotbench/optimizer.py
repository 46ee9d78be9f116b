"""Closed-form optimal common lotteries via the position-mass budget problem.

Choosing a common lottery is equivalent to choosing position masses s_k
subject to the budget sum_k s_k / F(x_k) <= D and the capacity bounds
0 <= s_k <= g_k: a mass s_k requires offering the position to the s_k/F(x_k)
agents whose outside option is at most x_k.  Higher positions are cheaper
per unit of mass, which drives every solver in this module.

When 1/F is discretely convex the optimal common lottery is optimal among
all mechanisms; otherwise the results here are still the best common
lottery, and improvement search lives elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InfeasibleMasses
from .instance import Instance, convexity_report
from .mechanism import (
    CommonLottery,
    Fill,
    Linear,
    Objective,
    PositionMasses,
    SeparableConcave,
    evaluate_objective,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class FillLottery:
    """Greedy fill-from-the-top solution.

    lottery.c[k] = min{q_k, 1 - Q_k} with q_k = g_k / (D F(x_k)) and
    Q_k = min{1, sum_{k' > k} q_{k'}}.  cutoff is the lowest position with a
    positive offer probability when the budget binds (N when the lottery is
    empty); below it every entry is zero.
    """

    lottery: CommonLottery
    q: tuple[Fraction, ...]
    cutoff: int


def optimal_lottery_fill(inst: Instance) -> FillLottery:
    """Mass-maximizing common lottery: fill positions from the top down."""
    n = inst.n
    q = tuple(inst.g[k] / (inst.d * inst.cdf(k)) for k in range(n))
    c = []
    tail = ZERO  # sum of q above the current position
    for k in range(n - 1, -1, -1):
        qcap = min(ONE, tail)
        c.append(min(q[k], 1 - qcap))
        tail += q[k]
    c.reverse()
    cutoff = next((k for k in range(n) if c[k] > 0), n)
    return FillLottery(lottery=CommonLottery(c=tuple(c)), q=q, cutoff=cutoff)


@dataclass(frozen=True)
class BudgetSolution:
    masses: PositionMasses
    value: object  # Fraction for Fill/Linear, float otherwise
    convexity_warning: bool

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)


def lottery_from_masses(inst: Instance, masses: PositionMasses) -> CommonLottery:
    """The common lottery whose position masses are the given vector."""
    return CommonLottery(
        c=tuple(sk / (inst.d * inst.cdf(k)) for k, sk in enumerate(masses.s))
    )


def masses_from_lottery(inst: Instance, cl: CommonLottery) -> PositionMasses:
    return PositionMasses(
        s=tuple(inst.d * ck * inst.cdf(k) for k, ck in enumerate(cl.c))
    )


def optimal_masses(inst: Instance, obj: Objective) -> BudgetSolution:
    """Best position masses achievable by a common lottery.

    The convexity_warning flag signals that 1/F is not convex, in which
    case a non-common mechanism may do strictly better.
    """
    warning = not convexity_report(inst).is_convex
    if isinstance(obj, Fill):
        s = _greedy(inst, order=list(range(inst.n - 1, -1, -1)))
    elif isinstance(obj, Linear):
        ranked = sorted(
            (k for k in range(inst.n) if obj.weights[k] > 0),
            key=lambda k: (-obj.weights[k] * inst.cdf(k), k),
        )
        s = _greedy(inst, order=ranked)
    elif isinstance(obj, SeparableConcave):
        s = _water_fill(inst, obj)
    else:
        raise TypeError(f"unknown objective {obj!r}")
    masses = PositionMasses(s=tuple(s))
    return BudgetSolution(
        masses=masses,
        value=evaluate_objective(obj, masses),
        convexity_warning=warning,
    )


def _greedy(inst: Instance, order):
    """Spend the budget on positions in the given order, capacity-capped."""
    s = [ZERO] * inst.n
    budget = inst.d
    for k in order:
        take = min(inst.g[k], budget * inst.cdf(k))
        s[k] = take
        budget -= take / inst.cdf(k)
        if budget == 0:
            break
    return s


def _water_fill(inst: Instance, obj: SeparableConcave, capped: bool = True):
    """Bisection on the budget multiplier for sum_k alpha_k s_k**rho."""
    n = inst.n
    alpha = [float(w) for w in obj.weights]
    rho = float(obj.rho)
    cdf = [float(inst.cdf(k)) for k in range(n)]
    g = [float(gk) for gk in inst.g]
    d = float(inst.d)

    def masses_at(lam):
        out = []
        for k in range(n):
            v = (alpha[k] * rho * cdf[k] / lam) ** (1 / (1 - rho))
            if capped:
                v = min(v, g[k])
            out.append(v)
        return out

    def spend(lam):
        return sum(v / cdf[k] for k, v in enumerate(masses_at(lam)))

    if capped and sum(g[k] / cdf[k] for k in range(n)) <= d:
        return [Fraction(gk) for gk in inst.g]  # budget slack: lambda = 0
    lo, hi = 1e-12, 1.0
    while spend(hi) > d:
        hi *= 2
    while spend(lo) < d:
        lo /= 2
    while hi - lo > 1e-14 * max(1.0, hi):
        mid = (lo + hi) / 2
        if spend(mid) > d:
            lo = mid
        else:
            hi = mid
    return [Fraction(v) for v in masses_at((lo + hi) / 2)]


def optimal_masses_flexible(inst: Instance, obj: SeparableConcave) -> PositionMasses:
    """Water-filling with unlimited capacities: the budget always binds.

    Interior stationarity gives s_k proportional to (alpha_k F(x_k))**(1/(1-rho)),
    scaled so the budget holds with equality; no bisection is needed.
    """
    n = inst.n
    rho = float(obj.rho)
    power = 1 / (1 - rho)
    base = [
        (float(obj.weights[k]) * rho * float(inst.cdf(k))) ** power
        for k in range(n)
    ]
    scale = float(inst.d) / sum(base[k] / float(inst.cdf(k)) for k in range(n))
    return PositionMasses(s=tuple(Fraction(scale * base[k]) for k in range(n)))


@dataclass(frozen=True)
class KktReport:
    ok: bool
    multiplier: float
    budget_slack: float
    violations: tuple[tuple[int, str, float], ...]  # (position, case, residual)


def kkt_check(
    inst: Instance,
    obj: SeparableConcave,
    masses: PositionMasses,
    tol: float = 1e-10,
) -> KktReport:
    """Stationarity certificate for the concave budget problem.

    Finds a budget multiplier such that every position satisfies its
    marginal condition within tol: interior positions have marginal value
    exactly the multiplier-weighted price, zero positions at most it, and
    capacity-capped positions at least it.  Raises InfeasibleMasses when
    the input is not even feasible for the budget set.
    """
    n = inst.n
    s = [float(v) for v in masses.s]
    g = [float(v) for v in inst.g]
    cdf = [float(inst.cdf(k)) for k in range(n)]
    spend = sum(s[k] / cdf[k] for k in range(n))
    slack = float(inst.d) - spend
    if slack < -tol:
        raise InfeasibleMasses(f"budget exceeded by {-slack}")
    for k in range(n):
        if s[k] < -tol or s[k] > g[k] + tol:
            raise InfeasibleMasses(f"mass at position {k} outside [0, g_{k}]")

    def marginal(k):
        if s[k] <= 0:
            return math.inf
        return float(obj.weights[k]) * float(obj.rho) * s[k] ** (float(obj.rho) - 1)

    interior = [k for k in range(n) if tol < s[k] < g[k] - tol]
    if slack > tol:
        lam = 0.0
    elif interior:
        lam = sum(cdf[k] * marginal(k) for k in interior) / len(interior)
    else:
        capped = [
            cdf[k] * marginal(k)
            for k in range(n)
            if s[k] >= g[k] - tol and g[k] > tol
        ]
        lam = max(capped, default=0.0)

    violations = []
    for k in range(n):
        price_val = lam / cdf[k]
        if s[k] >= g[k] - tol:
            # includes zero-capacity positions, which are trivially capped
            resid = price_val - marginal(k)
            if resid > tol:
                violations.append((k, "capped", resid))
        elif s[k] <= tol:
            # with positive weight and rho < 1 the marginal blows up at 0,
            # so a zero position with spare capacity is never stationary
            violations.append((k, "zero", math.inf))
        else:
            resid = abs(marginal(k) - price_val)
            if resid > tol:
                violations.append((k, "interior", resid))
    if slack > tol and lam > tol:
        violations.append((-1, "complementary-slackness", lam))
    return KktReport(
        ok=not violations,
        multiplier=lam,
        budget_slack=slack,
        violations=tuple(violations),
    )
