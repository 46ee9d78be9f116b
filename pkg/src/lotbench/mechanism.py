"""Direct mechanisms, common lotteries, and the constraint checker.

A direct mechanism is an N x N matrix a with a[k][i] the probability that a
type-i agent is offered the position of quality x_k (row = position,
column = type).  Raw matrices may violate constraints on purpose: the checker
is also a diagnostic tool for infeasible counterexamples, so nothing here
assumes feasibility unless stated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import DimensionMismatch, InfeasibleInput, LotteryOverflow
from .instance import Instance
from .rationals import format_rational_matrix, parse_rational_vector

Rat = Fraction


@dataclass(frozen=True)
class DirectMechanism:
    """Offer-probability matrix; rows are positions, columns are types."""

    a: tuple[tuple[Rat, ...], ...]

    def __post_init__(self):
        n = len(self.a)
        if any(len(row) != n for row in self.a):
            raise DimensionMismatch("mechanism matrix must be square")

    @property
    def n(self) -> int:
        return len(self.a)

    def entry(self, k: int, i: int) -> Rat:
        return self.a[k][i]

    def participation(self, i: int) -> Rat:
        """Total offer probability for type i (only rows k >= i can count)."""
        return sum((self.a[k][i] for k in range(self.n)), Fraction(0))

    def is_lower_triangular(self) -> bool:
        """True when every cell below a type's outside option is zero."""
        return all(
            self.a[k][i] == 0 for k in range(self.n) for i in range(k + 1, self.n)
        )

    @classmethod
    def from_rows(cls, rows) -> "DirectMechanism":
        return cls(a=tuple(parse_rational_vector(row) for row in rows))

    @classmethod
    def from_json_dict(cls, data: dict) -> "DirectMechanism":
        return cls.from_rows(data["a"])

    def to_json_dict(self) -> dict:
        return {"a": format_rational_matrix(self.a)}


@dataclass(frozen=True)
class CommonLottery:
    """A single offer distribution over positions; the residual is no-offer."""

    c: tuple[Rat, ...]

    def total(self) -> Rat:
        return sum(self.c, Fraction(0))

    @classmethod
    def from_values(cls, values) -> "CommonLottery":
        return cls(c=parse_rational_vector(values))


@dataclass(frozen=True)
class PositionMasses:
    """Mass of agents accepting each position."""

    s: tuple[Rat, ...]

    def total(self) -> Rat:
        return sum(self.s, Fraction(0))

    @classmethod
    def from_values(cls, values) -> "PositionMasses":
        return cls(s=parse_rational_vector(values))


# --- designer objectives ---------------------------------------------------


@dataclass(frozen=True)
class Fill:
    """Maximize the total mass of agents placed."""


@dataclass(frozen=True)
class Linear:
    """Weighted sum of position masses."""

    weights: tuple[Rat, ...]


@dataclass(frozen=True)
class SeparableConcave:
    """sum_k alpha_k * s_k**rho with 0 < rho < 1 and positive weights."""

    weights: tuple[Rat, ...]
    rho: Rat

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError("exponent must lie strictly in (0, 1)")
        if any(w <= 0 for w in self.weights):
            raise ValueError("concave objective weights must be positive")


Objective = Union[Fill, Linear, SeparableConcave]


def evaluate_objective(obj: Objective, masses: PositionMasses):
    """Objective value at a mass vector; exact for Fill/Linear, float otherwise."""
    if isinstance(obj, Fill):
        return masses.total()
    if isinstance(obj, Linear):
        if len(obj.weights) != len(masses.s):
            raise DimensionMismatch("weight vector length mismatch")
        return sum((w * s for w, s in zip(obj.weights, masses.s)), Fraction(0))
    if isinstance(obj, SeparableConcave):
        if len(obj.weights) != len(masses.s):
            raise DimensionMismatch("weight vector length mismatch")
        return sum(
            float(w) * float(s) ** float(obj.rho) for w, s in zip(obj.weights, masses.s)
        )
    raise TypeError(f"unknown objective {obj!r}")


# --- constraint evaluation ---------------------------------------------------


def _check_dims(inst: Instance, mech: DirectMechanism):
    if mech.n != inst.n:
        raise DimensionMismatch(f"mechanism is {mech.n}x{mech.n}, instance has N={inst.n}")


def ic_slack(inst: Instance, mech: DirectMechanism, i: int, j: int) -> Rat:
    """LHS - RHS of the truth-telling constraint for type i against report j.

    Nonnegative means type i does not gain by reporting j and then keeping
    only realized offers above its own outside option.
    """
    _check_dims(inst, mech)
    inst._check_index(i)
    inst._check_index(j)
    own = Fraction(0)
    mimic = Fraction(0)
    for k in range(i, inst.n):
        gain = inst.x(k) - inst.theta(i)
        own += gain * mech.a[k][i]
        mimic += gain * mech.a[k][j]
    return own - mimic


def position_masses(inst: Instance, mech: DirectMechanism) -> PositionMasses:
    """s_k = D * sum_{i<=k} a[k][i] f_i (offers below the outside option
    are rejected and never counted)."""
    _check_dims(inst, mech)
    s = []
    for k in range(inst.n):
        s.append(inst.d * sum((mech.a[k][i] * inst.f[i] for i in range(k + 1)), Fraction(0)))
    return PositionMasses(s=tuple(s))


def mon_profile(inst: Instance, mech: DirectMechanism):
    """Participation probabilities P(theta_i) and whether they are non-increasing."""
    _check_dims(inst, mech)
    p = tuple(mech.participation(i) for i in range(inst.n))
    flag = all(p[i] >= p[i + 1] for i in range(inst.n - 1))
    return p, flag


def redundant_ic_pairs(n: int) -> frozenset[tuple[int, int]]:
    """IC pairs implied by local upward ICs plus monotonicity."""
    pairs = {(n - 1, j) for j in range(n - 1)}
    pairs.update((i, j) for i in range(n) for j in range(i + 2, n))
    return frozenset(pairs)


@dataclass(frozen=True)
class FeasibilityReport:
    ic_slack: tuple[tuple[Rat, ...], ...]
    participation: tuple[Rat, ...]
    mon_ok: bool
    position_slack: tuple[Rat, ...]
    agent_slack: tuple[Rat, ...]
    ex_post_ir_ok: bool
    is_feasible: bool
    binding_ics: frozenset[tuple[int, int]]
    redundant_ics: frozenset[tuple[int, int]]

    def ic_violations(self) -> list[tuple[int, int]]:
        n = len(self.participation)
        return [
            (i, j)
            for i in range(n)
            for j in range(n)
            if i != j and self.ic_slack[i][j] < 0
        ]


def feasibility_report(inst: Instance, mech: DirectMechanism) -> FeasibilityReport:
    """Evaluate every constraint of the direct-mechanism program exactly."""
    _check_dims(inst, mech)
    n = inst.n
    slack = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j:
                slack[i][j] = ic_slack(inst, mech, i, j)
    participation, mon_ok = mon_profile(inst, mech)
    s = position_masses(inst, mech)
    position_slack = tuple(gk - sk for gk, sk in zip(inst.g, s.s))
    agent_slack = tuple(1 - p for p in participation)
    ex_post_ir_ok = mech.is_lower_triangular()
    nonneg = all(mech.a[k][i] >= 0 for k in range(n) for i in range(n))
    ics_ok = all(slack[i][j] >= 0 for i in range(n) for j in range(n) if i != j)
    is_feasible = (
        nonneg
        and ics_ok
        and all(ps >= 0 for ps in position_slack)
        and all(asl >= 0 for asl in agent_slack)
        and ex_post_ir_ok
    )
    binding = frozenset(
        (i, j) for i in range(n) for j in range(n) if i != j and slack[i][j] == 0
    )
    return FeasibilityReport(
        ic_slack=tuple(tuple(row) for row in slack),
        participation=participation,
        mon_ok=mon_ok,
        position_slack=position_slack,
        agent_slack=agent_slack,
        ex_post_ir_ok=ex_post_ir_ok,
        is_feasible=is_feasible,
        binding_ics=binding,
        redundant_ics=redundant_ic_pairs(n),
    )


def classify_binding(inst: Instance, mech: DirectMechanism, zero_tolerance: Rat = Fraction(0)):
    """Partition all ordered IC pairs into binding / slack / redundant.

    With exact-rational mechanisms the tolerance should stay 0; a positive
    tolerance only makes sense for matrices imported from floating point.
    """
    report = feasibility_report(inst, mech)
    if not report.is_feasible:
        raise InfeasibleInput("classify_binding requires a feasible mechanism")
    n = inst.n
    redundant = report.redundant_ics
    binding, slack = set(), set()
    for i in range(n):
        for j in range(n):
            if i == j or (i, j) in redundant:
                continue
            if abs(report.ic_slack[i][j]) <= zero_tolerance:
                binding.add((i, j))
            else:
                slack.add((i, j))
    return {
        "binding": frozenset(binding),
        "slack": frozenset(slack),
        "redundant": redundant,
    }


def expand_common_lottery(inst: Instance, cl: CommonLottery) -> DirectMechanism:
    """Direct representation: each type sees the lottery truncated below its
    outside option.  The result is IC and ex-post IR by construction."""
    if len(cl.c) != inst.n:
        raise DimensionMismatch("lottery length must equal N")
    if cl.total() > 1:
        raise LotteryOverflow(f"offer probabilities total {cl.total()} > 1")
    if any(ck < 0 for ck in cl.c):
        raise LotteryOverflow("offer probabilities must be nonnegative")
    n = inst.n
    rows = tuple(
        tuple(cl.c[k] if i <= k else Fraction(0) for i in range(n)) for k in range(n)
    )
    return DirectMechanism(a=rows)
