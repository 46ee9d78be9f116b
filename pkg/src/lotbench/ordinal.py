"""Common ordinal ranking with heterogeneous cardinal utilities.

Agents share the ranking of position qualities but differ in a taste
parameter gamma that bends the utility scale.  Because an agent's outside
option is drawn independently of gamma, working in each gamma's utility
space turns the problem into the baseline one on an unevenly spaced grid:
the cdf over grid points is the same for every gamma, only the spacing
changes.  Prices per unit of position mass depend on the cdf alone, so
one common lottery over qualities is optimal for all tastes at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    BadMass,
    ConvexityHypothesisFailed,
    DimensionMismatch,
    GridTooSmall,
    NonPositiveTypeMass,
    PmfNotNormalized,
    UnknownGamma,
)
from .instance import ConvexityReport, Instance
from .mechanism import CommonLottery, Fill, Linear, PositionMasses
from .optimizer import lottery_from_masses, optimal_masses
from .rationals import (
    format_rational,
    format_rational_matrix,
    format_rational_vector,
    parse_rational,
    parse_rational_vector,
)
from .transform import Multipliers

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class OrdinalInstance:
    """Qualities, a taste distribution, and per-taste utility rows.

    The joint distribution of (outside option, taste) is the product of
    outside_pmf and gamma_pmf; that independence is what makes the
    per-taste grid views share one cdf.
    """

    qualities: tuple[Fraction, ...]
    gamma_labels: tuple[str, ...]
    gamma_pmf: tuple[Fraction, ...]
    outside_pmf: tuple[Fraction, ...]
    utility: tuple[tuple[Fraction, ...], ...]  # rows indexed like gamma_labels
    g: tuple[Fraction, ...]
    d: Fraction

    def __post_init__(self):
        n = len(self.qualities)
        if n < 2:
            raise GridTooSmall(f"need at least 2 qualities, got {n}")
        if any(self.qualities[k] >= self.qualities[k + 1] for k in range(n - 1)):
            raise PmfNotNormalized("qualities must be strictly increasing")
        if len(self.gamma_labels) != len(self.gamma_pmf) or not self.gamma_labels:
            raise DimensionMismatch("taste labels and pmf must align and be nonempty")
        if len(set(self.gamma_labels)) != len(self.gamma_labels):
            raise DimensionMismatch("taste labels must be distinct")
        if sum(self.gamma_pmf) != 1 or any(h < 0 for h in self.gamma_pmf):
            raise PmfNotNormalized("taste pmf must be nonnegative and sum to 1")
        if len(self.outside_pmf) != n or sum(self.outside_pmf) != 1:
            raise PmfNotNormalized("outside-option pmf must have length N and sum to 1")
        if any(h <= 0 for h in self.outside_pmf):
            raise NonPositiveTypeMass("outside-option pmf must have full support")
        if len(self.utility) != len(self.gamma_labels):
            raise DimensionMismatch("one utility row per taste is required")
        for row in self.utility:
            if len(row) != n:
                raise DimensionMismatch("utility rows must have length N")
            if any(row[k] >= row[k + 1] for k in range(n - 1)):
                raise PmfNotNormalized("utility rows must be strictly increasing")
        if len(self.g) != n or sum(self.g) != 1 or any(gk < 0 for gk in self.g):
            raise PmfNotNormalized("capacity pmf must be nonnegative and sum to 1")
        if self.d <= 0:
            raise BadMass(f"agent mass must be positive, got {self.d}")

    @property
    def n(self) -> int:
        return len(self.qualities)

    def cdf(self, k: int) -> Fraction:
        return sum(self.outside_pmf[: k + 1], ZERO)

    @classmethod
    def from_json_dict(cls, data: dict) -> "OrdinalInstance":
        return cls(
            qualities=parse_rational_vector(data["Q"]),
            gamma_labels=tuple(str(s) for s in data["Gamma"]),
            gamma_pmf=parse_rational_vector(data["hGamma"]),
            outside_pmf=parse_rational_vector(data["hQ"]),
            utility=tuple(parse_rational_vector(row) for row in data["u"]),
            g=parse_rational_vector(data["g"]),
            d=parse_rational(data["D"]),
        )

    def to_json_dict(self) -> dict:
        return {
            "Q": format_rational_vector(self.qualities),
            "Gamma": list(self.gamma_labels),
            "hGamma": format_rational_vector(self.gamma_pmf),
            "hQ": format_rational_vector(self.outside_pmf),
            "u": format_rational_matrix(self.utility),
            "g": format_rational_vector(self.g),
            "D": format_rational(self.d),
        }


@dataclass(frozen=True)
class UnevenGridView:
    """One taste's utility grid with the shared outside-option cdf."""

    x: tuple[Fraction, ...]
    F: tuple[Fraction, ...]

    def __post_init__(self):
        n = len(self.x)
        if len(self.F) != n:
            raise DimensionMismatch("grid and cdf must have the same length")
        if any(self.x[k] >= self.x[k + 1] for k in range(n - 1)):
            raise PmfNotNormalized("grid must be strictly increasing")
        if self.F[-1] != 1 or any(
            self.F[k] >= self.F[k + 1] for k in range(n - 1)
        ) or self.F[0] <= 0:
            raise PmfNotNormalized("cdf must be strictly increasing to 1")

    @property
    def n(self) -> int:
        return len(self.x)

    def pmf(self, i: int) -> Fraction:
        return self.F[i] - (self.F[i - 1] if i > 0 else ZERO)


def normalize_gamma(oi: OrdinalInstance, gamma: str) -> UnevenGridView:
    """Utility-space view for one taste: grid u(q; gamma), cdf H(q)."""
    if gamma not in oi.gamma_labels:
        raise UnknownGamma(f"unknown taste label {gamma!r}")
    row = oi.utility[oi.gamma_labels.index(gamma)]
    return UnevenGridView(
        x=tuple(row),
        F=tuple(oi.cdf(k) for k in range(oi.n)),
    )


def even_grid_view(inst: Instance) -> UnevenGridView:
    """The baseline instance seen as a trivially uneven grid."""
    return UnevenGridView(
        x=tuple(inst.x(k) for k in range(inst.n)),
        F=tuple(inst.cdf(k) for k in range(inst.n)),
    )


def uneven_convexity(view: UnevenGridView) -> ConvexityReport:
    """Discrete convexity of 1/F along the (possibly uneven) utility grid."""
    diffs = []
    violations = []
    for i in range(1, view.n - 1):
        d2 = (
            (view.x[i + 1] - view.x[i]) / view.F[i - 1]
            - (view.x[i + 1] - view.x[i - 1]) / view.F[i]
            + (view.x[i] - view.x[i - 1]) / view.F[i + 1]
        )
        diffs.append(d2)
        if d2 < 0:
            violations.append(i)
    return ConvexityReport(
        second_differences=tuple(diffs),
        is_convex=not violations,
        is_strictly_convex=all(d > 0 for d in diffs),
        violation_indices=tuple(violations),
    )


def uneven_multipliers(view: UnevenGridView) -> Multipliers:
    """Constraint weights with the grid spacing divided out.

    On the evenly spaced baseline grid these equal the baseline
    multipliers times (N - 1), matching the integer-gap scaling used
    there.
    """
    n = view.n
    local_up = tuple(
        view.pmf(i + 1) / view.F[i + 1] / (view.x[i + 1] - view.x[i])
        for i in range(n - 1)
    )
    down = []
    for i in range(n):
        row = []
        for j in range(i):
            if 1 <= i <= n - 2:
                bracket = (
                    (view.x[i + 1] - view.x[i]) / view.F[i - 1]
                    - (view.x[i + 1] - view.x[i - 1]) / view.F[i]
                    + (view.x[i] - view.x[i - 1]) / view.F[i + 1]
                )
                row.append(
                    view.pmf(j) * bracket
                    / ((view.x[i + 1] - view.x[i]) * (view.x[i] - view.x[i - 1]))
                )
            else:
                row.append(ZERO)
        down.append(tuple(row))
    return Multipliers(local_up=local_up, down=tuple(down))


def uneven_mu_coefficients(view: UnevenGridView) -> tuple[tuple[Fraction, ...], ...]:
    """Cell coefficients of the multiplier-weighted constraint sum on an
    uneven grid, asserted against the same closed forms as the baseline."""
    n = view.n
    mult = uneven_multipliers(view)

    def lu(i):
        return mult.local_up[i] if 0 <= i <= n - 2 else ZERO

    mu = [[ZERO] * n for _ in range(n)]
    for k in range(n):
        for i in range(k + 1):
            val = (view.x[k] - view.x[i]) * lu(i)
            if i >= 1:
                val -= (view.x[k] - view.x[i - 1]) * lu(i - 1)
                val += sum(
                    ((view.x[k] - view.x[i]) * mult.down[i][j] for j in range(i)),
                    ZERO,
                )
            for jp in range(i + 1, k + 1):
                val -= (view.x[k] - view.x[jp]) * mult.down[jp][i]
            mu[k][i] = val
    for k in range(n):
        assert mu[k][0] == 1 - view.pmf(0) / view.F[k]
        for i in range(1, k + 1):
            assert mu[k][i] == -view.pmf(i) / view.F[k]
    return tuple(tuple(row) for row in mu)


def optimal_common_lottery_ordinal(oi: OrdinalInstance, obj) -> CommonLottery:
    """One lottery over qualities, optimal simultaneously for every taste.

    Requires every taste's utility grid to pass the convexity test; the
    budget problem itself only involves the shared outside-option cdf, so
    the solution does not depend on the taste at all.
    """
    if not isinstance(obj, (Fill, Linear)):
        raise TypeError("ordinal optimum is defined for Fill/Linear objectives")
    failing = [
        label
        for label in oi.gamma_labels
        if not uneven_convexity(normalize_gamma(oi, label)).is_convex
    ]
    if failing:
        raise ConvexityHypothesisFailed(failing)
    inst = Instance(n=oi.n, f=oi.outside_pmf, g=oi.g, d=oi.d)
    solution = optimal_masses(inst, obj)
    return lottery_from_masses(inst, solution.masses)


def aggregate_per_gamma(oi: OrdinalInstance, per_gamma: dict) -> CommonLottery:
    """Taste-pmf mixture of per-taste lotteries over the shared qualities.

    Because position masses are linear in the offer probabilities and the
    outside-option cdf is taste-independent, the mixture's masses are the
    mixture of the per-taste masses.
    """
    c = [ZERO] * oi.n
    for label, weight in zip(oi.gamma_labels, oi.gamma_pmf):
        if label not in per_gamma:
            raise UnknownGamma(f"missing lottery for taste {label!r}")
        lot = per_gamma[label]
        if len(lot.c) != oi.n:
            raise DimensionMismatch(
                f"lottery for taste {label!r} has length {len(lot.c)}, need {oi.n}"
            )
        if lot.total() > 1 or any(ck < 0 for ck in lot.c):
            raise DimensionMismatch(
                f"lottery for taste {label!r} is not a valid offer distribution"
            )
        for k in range(oi.n):
            c[k] += weight * lot.c[k]
    return CommonLottery(c=tuple(c))


def masses_over_qualities(oi: OrdinalInstance, cl: CommonLottery) -> PositionMasses:
    """Position masses a lottery induces given the shared cdf."""
    return PositionMasses(
        s=tuple(oi.d * cl.c[k] * oi.cdf(k) for k in range(oi.n))
    )
