"""Problem instances on the evenly spaced quality grid.

An instance bundles the grid size N, the outside-option pmf f (with cdf F),
the position-capacity pmf g, and the agent mass D.  Grid points
x_k = theta_k = k/(N-1) are implicit functions of the index and are never
stored, so they stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    BadMass,
    GridTooSmall,
    IndexOutOfRange,
    NegativeCapacity,
    NonPositiveTypeMass,
    PmfNotNormalized,
)
from .rationals import format_rational, parse_rational, parse_rational_vector

ONE = Fraction(1)


@dataclass(frozen=True)
class Instance:
    """A finite assignment environment on the even grid {0, 1/(N-1), ..., 1}.

    Attributes:
        n: grid size N (number of types = number of position qualities).
        f: outside-option pmf over types, full support.
        g: position-capacity pmf over qualities (zero entries allowed).
        d: total agent mass D; position mass is normalized to 1.
    """

    n: int
    f: tuple[Fraction, ...]
    g: tuple[Fraction, ...]
    d: Fraction
    _cdf: tuple[Fraction, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise GridTooSmall(f"need N >= 2, got {self.n}")
        if len(self.f) != self.n or len(self.g) != self.n:
            raise PmfNotNormalized(
                f"f and g must have length {self.n}, got {len(self.f)} and {len(self.g)}"
            )
        if any(fi <= 0 for fi in self.f):
            raise NonPositiveTypeMass("type pmf must have full support")
        if any(gk < 0 for gk in self.g):
            raise NegativeCapacity("position capacities must be >= 0")
        if sum(self.f) != 1 or sum(self.g) != 1:
            raise PmfNotNormalized("f and g must each sum to 1")
        if self.d <= 0:
            raise BadMass(f"agent mass must be positive, got {self.d}")
        acc = Fraction(0)
        cdf = []
        for fi in self.f:
            acc += fi
            cdf.append(acc)
        object.__setattr__(self, "_cdf", tuple(cdf))

    # -- grid geometry ------------------------------------------------

    def x(self, k: int) -> Fraction:
        """Quality of position k (also the outside option of type k)."""
        self._check_index(k)
        return Fraction(k, self.n - 1)

    theta = x

    def cdf(self, i: int) -> Fraction:
        """F(theta_i) = sum of f over types 0..i."""
        self._check_index(i)
        return self._cdf[i]

    def _check_index(self, i: int):
        if not 0 <= i < self.n:
            raise IndexOutOfRange(f"index {i} out of range for N={self.n}")

    # -- serialization ------------------------------------------------

    @classmethod
    def from_json_dict(cls, data: dict) -> "Instance":
        n = int(data["n"])
        return cls(
            n=n,
            f=parse_rational_vector(data["f"]),
            g=parse_rational_vector(data["g"]),
            d=parse_rational(data["D"]),
        )

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "f": [format_rational(v) for v in self.f],
            "g": [format_rational(v) for v in self.g],
            "D": format_rational(self.d),
        }


def new_instance(n, f, g, d) -> Instance:
    """Validated constructor accepting any rational-like entries."""
    return Instance(
        n=int(n),
        f=parse_rational_vector(f),
        g=parse_rational_vector(g),
        d=parse_rational(d),
    )


def uniform_instance(n: int, d=1) -> Instance:
    """Uniform type and position pmfs on an N-point grid."""
    w = Fraction(1, n)
    return Instance(n=n, f=(w,) * n, g=(w,) * n, d=parse_rational(d))


@dataclass(frozen=True)
class ConvexityReport:
    """Discrete second differences of 1/F at the interior grid points.

    Entry i (for interior index i+1... indexed by violation lists below)
    is 1/F(theta_i-1) - 2/F(theta_i) + 1/F(theta_i+1) for i = 1..N-2.
    """

    second_differences: tuple[Fraction, ...]
    is_convex: bool
    is_strictly_convex: bool
    violation_indices: tuple[int, ...]


def convexity_report(inst: Instance) -> ConvexityReport:
    """Test discrete convexity of 1/F on the type grid.

    For N=2 there is no interior point and the report is vacuously convex.
    """
    diffs = []
    violations = []
    for i in range(1, inst.n - 1):
        d2 = (
            ONE / inst.cdf(i - 1)
            - 2 * (ONE / inst.cdf(i))
            + ONE / inst.cdf(i + 1)
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
