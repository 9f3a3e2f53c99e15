"""Exact arithmetic on terminating p-adic numbers (the ring Z[1/p]).

A scalar is stored as ``a * p**(-k)`` in canonical form (``p`` does not
divide ``a``; zero is ``a = 0, k = 0``).  Balls and polydiscs are built on
top of this and every geometric quantity (order, norm, distance, Haar
measure) is an exact :class:`fractions.Fraction`.
"""

from __future__ import annotations

import cmath
import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

MAX_PRIME = 2**32


class ContextMismatch(ValueError):
    """Raised when objects built over different primes are combined."""


def is_prime(n: int) -> bool:
    """Deterministic trial-division primality test (fine for n < 2**32)."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


@dataclass(frozen=True)
class FieldContext:
    p: int

    def __post_init__(self) -> None:
        if isinstance(self.p, bool) or not isinstance(self.p, int):
            raise TypeError(f"p must be an int, got {self.p!r}")
        if self.p >= MAX_PRIME:
            raise ValueError(f"p={self.p} too large (limit 2**32)")
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")

    def scalar(self, value: int | Fraction | str) -> "PAdicScalar":
        if isinstance(value, str):
            return PAdicScalar.parse(self, value)
        return PAdicScalar.from_fraction(self, Fraction(value))

    def pow(self, e: int) -> "PAdicScalar":
        """The scalar p**e."""
        return PAdicScalar(self, 1, -e)


def _check_ctx(x, y) -> None:
    if x.ctx != y.ctx:
        raise ContextMismatch(f"p={x.ctx.p} vs p={y.ctx.p}")


def _strip(p: int, a: int, k: int) -> tuple[int, int]:
    if a == 0:
        return 0, 0
    while a % p == 0:
        a //= p
        k -= 1
    return a, k


_SCALAR_RE = re.compile(r"^\s*(-?\d+)\s*/\s*(\d+)\s*\^\s*(-?\d+)\s*$")


@dataclass(frozen=True)
class PAdicScalar:
    """Exact element ``a * p**(-k)`` of Z[1/p]."""

    ctx: FieldContext
    a: int
    k: int = 0

    def __post_init__(self) -> None:
        a, k = _strip(self.ctx.p, int(self.a), int(self.k))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "k", k)

    @classmethod
    def from_fraction(cls, ctx: FieldContext, q: Fraction) -> "PAdicScalar":
        q = Fraction(q)
        den = q.denominator
        k = 0
        while den % ctx.p == 0:
            den //= ctx.p
            k += 1
        if den != 1:
            raise ValueError(f"{q} is not in Z[1/{ctx.p}]")
        return cls(ctx, q.numerator, k)

    @classmethod
    def parse(cls, ctx: FieldContext, text: str) -> "PAdicScalar":
        """Parse ``"a/p^k"``; plain rationals like ``"1/3"`` or ``"5"`` are also accepted."""
        m = _SCALAR_RE.match(text)
        if m:
            a, base, k = int(m.group(1)), int(m.group(2)), int(m.group(3))
            if base != ctx.p:
                raise ContextMismatch(f"scalar {text!r} uses base {base}, context p={ctx.p}")
            return cls(ctx, a, k)
        try:
            q = Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse p-adic scalar {text!r}") from exc
        return cls.from_fraction(ctx, q)

    def __str__(self) -> str:
        return f"{self.a}/{self.ctx.p}^{self.k}"

    def to_json(self) -> str:
        return str(self)

    def to_fraction(self) -> Fraction:
        if self.k >= 0:
            return Fraction(self.a, self.ctx.p**self.k)
        return Fraction(self.a * self.ctx.p ** (-self.k))

    def is_zero(self) -> bool:
        return self.a == 0

    def order(self) -> float | int:
        """p-adic order; ``math.inf`` for zero."""
        return math.inf if self.a == 0 else -self.k

    def norm(self) -> Fraction:
        if self.a == 0:
            return Fraction(0)
        return Fraction(self.ctx.p) ** self.k

    def norm_exponent(self) -> int | None:
        """e with norm = p**e, or None for zero."""
        return None if self.a == 0 else self.k

    def frac_part(self) -> Fraction:
        if self.a == 0 or self.k <= 0:
            return Fraction(0)
        mod = self.ctx.p**self.k
        return Fraction(self.a % mod, mod)

    def character(self) -> tuple[Fraction, complex]:
        phase = self.frac_part()
        if phase == 0:
            return phase, complex(1.0, 0.0)
        return phase, cmath.exp(2j * math.pi * (phase.numerator / phase.denominator))

    def in_Zp(self) -> bool:
        return self.a == 0 or self.k <= 0

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "PAdicScalar":
        if isinstance(other, PAdicScalar):
            _check_ctx(self, other)
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return PAdicScalar.from_fraction(self.ctx, Fraction(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.ctx.p
        k = max(self.k, other.k)
        a = self.a * p ** (k - self.k) + other.a * p ** (k - other.k)
        return PAdicScalar(self.ctx, a, k)

    __radd__ = __add__

    def __neg__(self) -> "PAdicScalar":
        return PAdicScalar(self.ctx, -self.a, self.k)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return PAdicScalar(self.ctx, self.a * other.a, self.k + other.k)

    __rmul__ = __mul__

    def __lt__(self, other: "PAdicScalar") -> bool:
        _check_ctx(self, other)
        return self.to_fraction() < other.to_fraction()


def scalar_arith(x: PAdicScalar, y: PAdicScalar | None, op: str) -> PAdicScalar:
    if op == "neg":
        return -x
    if y is None:
        raise ValueError(f"op {op!r} needs two operands")
    _check_ctx(x, y)
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    raise ValueError(f"unknown op {op!r}")


def _within(p: int, x: PAdicScalar, y: PAdicScalar, r: int) -> bool:
    """|x - y| <= p**r, on raw integers."""
    if x.ctx.p != y.ctx.p:
        raise ContextMismatch(f"p={x.ctx.p} vs p={y.ctx.p}")
    K = max(x.k, y.k)
    if K <= r:
        return True
    D = x.a * p ** (K - x.k) - y.a * p ** (K - y.k)
    return D % p ** (K - r) == 0


class PAdicVec3(NamedTuple):
    x1: PAdicScalar
    x2: PAdicScalar
    x3: PAdicScalar

    def norm(self) -> Fraction:
        return max(c.norm() for c in self)

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self) + ")"


def vec3(ctx: FieldContext, values: Sequence) -> PAdicVec3:
    if len(values) != 3:
        raise ValueError("need exactly three components")
    return PAdicVec3(*(v if isinstance(v, PAdicScalar) else ctx.scalar(v) for v in values))


class Relation(str, enum.Enum):
    DISJOINT = "disjoint"
    A_INSIDE_B = "A_inside_B"
    B_INSIDE_A = "B_inside_A"
    EQUAL = "equal"
    # only possible for polydiscs: axes nest in opposite directions
    OVERLAP = "overlap"


@dataclass(frozen=True)
class Ball1D:
    """{x : |x - center| <= p**r} with a canonical center."""

    center: PAdicScalar
    r: int

    def __post_init__(self) -> None:
        c = self.center
        if c.k > self.r:
            mod = c.ctx.p ** (c.k - self.r)
            canon = PAdicScalar(c.ctx, c.a % mod, c.k)
        else:
            canon = PAdicScalar(c.ctx, 0, 0)
        object.__setattr__(self, "center", canon)
        object.__setattr__(self, "r", int(self.r))

    @property
    def ctx(self) -> FieldContext:
        return self.center.ctx

    def contains(self, x: PAdicScalar) -> bool:
        return _within(self.ctx.p, x, self.center, self.r)

    def measure(self) -> Fraction:
        return Fraction(self.ctx.p) ** self.r

    def intersects(self, other: "Ball1D") -> bool:
        return _within(self.ctx.p, self.center, other.center, max(self.r, other.r))

    def relate(self, other: "Ball1D") -> Relation:
        _check_ctx(self.center, other.center)
        if not self.intersects(other):
            return Relation.DISJOINT
        if self.r == other.r:
            return Relation.EQUAL
        return Relation.A_INSIDE_B if self.r < other.r else Relation.B_INSIDE_A

    def distance(self, other: "Ball1D") -> Fraction:
        if self.intersects(other):
            return Fraction(0)
        return (self.center - other.center).norm()

    def children(self) -> list["Ball1D"]:
        """The p balls of radius exponent r - 1 partitioning this ball."""
        step = PAdicScalar(self.ctx, 1, self.r)
        return [Ball1D(self.center + step * t, self.r - 1) for t in range(self.ctx.p)]

    def translate(self, c: PAdicScalar) -> "Ball1D":
        return Ball1D(self.center + c, self.r)

    def to_json(self) -> dict:
        return {"center": str(self.center), "radius_exponent": self.r}


@dataclass(frozen=True)
class Polydisc:
    """Product of one-dimensional balls (any dimension; 3 in physical use)."""

    balls: tuple[Ball1D, ...]

    def __post_init__(self) -> None:
        balls = tuple(self.balls)
        if not balls:
            raise ValueError("polydisc needs at least one axis")
        for b in balls[1:]:
            _check_ctx(balls[0].center, b.center)
        object.__setattr__(self, "balls", balls)

    @classmethod
    def make(cls, ctx: FieldContext, centers: Iterable, radii: Iterable[int]) -> "Polydisc":
        cs = [c if isinstance(c, PAdicScalar) else ctx.scalar(c) for c in centers]
        rs = list(radii)
        if len(cs) != len(rs):
            raise ValueError("centers and radii differ in length")
        return cls(tuple(Ball1D(c, r) for c, r in zip(cs, rs)))

    @classmethod
    def unit(cls, ctx: FieldContext, dim: int = 3, r: int = 0) -> "Polydisc":
        """The centered polydisc (p**-r Z_p)**dim."""
        return cls.make(ctx, [0] * dim, [r] * dim)

    @property
    def ctx(self) -> FieldContext:
        return self.balls[0].ctx

    @property
    def dim(self) -> int:
        return len(self.balls)

    @property
    def center(self) -> tuple[PAdicScalar, ...]:
        return tuple(b.center for b in self.balls)

    @property
    def radius_exponents(self) -> tuple[int, ...]:
        return tuple(b.r for b in self.balls)

    def contains(self, x: Sequence[PAdicScalar]) -> bool:
        return all(b.contains(c) for b, c in zip(self.balls, x))

    def measure(self) -> Fraction:
        return Fraction(self.ctx.p) ** sum(self.radius_exponents)

    def relate(self, other: "Polydisc") -> Relation:
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        rels = [a.relate(b) for a, b in zip(self.balls, other.balls)]
        if Relation.DISJOINT in rels:
            return Relation.DISJOINT
        inner = all(r in (Relation.A_INSIDE_B, Relation.EQUAL) for r in rels)
        outer = all(r in (Relation.B_INSIDE_A, Relation.EQUAL) for r in rels)
        if inner and outer:
            return Relation.EQUAL
        if inner:
            return Relation.A_INSIDE_B
        if outer:
            return Relation.B_INSIDE_A
        return Relation.OVERLAP

    def intersects(self, other: "Polydisc") -> bool:
        return all(a.intersects(b) for a, b in zip(self.balls, other.balls))

    def intersection(self, other: "Polydisc") -> "Polydisc | None":
        if not self.intersects(other):
            return None
        return Polydisc(tuple(a if a.r <= b.r else b for a, b in zip(self.balls, other.balls)))

    def hull(self, other: "Polydisc") -> "Polydisc":
        """Smallest polydisc containing both."""
        out = []
        for a, b in zip(self.balls, other.balls):
            d = a.center - b.center
            r = max(a.r, b.r, d.k if d.a else a.r)
            out.append(Ball1D(a.center, r))
        return Polydisc(tuple(out))

    def distance(self, other: "Polydisc") -> Fraction:
        return max(a.distance(b) for a, b in zip(self.balls, other.balls))

    def translate(self, c: Sequence[PAdicScalar]) -> "Polydisc":
        return Polydisc(tuple(b.translate(x) for b, x in zip(self.balls, c)))

    def to_json(self) -> dict:
        return {
            "center": [str(c) for c in self.center],
            "radius_exponents": list(self.radius_exponents),
        }

    @classmethod
    def from_json(cls, ctx: FieldContext, obj: dict) -> "Polydisc":
        return cls.make(ctx, [ctx.scalar(s) for s in obj["center"]], obj["radius_exponents"])


Polydisc3 = Polydisc


def ball_relate(A: Polydisc, B: Polydisc) -> Relation:
    return A.relate(B)


def ball_distance(A: Polydisc, B: Polydisc) -> Fraction:
    return A.distance(B)


def haar_measure(B: Polydisc | Ball1D) -> Fraction:
    return B.measure()


def format_fraction(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"
