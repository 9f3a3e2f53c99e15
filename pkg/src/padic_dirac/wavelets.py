"""Kozyrev wavelets, exact Haar quadrature of locally constant functions,
the Taibleson-Vladimirov operator and ball-indicator expansions."""

from __future__ import annotations

import cmath
import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .padic import (
    Ball1D,
    ContextMismatch,
    FieldContext,
    PAdicScalar,
    Polydisc,
    Relation,
)

DEFAULT_CELL_CAP = 10**7


# ---------------------------------------------------------------- indices


@dataclass(frozen=True)
class WaveletIndex1D:
    r: int
    n: PAdicScalar
    j: int

    def __post_init__(self) -> None:
        p = self.n.ctx.p
        if not 1 <= self.j <= p - 1:
            raise ValueError(f"j={self.j} outside 1..{p - 1}")
        if self.n.frac_part() != self.n.to_fraction():
            raise ValueError(f"n={self.n} is not a canonical Q_p/Z_p representative")

    @classmethod
    def make(cls, ctx: FieldContext, r: int, n=0, j: int = 1) -> "WaveletIndex1D":
        return cls(int(r), n if isinstance(n, PAdicScalar) else ctx.scalar(n), int(j))

    @property
    def ctx(self) -> FieldContext:
        return self.n.ctx

    @property
    def support(self) -> Ball1D:
        return Ball1D(self.ctx.pow(-self.r) * self.n, self.r)

    @property
    def constancy_exponent(self) -> int:
        return self.r - 1

    @property
    def frequency_exponent(self) -> int:
        return 1 - self.r

    def sort_key(self) -> tuple:
        return (self.r, self.n.to_fraction(), self.j)

    def conjugate(self) -> "WaveletIndex1D":
        return WaveletIndex1D(self.r, self.n, self.ctx.p - self.j)

    def to_json(self) -> dict:
        return {"r": self.r, "n": str(self.n), "j": self.j}

    @classmethod
    def from_json(cls, ctx: FieldContext, obj: Mapping) -> "WaveletIndex1D":
        return cls.make(ctx, obj["r"], ctx.scalar(str(obj["n"])), obj["j"])


@dataclass(frozen=True)
class WaveletIndex3D:
    axes: tuple[WaveletIndex1D, WaveletIndex1D, WaveletIndex1D]

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        if len(axes) != 3:
            raise ValueError("need three axis indices")
        if len({a.ctx for a in axes}) != 1:
            raise ContextMismatch("axis indices over different primes")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def make(cls, ctx: FieldContext, r: Sequence[int], n: Sequence = (0, 0, 0),
             j: Sequence[int] = (1, 1, 1)) -> "WaveletIndex3D":
        return cls(tuple(WaveletIndex1D.make(ctx, *t) for t in zip(r, n, j)))

    @property
    def ctx(self) -> FieldContext:
        return self.axes[0].ctx

    @property
    def r(self) -> tuple[int, int, int]:
        return tuple(a.r for a in self.axes)

    @property
    def n(self) -> tuple[PAdicScalar, ...]:
        return tuple(a.n for a in self.axes)

    @property
    def j(self) -> tuple[int, int, int]:
        return tuple(a.j for a in self.axes)

    @property
    def support(self) -> Polydisc:
        return Polydisc(tuple(a.support for a in self.axes))

    @property
    def constancy_exponents(self) -> tuple[int, ...]:
        return tuple(a.constancy_exponent for a in self.axes)

    @property
    def frequency_exponents(self) -> tuple[int, int, int]:
        return tuple(a.frequency_exponent for a in self.axes)

    def sort_key(self) -> tuple:
        return (self.r, tuple(x.to_fraction() for x in self.n), self.j)

    def __lt__(self, other: "WaveletIndex3D") -> bool:
        return self.sort_key() < other.sort_key()

    def conjugate(self) -> "WaveletIndex3D":
        return WaveletIndex3D(tuple(a.conjugate() for a in self.axes))

    def to_json(self) -> dict:
        return {"r": list(self.r), "n": [str(x) for x in self.n], "j": list(self.j)}

    @classmethod
    def from_json(cls, ctx: FieldContext, obj: Mapping) -> "WaveletIndex3D":
        return cls.make(ctx, obj["r"], [ctx.scalar(str(s)) for s in obj["n"]], obj["j"])


def index_from_json(ctx: FieldContext, obj: Mapping):
    if isinstance(obj["r"], list):
        return WaveletIndex3D.from_json(ctx, obj)
    return WaveletIndex1D.from_json(ctx, obj)


# ------------------------------------------------------------- evaluation


def _eval_1d(idx: WaveletIndex1D, x: PAdicScalar) -> complex:
    ctx = idx.ctx
    if x.ctx != ctx:
        raise ContextMismatch("point and index over different primes")
    p = ctx.p
    # y = p^r x - n over the common denominator p^K
    kx, kn = x.k - idx.r, idx.n.k
    K = max(kx, kn, 0)
    Y = x.a * p ** (K - kx) - idx.n.a * p ** (K - kn)
    if K and Y % p**K:
        return 0j
    mod = p ** (K + 1)
    phase = (idx.j * Y) % mod
    amp = _amplitude(p, idx.r)
    if phase == 0:
        return complex(amp)
    return amp * cmath.exp(2j * math.pi * (phase / mod))


@lru_cache(maxsize=4096)
def _amplitude(p: int, r: int) -> float:
    return float(p) ** (-r / 2)


def wavelet_eval(idx, x) -> complex:
    if isinstance(idx, WaveletIndex1D):
        return _eval_1d(idx, x)
    out = 1 + 0j
    for a, xi in zip(idx.axes, x):
        v = _eval_1d(a, xi)
        if v == 0:
            return 0j
        out *= v
    return out


def tv_eigenvalue(idx: WaveletIndex1D) -> Fraction:
    return Fraction(idx.ctx.p) ** (1 - idx.r)


# --------------------------------------------------- locally constant fns


class CellCapExceeded(RuntimeError):
    def __init__(self, cap: int, required: int, upper_estimate: int | None = None):
        self.cap = cap
        self.required = required
        self.upper_estimate = upper_estimate
        msg = f"refinement needs at least {required} cells, cap is {cap}"
        if upper_estimate is not None:
            msg += f" (worst-case estimate {upper_estimate})"
        super().__init__(msg)


@dataclass(frozen=True)
class LocallyConstantFunction:
    """Finite list of disjoint (polydisc, constant vector) cells, zero elsewhere."""

    cells: tuple[tuple[Polydisc, np.ndarray], ...]
    width: int = 1
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self) -> None:
        cells = []
        for B, v in self.cells:
            arr = np.array(np.atleast_1d(v), dtype=complex)
            if arr.shape != (self.width,):
                raise ValueError(f"cell value shape {arr.shape} != ({self.width},)")
            arr.setflags(write=False)
            cells.append((B, arr))
        if cells:
            d = cells[0][0].dim
            if any(B.dim != d for B, _ in cells):
                raise ValueError("cells of mixed dimension")
        if self.check:
            for (A, _), (B, _) in itertools.combinations(cells, 2):
                if A.relate(B) != Relation.DISJOINT:
                    raise ValueError(f"cells {A.to_json()} and {B.to_json()} intersect")
        object.__setattr__(self, "cells", tuple(cells))

    @property
    def dim(self) -> int | None:
        return self.cells[0][0].dim if self.cells else None

    def __call__(self, x: Sequence[PAdicScalar] | PAdicScalar) -> np.ndarray:
        if isinstance(x, PAdicScalar):
            x = (x,)
        for B, v in self.cells:
            if B.contains(x):
                return v
        return np.zeros(self.width, dtype=complex)

    def map(self, fn: Callable[[np.ndarray], np.ndarray], width: int | None = None):
        return LocallyConstantFunction(
            tuple((B, fn(v)) for B, v in self.cells), width or self.width, check=False
        )


@dataclass(frozen=True)
class Piece:
    """A summand for adaptive refinement: vanishes off ``support`` and is
    constant on balls of radius exponent ``constancy`` inside it."""

    support: Polydisc
    constancy: tuple[int, ...]


def _split_axes(cell: Polydisc, pieces: Sequence[Piece]) -> set[int]:
    axes = set()
    for pc in pieces:
        for i, (cb, sb) in enumerate(zip(cell.balls, pc.support.balls)):
            if sb.r < cb.r or cb.r > pc.constancy[i]:
                axes.add(i)
    return axes


def refine_cells(
    region: Polydisc,
    pieces: Sequence[Piece],
    cap: int = DEFAULT_CELL_CAP,
) -> list[tuple[Polydisc, list[int]]]:
    """Partition ``region`` into polydiscs on which every piece is constant.

    Returns (cell, indices of pieces that are nonzero there) in canonical
    depth-first order.  Cells where every piece vanishes are dropped.
    """
    leaves: list[tuple[Polydisc, list[int]]] = []
    stack = [(region, list(range(len(pieces))))]
    while stack:
        cell, active = stack.pop()
        live = [i for i in active if cell.intersects(pieces[i].support)]
        if not live:
            continue
        axes = _split_axes(cell, [pieces[i] for i in live])
        if not axes:
            leaves.append((cell, live))
            if len(leaves) > cap:
                raise CellCapExceeded(cap, len(leaves), _upper_estimate(region, pieces))
            continue
        options = [b.children() if i in axes else [b] for i, b in enumerate(cell.balls)]
        kids = [Polydisc(tuple(c)) for c in itertools.product(*options)]
        for kid in reversed(kids):
            stack.append((kid, live))
    return leaves


def _upper_estimate(region: Polydisc, pieces: Sequence[Piece]) -> int:
    total = 1
    for i, b in enumerate(region.balls):
        lo = min(pc.constancy[i] for pc in pieces)
        total *= region.ctx.p ** max(0, b.r - lo)
    return total


def lcf_from_pieces(
    region: Polydisc,
    pieces: Sequence[Piece],
    evaluate: Callable[[tuple[PAdicScalar, ...], list[int]], np.ndarray],
    width: int = 1,
    cap: int = DEFAULT_CELL_CAP,
) -> LocallyConstantFunction:
    """Build the exact LCF of a finite sum restricted to ``region``.

    ``evaluate(point, live)`` must return the function value at ``point``
    using only the summands listed in ``live``.
    """
    cells = []
    for cell, live in refine_cells(region, pieces, cap):
        v = np.atleast_1d(evaluate(cell.center, live))
        if np.any(v != 0):
            cells.append((cell, v))
    return LocallyConstantFunction(tuple(cells), width, check=False)


def wavelet_lcf(idx, region: Polydisc | None = None) -> LocallyConstantFunction:
    """A single wavelet as a locally constant function (scalar valued)."""
    if isinstance(idx, WaveletIndex1D):
        support = Polydisc((idx.support,))
        piece = Piece(support, (idx.constancy_exponent,))
        ev = lambda x, live: wavelet_eval(idx, x[0])
    else:
        support = idx.support
        piece = Piece(support, idx.constancy_exponents)
        ev = lambda x, live: wavelet_eval(idx, x)
    return lcf_from_pieces(region or support, [piece], ev)


def wavelet_sum_lcf(terms: Mapping, region: Polydisc | None = None, cap: int = DEFAULT_CELL_CAP):
    """LCF of Σ c·ψ_idx for a map of 3D (or 1D) indices to scalar coefficients."""
    items = list(terms.items())
    if not items:
        return LocallyConstantFunction(())
    as3 = [(i if isinstance(i, WaveletIndex3D) else None, c) for i, c in items]
    supports = [
        i.support if isinstance(i, WaveletIndex3D) else Polydisc((i.support,)) for i, _ in items
    ]
    consts = [
        i.constancy_exponents if isinstance(i, WaveletIndex3D) else (i.constancy_exponent,)
        for i, _ in items
    ]
    if region is None:
        region = supports[0]
        for s in supports[1:]:
            region = region.hull(s)
    pieces = [Piece(s, c) for s, c in zip(supports, consts)]

    def ev(x, live):
        vals = []
        for k in live:
            idx, c = items[k]
            pt = x if as3[k][0] is not None else x[0]
            vals.append(c * wavelet_eval(idx, pt))
        return _csum(vals)

    return lcf_from_pieces(region, pieces, ev, cap=cap)


def _csum(vals: Iterable[complex]) -> complex:
    vals = list(vals)
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


def _csum_vec(vecs: Sequence[np.ndarray], width: int) -> np.ndarray:
    if not vecs:
        return np.zeros(width, dtype=complex)
    arr = np.asarray(vecs, dtype=complex).reshape(len(vecs), width)
    return np.array(
        [complex(math.fsum(arr[:, c].real), math.fsum(arr[:, c].imag)) for c in range(width)]
    )


@dataclass(frozen=True)
class IntegralResult:
    integral: np.ndarray
    abs2: float
    measure: Fraction
    cells: int

    @property
    def scalar(self) -> complex:
        return complex(self.integral[0])


def refine_and_integrate(
    f: LocallyConstantFunction, B: Polydisc, cap: int = DEFAULT_CELL_CAP
) -> IntegralResult:
    """Exact Haar integral of ``f`` (and of ``|f|**2``) over ``B``.

    Each cell of ``f`` meets ``B`` in a polydisc (the per-axis smaller
    ball), so the integral is a finite sum of value times exact measure.
    ``measure`` is the exact Haar measure of ``B ∩ supp f``.
    """
    if len(f.cells) > cap:
        raise CellCapExceeded(cap, len(f.cells))
    vals, sq = [], []
    measure = Fraction(0)
    for cell, v in f.cells:
        inter = cell.intersection(B)
        if inter is None:
            continue
        mu = inter.measure()
        measure += mu
        w = float(mu)
        vals.append(v * w)
        sq.append(float(np.vdot(v, v).real) * w)
    return IntegralResult(_csum_vec(vals, f.width), math.fsum(sq), measure, len(vals))


def lcf_product(f: LocallyConstantFunction, g: LocallyConstantFunction,
                conj_second: bool = True) -> LocallyConstantFunction:
    """Pointwise (scalar) product f·conj(g) of two scalar LCFs."""
    cells = []
    for A, u in f.cells:
        for B, v in g.cells:
            inter = A.intersection(B)
            if inter is None:
                continue
            w = np.conj(v) if conj_second else v
            val = u * w
            if np.any(val != 0):
                cells.append((inter, val))
    return LocallyConstantFunction(tuple(cells), f.width, check=False)


# ------------------------------------------------- Taibleson-Vladimirov


def tv_oracle(f: LocallyConstantFunction, z: PAdicScalar) -> complex:
    """(D f)(z) from the defining hypersingular integral, by exact shell sums.

    With I(g) = ∫ f over the ball of radius p**g about z the integral
    ∫ (f(z-y) - f(z)) |y|**-2 dy splits into shells |y| = p**g; below the
    finest cell scale e the integrand vanishes, above the enclosing scale G
    f(z-y) = 0 and the remaining -f(z) part is a closed geometric series.
    """
    if f.width != 1:
        raise ValueError("tv_oracle needs a scalar-valued function")
    if not f.cells:
        return 0j
    if f.dim != 1:
        raise ValueError("tv_oracle is one-dimensional")
    p = z.ctx.p
    P = Fraction(p)
    fz = complex(f(z)[0])
    e = min(B.balls[0].r for B, _ in f.cells)
    G = e
    for B, _ in f.cells:
        b = B.balls[0]
        d = b.center - z
        G = max(G, b.r, d.k if d.a else b.r)

    def I(g: int) -> complex:
        return refine_and_integrate(f, Polydisc((Ball1D(z, g),))).scalar

    terms = []
    prev = I(e)
    for g in range(e + 1, G + 1):
        cur = I(g)
        terms.append(float(P ** (-2 * g)) * (cur - prev))
        prev = cur
    shell_mass = sum((P ** (-g) for g in range(e + 1, G + 1)), Fraction(0))
    local = (1 - Fraction(1, p)) * shell_mass + P ** (-G - 1)
    K = (1 - P) / (1 - P ** -2)
    total = _csum(terms) - fz * float(local)
    return complex(float(K) * total)


# ------------------------------------------------------- Lemma 1 pieces


class IndicatorCase(str, enum.Enum):
    UNCHANGED = "unchanged"
    SCALED_INDICATOR = "scaled_indicator"
    ZERO = "zero"


@dataclass(frozen=True)
class IndicatorProduct:
    case: IndicatorCase
    factor: float | None = None


def indicator_times_wavelet(R0: int, idx: WaveletIndex1D) -> IndicatorProduct:
    """Product of the indicator of p**R0 Z_p with ψ_idx, by support comparison."""
    ball = Ball1D(PAdicScalar(idx.ctx, 0), -R0)
    rel = idx.support.relate(ball)
    if rel in (Relation.A_INSIDE_B, Relation.EQUAL):
        return IndicatorProduct(IndicatorCase.UNCHANGED)
    if rel == Relation.B_INSIDE_A:
        # ψ is constant on any ball of radius <= r - 1 inside its support
        return IndicatorProduct(IndicatorCase.SCALED_INDICATOR, float(idx.ctx.p) ** (-idx.r / 2))
    return IndicatorProduct(IndicatorCase.ZERO)


@dataclass(frozen=True)
class ExpansionTruncation:
    r_max: int
    tail_norm2: Fraction


@dataclass(frozen=True)
class BallExpansion:
    coefficients: dict
    truncation: ExpansionTruncation
    partial_norm2: Fraction

    def to_json(self) -> list[dict]:
        return [
            {"index": k.to_json(), "re": float(c.real), "im": float(c.imag)}
            for k, c in self.coefficients.items()
        ]


def indicator_expansion_norms(p: int, R0: int, dim: int, r_max: int) -> tuple[Fraction, Fraction]:
    """(partial norm², tail norm²) of the normalized indicator expansion."""
    one_axis = 1 - Fraction(p) ** (-(r_max + R0))
    partial = one_axis**dim
    return partial, 1 - partial


def expand_ball_indicator(ctx: FieldContext, R0: int, dim: int, r_max: int) -> BallExpansion:
    """Wavelet coefficients of p**(dim*R0/2)·1[p**R0 Z_p**dim] up to scale r_max."""
    if dim not in (1, 3):
        raise ValueError("dim must be 1 or 3")
    lo = -R0 + 1
    if r_max < lo:
        raise ValueError(f"r_max={r_max} below series start {lo}")
    p = ctx.p
    zero = PAdicScalar(ctx, 0)
    rs = range(lo, r_max + 1)
    js = range(1, p)
    coeffs: dict = {}
    if dim == 1:
        for r in rs:
            for j in js:
                coeffs[WaveletIndex1D(r, zero, j)] = complex(float(p) ** ((-R0 - r) / 2))
    else:
        for r in itertools.product(rs, repeat=3):
            c = complex(float(p) ** ((-3 * R0 - sum(r)) / 2))
            for j in itertools.product(js, repeat=3):
                coeffs[WaveletIndex3D.make(ctx, r, (zero,) * 3, j)] = c
    partial, tail = indicator_expansion_norms(p, R0, dim, r_max)
    return BallExpansion(coeffs, ExpansionTruncation(r_max, tail), partial)


# ------------------------------------------------------------- Fourier


@dataclass(frozen=True)
class FourierDescriptor:
    """ψ̂(q) = amplitude · χ(modulation · q) on ``coset``, 0 elsewhere."""

    amplitude: float
    modulation: PAdicScalar
    coset: Ball1D

    def __call__(self, q: PAdicScalar) -> complex:
        if not self.coset.contains(q):
            return 0j
        return self.amplitude * (self.modulation * q).character()[1]


def wavelet_fourier(idx: WaveletIndex1D) -> FourierDescriptor:
    ctx = idx.ctx
    center = -(ctx.pow(idx.r - 1) * idx.j)
    return FourierDescriptor(
        float(ctx.p) ** (idx.r / 2),
        ctx.pow(-idx.r) * idx.n,
        Ball1D(center, -idx.r),
    )


def fourier_by_cells(f: LocallyConstantFunction, q: PAdicScalar) -> complex:
    """∫ χ(q·x) f(x) dx for a scalar 1D LCF, summing exact sub-cell characters.

    Cells are refined until χ(q·x) is constant on them (radius <= -ord q).
    """
    out = []
    qe = q.norm_exponent()
    for B, v in f.cells:
        ball = B.balls[0]
        stack = [ball]
        while stack:
            b = stack.pop()
            if qe is not None and b.r > -qe:
                stack.extend(b.children())
                continue
            out.append(complex(v[0]) * float(b.measure()) * (q * b.center).character()[1])
    return _csum(out)


def iter_canonical(terms: Mapping) -> Iterator:
    return iter(sorted(terms, key=lambda k: k.sort_key()))
