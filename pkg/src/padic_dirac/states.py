"""Finite wavelet-spinor states in L²(Q_p³) ⊗ C⁴ and the operators acting on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .padic import ContextMismatch, FieldContext, PAdicScalar, Polydisc
from .spinor import (
    U_C,
    FrequencyMagnitude,
    evolution_matrix,
    matrix_from_json,
    matrix_to_json,
    plane_wave_spinor,
    projector_matrix,
    symbol_at,
)
from .wavelets import (
    DEFAULT_CELL_CAP,
    IntegralResult,
    LocallyConstantFunction,
    Piece,
    WaveletIndex3D,
    lcf_from_pieces,
    refine_and_integrate,
    wavelet_eval,
)


def _freeze(v) -> np.ndarray:
    arr = np.array(v, dtype=complex).reshape(4)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpinorWaveletState:
    """Sparse map WaveletIndex3D -> C⁴, stored in canonical index order."""

    ctx: FieldContext
    terms: tuple[tuple[WaveletIndex3D, np.ndarray], ...] = ()

    def __post_init__(self) -> None:
        seen = {}
        for idx, amp in self.terms:
            if idx.ctx != self.ctx:
                raise ContextMismatch("index and state over different primes")
            if idx in seen:
                raise ValueError(f"duplicate index {idx.to_json()}")
            a = _freeze(amp)
            if np.any(a != 0):
                seen[idx] = a
        ordered = tuple(sorted(seen.items(), key=lambda t: t[0].sort_key()))
        object.__setattr__(self, "terms", ordered)

    @classmethod
    def from_map(cls, ctx: FieldContext, terms: Mapping) -> "SpinorWaveletState":
        return cls(ctx, tuple(terms.items()))

    def as_dict(self) -> dict:
        return dict(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def _check(self, other: "SpinorWaveletState") -> None:
        if self.ctx != other.ctx:
            raise ContextMismatch(f"p={self.ctx.p} vs p={other.ctx.p}")

    def __add__(self, other: "SpinorWaveletState") -> "SpinorWaveletState":
        self._check(other)
        acc = {k: np.array(v) for k, v in self.terms}
        for k, v in other.terms:
            acc[k] = acc[k] + v if k in acc else np.array(v)
        return SpinorWaveletState.from_map(self.ctx, acc)

    def __neg__(self) -> "SpinorWaveletState":
        return self.scale(-1)

    def __sub__(self, other: "SpinorWaveletState") -> "SpinorWaveletState":
        return self + (-other)

    def scale(self, c: complex) -> "SpinorWaveletState":
        return SpinorWaveletState(self.ctx, tuple((k, c * v) for k, v in self.terms))

    def __mul__(self, c: complex) -> "SpinorWaveletState":
        return self.scale(c)

    __rmul__ = __mul__

    def map_terms(self, fn) -> "SpinorWaveletState":
        return SpinorWaveletState(self.ctx, tuple((k, fn(k, v)) for k, v in self.terms))

    def norm2(self) -> float:
        return math.fsum(float(np.vdot(v, v).real) for _, v in self.terms)

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def __call__(self, x: Sequence[PAdicScalar]) -> np.ndarray:
        return evaluate(self, x)

    def to_json(self) -> list[dict]:
        return [{"index": k.to_json(), "amplitude": matrix_to_json(v)} for k, v in self.terms]

    @classmethod
    def from_json(cls, ctx: FieldContext, obj: Iterable[Mapping]) -> "SpinorWaveletState":
        terms = []
        for item in obj:
            terms.append((WaveletIndex3D.from_json(ctx, item["index"]),
                          matrix_from_json(item["amplitude"])))
        return cls(ctx, tuple(terms))


def state_arith(s: SpinorWaveletState, t: SpinorWaveletState | None, c: complex, op: str):
    if op == "add":
        if t is None:
            raise ValueError("add needs two states")
        return s + t.scale(c)
    if op == "scale":
        return s.scale(c)
    raise ValueError(f"unknown op {op!r}")


def l2_inner(s: SpinorWaveletState, t: SpinorWaveletState) -> complex:
    """Σ amp_s · conj(amp_t) over shared indices (conjugate-linear in t)."""
    s._check(t)
    other = dict(t.terms)
    vals = [np.vdot(other[k], v) for k, v in s.terms if k in other]
    return complex(math.fsum(z.real for z in vals), math.fsum(z.imag for z in vals))


def _freq(idx: WaveletIndex3D) -> FrequencyMagnitude:
    return FrequencyMagnitude.from_index(idx)


def h1_norm(s: SpinorWaveletState) -> float:
    p = s.ctx.p
    acc = []
    for idx, v in s.terms:
        top = max(float(p) ** e for e in idx.frequency_exponents)
        acc.append(float(np.vdot(v, v).real) * math.sqrt(max(1.0, top)))
    return math.sqrt(math.fsum(acc))


def apply_H0(s: SpinorWaveletState, m: float) -> SpinorWaveletState:
    return s.map_terms(lambda k, v: symbol_at(_freq(k), m)[0] @ v)


def project_energy(s: SpinorWaveletState, m: float, sign: str) -> SpinorWaveletState:
    return s.map_terms(lambda k, v: projector_matrix(_freq(k), m, sign) @ v)


def evolve(s: SpinorWaveletState, m: float, t: float) -> SpinorWaveletState:
    if t == 0:
        return s
    return s.map_terms(lambda k, v: evolution_matrix(_freq(k), m, t) @ v)


def localized_plane_wave(
    idx: WaveletIndex3D, m: float, sign: str, k: int | None = None
) -> SpinorWaveletState:
    """Unit-norm single-wavelet state with amplitude P_sign·w_k.

    By default w_1 is used for positive and w_3 for negative energy.
    """
    q = _freq(idx)
    if k is None:
        k = 1 if sign == "pos" else 3
    amp = projector_matrix(q, m, sign) @ plane_wave_spinor(k, q, m)
    nrm = float(np.linalg.norm(amp))
    if nrm < 1e-14:
        raise RuntimeError(f"w_{k} has no {sign} component at {idx.to_json()}")
    return SpinorWaveletState(idx.ctx, ((idx, amp / nrm),))


def evaluate(s: SpinorWaveletState, x: Sequence[PAdicScalar]) -> np.ndarray:
    """Pointwise value Σ amp·ψ_idx(x) in C⁴."""
    vals = [v * wavelet_eval(k, x) for k, v in s.terms]
    vals = [v for v in vals if np.any(v != 0)]
    return _vsum(vals)


def _vsum(vecs) -> np.ndarray:
    if not vecs:
        return np.zeros(4, dtype=complex)
    arr = np.asarray(vecs)
    return np.array([complex(math.fsum(arr[:, c].real), math.fsum(arr[:, c].imag))
                     for c in range(arr.shape[1])])


def to_lcf(s: SpinorWaveletState, region: Polydisc, cap: int = DEFAULT_CELL_CAP) -> LocallyConstantFunction:
    """The restriction of ``s`` to ``region`` as a C⁴-valued locally constant function."""
    terms = [(k, v) for k, v in s.terms if k.support.intersects(region)]
    pieces = [Piece(k.support, k.constancy_exponents) for k, _ in terms]

    def ev(x, live):
        return _vsum([terms[i][1] * wavelet_eval(terms[i][0], x) for i in live])

    return lcf_from_pieces(region, pieces, ev, width=4, cap=cap)


def bounding_polydisc(s: SpinorWaveletState) -> Polydisc | None:
    region = None
    for k, _ in s.terms:
        region = k.support if region is None else region.hull(k.support)
    return region


def localize(s: SpinorWaveletState, B: Polydisc, cap: int = DEFAULT_CELL_CAP) -> IntegralResult:
    return refine_and_integrate(to_lcf(s, B, cap), B, cap)


def localization_probability(s: SpinorWaveletState, B: Polydisc, cap: int = DEFAULT_CELL_CAP) -> float:
    """(s, Π_B s) = ∫_B |s(x)|² dx, cross terms included."""
    return localize(s, B, cap).abs2


def position_projection_ball(
    ctx: FieldContext, lam: float | Sequence[float]
) -> tuple[tuple[int, ...], Polydisc]:
    """m_λ with p**m_λ <= λ < p**(m_λ+1) per axis, and the centered polydisc."""
    lams = [lam] * 3 if np.isscalar(lam) else list(lam)
    exps = []
    for x in lams:
        q = Fraction(x)
        if q <= 0:
            raise ValueError(f"λ must be positive, got {x}")
        e = math.floor(math.log(float(q), ctx.p))
        P = Fraction(ctx.p)
        while P**e > q:
            e -= 1
        while P ** (e + 1) <= q:
            e += 1
        exps.append(e)
    return tuple(exps), Polydisc.make(ctx, [0] * len(exps), exps)


def charge_conjugate(s: SpinorWaveletState) -> SpinorWaveletState:
    """U_C·conj(Ψ); conj(ψ_{r,n,j}) = ψ_{r,n,p-j} moves the index."""
    return SpinorWaveletState(s.ctx, tuple((k.conjugate(), U_C @ np.conj(v)) for k, v in s.terms))
