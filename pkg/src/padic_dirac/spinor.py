"""4x4 Dirac symbol algebra evaluated at p-adic frequency magnitudes."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
Z2 = np.zeros((2, 2), dtype=complex)
BETA = np.block([[I2, Z2], [Z2, -I2]])
ALPHA = np.array([np.block([[Z2, s], [s, Z2]]) for s in SIGMA])

for _m in (SIGMA, BETA, ALPHA):
    _m.setflags(write=False)


def dirac_algebra_deviation() -> float:
    """Largest deviation from the anticommutation relations."""
    dev = np.max(np.abs(BETA @ BETA - I4))
    for k in range(3):
        dev = max(dev, np.max(np.abs(ALPHA[k] @ ALPHA[k] - I4)))
        dev = max(dev, np.max(np.abs(ALPHA[k] @ BETA + BETA @ ALPHA[k])))
        for j in range(k + 1, 3):
            dev = max(dev, np.max(np.abs(ALPHA[k] @ ALPHA[j] + ALPHA[j] @ ALPHA[k])))
    return float(dev)


if dirac_algebra_deviation() > 1e-15:  # pragma: no cover
    raise RuntimeError("Dirac matrices fail the anticommutation relations")


@dataclass(frozen=True)
class FrequencyMagnitude:
    """The triple (p**e1, p**e2, p**e3) of p-adic frequency norms."""

    p: int
    exponents: tuple[int, int, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "exponents", tuple(int(e) for e in self.exponents))
        if len(self.exponents) != 3:
            raise ValueError("need three exponents")

    @classmethod
    def from_index(cls, idx) -> "FrequencyMagnitude":
        return cls(idx.ctx.p, idx.frequency_exponents)

    @property
    def values(self) -> np.ndarray:
        return np.array([float(self.p) ** e for e in self.exponents])


@dataclass(frozen=True)
class DiracParams:
    m: float
    e: float = 0.0
    A: tuple[float, float, float] = (0.0, 0.0, 0.0)
    phi: float = 0.0

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ValueError("mass must be nonnegative")

    @property
    def has_field(self) -> bool:
        return self.e != 0 and (any(self.A) or self.phi != 0)


def _q(q) -> np.ndarray:
    if isinstance(q, FrequencyMagnitude):
        return q.values
    arr = np.asarray(q, dtype=float)
    if arr.shape != (3,):
        raise ValueError("frequency must have three components")
    return arr


def _mass(m) -> float:
    return float(m.m if isinstance(m, DiracParams) else m)


def sigma_dot(q) -> np.ndarray:
    return np.einsum("k,kab->ab", _q(q).astype(complex), SIGMA)


def alpha_dot(q) -> np.ndarray:
    return np.einsum("k,kab->ab", np.asarray(q, dtype=complex), ALPHA)


def h_symbol(q, m) -> np.ndarray:
    """[[m, σ·q], [σ·q, -m]]."""
    return alpha_dot(_q(q)) + _mass(m) * BETA


def h_symbol_external(q, params: DiracParams) -> np.ndarray:
    """α·(q - eA) + βm + eφ for constant fields."""
    shifted = _q(q) - params.e * np.asarray(params.A, dtype=float)
    return alpha_dot(shifted) + params.m * BETA + params.e * params.phi * I4


def energy(q, m) -> float:
    qv = _q(q)
    return float(np.sqrt(qv @ qv + _mass(m) ** 2))


class SymbolFrame(NamedTuple):
    lam: float
    a_plus: float
    a_minus: float
    u: np.ndarray
    u_inv: np.ndarray


def lambda_a_u(q, m) -> SymbolFrame:
    """λ, a±, and the unitary u with u_inv·h·u = diag(λ, λ, -λ, -λ).

    u = a₊ - a₋·β(α·q)/|q| and u_inv = a₊ + a₋·β(α·q)/|q|.
    """
    qv = _q(q)
    mm = _mass(m)
    lam = energy(qv, mm)
    ap = float(np.sqrt((1 + mm / lam) / 2))
    am = float(np.sqrt((1 - mm / lam) / 2))
    K = BETA @ alpha_dot(qv / np.linalg.norm(qv))
    return SymbolFrame(lam, ap, am, ap * I4 - am * K, ap * I4 + am * K)


def plane_wave_spinor(k: int, q, m) -> np.ndarray:
    """Bispinor w_k with h·w = +λw (k = 1, 2) or -λw (k = 3, 4)."""
    qv = _q(q)
    mm = _mass(m)
    E = energy(qv, mm)
    X = sigma_dot(qv) / (E + mm)
    up, down = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    if k == 1:
        return np.concatenate([up, X @ up])
    if k == 2:
        return np.concatenate([down, X @ down])
    if k == 3:
        return np.concatenate([-(X @ down), down])
    if k == 4:
        return np.concatenate([-(X @ up), up])
    raise ValueError(f"k must be 1..4, got {k}")


def _sign(sign: str) -> int:
    if sign == "pos":
        return 1
    if sign == "neg":
        return -1
    raise ValueError(f"sign must be 'pos' or 'neg', got {sign!r}")


def projector_matrix(q, m, sign: str) -> np.ndarray:
    s = _sign(sign)
    return (I4 + s * h_symbol(q, m) / energy(q, m)) / 2


def evolution_matrix(q, m, t: float) -> np.ndarray:
    """exp(-i t h) = cos(λt) - i sin(λt) h/λ."""
    lam = energy(q, m)
    return np.cos(lam * t) * I4 - 1j * np.sin(lam * t) * h_symbol(q, m) / lam


def polar_parts(q, m) -> tuple[np.ndarray, np.ndarray]:
    """(|h|, sgn h) = (λ·1, h/λ)."""
    lam = energy(q, m)
    return lam * I4, h_symbol(q, m) / lam


def charge_conj_matrix() -> np.ndarray:
    """U_C = -iβα₂ (real, symmetric, squares to the identity)."""
    U = -1j * BETA @ ALPHA[1]
    assert np.max(np.abs(U.imag)) == 0
    return U


U_C = charge_conj_matrix()
U_C.setflags(write=False)


@lru_cache(maxsize=65536)
def _cached(p: int, exps: tuple[int, int, int], m: float) -> tuple[np.ndarray, float]:
    q = FrequencyMagnitude(p, exps)
    h = h_symbol(q, m)
    h.setflags(write=False)
    return h, energy(q, m)


def symbol_at(freq: FrequencyMagnitude, m: float) -> tuple[np.ndarray, float]:
    """Cached (h, λ) for a wavelet frequency."""
    return _cached(freq.p, freq.exponents, float(m))


def matrix_to_json(M: np.ndarray) -> list:
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in M]
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_json(obj: Sequence) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]
