"""Transition probability between distant p-adic balls for the free Dirac flow.

The initial state is the positive-energy projection of a normalized ball
indicator times a constant spinor.  After evolution the probability of
finding the particle in a ball ``B'`` at p-adic distance ``p**l0·|b|`` is
computed exactly for the truncated expansion, together with a rigorous
bound on the truncation error.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from .padic import FieldContext, PAdicScalar, Polydisc, format_fraction
from .spinor import ALPHA, BETA, I4, FrequencyMagnitude, symbol_at
from .states import SpinorWaveletState, evolve, localization_probability
from .wavelets import WaveletIndex1D, expand_ball_indicator, wavelet_eval

log = logging.getLogger(__name__)

MODES = ("unitary_exact", "paper_literal")
CSV_COLUMNS = ("t", "probability", "tail_bound", "mode", "distance", "p", "m", "L", "l0", "r_max")
EPS = 2.0**-53
# reference grid side limit for the tail engine
MAX_GRID = 160


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


def _int(key: str, v: Any) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(key, f"expected an integer, got {v!r}")
    return v


def _real(key: str, v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(key, "must be finite")
    return v


@dataclass(frozen=True)
class CausalityConfig:
    p: int = 3
    m: float = 1.0
    L: int = 0
    l0: int = 1
    b: tuple[str, str, str] = ("1/3^1", "1/3^1", "1/3^1")
    a: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    r_max: int = 6
    times: tuple[float, ...] = (0.0, 1e-6, 1e-3, 1.0)
    mode: str = "unitary_exact"

    def __post_init__(self) -> None:
        p = _int("p", self.p)
        try:
            ctx = FieldContext(p)
        except (ValueError, TypeError) as exc:
            raise ConfigError("p", str(exc)) from None
        m = _real("m", self.m)
        if m < 0:
            raise ConfigError("m", "mass must be nonnegative")
        L, l0, r_max = _int("L", self.L), _int("l0", self.l0), _int("r_max", self.r_max)
        if l0 < -L + 1:
            raise ConfigError("l0", f"need l0 >= -L + 1 = {-L + 1}, got {l0}")
        lo = -min(L - 1, l0) + 1
        if r_max < lo:
            raise ConfigError("r_max", f"need r_max >= -min(L-1, l0) + 1 = {lo}, got {r_max}")
        if len(self.b) != 3:
            raise ConfigError("b", "need three components")
        bs = []
        for i, s in enumerate(self.b):
            try:
                x = s if isinstance(s, PAdicScalar) else ctx.scalar(str(s))
            except ValueError as exc:
                raise ConfigError("b", f"component {i}: {exc}") from None
            if x.is_zero() or x.frac_part() != x.to_fraction():
                raise ConfigError("b", f"component {i} ({x}) must be a nonzero fractional representative")
            bs.append(str(x))
        if len(self.a) != 4:
            raise ConfigError("a", "need four components")
        a = tuple(_real("a", v) for v in self.a)
        if any(v <= 0 for v in a):
            raise ConfigError("a", "components must be positive")
        if len(self.times) == 0:
            raise ConfigError("times", "need at least one time")
        ts = tuple(_real("times", v) for v in self.times)
        if any(v < 0 for v in ts):
            raise ConfigError("times", "times must be nonnegative")
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "b", tuple(bs))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "times", ts)

    # derived ----------------------------------------------------------
    @property
    def ctx(self) -> FieldContext:
        return FieldContext(self.p)

    @property
    def b_scalars(self) -> tuple[PAdicScalar, ...]:
        return tuple(self.ctx.scalar(s) for s in self.b)

    @property
    def series_start(self) -> int:
        return 1 - self.L

    @property
    def literal_start(self) -> int:
        return -min(self.L - 1, self.l0)

    @property
    def initial_ball(self) -> Polydisc:
        return Polydisc.unit(self.ctx, 3, -self.L)

    @property
    def target_ball(self) -> Polydisc:
        s = self.ctx.pow(-self.l0)
        return Polydisc.make(self.ctx, [s * x for x in self.b_scalars], [self.l0] * 3)

    @property
    def shell_exponents(self) -> tuple[int, int, int]:
        """d_i with |center of B' along axis i| = p**d_i."""
        return tuple(self.l0 + x.k for x in self.b_scalars)

    def distance_formula(self) -> Fraction:
        return Fraction(self.p) ** self.l0 * max(x.norm() for x in self.b_scalars)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "m": self.m,
            "L": self.L,
            "l0": self.l0,
            "b": list(self.b),
            "a": list(self.a),
            "r_max": self.r_max,
            "times": list(self.times),
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "CausalityConfig":
        known = set(cls.__dataclass_fields__)
        for k in obj:
            if k not in known:
                raise ConfigError(k, "unknown key")
        kw = dict(obj)
        for k in ("b", "a", "times"):
            if k in kw:
                if not isinstance(kw[k], (list, tuple)):
                    raise ConfigError(k, "expected a list")
                kw[k] = tuple(kw[k])
        return cls(**kw)

    def with_overrides(self, **kw) -> "CausalityConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def default_config() -> CausalityConfig:
    return CausalityConfig()


# ------------------------------------------------------------ initial state


@dataclass(frozen=True)
class InitialState:
    state: SpinorWaveletState
    pre_projection_norm2: Fraction
    omitted_norm2: Fraction
    projected_norm2: float

    @property
    def projection_loss(self) -> float:
        return float(self.pre_projection_norm2) - self.projected_norm2

    @property
    def deficit(self) -> float:
        """1 - ‖P_pos φ_trunc‖², removed by renormalization."""
        return 1.0 - self.projected_norm2


def _unit_spinor(a: Sequence[float]) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return a / np.linalg.norm(a)


def _pos_projector(p: int, r: Sequence[int], m: float) -> np.ndarray:
    h, lam = symbol_at(FrequencyMagnitude(p, tuple(1 - x for x in r)), m)
    return (I4 + h / lam) / 2


def projected_ball_state(ctx: FieldContext, L: int, a: Sequence[float], m: float, r_max: int) -> InitialState:
    """P_pos applied termwise to the truncated expansion of the normalized
    indicator of p**L Z_p**3 times a/|a|, then renormalized."""
    exp = expand_ball_indicator(ctx, L, 3, r_max)
    ahat = _unit_spinor(a)
    amps = {}
    cache: dict = {}
    for idx, c in exp.coefficients.items():
        r = idx.r
        if r not in cache:
            cache[r] = _pos_projector(ctx.p, r, m) @ ahat
        amps[idx] = c * cache[r]
    raw = SpinorWaveletState.from_map(ctx, amps)
    n2 = raw.norm2()
    return InitialState(
        raw.scale(1 / math.sqrt(n2)),
        exp.partial_norm2,
        exp.truncation.tail_norm2,
        n2,
    )


def build_initial_state(cfg: CausalityConfig) -> InitialState:
    return projected_ball_state(cfg.ctx, cfg.L, cfg.a, cfg.m, cfg.r_max)


def omitted_axis_mass(p: int, L: int, r_max: int) -> Fraction:
    """Pre-projection L² mass of one axis factor beyond r_max."""
    return Fraction(p) ** (-(r_max + L))


# ---------------------------------------------------------- paper display


def paper_amplitudes(q: Sequence[float], m: float, a: Sequence[complex]) -> np.ndarray:
    """A_1..A_4 transcribed componentwise: rows of (λ + h)/(2λ) applied to a."""
    q1, q2, q3 = (float(x) for x in q)
    a1, a2, a3, a4 = (complex(x) for x in a)
    lam = math.sqrt(q1 * q1 + q2 * q2 + q3 * q3 + m * m)
    qm, qp = complex(q1, -q2), complex(q1, q2)
    A = [
        lam * a1 + m * a1 + q3 * a3 + qm * a4,
        lam * a2 + m * a2 + qp * a3 - q3 * a4,
        lam * a3 - m * a3 + q3 * a1 + qm * a2,
        lam * a4 - m * a4 + qp * a1 - q3 * a2,
    ]
    return np.array(A) / (2 * lam)


def _literal_terms(cfg: CausalityConfig, R: int, t: float) -> list[float]:
    p = cfg.p
    lo = cfg.literal_start
    mult = (p - 1) ** 3
    out = []
    rng = range(lo, R + 1)
    for r1 in rng:
        for r2 in rng:
            for r3 in rng:
                q = [float(p) ** (1 - r) for r in (r1, r2, r3)]
                A = paper_amplitudes(q, cfg.m, cfg.a)
                lam = math.sqrt(sum(x * x for x in q) + cfg.m**2)
                coef = float(p) ** ((-3 * cfg.L - r1 - r2 - r3) / 2)
                out.append(mult * coef * math.exp(-lam * t) * float(np.vdot(A, A).real))
    return out


def paper_literal_probability(cfg: CausalityConfig, t: float, r_max: int | None = None) -> float:
    return math.fsum(_literal_terms(cfg, cfg.r_max if r_max is None else r_max, t))


def paper_literal_tail(cfg: CausalityConfig, r_max: int | None = None) -> Fraction:
    """Upper bound on the omitted part of the display (e^{-λt} <= 1, |A| <= |a|)."""
    R = cfg.r_max if r_max is None else r_max
    p = cfg.p
    s = 1 / (1 - p**-0.5)
    g_all = p ** (-cfg.literal_start / 2) * s
    g_out = p ** (-(R + 1) / 2) * s
    g_in = g_all - g_out
    diff = g_out * (g_all * g_all + g_all * g_in + g_in * g_in)
    a2 = sum(x * x for x in cfg.a)
    val = (p - 1) ** 3 * p ** (-1.5 * cfg.L) * a2 * diff
    return ceil_fraction(val * (1 + 1e-12))


def unitary_diagonal_part(cfg: CausalityConfig, init: InitialState) -> float:
    """Σ c_r·|P_pos(q_r) a|² read back from the built state's amplitudes.

    This is the paper display at t = 0 (coefficients to the first power,
    no cross terms) evaluated through the projected state instead of the
    componentwise A_k formulas.
    """
    p = cfg.p
    a2 = sum(x * x for x in cfg.a)
    lo = cfg.literal_start
    out = []
    for idx, v in init.state.terms:
        if min(idx.r) < lo:
            continue
        c = float(p) ** ((-3 * cfg.L - sum(idx.r)) / 2)
        out.append(float(np.vdot(v, v).real) * init.projected_norm2 * a2 / c)
    return math.fsum(out)


# ------------------------------------------------------ reference engine


def ceil_fraction(x: float, digits: int = 17) -> Fraction:
    """Smallest decimal with ``digits`` significant digits that is >= x."""
    if x <= 0:
        return Fraction(0)
    q = Fraction(x)
    e = math.floor(math.log10(x))
    scale = Fraction(10) ** (digits - 1 - e)
    n = math.ceil(q * scale)
    out = Fraction(n) / scale
    while out < q:  # log10 rounding at decade edges
        n += 1
        out = Fraction(n) / scale
    return out


@dataclass(frozen=True)
class _Reference:
    lo: int
    R_ref: int
    d: tuple[int, int, int]
    weights: np.ndarray  # (n, 3): j-summed coefficient·wavelet value on B'
    v: np.ndarray  # (n, n, n, 4): P_pos â
    lam: np.ndarray  # (n, n, n)
    n2_cum: np.ndarray  # N² over [lo, R]³, indexed by R - lo
    abs_cum: np.ndarray  # Σ |W|·|v| over [lo, R]³ (float error budget)
    count_cum: np.ndarray
    tail_V: float  # |V_∞ - V_ref| bound
    tail_N2: Fraction  # N²_∞ - N²_ref bound
    mu: float


def _reference(cfg: CausalityConfig) -> _Reference:
    p, L = cfg.p, cfg.L
    ctx = cfg.ctx
    lo = cfg.series_start
    d = cfg.shell_exponents
    depth = math.ceil(64 / math.log2(p))
    R_ref = max(max(d) + depth, cfg.r_max + depth)
    n = R_ref - lo + 1
    if n > MAX_GRID:
        raise ValueError(f"reference grid of side {n} exceeds {MAX_GRID}; reduce r_max or |L|")
    rs = np.arange(lo, R_ref + 1)
    zero = PAdicScalar(ctx, 0)
    center = cfg.target_ball.center
    W = np.zeros((n, 3))
    for i in range(3):
        for k, r in enumerate(rs):
            s = sum(wavelet_eval(WaveletIndex1D(int(r), zero, j), center[i]) for j in range(1, p))
            W[k, i] = float(p) ** (-(L + r) / 2) * s.real
    q = float(p) ** (1 - rs.astype(float))
    Q = np.stack(np.meshgrid(q, q, q, indexing="ij"), axis=-1)
    lam = np.sqrt(np.sum(Q * Q, axis=-1) + cfg.m**2)
    H = np.einsum("xyzk,kab->xyzab", Q.astype(complex), ALPHA) + cfg.m * BETA
    ahat = _unit_spinor(cfg.a)
    v = 0.5 * (ahat + np.einsum("xyzab,b->xyza", H, ahat) / lam[..., None])
    c2 = float(p) ** (-L) * float(p) ** (-rs.astype(float))  # per-axis c²
    C2 = c2[:, None, None] * c2[None, :, None] * c2[None, None, :]
    mass = (p - 1) ** 3 * C2 * np.sum(np.abs(v) ** 2, axis=-1)
    absW = np.abs(W)
    WW = absW[:, None, None, 0] * absW[None, :, None, 1] * absW[None, None, :, 2]
    absterm = WW * np.linalg.norm(v, axis=-1)

    def cube(arr):
        c = arr.cumsum(0).cumsum(1).cumsum(2)
        return np.array([c[k, k, k] for k in range(n)])

    count = np.arange(1, n + 1, dtype=float) ** 3
    # beyond R_ref: per-axis Σ_{r>=d}|S| = 2 p^{-L/2} p^{-d}, of which p^{-L/2} p^{-R} is omitted
    pl = float(p) ** (-L / 2)
    full = [2 * pl * float(p) ** (-di) for di in d]
    inside = [f - pl * float(p) ** (-R_ref) for f in full]
    tail_V = (math.prod(full) - math.prod(inside)) * (1 + 1e-12)
    tail_N2 = 1 - (1 - Fraction(p) ** (-(R_ref + L))) ** 3
    mu = float(cfg.target_ball.measure())
    return _Reference(lo, R_ref, d, W, v, lam, cube(mass), cube(absterm), count, tail_V, tail_N2, mu)


def _ref_probabilities(ref: _Reference, t: float) -> tuple[np.ndarray, np.ndarray]:
    """P_R(t) for every R on the grid, with a floating error budget."""
    W = ref.weights
    WW = W[:, None, None, 0] * W[None, :, None, 1] * W[None, None, :, 2]
    terms = WW[..., None] * ref.v * np.exp(-1j * ref.lam * t)[..., None]
    c = terms.cumsum(0).cumsum(1).cumsum(2)
    n = W.shape[0]
    V = np.array([c[k, k, k] for k in range(n)])
    absV = np.linalg.norm(V, axis=-1)
    gamma = (ref.count_cum + 64) * EPS * 1.01
    dV = 2 * gamma * ref.abs_cum
    N2 = ref.n2_cum
    P = ref.mu * absV**2 / N2
    err = ref.mu * (2 * absV * dV + dV**2) / N2 + P * 4 * gamma
    return P, err


def _limit_interval(ref: _Reference, t: float) -> tuple[float, float]:
    """Enclosure of P_R for every R >= R_ref (and the untruncated limit)."""
    P, err = _ref_probabilities(ref, t)
    W = ref.weights
    WW = W[:, None, None, 0] * W[None, :, None, 1] * W[None, None, :, 2]
    V = np.sum(WW[..., None] * ref.v * np.exp(-1j * ref.lam * t)[..., None], axis=(0, 1, 2))
    absV = float(np.linalg.norm(V))
    gamma = (ref.count_cum[-1] + 64) * EPS * 1.01
    dV = 2 * gamma * ref.abs_cum[-1]
    N2 = float(ref.n2_cum[-1])
    hi = ref.mu * (absV + ref.tail_V + dV) ** 2 / (N2 * (1 - gamma))
    lo_v = max(0.0, absV - ref.tail_V - dV)
    lo = ref.mu * lo_v**2 / (N2 * (1 + gamma) + float(ref.tail_N2) * (1 + 1e-12))
    return lo, hi


def _ref_bound(ref: _Reference, R: int, t: float) -> tuple[float, float]:
    """(P_R from the reference path, diameter of {P_R' : R' >= R} ∪ {P_∞})."""
    P, err = _ref_probabilities(ref, t)
    k = R - ref.lo
    lo, hi = _limit_interval(ref, t)
    top = max(hi, float(np.max(P[k:] + err[k:])))
    bot = min(lo, float(np.min(P[k:] - err[k:])))
    return float(P[k]), (top - bot) * (1 + 1e-9)


def reference_probability(cfg: CausalityConfig, t: float, r_max: int | None = None) -> float:
    """P_R(t) by direct constancy evaluation on B' (independent of the integrator)."""
    ref = _reference(cfg)
    R = cfg.r_max if r_max is None else r_max
    P, _ = _ref_probabilities(ref, t)
    return float(P[R - ref.lo])


def tail_bound(cfg: CausalityConfig, t: float | None = None) -> Fraction:
    """Exact rational bound on |P_trunc - P_untruncated| (max over cfg.times by default)."""
    times = cfg.times if t is None else (t,)
    if cfg.mode == "paper_literal":
        return paper_literal_tail(cfg)
    ref = _reference(cfg)
    return ceil_fraction(max(_ref_bound(ref, cfg.r_max, s)[1] for s in times))


# ------------------------------------------------------------------ scan


@dataclass(frozen=True)
class ScanRow:
    t: float
    probability: float
    tail_bound: Fraction
    mode: str

    @property
    def positive(self) -> bool:
        return self.probability > 0

    @property
    def certified(self) -> bool:
        return self.probability > self.tail_bound


@dataclass(frozen=True)
class CausalityReport:
    config: CausalityConfig
    distance: Fraction
    rows: tuple[ScanRow, ...]
    pre_projection_norm2: Fraction
    projected_norm2: float
    metadata: dict = field(default_factory=dict)

    @property
    def all_positive(self) -> bool:
        return all(r.positive for r in self.rows)

    @property
    def deficit(self) -> float:
        return 1.0 - self.projected_norm2

    def to_json(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "distance": format_fraction(self.distance),
            "initial_state": {
                "pre_projection_norm2": format_fraction(self.pre_projection_norm2),
                "projected_norm2": self.projected_norm2,
                "deficit": self.deficit,
            },
            "rows": [
                {
                    "t": r.t,
                    "probability": r.probability,
                    "tail_bound": format_fraction(r.tail_bound),
                    "mode": r.mode,
                    "positive": r.positive,
                    "certified": r.certified,
                }
                for r in self.rows
            ],
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "CausalityReport":
        cfg = CausalityConfig.from_dict(obj["config"])
        rows = tuple(
            ScanRow(float(r["t"]), float(r["probability"]), Fraction(r["tail_bound"]), r["mode"])
            for r in obj["rows"]
        )
        ini = obj["initial_state"]
        return cls(
            cfg,
            Fraction(obj["distance"]),
            rows,
            Fraction(ini["pre_projection_norm2"]),
            float(ini["projected_norm2"]),
            dict(obj.get("metadata", {})),
        )


def run_scan(cfg: CausalityConfig) -> CausalityReport:
    start = time.perf_counter()
    init = build_initial_state(cfg)
    distance = cfg.initial_ball.distance(cfg.target_ball)
    if distance != cfg.distance_formula():
        raise AssertionError(f"distance {distance} != p^l0·|b| = {cfg.distance_formula()}")
    B = cfg.target_ball
    rows = []
    meta: dict[str, Any] = {"terms": len(init.state)}
    if cfg.mode == "unitary_exact":
        ref = _reference(cfg)
        meta["reference_r_max"] = ref.R_ref
        for t in cfg.times:
            prob = localization_probability(evolve(init.state, cfg.m, t), B)
            p_ref, bound = _ref_bound(ref, cfg.r_max, t)
            disc = abs(prob - p_ref)
            if disc > 1e-9 * max(prob, p_ref) + 1e-300:
                raise AssertionError(f"integrator {prob!r} and constancy evaluation {p_ref!r} disagree")
            rows.append(ScanRow(t, prob, ceil_fraction(bound + 2 * disc), cfg.mode))
    else:
        tail = paper_literal_tail(cfg)
        meta["literal_r_start"] = cfg.literal_start
        for t in cfg.times:
            rows.append(ScanRow(t, paper_literal_probability(cfg, t), tail, cfg.mode))
    for r in rows:
        if not r.positive:
            log.warning("probability not positive at t=%r", r.t)
        elif not r.certified:
            log.warning("probability at t=%r does not exceed its tail bound", r.t)
    log.info("scan finished in %.3f s", time.perf_counter() - start)
    return CausalityReport(cfg, distance, tuple(rows), init.pre_projection_norm2, init.projected_norm2, meta)


# ---------------------------------------------------------------- output


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def emit_report(rep: CausalityReport, fmt: str = "csv") -> bytes:
    if fmt == "json":
        return (json.dumps(rep.to_json(), indent=2) + "\n").encode()
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    cfg = rep.config
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rep.rows:
        w.writerow([
            fmt_float(r.t),
            fmt_float(r.probability),
            format_fraction(r.tail_bound),
            r.mode,
            format_fraction(rep.distance),
            cfg.p,
            fmt_float(cfg.m),
            cfg.L,
            cfg.l0,
            cfg.r_max,
        ])
    buf.write("# config: " + json.dumps(cfg.to_dict(), separators=(",", ":")) + "\n")
    buf.write(f"# projected_norm2: {fmt_float(rep.projected_norm2)}\n")
    return buf.getvalue().encode()
