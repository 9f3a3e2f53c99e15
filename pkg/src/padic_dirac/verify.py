"""Invariant suites for every module, driven by a counter-based RNG."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import causality as cz
from .padic import Ball1D, FieldContext, PAdicScalar, Polydisc, Relation
from .spinor import (
    BETA,
    I4,
    U_C,
    DiracParams,
    FrequencyMagnitude,
    dirac_algebra_deviation,
    energy,
    evolution_matrix,
    h_symbol,
    h_symbol_external,
    lambda_a_u,
    plane_wave_spinor,
    polar_parts,
    projector_matrix,
)
from .states import (
    SpinorWaveletState,
    apply_H0,
    bounding_polydisc,
    charge_conjugate,
    evolve,
    l2_inner,
    localization_probability,
    localize,
    localized_plane_wave,
    project_energy,
)
from .wavelets import (
    IndicatorCase,
    LocallyConstantFunction,
    WaveletIndex1D,
    WaveletIndex3D,
    expand_ball_indicator,
    fourier_by_cells,
    indicator_times_wavelet,
    lcf_product,
    refine_and_integrate,
    tv_oracle,
    wavelet_eval,
    wavelet_fourier,
    wavelet_lcf,
    wavelet_sum_lcf,
)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


# ------------------------------------------------------- random objects


def random_scalar(rng, ctx: FieldContext, kmax: int = 4, amax: int = 200) -> PAdicScalar:
    if rng.random() < 0.05:
        return PAdicScalar(ctx, 0)
    return PAdicScalar(ctx, int(rng.integers(-amax, amax + 1)), int(rng.integers(-kmax, kmax + 1)))


def random_rep(rng, ctx: FieldContext, depth: int = 2) -> PAdicScalar:
    """Random canonical Q_p/Z_p representative with denominator up to p**depth."""
    k = int(rng.integers(0, depth + 1))
    return ctx.scalar(Fraction(int(rng.integers(0, ctx.p**k)), ctx.p**k))


def random_index(rng, ctx: FieldContext, rlo: int = -3, rhi: int = 3, depth: int = 2) -> WaveletIndex3D:
    r = [int(x) for x in rng.integers(rlo, rhi + 1, size=3)]
    n = [random_rep(rng, ctx, depth) if rng.random() < 0.5 else PAdicScalar(ctx, 0) for _ in range(3)]
    j = [int(x) for x in rng.integers(1, ctx.p, size=3)]
    return WaveletIndex3D.make(ctx, r, n, j)


def random_spinor(rng) -> np.ndarray:
    return rng.normal(size=4) + 1j * rng.normal(size=4)


def random_state(rng, ctx: FieldContext, max_terms: int = 20, rlo=-3, rhi=3) -> SpinorWaveletState:
    terms = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        terms[random_index(rng, ctx, rlo, rhi)] = random_spinor(rng) / 3
    return SpinorWaveletState.from_map(ctx, terms)


def random_q(rng, p: int = 3, lo: int = -4, hi: int = 4) -> FrequencyMagnitude:
    return FrequencyMagnitude(p, tuple(int(x) for x in rng.integers(lo, hi + 1, size=3)))


def random_point(rng, ctx: FieldContext, idx: WaveletIndex3D | None = None) -> tuple:
    """A terminating point, inside ``idx``'s support about 3 times in 4."""
    if idx is not None and rng.random() < 0.75:
        out = []
        for b in idx.support.balls:
            off = PAdicScalar(ctx, int(rng.integers(0, ctx.p**3)), 3 - b.r)
            out.append(b.center + off)
        return tuple(out)
    return tuple(random_scalar(rng, ctx, 3, 30) for _ in range(3))


# --------------------------------------------------------------- suites


@dataclass(frozen=True)
class Check:
    module: str
    name: str
    tolerance: float
    run: Callable[[np.random.Generator], float]


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.deviation) and self.deviation <= self.tolerance


CTX = FieldContext(3)


def _maxdev(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


# padic-core


def chk_ultrametric(rng) -> float:
    bad = 0
    for _ in range(1000):
        x, y = random_scalar(rng, CTX), random_scalar(rng, CTX)
        nx, ny, nxy = x.norm(), y.norm(), (x + y).norm()
        if nxy > max(nx, ny) or (nx != ny and nxy != max(nx, ny)):
            bad += 1
    return float(bad)


def chk_frac_additive(rng) -> float:
    bad = 0
    for _ in range(1000):
        x, y = random_scalar(rng, CTX), random_scalar(rng, CTX)
        d = (x + y).frac_part() - x.frac_part() - y.frac_part()
        if d.denominator != 1:
            bad += 1
    return float(bad)


def chk_character_additive(rng) -> float:
    dev = 0.0
    for _ in range(100):
        x, y = random_scalar(rng, CTX), random_scalar(rng, CTX)
        dev = max(dev, abs((x + y).character()[1] - x.character()[1] * y.character()[1]))
    return dev


def _random_polydisc(rng) -> Polydisc:
    return Polydisc(tuple(Ball1D(random_scalar(rng, CTX, 2, 20), int(rng.integers(-2, 3))) for _ in range(3)))


def chk_relate_symmetric(rng) -> float:
    flip = {
        Relation.A_INSIDE_B: Relation.B_INSIDE_A,
        Relation.B_INSIDE_A: Relation.A_INSIDE_B,
    }
    bad = 0
    for _ in range(500):
        A, B = _random_polydisc(rng), _random_polydisc(rng)
        if rng.random() < 0.3:
            B = Polydisc(tuple(Ball1D(b.center, b.r + 1) for b in A.balls))
        ab, ba = A.relate(B), B.relate(A)
        if flip.get(ab, ab) != ba:
            bad += 1
        if (ab == Relation.EQUAL) != (A == B):
            bad += 1
    return float(bad)


def chk_haar_translation(rng) -> float:
    bad = 0
    for _ in range(500):
        A = _random_polydisc(rng)
        c = [random_scalar(rng, CTX) for _ in range(3)]
        if A.translate(c).measure() != A.measure():
            bad += 1
    return float(bad)


# wavelet-calculus


def chk_orthonormality(rng) -> float:
    dev = 0.0
    for _ in range(50):
        a = random_index(rng, CTX)
        b = a if rng.random() < 0.3 else random_index(rng, CTX)
        g = lcf_product(wavelet_lcf(a), wavelet_lcf(b))
        val = refine_and_integrate(g, a.support.hull(b.support)).scalar
        dev = max(dev, abs(val - (1.0 if a == b else 0.0)))
    return dev


def chk_tv_eigen(rng) -> float:
    dev = 0.0
    for _ in range(10):
        r = int(rng.integers(-2, 3))
        idx = WaveletIndex1D(r, random_rep(rng, CTX), int(rng.integers(1, CTX.p)))
        f = wavelet_lcf(idx)
        lam = float(Fraction(CTX.p) ** (1 - r))
        for _ in range(10):
            if rng.random() < 0.7:
                off = PAdicScalar(CTX, int(rng.integers(0, 27)), 3 - r)
                x = idx.support.center + off
            else:
                x = random_scalar(rng, CTX, 3, 30)
            dev = max(dev, abs(tv_oracle(f, x) - lam * wavelet_eval(idx, x)))
    return dev


def chk_zero_mean(rng) -> float:
    dev = 0.0
    for _ in range(30):
        idx = random_index(rng, CTX)
        f = wavelet_lcf(idx)
        l1 = math.fsum(float(abs(v[0]) * B.measure()) for B, v in f.cells)
        dev = max(dev, abs(refine_and_integrate(f, idx.support).scalar) / l1)
    return dev


def chk_parseval_scalar(rng) -> float:
    dev = 0.0
    for _ in range(5):
        terms = {random_index(rng, CTX, -2, 2): complex(*rng.normal(size=2)) for _ in range(8)}
        f = wavelet_sum_lcf(terms)
        region = None
        for k in terms:
            region = k.support if region is None else region.hull(k.support)
        got = refine_and_integrate(f, region).abs2
        dev = max(dev, abs(got - sum(abs(c) ** 2 for c in terms.values())))
    return dev


def stated_lemma_case(R0: int, idx: WaveletIndex1D) -> IndicatorCase:
    """Lemma 1(i) conditions as written, for comparison with the support test."""
    shift = idx.ctx.pow(-idx.r) * idx.n
    in_ball = shift.is_zero() or shift.k <= -R0
    if in_ball and idx.r <= -R0:
        return IndicatorCase.UNCHANGED
    if idx.n.is_zero() and idx.r >= -R0 + 1:
        return IndicatorCase.SCALED_INDICATOR
    return IndicatorCase.ZERO


def chk_lemma1_trichotomy(rng) -> float:
    reps = [CTX.scalar(Fraction(a, 3**k)) for k in range(3) for a in range(3**k) if k == 0 or a % 3]
    bad = 0
    for R0 in range(-2, 3):
        for r in range(-4, 5):
            for n in reps:
                idx = WaveletIndex1D(r, n, 1)
                if indicator_times_wavelet(R0, idx).case != stated_lemma_case(R0, idx):
                    bad += 1
    return float(bad)


def chk_lemma1_coefficients(rng) -> float:
    dev = 0.0
    for R0 in (-1, 0, 1):
        ex = expand_ball_indicator(CTX, R0, 1, 4 - R0)
        ball = Polydisc((Ball1D(PAdicScalar(CTX, 0), -R0),))
        phi = LocallyConstantFunction(((ball, float(CTX.p) ** (R0 / 2)),))
        for idx, c in ex.coefficients.items():
            g = lcf_product(phi, wavelet_lcf(idx))
            ip = refine_and_integrate(g, ball.hull(Polydisc((idx.support,)))).scalar
            dev = max(dev, abs(ip - c))
    return dev


def chk_lemma1_norm(rng) -> float:
    ex = expand_ball_indicator(CTX, 0, 1, 4)
    return float(abs(ex.partial_norm2 - Fraction(80, 81)))


def chk_fourier(rng) -> float:
    dev = 0.0
    for _ in range(5):
        idx = WaveletIndex1D(int(rng.integers(-2, 3)), random_rep(rng, CTX), int(rng.integers(1, 3)))
        desc = wavelet_fourier(idx)
        f = wavelet_lcf(idx)
        for _ in range(6):
            if rng.random() < 0.6:
                q = desc.coset.center + PAdicScalar(CTX, int(rng.integers(0, 9)), 2 + idx.r)
            else:
                q = random_scalar(rng, CTX, 3, 30)
            dev = max(dev, abs(desc(q) - fourier_by_cells(f, q)))
    return dev


# spinor-algebra


def chk_dirac_algebra(rng) -> float:
    return dirac_algebra_deviation()


def chk_lambda_ge_m(rng) -> float:
    worst = 0.0
    for _ in range(200):
        m = float(rng.uniform(0, 10))
        worst = max(worst, m - energy(random_q(rng, 3, -6, 6), m))
    return max(worst, 0.0)


def chk_fw(rng) -> float:
    dev = 0.0
    for _ in range(100):
        q, m = random_q(rng), float(rng.uniform(0, 10))
        f = lambda_a_u(q, m)
        dev = max(dev, _maxdev(f.u_inv @ h_symbol(q, m) @ f.u, BETA * f.lam),
                  _maxdev(f.u @ f.u_inv, I4), _maxdev(f.u @ f.u.conj().T, I4))
    return dev


def chk_plane_waves(rng) -> float:
    dev = 0.0
    for _ in range(50):
        q, m = random_q(rng), float(rng.uniform(0, 10))
        h, lam = h_symbol(q, m), energy(q, m)
        for k, s in ((1, 1), (2, 1), (3, -1), (4, -1)):
            w = plane_wave_spinor(k, q, m)
            dev = max(dev, _maxdev(h @ w, s * lam * w))
    return dev


def chk_projectors(rng) -> float:
    dev = 0.0
    for _ in range(100):
        q, m = random_q(rng), float(rng.uniform(0, 10))
        P, N = projector_matrix(q, m, "pos"), projector_matrix(q, m, "neg")
        dev = max(dev, _maxdev(P @ P, P), _maxdev(N @ N, N), _maxdev(P @ N, 0 * P),
                  _maxdev(P + N, I4), _maxdev(P, P.conj().T))
    return dev


def chk_evolution_group(rng) -> float:
    dev = 0.0
    for _ in range(100):
        q, m = random_q(rng, 3, -3, 3), float(rng.uniform(0, 10))
        t1, t2 = rng.uniform(-2, 2, size=2)
        U1, U2 = evolution_matrix(q, m, t1), evolution_matrix(q, m, t2)
        dev = max(dev, _maxdev(U1 @ U2, evolution_matrix(q, m, t1 + t2)),
                  _maxdev(U1 @ U1.conj().T, I4))
    return dev


def chk_evolution_series(rng) -> float:
    dev = 0.0
    for _ in range(50):
        q, m = random_q(rng, 3, -2, 1), float(rng.uniform(0, 2))
        lam = energy(q, m)
        t = float(rng.uniform(-5, 5)) / lam
        X = -1j * t * h_symbol(q, m)
        term, acc = I4.copy(), I4.copy()
        for n in range(1, 40):
            term = term @ X / n
            acc = acc + term
        dev = max(dev, _maxdev(acc, evolution_matrix(q, m, t)))
    return dev


def chk_polar(rng) -> float:
    dev = 0.0
    for _ in range(50):
        q, m = random_q(rng), float(rng.uniform(0, 10))
        a, s = polar_parts(q, m)
        dev = max(dev, _maxdev(a @ s, h_symbol(q, m)), _maxdev(s @ s, I4))
    return dev


def chk_uc_square(rng) -> float:
    return max(_maxdev(U_C @ np.conj(U_C), I4), float(np.max(np.abs(U_C.imag))))


def chk_uc_symbol(rng) -> float:
    dev = 0.0
    for _ in range(50):
        q, m = random_q(rng), float(rng.uniform(0, 10))
        h = h_symbol(q, m)
        dev = max(dev, _maxdev(U_C @ np.conj(h) @ U_C.T, -h))
    return dev


def chk_uc_external(rng) -> float:
    dev = 0.0
    for _ in range(50):
        q = random_q(rng)
        prm = DiracParams(float(rng.uniform(0, 10)), float(rng.normal()),
                          tuple(rng.normal(size=3)), float(rng.normal()))
        neg = DiracParams(prm.m, -prm.e, prm.A, prm.phi)
        lhs = U_C @ np.conj(h_symbol_external(q, prm)) @ U_C.T
        dev = max(dev, _maxdev(lhs, -h_symbol_external(q, neg)))
    return dev


# dirac-states


def chk_state_unitarity(rng) -> float:
    dev = 0.0
    for _ in range(20):
        s = random_state(rng, CTX, 30)
        m = float(rng.uniform(0, 5))
        t1, t2 = rng.uniform(-2, 2, size=2)
        e1 = evolve(s, m, t1)
        dev = max(dev, abs(e1.norm() - s.norm()))
        d = evolve(e1, m, t2) - evolve(s, m, t1 + t2)
        dev = max(dev, d.norm())
    return dev


def chk_state_projectors(rng) -> float:
    dev = 0.0
    for _ in range(20):
        s = random_state(rng, CTX, 30)
        m = float(rng.uniform(0, 5))
        P, N = project_energy(s, m, "pos"), project_energy(s, m, "neg")
        dev = max(dev, (P + N - s).norm(), abs(l2_inner(P, N)),
                  (project_energy(P, m, "pos") - P).norm(),
                  abs(P.norm2() + N.norm2() - s.norm2()))
    return dev


def chk_evolve_commutes(rng) -> float:
    dev = 0.0
    for _ in range(20):
        s = random_state(rng, CTX, 30)
        m, t = float(rng.uniform(0, 5)), float(rng.uniform(-3, 3))
        a = evolve(project_energy(s, m, "pos"), m, t)
        b = project_energy(evolve(s, m, t), m, "pos")
        dev = max(dev, (a - b).norm())
    return dev


def chk_positive_energy(rng) -> float:
    worst = 0.0
    for _ in range(20):
        m = float(rng.uniform(0, 5))
        P = project_energy(random_state(rng, CTX, 20), m, "pos")
        e = l2_inner(apply_H0(P, m), P).real
        worst = max(worst, m * P.norm2() - e)
    return max(worst, 0.0)


def chk_h0_symmetric(rng) -> float:
    dev = 0.0
    for _ in range(20):
        s, t = random_state(rng, CTX, 20, -1, 1), random_state(rng, CTX, 20, -1, 1)
        m = float(rng.uniform(0, 5))
        dev = max(dev, abs(l2_inner(apply_H0(s, m), t) - l2_inner(s, apply_H0(t, m))))
    return dev


def chk_energy_swap(rng) -> float:
    dev = 0.0
    for _ in range(20):
        s = random_state(rng, CTX, 20, -1, 1)
        m = float(rng.uniform(0, 5))
        c = charge_conjugate(s)
        lhs = l2_inner(apply_H0(c, m), c)
        rhs = -l2_inner(apply_H0(s, m), s)
        dev = max(dev, abs(lhs - rhs))
    return dev


def chk_conjugation_involution(rng) -> float:
    dev = 0.0
    for _ in range(20):
        s = random_state(rng, CTX, 20)
        c = charge_conjugate(s)
        dev = max(dev, (charge_conjugate(c) - s).norm(), abs(c.norm() - s.norm()))
        for _ in range(5):
            x = random_point(rng, CTX, s.terms[0][0])
            dev = max(dev, _maxdev(c(x), U_C @ np.conj(s(x))))
    return dev


def chk_state_parseval(rng) -> float:
    dev = 0.0
    for _ in range(5):
        s = random_state(rng, CTX, 20, -2, 2)
        t = random_state(rng, CTX, 10, -2, 2)
        dev = max(dev, abs(localize(s, bounding_polydisc(s)).abs2 - s.norm2()))
        dev = max(dev, abs(integrated_inner(s, t) - l2_inner(s, t)))
    return dev


def integrated_inner(s: SpinorWaveletState, t: SpinorWaveletState) -> complex:
    """⟨s, t⟩ by polarization of integrated norms (conjugate-linear in t)."""
    region = bounding_polydisc(s).hull(bounding_polydisc(t))
    n = [localize(s + t.scale(c), region).abs2 for c in (1, -1, 1j, -1j)]
    return complex(n[0] - n[1], n[2] - n[3]) / 4


def chk_localization(rng) -> float:
    dev = 0.0
    for _ in range(20):
        idx = random_index(rng, CTX)
        m = float(rng.uniform(0, 5))
        for sign, s in (("pos", 1), ("neg", -1)):
            st = localized_plane_wave(idx, m, sign)
            lam = energy(FrequencyMagnitude.from_index(idx), m)
            dev = max(dev, (apply_H0(st, m) - st.scale(s * lam)).norm())
            dev = max(dev, abs(localization_probability(st, idx.support) - 1))
            far = idx.support.translate([PAdicScalar(CTX, 1, r + 1) for r in idx.r])
            dev = max(dev, localization_probability(st, far))
            t = float(rng.uniform(0, 10))
            dev = max(dev, abs(localization_probability(evolve(st, m, t), idx.support) - 1))
    return dev


# causality-lab


def chk_distance(rng) -> float:
    cfg = cz.default_config()
    return float(abs(cfg.initial_ball.distance(cfg.target_ball) - 9))


def chk_positivity(rng) -> float:
    rep = cz.run_scan(cz.default_config())
    return float(sum(1 for r in rep.rows if not (r.positive and r.certified and r.probability <= 1 + 1e-10)))


def chk_mode_agreement(rng) -> float:
    cfg = cz.default_config().with_overrides(r_max=4)
    init = cz.build_initial_state(cfg)
    lit = cz.paper_literal_probability(cfg, 0.0)
    return abs(lit - cz.unitary_diagonal_part(cfg, init)) / lit


def chk_tail_monotone(rng) -> float:
    cfg = cz.default_config()
    bounds = [cz.tail_bound(cfg.with_overrides(r_max=R)) for R in range(3, 9)]
    return float(sum(1 for a, b in zip(bounds, bounds[1:]) if b > a) + sum(1 for b in bounds if b <= 0))


CHECKS: tuple[Check, ...] = (
    Check("padic-core", "ultrametric_inequality", 0.0, chk_ultrametric),
    Check("padic-core", "frac_part_additive_mod_1", 0.0, chk_frac_additive),
    Check("padic-core", "character_additive", 1e-12, chk_character_additive),
    Check("padic-core", "ball_relate_symmetric", 0.0, chk_relate_symmetric),
    Check("padic-core", "haar_translation_invariant", 0.0, chk_haar_translation),
    Check("wavelet-calculus", "orthonormality", 1e-12, chk_orthonormality),
    Check("wavelet-calculus", "tv_eigenvalue_identity", 1e-10, chk_tv_eigen),
    Check("wavelet-calculus", "zero_mean_relative", 1e-14, chk_zero_mean),
    Check("wavelet-calculus", "parseval", 1e-12, chk_parseval_scalar),
    Check("wavelet-calculus", "indicator_trichotomy", 0.0, chk_lemma1_trichotomy),
    Check("wavelet-calculus", "indicator_coefficients", 1e-12, chk_lemma1_coefficients),
    Check("wavelet-calculus", "indicator_partial_norm_80_81", 0.0, chk_lemma1_norm),
    Check("wavelet-calculus", "fourier_closed_form", 1e-12, chk_fourier),
    Check("spinor-algebra", "dirac_algebra", 1e-15, chk_dirac_algebra),
    Check("spinor-algebra", "lambda_at_least_m", 0.0, chk_lambda_ge_m),
    Check("spinor-algebra", "fw_diagonalization", 1e-12, chk_fw),
    Check("spinor-algebra", "plane_wave_eigen", 1e-12, chk_plane_waves),
    Check("spinor-algebra", "projector_algebra", 1e-12, chk_projectors),
    Check("spinor-algebra", "evolution_group_law", 1e-11, chk_evolution_group),
    Check("spinor-algebra", "evolution_power_series", 1e-10, chk_evolution_series),
    Check("spinor-algebra", "polar_decomposition", 1e-12, chk_polar),
    Check("spinor-algebra", "uc_squares_to_identity", 1e-15, chk_uc_square),
    Check("spinor-algebra", "uc_conj_h_is_minus_h", 1e-12, chk_uc_symbol),
    Check("spinor-algebra", "uc_conj_h_external", 1e-12, chk_uc_external),
    Check("dirac-states", "evolution_unitary_group", 1e-11, chk_state_unitarity),
    Check("dirac-states", "projector_decomposition", 1e-12, chk_state_projectors),
    Check("dirac-states", "evolution_commutes_with_projector", 1e-12, chk_evolve_commutes),
    Check("dirac-states", "positive_energy", 1e-10, chk_positive_energy),
    Check("dirac-states", "h0_symmetric", 1e-12, chk_h0_symmetric),
    Check("dirac-states", "conjugation_involution", 1e-12, chk_conjugation_involution),
    Check("dirac-states", "conjugation_energy_swap", 1e-11, chk_energy_swap),
    Check("dirac-states", "parseval_vs_integrator", 1e-12, chk_state_parseval),
    Check("dirac-states", "localized_plane_wave", 1e-12, chk_localization),
    Check("causality-lab", "distance_formula", 0.0, chk_distance),
    Check("causality-lab", "positivity_default", 0.0, chk_positivity),
    Check("causality-lab", "mode_agreement_diagonal", 1e-12, chk_mode_agreement),
    Check("causality-lab", "tail_bound_monotone", 0.0, chk_tail_monotone),
)


def run_checks(seed: int = 0, tolerance: float | None = None,
               only: set[str] | None = None) -> list[CheckResult]:
    out = []
    for i, chk in enumerate(CHECKS):
        if only and chk.name not in only and chk.module not in only:
            continue
        dev = float(chk.run(make_rng(seed, i)))
        tol = chk.tolerance if tolerance is None else tolerance
        out.append(CheckResult(chk.module, chk.name, dev, tol))
    return out
