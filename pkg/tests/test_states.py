import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import CTX3, indices, masses, spinors
from hypothesis import given, settings
from hypothesis import strategies as st

from padic_dirac.padic import FieldContext, Polydisc
from padic_dirac.spinor import U_C, FrequencyMagnitude, energy, h_symbol
from padic_dirac.states import (
    SpinorWaveletState,
    apply_H0,
    bounding_polydisc,
    charge_conjugate,
    evaluate,
    evolve,
    h1_norm,
    l2_inner,
    localization_probability,
    localize,
    localized_plane_wave,
    position_projection_ball,
    project_energy,
    state_arith,
)
from padic_dirac.wavelets import WaveletIndex3D, wavelet_eval


def idx(r=(0, 0, 0), n=(0, 0, 0), j=(1, 1, 1)):
    return WaveletIndex3D.make(CTX3, r, n, j)


def state(*pairs):
    return SpinorWaveletState(CTX3, tuple(pairs))


E0 = np.array([1, 0, 0, 0], dtype=complex)
E1 = np.array([0, 1, 0, 0], dtype=complex)


def states(max_terms=3, rlo=-1, rhi=1):
    return st.dictionaries(indices(rlo=rlo, rhi=rhi), spinors(), max_size=max_terms).map(
        lambda d: SpinorWaveletState.from_map(CTX3, d))


# ---- structure and arithmetic


def test_zero_pruning():
    s = state((idx(), E0))
    z = s - s
    assert len(z) == 0 and z.norm2() == 0
    assert len(state((idx(), np.zeros(4)))) == 0


def test_canonical_order_and_duplicates():
    a, b = idx((1, 0, 0)), idx((0, 0, 0))
    s = state((a, E0), (b, E1))
    assert [k for k, _ in s.terms] == [b, a]
    with pytest.raises(ValueError):
        state((a, E0), (a, E1))


def test_context_mismatch():
    other = WaveletIndex3D.make(FieldContext(5), (0, 0, 0))
    with pytest.raises(ValueError):
        SpinorWaveletState(CTX3, ((other, E0),))


def test_state_arith():
    s, t = state((idx(), E0)), state((idx((1, 0, 0)), E1))
    u = state_arith(s, t, 2j, "add")
    assert u.as_dict()[idx((1, 0, 0))][1] == 2j
    assert state_arith(s, None, 3, "scale").norm2() == 9
    with pytest.raises(ValueError):
        state_arith(s, None, 1, "add")
    with pytest.raises(ValueError):
        state_arith(s, t, 1, "mul")


@given(states(), states(), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_inner_product_axioms(s, t, c):
    assert abs(l2_inner(s, t) - np.conj(l2_inner(t, s))) < 1e-12
    assert abs(l2_inner(s.scale(c), t) - c * l2_inner(s, t)) < 1e-9
    assert abs(l2_inner(s, t.scale(c)) - np.conj(c) * l2_inner(s, t)) < 1e-9
    assert l2_inner(s, s).real == pytest.approx(s.norm2(), rel=1e-12, abs=1e-300)


@settings(max_examples=30)
@given(states())
def test_json_roundtrip(s):
    back = SpinorWaveletState.from_json(CTX3, s.to_json())
    assert back.as_dict().keys() == s.as_dict().keys()
    for k, v in s.terms:
        assert np.array_equal(back.as_dict()[k], v)


def test_h1_examples():
    s = state((idx(), E0))
    assert h1_norm(s) == pytest.approx(math.sqrt(math.sqrt(3)))
    for r in ((1, 1, 1), (2, 2, 2)):
        assert h1_norm(state((idx(r), 2 * E0))) == pytest.approx(2.0)


@given(states())
def test_h1_dominates_l2(s):
    assert h1_norm(s) >= s.norm() * (1 - 1e-15)


# ---- operators


def test_apply_H0_example():
    s = state((idx(), E0))
    Hs = apply_H0(s, 0.0)
    v = Hs.as_dict()[idx()]
    assert np.linalg.norm(v) == pytest.approx(3 * math.sqrt(3))  # |q| = 3 on each axis
    HHs = apply_H0(Hs, 0.0)
    assert np.allclose(HHs.as_dict()[idx()], 27 * E0)


@given(states(), masses)
def test_H0_selfadjoint(s, m):
    t = s.scale(1j) + state((idx(), E1))
    assert abs(l2_inner(apply_H0(s, m), t) - l2_inner(s, apply_H0(t, m))) < 1e-9 * (1 + s.norm2())


@given(states(), masses)
def test_projection(s, m):
    P = project_energy(s, m, "pos")
    N = project_energy(s, m, "neg")
    assert (P + N - s).norm() < 1e-12 * (1 + s.norm())
    assert abs(l2_inner(P, N)) < 1e-12 * (1 + s.norm2())
    assert (project_energy(P, m, "pos") - P).norm() < 1e-12 * (1 + s.norm())


@given(states(), masses, st.floats(-5, 5, allow_nan=False))
def test_evolution(s, m, t):
    u = evolve(s, m, t)
    assert u.norm2() == pytest.approx(s.norm2(), rel=1e-12, abs=1e-300)
    back = evolve(u, m, -t)
    assert (back - s).norm() < 1e-11 * (1 + s.norm())
    assert evolve(s, m, 0.0) is s


def test_evolution_phase_on_eigenstate():
    k = idx((0, 1, -1))
    s = localized_plane_wave(k, 1.0, "pos")
    lam = energy(FrequencyMagnitude.from_index(k), 1.0)
    u = evolve(s, 1.0, 0.7)
    assert np.allclose(u.as_dict()[k], np.exp(-0.7j * lam) * s.as_dict()[k], atol=1e-14)


@pytest.mark.parametrize("sign", ["pos", "neg"])
@pytest.mark.parametrize("m", [0.0, 1.0, 7.5])
def test_localized_plane_wave(sign, m):
    k = idx((1, 0, -2), (Fraction(1, 3), 0, 0))
    s = localized_plane_wave(k, m, sign)
    assert s.norm2() == pytest.approx(1)
    assert (project_energy(s, m, sign) - s).norm() < 1e-14
    q = FrequencyMagnitude.from_index(k)
    v = s.as_dict()[k]
    lam = energy(q, m)
    assert np.allclose(h_symbol(q, m) @ v, (1 if sign == "pos" else -1) * lam * v, atol=1e-12 * lam)


# ---- position space


def test_evaluate_two_wavelets():
    a, b = idx(), idx((1, 0, 0), j=(2, 1, 1))
    s = state((a, E0), (b, 1j * E1))
    for t in range(-4, 5):
        x = (CTX3.scalar(Fraction(t, 3)), CTX3.scalar(t), CTX3.scalar(0))
        expect = E0 * wavelet_eval(a, x) + 1j * E1 * wavelet_eval(b, x)
        assert np.allclose(evaluate(s, x), expect, atol=1e-15)
        assert np.allclose(s(x), expect, atol=1e-15)


def test_localization_full_support():
    s = state((idx(), E0), (idx((1, 0, 0), j=(2, 1, 1)), E1))
    B = bounding_polydisc(s)
    assert localization_probability(s, B) == pytest.approx(s.norm2(), rel=1e-12)


def test_localization_cross_terms():
    # ψ_(0,0,0) and ψ_(1,0,0) overlap; probability on Z_p^3 keeps their interference
    a, b = idx(), idx((1, 0, 0))
    s = state((a, E0), (b, E0))
    B = Polydisc.unit(CTX3, 3, 0)
    got = localization_probability(s, B)
    # both wavelets are constant on the 27 cosets of pZ_p^3 inside Z_p^3
    total = 0.0
    for x1 in range(3):
        for x2 in range(3):
            for x3 in range(3):
                x = (CTX3.scalar(x1), CTX3.scalar(x2), CTX3.scalar(x3))
                v = evaluate(s, x)
                total += float(np.vdot(v, v).real) / 27
    assert got == pytest.approx(total, rel=1e-12)
    assert localize(s, B).measure == 1


def test_position_projection_examples():
    exps, B = position_projection_ball(CTX3, 10)
    assert exps == (2, 2, 2) and B.measure() == 3**6
    assert position_projection_ball(CTX3, 1)[0] == (0, 0, 0)
    assert position_projection_ball(CTX3, 0.25)[0] == (-2, -2, -2)
    assert position_projection_ball(CTX3, 9)[0] == (2, 2, 2)
    assert position_projection_ball(CTX3, (1, 3, Fraction(1, 3)))[0] == (0, 1, -1)
    assert position_projection_ball(CTX3, 1 / 3)[0] == (-2, -2, -2)  # float 1/3 < 3**-1
    with pytest.raises(ValueError):
        position_projection_ball(CTX3, 0)


# ---- charge conjugation


@given(states())
def test_charge_conjugate_involution(s):
    cc = charge_conjugate(charge_conjugate(s))
    assert cc.as_dict().keys() == s.as_dict().keys()
    assert (cc - s).norm() == 0
    assert charge_conjugate(s).norm2() == pytest.approx(s.norm2(), rel=1e-15, abs=1e-300)


@settings(max_examples=20)
@given(states(rlo=0, rhi=1))
def test_charge_conjugate_pointwise(s):
    cs = charge_conjugate(s)
    for t in range(6):
        x = tuple(CTX3.scalar(Fraction(t * (i + 1), 3)) for i in range(3))
        assert np.allclose(evaluate(cs, x), U_C @ np.conj(evaluate(s, x)), atol=1e-13)
