import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import CTX3, polydiscs, scalars
from hypothesis import given, settings
from hypothesis import strategies as st

from padic_dirac.padic import (
    Ball1D,
    ContextMismatch,
    FieldContext,
    PAdicScalar,
    Polydisc,
    Relation,
    ball_distance,
    ball_relate,
    haar_measure,
    scalar_arith,
    vec3,
)


def S(x):
    return CTX3.scalar(x)


# ---- field context


@pytest.mark.parametrize("p", [2, 3, 5, 101, 65521, 4294967291])
def test_context_accepts_primes(p):
    assert FieldContext(p).p == p


@pytest.mark.parametrize("p", [0, 1, 4, 9, 561, 2**32 + 15])
def test_context_rejects(p):
    with pytest.raises(ValueError):
        FieldContext(p)


def test_context_mismatch():
    with pytest.raises(ContextMismatch):
        PAdicScalar(FieldContext(3), 1) + PAdicScalar(FieldContext(5), 1)
    with pytest.raises(ContextMismatch):
        Ball1D(PAdicScalar(FieldContext(3), 0), 0).contains(PAdicScalar(FieldContext(5), 1))


# ---- arithmetic


def test_add_to_one():
    x = S(Fraction(1, 3)) + S(Fraction(2, 3))
    assert (x.a, x.k) == (1, 0)


def test_mul_canonical():
    x = scalar_arith(S(9), S(Fraction(1, 3)), "mul")
    assert (x.a, x.k) == (1, -1)
    assert x.to_fraction() == 3


@given(scalars())
def test_additive_inverse(x):
    z = x + (-x)
    assert (z.a, z.k) == (0, 0)
    assert scalar_arith(x, None, "neg") == -x


@given(scalars(), scalars())
def test_arith_matches_rationals(x, y):
    assert (x + y).to_fraction() == x.to_fraction() + y.to_fraction()
    assert (x - y).to_fraction() == x.to_fraction() - y.to_fraction()
    assert (x * y).to_fraction() == x.to_fraction() * y.to_fraction()


@given(scalars())
def test_canonical_form(x):
    if x.a == 0:
        assert x.k == 0
    else:
        assert x.a % 3 != 0


# ---- norm, order, frac, character


@pytest.mark.parametrize("x,norm", [(9, Fraction(1, 9)), (0, 0), (Fraction(1, 3), 3), (-18, Fraction(1, 9))])
def test_norm(x, norm):
    assert S(x).norm() == norm


def test_order():
    assert S(9).order() == 2
    assert S(Fraction(1, 3)).order() == -1
    assert S(0).order() == math.inf


@pytest.mark.parametrize("x,frac", [(Fraction(2, 9), Fraction(2, 9)), (Fraction(-1, 3), Fraction(2, 3)),
                                    (5, 0), (0, 0), (Fraction(10, 3), Fraction(1, 3))])
def test_frac_part(x, frac):
    assert S(x).frac_part() == frac


def test_character_examples():
    phase, value = S(Fraction(1, 3)).character()
    assert phase == Fraction(1, 3)
    assert abs(value - cmath.exp(2j * math.pi / 3)) < 1e-15
    assert S(7).character() == (0, 1)


@given(scalars(), scalars())
def test_ultrametric(x, y):
    nx, ny, nxy = x.norm(), y.norm(), (x + y).norm()
    assert nxy <= max(nx, ny)
    if nx != ny:
        assert nxy == max(nx, ny)


@given(scalars(), scalars())
def test_frac_additive_mod_1(x, y):
    d = (x + y).frac_part() - x.frac_part() - y.frac_part()
    assert d.denominator == 1


@given(scalars(), scalars())
def test_character_additive(x, y):
    _, cx = x.character()
    _, cy = y.character()
    _, cxy = (x + y).character()
    assert abs(cxy - cx * cy) < 1e-12
    assert abs(abs(cxy) - 1) < 1e-15


def test_vec_norm():
    v = vec3(CTX3, [9, Fraction(1, 3), 0])
    assert v.norm() == 3


# ---- serialization


def test_scalar_string():
    assert str(S(Fraction(2, 9))) == "2/3^2"
    assert str(S(3)) == "1/3^-1"
    assert PAdicScalar.parse(CTX3, "2/3^2") == S(Fraction(2, 9))
    assert PAdicScalar.parse(CTX3, "1/3") == S(Fraction(1, 3))
    with pytest.raises(ContextMismatch):
        PAdicScalar.parse(CTX3, "1/5^1")
    with pytest.raises(ValueError):
        PAdicScalar.parse(CTX3, "1/2")


@given(scalars())
def test_scalar_roundtrip(x):
    assert PAdicScalar.parse(CTX3, str(x)) == x


@given(polydiscs())
def test_polydisc_roundtrip(B):
    assert Polydisc.from_json(CTX3, B.to_json()) == B


# ---- balls


def unit(r=0):
    return Polydisc.unit(CTX3, 3, r)


def test_canonical_center():
    assert Ball1D(S(Fraction(16, 3)), 0) == Ball1D(S(Fraction(1, 3)), 0)
    assert Ball1D(S(7), 0).center == S(0)
    assert Ball1D(S(Fraction(7, 9)), -1) == Ball1D(S(Fraction(7, 9)), -1)


def test_relate_examples():
    assert ball_relate(unit(), unit(-1)) == Relation.B_INSIDE_A
    shifted = Polydisc.make(CTX3, [Fraction(1, 3), 0, 0], [0, 0, 0])
    assert ball_relate(unit(), shifted) == Relation.DISJOINT
    assert ball_relate(unit(), unit()) == Relation.EQUAL


def test_relate_overlap():
    A = Polydisc.make(CTX3, [0, 0, 0], [0, -1, 0])
    B = Polydisc.make(CTX3, [0, 0, 0], [-1, 0, 0])
    assert ball_relate(A, B) == Relation.OVERLAP
    assert A.intersection(B).measure() == Fraction(1, 9)


@given(polydiscs(), polydiscs())
def test_relate_symmetric(A, B):
    ab, ba = A.relate(B), B.relate(A)
    flip = {Relation.A_INSIDE_B: Relation.B_INSIDE_A, Relation.B_INSIDE_A: Relation.A_INSIDE_B}
    assert flip.get(ab, ab) == ba
    assert (ab == Relation.EQUAL) == (A == B)


@given(scalars(), scalars(), st.integers(-3, 3), st.integers(-3, 3))
def test_balls_nest_or_disjoint(c1, c2, r1, r2):
    a, b = Ball1D(c1, r1), Ball1D(c2, r2)
    rel = a.relate(b)
    if rel == Relation.DISJOINT:
        assert not a.contains(b.center) and not b.contains(a.center)
    elif r1 <= r2:
        assert b.contains(a.center)
    else:
        assert a.contains(b.center)


def test_children_partition():
    b = Ball1D(S(Fraction(1, 9)), 1)
    kids = b.children()
    assert len(kids) == 3
    assert sum(k.measure() for k in kids) == b.measure()
    for x, y in zip(kids, kids[1:]):
        assert x.relate(y) == Relation.DISJOINT


def test_distance_remark_example():
    A = unit(0)
    B = Polydisc.make(CTX3, [Fraction(1, 9)] * 3, [1, 1, 1])
    assert ball_distance(A, B) == 9
    assert ball_distance(A, A) == 0


def _valuation(D: np.ndarray, p: int) -> np.ndarray:
    v = np.zeros(D.shape, dtype=np.int64)
    D = D.copy()
    live = D != 0
    while live.any():
        div = live & (D % p == 0)
        v[div] += 1
        D[div] //= p
        live = div
    return v


def _grid_distance(A: Polydisc, B: Polydisc, K: int) -> Fraction:
    """min over scaled grid points of both polydiscs of the max-norm distance."""
    p = A.ctx.p

    def grid(P):
        axes = []
        for b in P.balls:
            c = b.center.to_fraction() * p**K
            assert c.denominator == 1
            step = p ** (K - b.r)
            axes.append([int(c) + t * step for t in range(p ** (b.r + K))])
        return np.array(np.meshgrid(*axes, indexing="ij")).reshape(3, -1).T

    ga, gb = grid(A), grid(B)
    D = ga[:, None, :] - gb[None, :, :]
    v = np.where(D == 0, 10**6, _valuation(D, p))
    worst = v.min(axis=2)  # max norm = smallest valuation
    best = int(worst.max())
    return Fraction(0) if best >= 10**6 else Fraction(p) ** (K - best)


def test_distance_grid_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        def rand_pd():
            radii = [int(x) for x in rng.integers(-2, 0, size=3)]
            cs = [Fraction(int(rng.integers(-20, 20)), 3 ** int(rng.integers(0, 3))) for _ in range(3)]
            return Polydisc.make(CTX3, cs, radii)

        A, B = rand_pd(), rand_pd()
        if rng.random() < 0.3:
            B = Polydisc(tuple(Ball1D(b.center, b.r - 1) for b in A.balls))
        assert ball_distance(A, B) == _grid_distance(A, B, 3)


def test_haar_examples():
    assert haar_measure(unit()) == 1
    assert haar_measure(Polydisc.make(CTX3, [0, 0, 0], [-1, 0, 0])) == Fraction(1, 3)
    assert haar_measure(unit(1)) == 27


@given(polydiscs(), st.tuples(scalars(), scalars(), scalars()))
def test_haar_translation_invariant(B, c):
    assert B.translate(c).measure() == B.measure()


@settings(max_examples=50)
@given(polydiscs(), polydiscs())
def test_hull_contains_both(A, B):
    H = A.hull(B)
    assert A.relate(H) in (Relation.A_INSIDE_B, Relation.EQUAL)
    assert B.relate(H) in (Relation.A_INSIDE_B, Relation.EQUAL)
