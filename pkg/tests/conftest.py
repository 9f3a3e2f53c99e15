from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from padic_dirac.padic import Ball1D, FieldContext, PAdicScalar, Polydisc
from padic_dirac.spinor import FrequencyMagnitude
from padic_dirac.wavelets import WaveletIndex3D

CTX3 = FieldContext(3)


@pytest.fixture
def ctx():
    return CTX3


def scalars(ctx=CTX3, kmax=5, amax=10**4):
    return st.builds(lambda a, k: PAdicScalar(ctx, a, k),
                     st.integers(-amax, amax), st.integers(-kmax, kmax))


def reps(ctx=CTX3, depth=2):
    """Canonical fractional representatives a/p^k in [0, 1)."""
    return st.integers(0, depth).flatmap(
        lambda k: st.integers(0, ctx.p**k - 1).map(lambda a: ctx.scalar(Fraction(a, ctx.p**k))))


def polydiscs(ctx=CTX3, rlo=-2, rhi=2):
    ball = st.builds(Ball1D, scalars(ctx, 3, 50), st.integers(rlo, rhi))
    return st.tuples(ball, ball, ball).map(Polydisc)


def indices(ctx=CTX3, rlo=-3, rhi=3):
    return st.builds(
        lambda r, n, j: WaveletIndex3D.make(ctx, r, n, j),
        st.tuples(*[st.integers(rlo, rhi)] * 3),
        st.tuples(*[reps(ctx)] * 3),
        st.tuples(*[st.integers(1, ctx.p - 1)] * 3),
    )


def freqs(p=3, lo=-4, hi=4):
    return st.tuples(*[st.integers(lo, hi)] * 3).map(lambda e: FrequencyMagnitude(p, e))


masses = st.floats(0, 10, allow_nan=False)


def spinors():
    comp = st.floats(-2, 2, allow_nan=False)
    return st.tuples(*[comp] * 8).map(lambda v: np.array(v[:4]) + 1j * np.array(v[4:]))
