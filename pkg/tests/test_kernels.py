"""Compiled and pure-Python kernels must agree bit for bit."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glshrink import kernels
from glshrink.kernels import get_backend
from glshrink.numerics import RngStream

needs_compiled = pytest.mark.skipif(kernels.COMPILED is None, reason="compiled kernels not built")
PY = kernels.PYTHON


def _bg(seed=1, sid=3):
    return RngStream(seed, sid).bit_generator


def test_backend_selection():
    assert get_backend("python") is PY
    assert get_backend().name == kernels.BACKEND
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_uniforms_open_interval():
    u = PY.uniform_stream(_bg(), 20000)
    assert u.min() > 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01


@given(x=st.floats(1e-200, 1e200))
@settings(max_examples=200, deadline=None)
def test_hsplus_f_inverts_finv(x):
    u = PY.hsplus_finv(x)
    expected = 0.5 if x == 1.0 else math.log(x) / (x * x - 1.0)
    assert u == pytest.approx(expected, rel=1e-12, abs=1e-300)
    if u > 1e-300:
        assert PY.hsplus_f(u) == pytest.approx(x, rel=1e-9)


def test_hsplus_f_limits():
    assert PY.hsplus_finv(1.0) == 0.5
    assert PY.hsplus_f(0.0) == math.inf
    assert PY.hsplus_finv(0.0) == math.inf


Y = np.array([0.0, 0.3, -2.5, 7.0, 12.0])


@needs_compiled
@pytest.mark.parametrize("name,args", [
    ("hs_chain", (1.0, 0.0, 30, 40)),
    ("hs_chain", (4.0, 1.0, 30, 40)),
    ("hsplus_chain", (1.0, 30, 40)),
    ("laplace_chain", (1.0, 1.0, 30, 40)),
    ("global_chain", (1.0, 30, 40)),
    ("normal_draws", (300.0, 40)),
])
def test_chain_parity(name, args):
    a = getattr(PY, name)(Y, *args, _bg())
    b = getattr(kernels.COMPILED, name)(Y, *args, _bg())
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@needs_compiled
@pytest.mark.parametrize("code", range(6))
def test_t_slice_parity(code):
    Yr = RngStream(5).generator.standard_t(3, size=(20, 2))
    hyp = np.array([0.0, 300.0, 1.0, 1.0])
    a = PY.t_slice_chain(Yr, 3.0, code, hyp, 10, 15, _bg())
    b = kernels.COMPILED.t_slice_chain(Yr, 3.0, code, hyp, 10, 15, _bg())
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@needs_compiled
def test_scalar_parity():
    for x in (1e-8, 0.3, 1.0, 1.0 + 1e-9, 17.0, 1e12):
        assert PY.hsplus_finv(x) == kernels.COMPILED.hsplus_finv(x)
        u = PY.hsplus_finv(x)
        assert PY.hsplus_f(u) == kernels.COMPILED.hsplus_f(u)
    assert np.array_equal(PY.uniform_stream(_bg(), 100), kernels.COMPILED.uniform_stream(_bg(), 100))


def test_read_only_inputs_are_accepted():
    y = Y.copy()
    y.flags.writeable = False
    for ks in filter(None, (PY, kernels.COMPILED)):
        th, aux = ks.global_chain(y, 1.0, 5, 5, _bg())
        assert th.shape == (5, Y.size) and np.all(np.isfinite(th))
