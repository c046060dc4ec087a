import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsclass import lseries, mellin
from rsclass.mellin import DEFAULT_SPEC, KernelSpec


def v_oracle(x, sigma=3):
    """V(x) by mpmath adaptive quadrature on Re s = sigma."""
    mpmath.mp.dps = 30

    def f(t):
        s = mpmath.mpc(sigma, t)
        g = mpmath.gamma(s + 1) * mpmath.gamma(s + 2) * mpmath.cos(mpmath.pi * s / 200) ** -200
        return mpmath.re(g * (2 * mpmath.pi) ** (-2 * s) * mpmath.mpf(x) ** (-s) / s ** 2)

    return float(mpmath.quad(f, [0, 5, 15, 40, 80]) / (2 * mpmath.pi))


@pytest.mark.parametrize("x", [0.05, 0.2, 0.7, 1.0, 3.0])
def test_V_against_mpmath(x):
    assert mellin.V(x) == pytest.approx(v_oracle(x), rel=1e-10, abs=1e-18)


def test_V_regression_values():
    # frozen after agreement with the mpmath oracle and across routes
    assert mellin.V(1.0) == pytest.approx(1.92861812522101e-05, rel=1e-9)
    assert mellin.V(1e-6) == pytest.approx(4.99268277766348, rel=1e-12)


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 5.0, 10.0])
def test_V_contour_independence(x):
    vals = [mellin.V(x, sigma=s) for s in (2.0, 3.0, 10.0)]
    assert max(vals) - min(vals) <= 1e-8 * max(1.0, abs(vals[0]))


def test_V_routes_agree():
    for x in (0.3, 0.9, 1.0, 4.0):
        assert mellin.V(x) == pytest.approx(mellin.V(x, sigma=2.0), rel=1e-9, abs=1e-15)


def test_small_x_log_law():
    R0, R1 = mellin.small_x_law()
    assert R0 == 0.5
    assert R1 == pytest.approx(-1.915092731310878, abs=1e-14)
    res = [abs(mellin.V(x) - (R1 - R0 * math.log(x))) for x in (1e-2, 1e-3, 1e-4, 1e-5)]
    # the next pole (s = -1) leaves a residual of order x log x
    assert all(b < a / 5 for a, b in zip(res, res[1:]))
    assert res[-1] < 1e-3


def test_residue_data_from_finite_differences():
    g0, g1 = mellin.residue_at_zero([("G", lambda s: mellin.G(s))])
    R0, R1 = mellin.small_x_law()
    assert 0.5 * g0 == pytest.approx(R0, rel=1e-12)
    assert 0.5 * g1 == pytest.approx(R1, rel=1e-7)
    c0, c1 = mellin.residue_circle([("G", lambda s: mellin.G(s))])
    assert 0.5 * c1 == pytest.approx(R1, rel=1e-12)


def test_large_x_decay():
    assert abs(mellin.V(1e4)) <= 1e-15
    assert abs(mellin.V(1e6)) <= 1e-30
    assert mellin.V(1e4) == pytest.approx(8.67e-129, rel=1e-2)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 50.0))
def test_envelope_dominates(x):
    assert abs(mellin.V(x)) <= mellin.V_envelope(x)[0]


def test_quadrature_refinement_and_checked():
    assert mellin.quadrature_error_estimate(1.0) < 1e-15
    coarse = KernelSpec(dt=0.8)
    with pytest.raises(mellin.KernelError, match="achievable"):
        mellin.V_checked(1.0, 1e-14, coarse, sigma=3.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(sigma=100.0)
    with pytest.raises(ValueError):
        KernelSpec(dt=-1)
    with pytest.raises(ValueError):
        mellin.V(-1.0)


def test_W_contour_independence_and_reduction():
    for x in (0.5, 1.0, 4.0):
        a = mellin.W(x, -4, 37, sigma=3.0)
        b = mellin.W(x, -4, 37, sigma=10.0)
        c = mellin.W(x, -4, 37, sigma=2.0)
        assert abs(a - b) <= 1e-8 and abs(a - c) <= 1e-8
    assert mellin.W(1.0, -4, 37) == pytest.approx(1.9286181230601e-5, rel=1e-9)
    assert mellin.W(2.0, -4, 37, lfactor=False) == mellin.V(2.0, sigma=3.0)
    with pytest.raises(ValueError):
        mellin.W(1.0, -4, 37, sigma=0.05)


def test_W_matches_direct_sum():
    for x in (0.05, 0.3, 1.0):
        assert mellin.W(x, -23, 37) == pytest.approx(mellin.W_direct(x, -23, 37), rel=1e-9, abs=1e-16)


def test_bundle_failure_names_factor():
    def bad(s):
        return np.full(np.shape(s), np.nan)

    with pytest.raises(ArithmeticError, match="broken"):
        mellin.residue_at_zero([("G", mellin.G), ("broken", bad)])


def test_kernel_cache_interpolation():
    cache = mellin.kernel_cache(DEFAULT_SPEC)
    assert cache.max_interp_error() < 1e-10
    xs = np.array([1e-9, 0.37, 5.5, 60.0])
    assert np.allclose(cache(xs), mellin.V(xs), rtol=1e-9, atol=1e-15)
