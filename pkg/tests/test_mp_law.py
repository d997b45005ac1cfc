import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from biregular_mp import mp_law as mp
from biregular_mp.errors import ConfigError

GAMMAS = [1.0, 0.5, 0.25]


def oracle_stieltjes(z, gamma):
    """Direct integral of rho/(x - z) using QUADPACK's algebraic endpoint weights."""
    lm, lp = (1 - math.sqrt(gamma)) ** 2, (1 + math.sqrt(gamma)) ** 2
    if gamma == 1.0:
        # sqrt((4 - x) x) / (2 pi x) = x^(-1/2) (4 - x)^(1/2) / (2 pi)
        f = lambda x, part: part(1 / (2 * np.pi * (x - z)))
        wvar = (-0.5, 0.5)
    else:
        f = lambda x, part: part(1 / (2 * np.pi * gamma * x * (x - z)))
        wvar = (0.5, 0.5)
    kw = dict(weight="alg", wvar=wvar, epsabs=1e-13, epsrel=1e-13, limit=500)
    re = integrate.quad(f, lm, lp, args=(np.real,), **kw)[0]
    im = integrate.quad(f, lm, lp, args=(np.imag,), **kw)[0]
    return complex(re, im)


def oracle_cdf(x, gamma):
    lm = (1 - math.sqrt(gamma)) ** 2
    if x <= lm:
        return 0.0
    return integrate.quad(lambda t: mp.rho_mp(t, gamma), lm, x, epsabs=1e-13, epsrel=1e-13, limit=500)[0]


def z_grid(n=100):
    rng = np.random.default_rng(7)
    E = rng.uniform(-1.0, 5.0, n)
    eta = 10 ** rng.uniform(-3, 1, n)
    return E + 1j * eta


def test_params():
    p = mp.MPParams(0.25)
    assert p.lambda_minus == 0.25 and p.lambda_plus == 2.25
    assert mp.MPParams(1).lambda_minus == 0
    for bad in (0, -0.1, 1.5):
        with pytest.raises(ConfigError):
            mp.MPParams(bad)


def test_rho_mp_examples():
    assert mp.rho_mp(2.0, 1.0) == pytest.approx(1 / (2 * np.pi), rel=1e-15)
    assert mp.rho_mp(5.0, 1.0) == 0 and mp.rho_mp(0.01, 0.5) == 0 and mp.rho_mp(-1.0, 1.0) == 0
    lm, lp = mp.MPParams(0.5).lambda_minus, mp.MPParams(0.5).lambda_plus
    mass = integrate.quad(lambda x: mp.rho_mp(x, 0.5), lm, lp, epsabs=1e-12, limit=200)[0]
    assert abs(mass - 1) < 1e-8


@pytest.mark.parametrize("gamma", GAMMAS)
def test_rho_linear_relation(gamma):
    E = np.linspace(-2.5, 2.5, 401)
    E = E[E != 0]
    expected = mp.rho_mp(E * E, gamma) * np.abs(E) * 2 * gamma ** 2 / (1 + gamma)
    np.testing.assert_allclose(mp.rho_linear(E, gamma), expected, rtol=1e-13, atol=1e-15)
    np.testing.assert_array_equal(mp.rho_linear(E, gamma), mp.rho_linear(-E, gamma))


def test_rho_linear_examples():
    assert mp.rho_linear(math.sqrt(2), 1.0) == pytest.approx(mp.rho_mp(2.0, 1.0) * math.sqrt(2), rel=1e-14)
    assert mp.rho_linear(0.1, 0.5) == 0
    # semicircle at gamma = 1, including the centre
    E = np.linspace(-2, 2, 81)
    np.testing.assert_allclose(mp.rho_linear(E, 1.0), np.sqrt(4 - E * E) / (2 * np.pi), atol=1e-15)


@pytest.mark.parametrize("gamma", [0.5, 0.25, 0.8])
def test_rho_linear_mass(gamma):
    lp = (1 + math.sqrt(gamma))
    lm = (1 - math.sqrt(gamma))
    half = integrate.quad(lambda E: mp.rho_linear(E, gamma), lm, lp, epsabs=1e-12, limit=200)[0]
    assert 2 * half == pytest.approx(2 * gamma ** 2 / (1 + gamma), abs=1e-9)


def test_m_inf_examples():
    assert complex(mp.m_inf(-1.0, 1.0)) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-14)
    assert abs(oracle_stieltjes(-1.0, 1.0) - (math.sqrt(5) - 1) / 2) < 1e-10
    z = 1000 + 1j
    assert abs(mp.m_inf(z, 0.5) * -z - 1) < 0.01
    for E in (0.5, 1.0, 2.0, 3.5):
        m = complex(mp.m_inf(E + 1e-6j, 1.0))
        assert m.imag / np.pi == pytest.approx(mp.rho_mp(E, 1.0), abs=1e-3)
    with pytest.raises(ValueError):
        mp.m_inf(0.0, 1.0)


@pytest.mark.parametrize("gamma", GAMMAS)
def test_m_inf_matches_quadrature(gamma):
    for z in z_grid():
        assert abs(complex(mp.m_inf(z, gamma)) - oracle_stieltjes(z, gamma)) <= 1e-6


@pytest.mark.parametrize("gamma", GAMMAS)
def test_root_residual_and_herglotz(gamma):
    z = z_grid(2000)
    m = mp.m_inf(z, gamma)
    assert np.abs(mp.sce_residual(m, z, gamma)).max() <= 1e-10
    assert (m.imag > 0).all()
    assert (mp.m_lin(z, gamma).imag > 0).all()
    np.testing.assert_allclose(mp.m_inf(np.conj(z), gamma), np.conj(m), rtol=0, atol=0)


@pytest.mark.parametrize("gamma", GAMMAS)
def test_stieltjes_inversion(gamma):
    p = mp.MPParams(gamma)
    E = np.linspace(p.lambda_minus, p.lambda_plus, 52)[1:-1]
    E = E[E > 0.05]
    got = mp.m_inf(E + 1e-6j, gamma).imag / np.pi
    np.testing.assert_allclose(got, mp.rho_mp(E, gamma), atol=1e-3)


def test_real_axis_off_support():
    p = mp.MPParams(0.25)
    for x in (-2.0, 0.1, 3.0, 50.0):
        m = complex(mp.m_inf(x, p))
        assert m.imag == 0
        assert abs(m - complex(mp.m_inf(x + 1e-10j, p))) < 1e-8


def test_semicircle_at_square_ratio():
    z = z_grid(500)
    w = np.concatenate([z, np.sqrt(z)])  # first quadrant and beyond
    np.testing.assert_allclose(mp.m_lin(w, 1.0), mp.semicircle_transform(w), rtol=0, atol=1e-10)
    assert complex(mp.m_lin(2j, 1.0)) == pytest.approx(1j * (math.sqrt(2) - 1), abs=1e-15)
    # m_lin integrates the symmetrized density against 1/(E - z)
    sc = integrate.quad(lambda E: np.sqrt(4 - E * E) / (2 * np.pi) / (E * E + 4), -2, 2)[0]
    assert complex(mp.m_lin(2j, 1.0)).imag == pytest.approx(2 * sc, abs=1e-12)


@given(st.floats(0.05, 1.0), st.floats(-4, 4), st.floats(1e-3, 10))
@settings(max_examples=200, deadline=None)
def test_variants(gamma, E, eta):
    z = complex(E, eta)
    v = mp.m_variants(z, gamma)
    assert v.m_inf_plus == pytest.approx(gamma * v.m_inf + (gamma - 1) / z, rel=1e-13, abs=1e-14)
    assert v.m_lin == pytest.approx(z * complex(mp.m_inf(z * z, gamma)), rel=1e-13, abs=1e-14)
    assert v.m_lin_plus == pytest.approx(gamma * v.m_lin + (gamma - 1) / z, rel=1e-13, abs=1e-14)
    assert abs(mp.sce_residual_large(v.m_inf_plus, z, gamma)) < 1e-9


def test_variants_square_case():
    v = mp.m_variants(0.3 + 0.7j, 1.0)
    assert v.m_inf_plus == v.m_inf and v.m_lin_plus == v.m_lin


def test_m_inf_plus_measure():
    # gamma rho + (1 - gamma) delta_0
    g, z = 0.5, 1.2 + 0.3j
    expected = g * oracle_stieltjes(z, g) + (1 - g) / (0 - z)
    assert abs(complex(mp.m_inf_plus(z, g)) - expected) < 1e-10


def test_cdf_and_quadrature():
    for g in GAMMAS:
        p = mp.MPParams(g)
        assert mp.mp_cdf(p.lambda_plus, p) == 1 and mp.mp_cdf(p.lambda_minus - 1, p) == 0
        for x in np.linspace(p.lambda_minus, p.lambda_plus, 7)[1:-1]:
            assert abs(mp.mp_cdf(x, p) - oracle_cdf(x, g)) < 1e-9
        assert abs(mp.stieltjes_quadrature(0.7 + 0.01j, p) - oracle_stieltjes(0.7 + 0.01j, g)) < 1e-9


def _bisect_quantile(q, gamma):
    p = mp.MPParams(gamma)
    lo, hi = p.lambda_minus, p.lambda_plus
    for _ in range(60):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if oracle_cdf(mid, gamma) < q else (lo, mid)
    return (lo + hi) / 2


def test_classical_locations_oracle():
    locs = mp.classical_locations(10, 1.0)
    assert locs[-1] == 4.0
    assert abs(locs[4] - _bisect_quantile(0.5, 1.0)) < 1e-9
    locs = mp.classical_locations(8, 0.5)
    for i in (1, 4, 7):
        assert abs(locs[i - 1] - _bisect_quantile(i / 8, 0.5)) < 1e-9


@pytest.mark.parametrize("gamma", [1.0, 0.5])
def test_classical_locations_consistency(gamma):
    N = 200
    locs = mp.classical_locations(N, gamma)
    assert (np.diff(locs) > 0).all()
    assert abs(locs[-1] - mp.MPParams(gamma).lambda_plus) < 1e-8
    for i in range(1, N, 13):
        assert abs(oracle_cdf(locs[i - 1], gamma) - i / N) < 1e-8
    assert mp.classical_locations(1, gamma)[0] == mp.MPParams(gamma).lambda_plus
    with pytest.raises(ValueError):
        mp.classical_locations(0, gamma)


def test_sce_residuals_at_roots():
    z = 1 + 0.5j
    m = complex(mp.m_inf(z, 1.0))
    assert mp.sce_residual(0, z, 0.3) == 1
    assert abs(mp.sce_residual(m, z, 1.0)) < 1e-14
    assert abs(mp.sce_residual_small(m, z, 1.0)) < 1e-14
    g = 0.5
    m = complex(mp.m_inf(z, g))
    assert abs(mp.sce_residual_small(m, z, g)) < 1e-14
    assert abs(mp.sce_residual_large(complex(mp.m_inf_plus(z, g)), z, g)) < 1e-14
    for w in (0.8 + 0.3j, -1.7 + 0.01j, 2j):
        assert abs(mp.sce_residual_black(complex(mp.m_lin_plus(w, g)), w, g)) < 1e-13
        assert abs(mp.sce_residual_white(complex(mp.m_lin(w, g)), w, g)) < 1e-13


def test_stability_gap():
    g, z = 0.5, 1.3 + 0.2j
    m = complex(mp.m_inf(z, g))
    gap, bound = mp.stability_gap(m, z, g)
    assert gap == 0
    delta = 1e-7
    gap, bound = mp.stability_gap(m + delta, z, g)
    R = complex(mp.sce_residual(m + delta, z, g))
    assert R == pytest.approx((2 * g * z * m + g + z - 1) * delta, rel=1e-5)
    assert gap == pytest.approx(delta, rel=1e-6) and np.isfinite(gap / bound)
    with pytest.raises(ValueError):
        mp.stability_gap(m, 1.0, g)
    with pytest.raises(ValueError):
        mp.stability_gap(m, 0.01 + 1j, g, epsilon=0.1)


@given(st.floats(0.05, 1.0), st.floats(-5, 5), st.floats(1e-4, 10), st.floats(0, 1))
@settings(max_examples=300, deadline=None)
def test_F_below_sqrt(gamma, E, eta, r):
    assert mp.F(complex(E, eta), r, gamma) <= math.sqrt(r) + 1e-15


@given(st.integers(10, 5000), st.integers(1, 40), st.floats(-3, 3), st.floats(1e-4, 10), st.floats(1.01, 10))
def test_phi_decreasing(N, d_b, E, eta, factor):
    c = mp.ControlParams(N, d_b, 0.5)
    assert c.Phi(complex(E, eta * factor)) < c.Phi(complex(E, eta))
    assert c.D > 0


def test_control_params():
    c = mp.ControlParams(400, 20, 0.5)
    assert c.D == 20 and c.xi == pytest.approx(math.log(400) ** 2)
    assert mp.ControlParams(2, 1).xi == math.e
    assert mp.ControlParams(100, 10).D == pytest.approx(10.0)
    assert mp.ControlParams(100, 30).D == pytest.approx(1e4 / 27e3)
    with pytest.raises(ConfigError):
        mp.ControlParams(100, 10, xi=2.0)
    with pytest.raises(ConfigError):
        mp.ControlParams(0, 1)


def test_boundedness():
    scan = mp.boundedness_scan(1.0)
    assert abs(scan.maximum - 1) < 1e-6
    assert set(scan.maxima) == {"bulk", "tail"}
    scan = mp.boundedness_scan(0.5)
    assert set(scan.maxima) == {"bulk", "tail", "small"}
    assert all(np.isfinite(v) for v in scan.maxima.values())
    assert scan.epsilon == pytest.approx(math.sqrt(mp.MPParams(0.5).lambda_minus) / 100)
    far = np.abs(mp.m_lin(np.array([1e4 + 1j, -1e5 + 1j]), 0.5))
    assert (far < 1e-3).all()
