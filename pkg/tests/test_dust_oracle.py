import math

import numpy as np
import pytest
from scipy import integrate as spi
from scipy.interpolate import CubicHermiteSpline

from cosmofate import asymptotics, dust_oracle as do, dynamics as dy, integrator as it
from cosmofate.dynamics import CosmoParams
from cosmofate.eos import EosModel
from cosmofate.errors import DomainError

from oracles import bisect

DUST = EosModel.dust()
NAT = CosmoParams.natural(1.0)


def test_alpha_examples():
    p = CosmoParams(1.0, 1.0, 1.0)
    rho1 = p.c ** 2 / (4 * math.pi * p.G)
    assert do.alpha_of(p, rho1, 1.0) == pytest.approx(1.0, rel=1e-15)
    assert do.alpha_of(p, 2 * rho1, 1.0) == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(DomainError):
        do.alpha_of(p, rho1, 0.0)


@pytest.mark.parametrize("c,G,Lam,a_bar", [(1, 1, 1, 1), (2.0, 0.3, 5.0, 0.7), (3e2, 7.0, 1e-3, 40.0)])
def test_alpha_of_static_universe_is_one(c, G, Lam, a_bar):
    p = CosmoParams(c, G, Lam)
    s = dy.einstein_static_state(p, DUST, a_bar)
    K = dy.friedmann_K(p, DUST, s)
    # by hand: K = (2/3 + 1/3) Lambda a_bar^2 = Lambda a_bar^2
    assert K == pytest.approx(Lam * a_bar ** 2, rel=1e-13)
    assert do.alpha_of(p, s.rho * s.a ** 3, K) == pytest.approx(1.0, abs=1e-12)


def test_roots_special_values():
    assert do.cubic_roots(1.0) == (1.0, 1.0)
    assert do.cubic_roots(2.0) == ()
    assert do.f_alpha(2.0, 1.0) == 2.0


@pytest.mark.parametrize("alpha", np.linspace(0.01, 0.99, 25))
def test_roots_against_bisection(alpha):
    xi1, xi2 = do.cubic_roots(alpha)
    f = lambda x: do.f_alpha(alpha, x)
    r1 = bisect(lambda x: -f(x), 0.0, 1.0)
    r2 = bisect(f, 1.0, 2.0)
    assert xi1 == pytest.approx(r1, rel=1e-13)
    assert xi2 == pytest.approx(r2, rel=1e-13)
    assert 0 < xi1 < 1 < xi2
    assert abs(f(xi1)) < 1e-13 and abs(f(xi2)) < 1e-13


def test_root_count_matches_sign():
    for alpha in np.linspace(0.05, 3.0, 60):
        n = len(do.cubic_roots(alpha))
        assert n == (2 if alpha <= 1 else 0)


def _closed_case1(xi):
    # direct transcription of the two logarithmic formulas
    x = math.sqrt(xi / (xi + 2))
    r3 = math.sqrt(3)
    if x > 1 / r3:
        return (1 / r3) * math.log((r3 * x - 1) / (r3 * x + 1)) + math.log((1 + x) / (1 - x))
    return (1 / r3) * math.log((1 + r3 * x) / (1 - r3 * x)) + math.log((1 - x) / (1 + x))


@pytest.mark.parametrize("lo,hi", [(1.1, 1.5), (1.01, 3.0), (2.0, 40.0), (1.3, 1.31)])
def test_case1_upper_closed_form(lo, hi):
    q = do.dust_time_integral(1.0, lo, hi)
    assert q == pytest.approx(_closed_case1(hi) - _closed_case1(lo), rel=1e-10)
    assert do.dust_time_integral(1.0, lo, hi, method="closed") == pytest.approx(q, rel=1e-10)


@pytest.mark.parametrize("lo,hi", [(0.1, 0.5), (1e-4, 0.99), (0.5, 0.9), (0.9, 0.95)])
def test_case1_lower_closed_form(lo, hi):
    q = do.dust_time_integral(1.0, lo, hi)
    assert q == pytest.approx(_closed_case1(hi) - _closed_case1(lo), rel=1e-10)


def test_case1_antiderivative_derivative():
    for xi in (0.2, 0.7, 1.5, 4.0):
        h = 1e-6 * xi
        d = (do.case1_antiderivative(xi + h) - do.case1_antiderivative(xi - h)) / (2 * h)
        assert d == pytest.approx(math.sqrt(xi / (xi + 2)) / abs(xi - 1), rel=1e-7)


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_time_integral_near_roots(alpha):
    xi1, xi2 = do.cubic_roots(alpha)
    # endpoint singularity: compare to scipy's algebraic-weight quadrature
    w = lambda x: math.sqrt(x / ((xi2 - x) * (x + xi1 + xi2)))
    ref = spi.quad(w, 0.2 * xi1, xi1, weight="alg", wvar=(0, -0.5), epsabs=0, epsrel=1e-13)[0]
    # quad's alg weight is (x-a)^0 (b-x)^-0.5, matching 1/sqrt(xi1 - x)
    assert do.dust_time_integral(alpha, 0.2 * xi1, xi1) == pytest.approx(ref, rel=1e-10)
    # additivity
    a, b, c = 2 * xi2, 3 * xi2, 7 * xi2
    whole = do.dust_time_integral(alpha, a, c)
    assert whole == pytest.approx(do.dust_time_integral(alpha, a, b) + do.dust_time_integral(alpha, b, c),
                                  rel=1e-12)
    assert do.dust_time_integral(alpha, c, a) == pytest.approx(-whole, rel=1e-15)


def test_time_integral_errors():
    xi1, xi2 = do.cubic_roots(0.5)
    with pytest.raises(DomainError):
        do.dust_time_integral(0.5, 0.5 * xi1, 0.5 * (xi1 + xi2))
    with pytest.raises(DomainError):
        do.dust_time_integral(1.0, 0.5, 1.5)
    with pytest.raises(DomainError):
        do.dust_time_integral(0.7, 0.1, 0.2, method="closed")


def test_classify_alpha_examples():
    assert do.classify_alpha(2.0, "low", 1).scenario == "BB ↗ EE"
    assert do.classify_alpha(0.5, "low", 1).scenario == "BB ↗↘ BC"
    assert do.classify_alpha(0.5, "high", -1).scenario == "EC ↘↗ EE"
    assert do.classify_alpha(2.0, "high", -1).scenario == "EC ↘ BC"
    assert do.classify_alpha(1.0, "low", 1).scenario == "BB ↗ AS"
    assert do.classify_alpha(1.0, "high", 1).scenario == "AS ↗ EE"
    with pytest.raises(DomainError):
        do.classify_alpha(0.5, "middle", 1)
    with pytest.raises(DomainError):
        do.classify_alpha(2.0, "low", 0)


@pytest.mark.parametrize("alpha", [1.2, 2.0, 5.0])
def test_lemaitre_coasting(alpha):
    p = CosmoParams(1.0, 1.0, 1.0)
    setup = do.dust_setup(p, do.rho1_of(p, alpha, 1.0), 1.0)
    cp = do.lemaitre_coasting(p, setup)
    assert abs(cp.accel) < 1e-10 * p.c ** 2 * p.Lambda * cp.a_m
    assert cp.a_m == pytest.approx(alpha ** (1 / 3), rel=1e-14)
    assert cp.adot_min > 0
    # follow the trajectory from near the Big Bang
    xi0 = 1e-3
    s0 = do.dust_state(p, alpha, xi0, +1)
    tr = it.integrate(p, DUST, s0, (0.0, 50.0), it.IntegrationConfig(a_max_stop=10.0))
    assert np.min(tr.adot) >= cp.adot_min * (1 - 1e-9)
    spline = CubicHermiteSpline(tr.t, tr.a, tr.adot)
    fine = np.linspace(tr.t[0], tr.t[-1], 200_001)
    assert np.min(spline.derivative()(fine)) == pytest.approx(cp.adot_min, rel=1e-6)
    t_from_bb = tr.t + do.dust_time_integral(alpha, 0.0, xi0) / p.de_sitter_rate
    t_cross = np.interp(cp.a_m, tr.a, t_from_bb)
    assert t_cross == pytest.approx(cp.t_m, rel=1e-6)


def test_static_scale_factor_zeroes_acceleration():
    p = CosmoParams(2.0, 0.5, 3.0)
    rho1 = 0.8
    a_bar = do.static_scale_factor(p, rho1)
    assert abs(dy.acceleration(p, DUST, a_bar, rho1 / a_bar ** 3)) < 1e-14 * p.c ** 2 * p.Lambda * a_bar


@pytest.mark.parametrize("alpha,branch", [(0.5, "low"), (0.3, "high"), (0.8, "low")])
def test_turning_point_expansion(alpha, branch):
    p = NAT
    xi1, xi2 = do.cubic_roots(alpha)
    xi0 = 0.5 * xi1 if branch == "low" else 2 * xi2
    sign = 1 if branch == "low" else -1
    tr = it.integrate(p, DUST, do.dust_state(p, alpha, xi0, sign), (0.0, 20.0))
    ts = tr.events_of("adot_zero")[0].t
    curv = do.turning_point_curvature(p, alpha, branch)
    # even about the turning time with the derived curvature
    for dt in (1e-3, 3e-3, 1e-2):
        left, right = tr.a_at(ts - dt), tr.a_at(ts + dt)
        assert left == pytest.approx(right, rel=1e-9)
        a_t = tr.a_at(ts)
        num = (left + right - 2 * a_t) / dt ** 2
        assert num == pytest.approx(curv, rel=1e-3)
    assert (curv < 0) == (branch == "low")


def test_bigbang_prefactor_from_oracle_setup():
    alpha = 0.5
    xi1 = do.cubic_roots(alpha)[0]
    s0 = do.dust_state(NAT, alpha, 0.5 * xi1, +1)
    tr = it.integrate(NAT, DUST, s0, (0.0, -10.0))
    fit_a, _ = asymptotics.fit_bigbang(tr, 1.0, NAT)
    rho1 = s0.rho * s0.a ** 3
    assert fit_a.prefactor == pytest.approx((6 * math.pi * rho1) ** (1 / 3), rel=0.02)


def test_scan_rows():
    rows = do.scan(np.linspace(0.1, 3, 100))
    assert len(rows) == 100
    assert rows[0][2] == "Case0_0" and rows[-1][2] == "Case2"
    assert len(do.scan([0.5, 2.0], branch="both")) == 4
