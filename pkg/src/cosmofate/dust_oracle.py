"""Ground truth for pressureless matter with positive curvature.

With P = 0 the density is rho = rho1 / a^3 and, writing a = sqrt(K/Lambda) xi,
the first integral becomes

    (c sqrt(Lambda/3) dt)^2 = xi / f(xi) dxi^2,   f(xi) = xi^3 - 3 xi + 2 alpha,

with alpha = (4 pi G rho1 / c^2) sqrt(Lambda / K^3). The sign of alpha - 1
decides the qualitative history:

* alpha < 1: f has positive roots xi1 < 1 < xi2. Below xi1 the universe
  recollapses (``Case0_0``); above xi2 it bounces (``Case0_1``).
* alpha = 1: double root at xi = 1, the static universe. Trajectories tend to
  it asymptotically from above (``Case1_0``) or below (``Case1_1``).
* alpha > 1: no positive root; a Big Bang followed by a coasting epoch and
  exponential growth (``Case2``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

from scipy import integrate

from .dynamics import State, acceleration
from .eos import EosModel
from .errors import DomainError, NumericError

CASES = ("Case0_0", "Case0_1", "Case1_0", "Case1_1", "Case2")

SCENARIOS = {
    ("Case0_0", 1): "BB ↗↘ BC",
    ("Case0_0", -1): "BB ↗↘ BC",
    ("Case0_0", 0): "BB ↗↘ BC",
    ("Case0_1", 1): "EC ↘↗ EE",
    ("Case0_1", -1): "EC ↘↗ EE",
    ("Case0_1", 0): "EC ↘↗ EE",
    ("Case1_0", 1): "AS ↗ EE",
    ("Case1_0", -1): "EC ↘ AS",
    ("Case1_1", 1): "BB ↗ AS",
    ("Case1_1", -1): "AS ↘ BC",
    ("Case2", 1): "BB ↗ EE",
    ("Case2", -1): "EC ↘ BC",
}


_DUST = EosModel.dust()


class Classification(NamedTuple):
    case: str
    scenario: str


@dataclass(frozen=True)
class DustSetup:
    rho1: float
    K: float
    alpha: float
    case: Optional[str]
    roots: tuple


def f_alpha(alpha, xi):
    return xi ** 3 - 3.0 * xi + 2.0 * alpha


def alpha_of(params, rho1, K):
    """alpha = (4 pi G rho1 / c^2) sqrt(Lambda / K^3)."""
    if not K > 0:
        raise DomainError("alpha is only defined for K > 0")
    if not rho1 > 0:
        raise DomainError("rho1 must be positive")
    return 4.0 * math.pi * params.G * rho1 / params.c ** 2 * math.sqrt(params.Lambda / K ** 3)


def rho1_of(params, alpha, K):
    """Inverse of :func:`alpha_of` for rho1."""
    return alpha * params.c ** 2 / (4.0 * math.pi * params.G) * math.sqrt(K ** 3 / params.Lambda)


def cubic_roots(alpha):
    """Positive roots of f_alpha.

    Trigonometric solution of the depressed cubic xi^3 - 3 xi + 2 alpha,
    polished by one Newton step. Returns ``(xi1, xi2)`` for 0 < alpha < 1,
    ``(1.0, 1.0)`` for alpha = 1 and ``()`` for alpha > 1.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if alpha > 1.0:
        return ()
    if alpha == 1.0:
        return (1.0, 1.0)
    phi = math.acos(-alpha) / 3.0
    xi2 = 2.0 * math.cos(phi)
    xi1 = 2.0 * math.cos(phi - 2.0 * math.pi / 3.0)
    out = []
    for x in (xi1, xi2):
        d = 3.0 * x * x - 3.0
        if d != 0.0:
            x -= f_alpha(alpha, x) / d
        out.append(x)
    return tuple(out)


def dust_setup(params, rho1, K, branch=None):
    """Collect alpha, roots and (when ``branch`` is given) the case label."""
    alpha = alpha_of(params, rho1, K)
    roots = cubic_roots(alpha)
    case = case_of(alpha, branch) if branch is not None else None
    return DustSetup(rho1, K, alpha, case, roots)


def case_of(alpha, branch):
    if branch not in ("low", "high"):
        raise DomainError(f"branch must be 'low' or 'high', got {branch!r}")
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if alpha > 1.0:
        return "Case2"
    if alpha == 1.0:
        return "Case1_1" if branch == "low" else "Case1_0"
    return "Case0_0" if branch == "low" else "Case0_1"


def classify_alpha(alpha, branch, adot_sign):
    """Scenario label for a dust universe with K > 0.

    For alpha > 1 there is a single branch and both names map to ``Case2``.
    ``adot_sign`` 0 is accepted only for the recollapsing and bouncing cases,
    where it marks the turning point.
    """
    case = case_of(alpha, branch)
    key = (case, int(adot_sign))
    if key not in SCENARIOS:
        raise DomainError(f"adot_sign={adot_sign} is not attainable in {case}")
    return Classification(case, SCENARIOS[key])


def branch_interval(alpha, branch):
    """Positivity interval of f_alpha on the given branch."""
    case = case_of(alpha, branch)
    roots = cubic_roots(alpha)
    if case == "Case2":
        return (0.0, math.inf)
    if case == "Case0_0":
        return (0.0, roots[0])
    if case == "Case0_1":
        return (roots[1], math.inf)
    if case == "Case1_1":
        return (0.0, 1.0)
    return (1.0, math.inf)


def default_xi(alpha, branch):
    """A representative starting point on a branch (used by scans)."""
    case = case_of(alpha, branch)
    roots = cubic_roots(alpha)
    if case == "Case0_0":
        return 0.5 * roots[0]
    if case == "Case0_1":
        return 2.0 * roots[1]
    return 0.5 if branch == "low" else 2.0


def dust_state(params, alpha, xi, adot_sign, K=1.0):
    """Initial state with the given alpha, position xi and sign of adot."""
    if not (params.Lambda > 0 and K > 0):
        raise DomainError("dust_state needs Lambda > 0 and K > 0")
    f = f_alpha(alpha, xi)
    if f < 0 or xi <= 0:
        raise DomainError(f"xi={xi} is not in an allowed region for alpha={alpha}")
    a0 = math.sqrt(K / params.Lambda) * xi
    rho0 = rho1_of(params, alpha, K) / a0 ** 3
    adot0 = adot_sign * params.c * math.sqrt(K / 3.0) * math.sqrt(f / xi)
    return State(a0, adot0, rho0)


def _interval_of(alpha, xi):
    roots = cubic_roots(alpha)
    if not roots:
        return (0.0, math.inf)
    lo_root, hi_root = roots
    if xi <= lo_root:
        return (0.0, lo_root)
    if xi >= hi_root:
        return (hi_root, math.inf)
    return None


def _quad(func, lo, hi, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(func, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=500,
                                  points=points)[:2]
    if not math.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise NumericError("time integral did not converge", residual=err)
    return val


def dust_time_integral(alpha, xi_from, xi_to, method="quad"):
    """Elapsed c sqrt(Lambda/3) (t - t0) between two values of xi.

    Integrates sqrt(xi / f_alpha(xi)) from ``xi_from`` to ``xi_to`` (signed).
    Near a simple root r the substitution xi = r -/+ u^2 removes the inverse
    square-root singularity. ``method="closed"`` uses the logarithmic
    antiderivative available for alpha = 1.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if xi_from < 0 or xi_to < 0:
        raise DomainError("xi must be non-negative")
    if xi_from == xi_to:
        return 0.0
    if method == "closed":
        if alpha != 1.0:
            raise DomainError("closed form exists only for alpha = 1")
        if xi_from == 1.0 or xi_to == 1.0 or (xi_from - 1.0) * (xi_to - 1.0) < 0:
            raise DomainError("interval touches the double root xi = 1")
        return case1_antiderivative(xi_to) - case1_antiderivative(xi_from)
    if method != "quad":
        raise DomainError(f"unknown method {method!r}")
    sign = 1.0
    lo, hi = xi_from, xi_to
    if lo > hi:
        lo, hi, sign = hi, lo, -1.0

    if alpha == 1.0:
        if lo < 1.0 < hi or lo == 1.0 or hi == 1.0:
            raise DomainError("interval straddles or touches the double root xi = 1")
        return sign * _quad(lambda x: math.sqrt(x / (x + 2.0)) / abs(x - 1.0), lo, hi)

    roots = cubic_roots(alpha)
    if not roots:
        points = [1.0] if lo < 1.0 < hi else None
        return sign * _quad(lambda x: math.sqrt(x / f_alpha(alpha, x)), lo, hi, points)

    xi1, xi2 = roots
    tot = -(xi1 + xi2)
    iv = _interval_of(alpha, lo)
    if iv is None or not (iv[0] <= hi <= iv[1]):
        raise DomainError(f"[{lo}, {hi}] straddles a root of f_alpha")
    if iv[1] == xi1:
        # xi = xi1 - u^2, f = u^2 (xi2 - xi)(xi - tot)
        def g(u):
            x = xi1 - u * u
            return 2.0 * math.sqrt(max(x, 0.0) / ((xi2 - x) * (x - tot)))

        u_lo, u_hi = math.sqrt(xi1 - hi), math.sqrt(xi1 - lo)
    else:
        # xi = xi2 + u^2, f = u^2 (xi - xi1)(xi - tot)
        def g(u):
            x = xi2 + u * u
            return 2.0 * math.sqrt(x / ((x - xi1) * (x - tot)))

        u_lo, u_hi = math.sqrt(lo - xi2), math.sqrt(hi - xi2)
    return sign * _quad(g, u_lo, u_hi)


def case1_antiderivative(xi):
    """Closed-form antiderivative of sqrt(xi / f_1(xi)), with x = sqrt(xi/(xi+2)).

    Above the double root (1/sqrt(3) < x < 1)::

        (1/sqrt 3) log((sqrt3 x - 1)/(sqrt3 x + 1)) + log((1 + x)/(1 - x))

    below it (0 < x < 1/sqrt(3))::

        (1/sqrt 3) log((1 + sqrt3 x)/(1 - sqrt3 x)) + log((1 - x)/(1 + x))
    """
    if not xi > 0 or xi == 1.0:
        raise DomainError("xi must be positive and different from 1")
    x = math.sqrt(xi / (xi + 2.0))
    r3 = math.sqrt(3.0)
    if xi > 1.0:
        return math.log((r3 * x - 1.0) / (r3 * x + 1.0)) / r3 + math.log((1.0 + x) / (1.0 - x))
    return math.log((1.0 + r3 * x) / (1.0 - r3 * x)) / r3 + math.log((1.0 - x) / (1.0 + x))


def static_scale_factor(params, rho1):
    """a_bar = (4 pi G rho1 / (c^2 Lambda))^(1/3), where the acceleration vanishes."""
    return (4.0 * math.pi * params.G * rho1 / (params.c ** 2 * params.Lambda)) ** (1.0 / 3.0)


class CoastingPoint(NamedTuple):
    t_m: float
    adot_min: float
    a_m: float
    accel: float


def lemaitre_coasting(params, setup):
    """Coasting epoch of the alpha > 1 model.

    ``t_m`` is measured from the Big Bang. At t_m the scale factor equals
    a_bar, the acceleration vanishes and adot reaches its positive minimum.
    """
    if not setup.alpha > 1.0:
        raise DomainError("coasting requires alpha > 1")
    K = setup.K
    a_bar = static_scale_factor(params, setup.rho1)
    xi_bar = a_bar * math.sqrt(params.Lambda / K)
    t_m = dust_time_integral(setup.alpha, 0.0, xi_bar) / params.de_sitter_rate
    adot_min = params.c * math.sqrt(K / 3.0) * math.sqrt(f_alpha(setup.alpha, xi_bar) / xi_bar)
    accel = acceleration(params, _DUST, a_bar, setup.rho1 / a_bar ** 3)
    return CoastingPoint(t_m, adot_min, a_bar, accel)


def turning_point_curvature(params, alpha, branch, K=1.0):
    """d^2 a / dt^2 at the turning point of the recollapsing or bouncing branch.

    In xi the acceleration is (c^2 Lambda / 3)(xi - alpha / xi^2); at a root of
    f_alpha this equals (c^2 Lambda / 2)(xi^2 - 1) / xi, so

        a(t) = sqrt(K/Lambda) (xi_r + (c^2 Lambda / 4)(xi_r^2 - 1)/xi_r (t - t_*)^2 + ...)
    """
    case = case_of(alpha, branch)
    if case not in ("Case0_0", "Case0_1"):
        raise DomainError("turning points exist only for 0 < alpha < 1")
    xi1, xi2 = cubic_roots(alpha)
    xr = xi1 if case == "Case0_0" else xi2
    return math.sqrt(K / params.Lambda) * (params.c ** 2 * params.Lambda / 2.0) * (xr * xr - 1.0) / xr


def scan(alphas, branch="low", adot_sign=1):
    """Rows ``(alpha, branch, case, xi1, xi2, scenario)`` for a grid of alphas."""
    branches = ("low", "high") if branch == "both" else (branch,)
    rows = []
    for alpha in alphas:
        roots = cubic_roots(alpha)
        xi1, xi2 = roots if roots else (math.nan, math.nan)
        for b in branches:
            cl = classify_alpha(alpha, b, adot_sign)
            rows.append((float(alpha), b, cl.case, xi1, xi2, cl.scenario))
    return rows

