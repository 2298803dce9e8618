"""Reduced Friedmann system, its first integral and the sign conditions.

The homogeneous universe is described by the scale factor ``a``, its rate
``adot`` and the mass density ``rho``::

    da/dt    = adot
    dadot/dt = (-(4 pi G / 3)(rho + 3 P / c^2) + c^2 Lambda / 3) a
    drho/dt  = -3 (rho + P / c^2) adot / a

The combination ``X = adot^2 - (8 pi G rho / 3 + c^2 Lambda / 3) a^2`` is
conserved and equals ``-c^2 K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from scipy import optimize

from . import eos
from .errors import DomainError

ZERO_BAND = 1e-12


@dataclass(frozen=True)
class CosmoParams:
    """Physical constants: speed of light, gravitational constant and Lambda."""

    c: float = 1.0
    G: float = 1.0
    Lambda: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise DomainError("c must be positive")
        if not (self.G > 0 and math.isfinite(self.G)):
            raise DomainError("G must be positive")
        if not (self.Lambda >= 0 and math.isfinite(self.Lambda)):
            raise DomainError("Lambda must be non-negative")

    @classmethod
    def natural(cls, Lambda=1.0):
        """Units with c = G = 1; Lambda stays explicit."""
        return cls(1.0, 1.0, float(Lambda))

    @property
    def de_sitter_rate(self):
        """Late-time expansion rate c sqrt(Lambda / 3)."""
        return self.c * math.sqrt(self.Lambda / 3.0)

    @property
    def static_rate(self):
        """Instability rate c sqrt(Lambda) of the static dust universe."""
        return self.c * math.sqrt(self.Lambda)


class State(NamedTuple):
    a: float
    adot: float
    rho: float


class FirstIntegral(NamedTuple):
    X: float
    K: float


def _check_state(s):
    a, _, rho = s
    if not (a > 0 and math.isfinite(a)):
        raise DomainError(f"scale factor must be positive, got {a!r}")
    if not (rho > 0 and math.isfinite(rho)):
        raise DomainError(f"density must be positive, got {rho!r}")


def rhs(params, model, s):
    """Right-hand side ``(da/dt, dadot/dt, drho/dt)`` at state ``s``."""
    _check_state(s)
    a, adot, rho = s
    c2 = params.c * params.c
    P = eos.pressure(model, rho)
    accel = (-(4.0 * math.pi * params.G / 3.0) * (rho + 3.0 * P / c2) + c2 * params.Lambda / 3.0) * a
    drho = -3.0 * (rho + P / c2) * adot / a
    return adot, accel, drho


def acceleration(params, model, a, rho):
    """d(adot)/dt, which does not depend on adot."""
    c2 = params.c * params.c
    P = eos.pressure(model, rho)
    return (-(4.0 * math.pi * params.G / 3.0) * (rho + 3.0 * P / c2) + c2 * params.Lambda / 3.0) * a


def potential_term(params, a, rho):
    """(8 pi G rho / 3 + c^2 Lambda / 3) a^2, the positive part of the first integral."""
    return (8.0 * math.pi * params.G * rho / 3.0 + params.c ** 2 * params.Lambda / 3.0) * a * a


def first_integral(params, s):
    """Return ``(X, K)`` with ``K = -X / c^2``."""
    a, adot, rho = s
    X = adot * adot - potential_term(params, a, rho)
    return FirstIntegral(X, -X / params.c ** 2)


def friedmann_K(params, model, s):
    """Curvature constant K fixed by the state ``s``."""
    _check_state(s)
    a, adot, rho = s
    return (potential_term(params, a, rho) - adot * adot) / params.c ** 2


def _sign(x, scale, tol):
    if abs(x) <= tol * scale:
        return 0
    return 1 if x > 0 else -1


@dataclass(frozen=True)
class ConditionFlags:
    """Signed quantities entering the hypotheses of the fate theorems.

    ``past_crit`` is 4 pi G (rho + 3P/c^2) - c^2 Lambda: non-negative means
    the universe decelerates (Big Bang hypothesis), non-positive means it
    accelerates (expansion hypothesis).
    """

    past_crit: float
    past_crit_sign: int
    K: float
    K_sign: int
    adot: float
    adot_sign: int

    @property
    def cond_8(self):
        return self.past_crit_sign >= 0

    @property
    def cond_Ex(self):
        return self.past_crit_sign <= 0

    @property
    def cond_Esc(self):
        return self.K_sign <= 0

    def to_dict(self):
        return {
            "past_crit": self.past_crit,
            "past_crit_sign": self.past_crit_sign,
            "K": self.K,
            "K_sign": self.K_sign,
            "adot": self.adot,
            "adot_sign": self.adot_sign,
            "cond8": self.cond_8,
            "condEx": self.cond_Ex,
            "condEsc": self.cond_Esc,
        }


def condition_flags(params, model, s, tol=ZERO_BAND):
    """Evaluate the sign conditions with a relative zero band ``tol``.

    Each quantity is compared against its own natural scale: c^2 Lambda (or
    the gravitational term when Lambda = 0) for ``past_crit``, the positive
    part of the first integral for K, and its square root for ``adot``.
    """
    _check_state(s)
    a, adot, rho = s
    c2 = params.c ** 2
    P = eos.pressure(model, rho)
    grav = 4.0 * math.pi * params.G * (rho + 3.0 * P / c2)
    lam = c2 * params.Lambda
    past_crit = grav - lam
    crit_scale = lam if lam > 0 else grav
    pot = potential_term(params, a, rho)
    K = (pot - adot * adot) / c2
    return ConditionFlags(
        past_crit=past_crit,
        past_crit_sign=_sign(past_crit, crit_scale, tol),
        K=K,
        K_sign=_sign(K, (pot + adot * adot) / c2, tol),
        adot=adot,
        adot_sign=_sign(adot, math.sqrt(pot), tol),
    )


def flat_mass(params, model, s, K):
    """Modified total mass (4 pi / 3) a^3 K^(-3/2) rho_flat, constant in time."""
    if not K > 0:
        raise DomainError("flat_mass requires K > 0")
    _check_state(s)
    a, _, rho = s
    return (4.0 * math.pi / 3.0) * a ** 3 * K ** -1.5 * eos.rho_flat(model, rho)


def total_mass(params, s, K):
    """Unmodified total mass (4 pi / 3) a^3 K^(-3/2) rho."""
    if not K > 0:
        raise DomainError("total_mass requires K > 0")
    a, _, rho = s
    return (4.0 * math.pi / 3.0) * a ** 3 * K ** -1.5 * rho


def einstein_static_density(params, model):
    """Density of the static universe, solving 4 pi G (rho + 3P/c^2) = c^2 Lambda."""
    if not params.Lambda > 0:
        raise DomainError("the static universe needs Lambda > 0")
    c2 = params.c ** 2
    target = c2 * params.Lambda / (4.0 * math.pi * params.G)
    if model.kind == "dust":
        return target
    if model.kind == "gamma_law":
        return target / (3.0 * model.params[0] - 2.0)

    def g(logr):
        r = math.exp(logr)
        return math.log((r + 3.0 * eos.pressure(model, r) / c2) / target)

    # rho <= rho + 3P/c^2 <= 4 rho brackets the root
    lo, hi = math.log(target / 4.0), math.log(target)
    if g(lo) >= 0:
        return math.exp(lo)
    if g(hi) <= 0:
        return math.exp(hi)
    return math.exp(optimize.brentq(g, lo, hi, xtol=1e-15, rtol=1e-15))


def einstein_static_state(params, model, a_bar=1.0):
    """Equilibrium state (a_bar, 0, rho_bar)."""
    return State(float(a_bar), 0.0, einstein_static_density(params, model))
