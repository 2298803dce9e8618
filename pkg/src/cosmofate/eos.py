"""Equation-of-state families and the effective conserved density.

Four families are provided:

``dust``
    P = 0.
``gamma_law``
    P = (Gamma - 1) c^2 rho with 1 <= Gamma < 2.
``polytropic_tail``
    P = k rho^g / (1 + 3 k rho^(g-1) / c^2). A polytrope of index ``g`` at
    low density which stiffens smoothly to P = c^2 rho / 3 at high density,
    so it satisfies the large-density law with Gamma = 4/3.
``neutron_fermi``
    Degenerate relativistic Fermi gas given parametrically by the Fermi
    momentum ``zeta``::

        P   = A c^5 int_0^zeta q^4 / sqrt(1 + q^2) dq
        rho = 3 A c^3 int_0^zeta q^2 sqrt(1 + q^2) dq

The effective density ``rho_flat = exp(int drho / (rho + P/c^2))`` scales as
``a**-3`` along every solution. For models whose pressure vanishes faster
than linearly at low density the integration constant is fixed so that
``rho_flat / rho -> 1`` as ``rho -> 0``; for the others it is anchored at
``rho_ref = 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericError

KINDS = ("dust", "gamma_law", "polytropic_tail", "neutron_fermi")

_QUAD_EPSREL = 1e-13
_GAMMA_MAX_POLY = 5.0


@dataclass(frozen=True)
class EosModel:
    """Immutable equation of state.

    Use the class-method constructors rather than building instances
    directly; they validate the parameters.
    """

    kind: str
    params: tuple = ()
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown EOS kind {self.kind!r}")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise DomainError("speed of light must be positive")
        p = self.params
        if self.kind == "dust":
            if p:
                raise DomainError("dust takes no parameters")
        elif self.kind == "gamma_law":
            if len(p) != 1:
                raise DomainError("gamma_law takes one parameter (Gamma)")
            if not (1.0 <= p[0] < 2.0):
                raise DomainError(f"gamma_law requires 1 <= Gamma < 2, got {p[0]}")
        elif self.kind == "polytropic_tail":
            if len(p) != 2:
                raise DomainError("polytropic_tail takes (gamma, coef)")
            if not (1.0 < p[0] <= _GAMMA_MAX_POLY):
                raise DomainError(
                    f"polytropic_tail requires 1 < gamma <= {_GAMMA_MAX_POLY}, got {p[0]}")
            if not p[1] > 0:
                raise DomainError("polytropic_tail coefficient must be positive")
        elif self.kind == "neutron_fermi":
            if len(p) != 1 or not p[0] > 0:
                raise DomainError("neutron_fermi takes one positive amplitude A")

    # -- constructors ------------------------------------------------------

    @classmethod
    def dust(cls, c=1.0):
        return cls("dust", (), float(c))

    @classmethod
    def gamma_law(cls, Gamma, c=1.0):
        return cls("gamma_law", (float(Gamma),), float(c))

    @classmethod
    def polytropic_tail(cls, gamma, coef, c=1.0):
        return cls("polytropic_tail", (float(gamma), float(coef)), float(c))

    @classmethod
    def neutron_fermi(cls, A, c=1.0):
        return cls("neutron_fermi", (float(A),), float(c))

    @classmethod
    def from_spec(cls, spec, c=1.0):
        """Parse ``dust``, ``gamma:<G>``, ``poly:<g>:<coef>`` or ``neutron:<A>``."""
        parts = spec.strip().split(":")
        head, args = parts[0].lower(), parts[1:]
        try:
            values = [float(x) for x in args]
        except ValueError:
            raise DomainError(f"malformed EOS spec {spec!r}") from None
        if head == "dust" and not values:
            return cls.dust(c)
        if head == "gamma" and len(values) == 1:
            return cls.gamma_law(values[0], c)
        if head == "poly" and len(values) == 2:
            return cls.polytropic_tail(values[0], values[1], c)
        if head == "neutron" and len(values) == 1:
            return cls.neutron_fermi(values[0], c)
        raise DomainError(f"malformed EOS spec {spec!r}")

    def to_spec(self):
        if self.kind == "dust":
            return "dust"
        if self.kind == "gamma_law":
            return f"gamma:{self.params[0]!r}"
        if self.kind == "polytropic_tail":
            return f"poly:{self.params[0]!r}:{self.params[1]!r}"
        return f"neutron:{self.params[0]!r}"

    # -- properties ----------------------------------------------------------

    @property
    def is_pressureless(self):
        return self.kind == "dust" or (self.kind == "gamma_law" and self.params[0] == 1.0)

    @property
    def low_density_anchor(self):
        """True when rho_flat is normalised so that rho_flat/rho -> 1 at rho -> 0."""
        return self.is_pressureless or self.kind in ("polytropic_tail", "neutron_fermi")

    @property
    def rho_ref(self):
        """Natural density unit of the model (A c^3 for the Fermi gas, else 1)."""
        if self.kind == "neutron_fermi":
            return self.params[0] * self.c ** 3
        return 1.0

    @property
    def high_density_gamma(self):
        """Exact large-density index Gamma of the model."""
        if self.kind == "dust":
            return 1.0
        if self.kind == "gamma_law":
            return self.params[0]
        return 4.0 / 3.0

    # convenience methods; the module-level functions are the primary API
    def pressure(self, rho):
        return pressure(self, rho)

    def dp_drho(self, rho):
        return dp_drho(self, rho)

    def rho_flat(self, rho):
        return rho_flat(self, rho)

    def rho_from_flat(self, value):
        return rho_from_flat(self, value)


def _check_rho(rho):
    if not (rho > 0 and math.isfinite(rho)):
        raise DomainError(f"density must be positive and finite, got {rho!r}")


def _quad(func, lo, hi, what):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info = integrate.quad(func, lo, hi, epsabs=0.0, epsrel=_QUAD_EPSREL,
                                        limit=200, full_output=1)[:3]
    if not math.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300):
        raise NumericError(f"quadrature for {what} did not converge", residual=err)
    return val


# -- degenerate Fermi gas --------------------------------------------------------


def fermi_density(model, zeta):
    """Mass density of the Fermi gas at Fermi momentum ``zeta``."""
    if zeta < 0:
        raise DomainError("zeta must be non-negative")
    if zeta == 0:
        return 0.0
    A, c = model.params[0], model.c
    return 3.0 * A * c ** 3 * _quad(lambda q: q * q * math.sqrt(1.0 + q * q), 0.0, zeta, "rho(zeta)")


def fermi_pressure(model, zeta):
    """Pressure of the Fermi gas at Fermi momentum ``zeta``."""
    if zeta < 0:
        raise DomainError("zeta must be non-negative")
    if zeta == 0:
        return 0.0
    A, c = model.params[0], model.c
    return A * c ** 5 * _quad(lambda q: q ** 4 / math.sqrt(1.0 + q * q), 0.0, zeta, "P(zeta)")


def fermi_zeta(model, rho, rtol=1e-14, maxiter=100):
    """Invert ``rho(zeta)`` by Newton iteration safeguarded with bisection."""
    _check_rho(rho)
    A, c = model.params[0], model.c
    x = rho / (A * c ** 3)
    # rho/(A c^3) behaves as zeta^3 for small and 3 zeta^4 / 4 for large zeta
    lo = 0.0
    hi = 2.0 * max(x ** (1.0 / 3.0), (4.0 * x / 3.0) ** 0.25)
    while fermi_density(model, hi) < rho:
        lo, hi = hi, 2.0 * hi
    z = min(x ** (1.0 / 3.0), (4.0 * x / 3.0) ** 0.25)
    if not lo < z < hi:
        z = 0.5 * (lo + hi)
    resid = math.inf
    for _ in range(maxiter):
        f = fermi_density(model, z) - rho
        resid = abs(f) / rho
        if resid <= rtol:
            return z
        if f > 0:
            hi = z
        else:
            lo = z
        dfdz = 3.0 * A * c ** 3 * z * z * math.sqrt(1.0 + z * z)
        step = z - f / dfdz if dfdz > 0 else 0.5 * (lo + hi)
        if not lo < step < hi:
            step = 0.5 * (lo + hi)
        if hi - lo <= 4e-16 * hi:
            return step
        z = step
    raise NumericError(f"Fermi momentum inversion failed for rho={rho!r}", residual=resid)


# -- pressure, sound speed ---------------------------------------------------------


def pressure(model, rho):
    """Pressure P(rho).

    Raises
    ------
    DomainError
        If ``rho`` is not positive.
    NumericError
        If the Fermi-momentum inversion does not converge.
    """
    _check_rho(rho)
    kind, p, c = model.kind, model.params, model.c
    if kind == "dust":
        return 0.0
    if kind == "gamma_law":
        return (p[0] - 1.0) * c * c * rho
    if kind == "polytropic_tail":
        g, k = p
        u = 3.0 * k * rho ** (g - 1.0) / (c * c)
        return (c * c / 3.0) * rho * u / (1.0 + u)
    return fermi_pressure(model, fermi_zeta(model, rho))


def dp_drho(model, rho):
    """Derivative dP/drho, in units of velocity squared."""
    _check_rho(rho)
    kind, p, c = model.kind, model.params, model.c
    if kind == "dust":
        return 0.0
    if kind == "gamma_law":
        return (p[0] - 1.0) * c * c
    if kind == "polytropic_tail":
        g, k = p
        u = 3.0 * k * rho ** (g - 1.0) / (c * c)
        return (c * c / 3.0) * (u / (1.0 + u)) * (1.0 + (g - 1.0) / (1.0 + u))
    z = fermi_zeta(model, rho)
    # (dP/dzeta) / (drho/dzeta) from the two integrands
    return c * c * z * z / (3.0 * (1.0 + z * z))


# -- effective density ---------------------------------------------------------------


def rho_flat(model, rho):
    """Effective density ``exp(int drho / (rho + P/c^2))``.

    Closed forms are used where the antiderivative is elementary: for the
    Fermi gas rho_flat equals ``A c^3 zeta^3`` (the number density in mass
    units), since d(rho)/(rho + P/c^2) = 3 d(zeta)/zeta. The definition itself
    is available as :func:`rho_flat_quadrature`.
    """
    _check_rho(rho)
    kind, p, c = model.kind, model.params, model.c
    if kind == "dust":
        return rho
    if kind == "gamma_law":
        return rho ** (1.0 / p[0])
    if kind == "polytropic_tail":
        g, k = p
        u = 3.0 * k * rho ** (g - 1.0) / (c * c)
        return rho * (1.0 + 4.0 * u / 3.0) ** (-1.0 / (4.0 * (g - 1.0)))
    z = fermi_zeta(model, rho)
    return model.rho_ref * z ** 3


def rho_flat_quadrature(model, rho):
    """rho_flat computed directly from its defining integral.

    Uses the same anchoring as :func:`rho_flat`. The integral is taken in
    ``s = log(rho)`` so the low-density tail converges on an infinite range.
    """
    _check_rho(rho)
    c2 = model.c ** 2

    def w(r):
        return pressure(model, r) / (c2 * r)

    if model.low_density_anchor:
        if model.is_pressureless:
            return rho
        def frac(s):
            x = w(math.exp(s))
            return x / (1.0 + x)

        # w vanishes like a positive power of rho, so cut where it drops below round-off
        s_hi = s_lo = math.log(rho)
        while w(math.exp(s_lo)) > 1e-17 and s_lo > s_hi - 700.0:
            s_lo -= 5.0
        tail = _quad(frac, s_lo, s_hi, "rho_flat") if s_lo < s_hi else 0.0
        return rho * math.exp(-tail)
    # anchored at rho_ref = 1
    val = _quad(lambda s: 1.0 / (1.0 + w(math.exp(s))), 0.0, math.log(rho), "rho_flat")
    return math.exp(val)


def rho_from_flat(model, value, rtol=1e-12):
    """Invert :func:`rho_flat`.

    Closed-form inverses are used for dust, the gamma law and the Fermi gas;
    the polytropic tail uses bracketed root finding in log density. The bracket
    follows from rho <= rho + P/c^2 <= 2 rho, which bounds
    d log(rho_flat) / d log(rho) to [1/2, 1].
    """
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"rho_flat value {value!r} outside the image (0, inf)")
    kind, p = model.kind, model.params
    if kind == "dust":
        return value
    if kind == "gamma_law":
        return value ** p[0]
    if kind == "neutron_fermi":
        z = (value / model.rho_ref) ** (1.0 / 3.0)
        return fermi_density(model, z)
    return _invert_monotone(lambda r: rho_flat(model, r), value, rtol)


def _invert_monotone(func, value, rtol):
    target = math.log(value)
    x0 = target
    g0 = math.log(func(math.exp(x0))) - target
    if g0 == 0.0:
        return math.exp(x0)
    if g0 > 0:
        lo, hi = x0 - 2.0 * g0, x0 - g0
    else:
        lo, hi = x0 - g0, x0 - 2.0 * g0

    def g(x):
        return math.log(func(math.exp(x))) - target

    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return math.exp(lo)
    if ghi == 0.0:
        return math.exp(hi)
    # widen slightly in case round-off sits on a bracket end
    pad = 1e-12 * max(1.0, abs(lo), abs(hi))
    while glo > 0:
        lo -= pad
        pad *= 2.0
        glo = g(lo)
    while ghi < 0:
        hi += pad
        pad *= 2.0
        ghi = g(hi)
    x, res = optimize.brentq(g, lo, hi, xtol=rtol * 0.1, rtol=4 * np.finfo(float).eps,
                             full_output=True)
    if not res.converged:
        raise NumericError("rho_from_flat root finding did not converge", residual=g(x))
    return math.exp(x)


# -- assumption checks -------------------------------------------------------------


@dataclass
class EosCheck:
    """Outcome of :func:`check_a0_a1_a2`."""

    kind: str
    a0_holds: bool
    a0_violations: list = field(default_factory=list)
    Gamma: float = 1.0
    a1_degenerate: bool = False
    a1_holds: bool = True
    sigma: Optional[float] = None
    gamma: Optional[float] = None
    a2_holds: bool = True
    a2_vacuous: bool = False
    high_ratio: float = 0.0
    rho_lo: float = 0.0
    rho_hi: float = 0.0

    def to_dict(self):
        return asdict(self)


def check_a0_a1_a2(model, rho_grid: Sequence[float]):
    """Check the structural assumptions on the pressure law over a density grid.

    A0 is verified pointwise on the grid. Gamma is measured from P/(c^2 rho)
    at the top of the grid, with the approach rate ``sigma`` estimated from
    three log-spaced points ending there. The low-density polytrope index
    ``gamma`` is the log-log slope of P at the bottom of the grid.

    Parameters
    ----------
    model : EosModel
    rho_grid : sequence of float
        Positive densities spanning at least six decades.

    Returns
    -------
    EosCheck
    """
    grid = np.sort(np.asarray(rho_grid, dtype=float))
    if grid.size < 2 or grid[0] <= 0:
        raise DomainError("rho_grid needs at least two positive densities")
    lo, hi = float(grid[0]), float(grid[-1])
    if math.log10(hi / lo) < 6.0 - 1e-9:
        raise DomainError("rho_grid must span at least six decades")
    c2 = model.c ** 2

    violations = []
    for r in grid:
        r = float(r)
        P = pressure(model, r)
        dP = dp_drho(model, r)
        if P < 0:
            violations.append(f"P<0 at rho={r!r}")
        if not 0 <= dP < c2:
            violations.append(f"dP/drho={dP!r} outside [0, c^2) at rho={r!r}")
        if not r <= r + P / c2 <= 2 * r:
            violations.append(f"rho+P/c^2 outside [rho, 2 rho] at rho={r!r}")
    p_lo = pressure(model, lo)
    if p_lo / (c2 * lo) > 1.0:
        violations.append("P does not vanish at low density")

    report = EosCheck(kind=model.kind, a0_holds=not violations, a0_violations=violations,
                      rho_lo=lo, rho_hi=hi)

    ratios = [pressure(model, r) / (c2 * r) for r in (hi / 100.0, hi / 10.0, hi)]
    report.high_ratio = ratios[-1]
    if all(x == 0.0 for x in ratios):
        report.Gamma = 1.0
        report.a1_degenerate = True
    else:
        d1, d2 = ratios[1] - ratios[0], ratios[2] - ratios[1]
        if d1 != 0.0 and d2 != 0.0 and d1 * d2 > 0 and abs(d2) < abs(d1):
            sigma = math.log(d1 / d2) / math.log(10.0)
            limit = ratios[2] + d2 / (10.0 ** sigma - 1.0)
            report.sigma = sigma
            report.Gamma = 1.0 + limit
        else:
            report.Gamma = 1.0 + ratios[-1]
    report.a1_holds = 1.0 <= report.Gamma < 2.0

    P1, P2 = pressure(model, lo), pressure(model, 10.0 * lo)
    if P1 == 0.0 and P2 == 0.0:
        report.a2_vacuous = True
        report.a2_holds = True
    elif P1 > 0 and P2 > 0:
        report.gamma = math.log(P2 / P1) / math.log(10.0)
        report.a2_holds = report.gamma > 1.0 + 1e-6
    else:
        report.a2_holds = False
    return report
