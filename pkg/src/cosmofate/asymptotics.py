"""Fits of integrated trajectories against the known asymptotic laws.

Near a Big Bang (or Big Crunch) with high-density index Gamma::

    a   ~ (6 pi Gamma^2 G rho1)^(1/(3 Gamma)) |t - t_s|^(2/(3 Gamma))
    rho ~ |t - t_s|^-2 / (6 pi Gamma^2 G)

where rho1 = rho a^(3 Gamma) at leading order. At late times with Lambda > 0
the expansion becomes exponential with rate c sqrt(Lambda / 3) and the
density decays with it. Near the static dust universe deviations from the
equilibrium radius grow or decay with rate c sqrt(Lambda).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, NumericError
from .integrator import power_law_fit

REGIMES = ("bigbang_powerlaw", "latetime_exponential", "static_approach")


@dataclass
class AsymptoticFit:
    """One fitted exponent or rate together with its theoretical value."""

    regime: str
    quantity: str
    exponent_or_rate: float
    target: float
    rel_err: float
    window: tuple
    prefactor: float
    prefactor_target: Optional[float] = None
    prefactor_rel_err: Optional[float] = None
    t_singular: Optional[float] = None
    t_singular_sigma: Optional[float] = None
    rms: Optional[float] = None
    n_samples: int = 0
    correction_exponent: Optional[float] = None

    def to_dict(self):
        return {
            "regime": self.regime,
            "quantity": self.quantity,
            "fitted": self.exponent_or_rate,
            "target": self.target,
            "rel_err": self.rel_err,
            "window": list(self.window),
            "prefactor": self.prefactor,
            "prefactor_target": self.prefactor_target,
            "prefactor_rel_err": self.prefactor_rel_err,
            "t_singular": self.t_singular,
            "t_singular_sigma": self.t_singular_sigma,
            "rms": self.rms,
            "n_samples": self.n_samples,
            "correction_exponent": self.correction_exponent,
        }


def _rel(fit, target):
    return abs(fit - target) / abs(target)


def _window(t):
    return (float(min(t[0], t[-1])), float(max(t[0], t[-1])))


def _power_of_a(a, resid, sign, floor=1e-9, min_samples=5):
    """Slope of log|resid| against sign * log(a), or None when too few points."""
    m = np.isfinite(resid) & (np.abs(resid) > floor)
    if m.sum() < min_samples or math.log10(a[m].max() / a[m].min()) < 0.5:
        return None
    return float(sign * np.polyfit(np.log(a[m]), np.log(np.abs(resid[m])), 1)[0])


def bigbang_correction_exponent(traj, Gamma, params, a_frac=0.1):
    """Order in a of the leading correction to the singular power law.

    Uses d(rho^-1/2)/dt, which tends to Gamma sqrt(6 pi G) at the
    singularity and needs no estimate of the singular time. Samples with
    ``a < a_frac * a0`` enter. Reported, not asserted: the order depends on
    the remainder exponents of the equation of state.
    """
    c2 = params.c ** 2
    w = 1.5 * traj.rho ** -1.5 * np.abs(traj.adot / traj.a) * (traj.rho + traj.P / c2)
    resid = w / (Gamma * math.sqrt(6.0 * math.pi * params.G)) - 1.0
    sel = traj.a < a_frac * traj.a[0]
    return _power_of_a(traj.a[sel], resid[sel], +1.0)


def fit_bigbang(traj, Gamma, params, window_factor=100.0, min_decades=2.0):
    """Fit the power laws of a and rho on the approach to a singularity.

    The window holds the contiguous tail of samples with
    ``a < window_factor * a_min_stop``. The singular time is a free fit
    parameter, separately for a and for rho.

    Parameters
    ----------
    traj : Trajectory
        Run that ended on ``a_min`` or ``rho_max``; backward runs give a Big
        Bang and forward runs a Big Crunch.
    Gamma : float
        High-density index of the equation of state.
    params : CosmoParams

    Returns
    -------
    (AsymptoticFit, AsymptoticFit)
        Fits for the scale factor and for the density.

    Raises
    ------
    DomainError
        If the run does not end at a singularity.
    NumericError
        If the window spans fewer than ``min_decades`` decades in a.
    """
    if not traj.singular_approach:
        raise DomainError("trajectory does not approach a singularity")
    if not Gamma > 0:
        raise DomainError("Gamma must be positive")
    direction = "past" if traj.direction == "backward" else "future"
    inside = traj.a < window_factor * traj.a_min_stop
    outside = np.nonzero(~inside)[0]
    start = outside[-1] + 1 if len(outside) else 0
    t, a, rho = traj.t[start:], traj.a[start:], traj.rho[start:]
    if len(t) < 8 or math.log10(a.max() / a.min()) < min_decades - 0.05:
        raise NumericError("insufficient dynamic range in a for a singular fit")

    G = params.G
    p_a = 2.0 / (3.0 * Gamma)
    rho1 = float(rho[-1] * a[-1] ** (3.0 * Gamma))
    C_a_target = (6.0 * math.pi * Gamma ** 2 * G * rho1) ** (1.0 / (3.0 * Gamma))
    C_r_target = 1.0 / (6.0 * math.pi * Gamma ** 2 * G)

    nu = bigbang_correction_exponent(traj, Gamma, params)
    out = []
    for name, y, p_target, C_target in (("a", a, p_a, C_a_target), ("rho", rho, -2.0, C_r_target)):
        ts, p, C, sig, rms = power_law_fit(t, y, direction)
        out.append(AsymptoticFit("bigbang_powerlaw", name, p, p_target, _rel(p, p_target),
                                 _window(t), C, C_target, _rel(C, C_target), ts, sig, rms, len(t), nu))
    return tuple(out)


def flatness_profile(traj, t_singular):
    """rho (t - t_s)^2 along a trajectory; constant on a clean power-law tail."""
    return traj.rho * (traj.t - t_singular) ** 2


def _density_target(params, model):
    rate = params.de_sitter_rate
    if model is not None and model.kind == "gamma_law":
        return 3.0 * model.params[0] * rate
    return 3.0 * rate


def fit_latetime(traj, params, model=None, window_efolds=2.0, offset_efolds=0.0,
                 min_efolds=3.0):
    """Log-linear fits of a and rho over the last e-folds of an expanding run.

    Parameters
    ----------
    traj : Trajectory
        Forward run that stopped on ``a_max``.
    params : CosmoParams
    model : EosModel, optional
        Sets the density decay target. With a gamma law P = (Gamma - 1) rho c^2
        the density falls like a^(-3 Gamma); every other supported model
        behaves like dust at low density and falls like a^-3. Defaults to
        ``traj.model``.
    window_efolds : float
        Width of the fit window in e-folds of a.
    offset_efolds : float
        Move the window this many e-folds earlier than the end of the run.

    Returns
    -------
    (AsymptoticFit, AsymptoticFit)
        Expansion rate of a (target c sqrt(Lambda/3)) and decay rate of rho.
        The second fit reports the decay rate as a positive number.
    """
    if not params.Lambda > 0:
        raise DomainError("late-time exponential regime needs Lambda > 0")
    if traj.direction != "forward" or traj.status != "a_max":
        raise DomainError("fit_latetime needs a forward run that reached a_max_stop")
    model = model if model is not None else traj.model
    la = np.log(traj.a)
    if la[-1] - math.log(10.0 * traj.a[0]) < min_efolds:
        raise NumericError("fewer than the required e-folds past 10 a0")
    hi = la[-1] - offset_efolds
    sel = (la >= hi - window_efolds) & (la <= hi)
    if sel.sum() < 5:
        raise NumericError("too few samples in the late-time window")
    t = traj.t[sel]
    target_a = params.de_sitter_rate
    target_r = _density_target(params, model)

    # (adot / a) / H - 1 decays like a^-nu; reported, not asserted
    late = traj.a > 10.0 * traj.a[0]
    nu = _power_of_a(traj.a[late], traj.adot[late] / traj.a[late] / target_a - 1.0, -1.0)

    rate_a, c_a = np.polyfit(t, la[sel], 1)
    resid = la[sel] - (rate_a * t + c_a)
    fit_a = AsymptoticFit("latetime_exponential", "a", float(rate_a), target_a,
                          _rel(rate_a, target_a), _window(t), math.exp(c_a),
                          rms=float(np.sqrt(np.mean(resid ** 2))), n_samples=int(sel.sum()),
                          correction_exponent=nu)
    lr = np.log(traj.rho[sel])
    slope_r, c_r = np.polyfit(t, lr, 1)
    resid_r = lr - (slope_r * t + c_r)
    fit_r = AsymptoticFit("latetime_exponential", "rho", float(-slope_r), target_r,
                          _rel(-slope_r, target_r), _window(t), math.exp(c_r),
                          rms=float(np.sqrt(np.mean(resid_r ** 2))), n_samples=int(sel.sum()),
                          correction_exponent=nu)
    return fit_a, fit_r


def static_radius(params, traj):
    """Equilibrium radius of the static dust universe with the run's mass."""
    rho_a3 = traj.rho[0] * traj.a[0] ** 3
    return (4.0 * math.pi * params.G * rho_a3 / (params.c ** 2 * params.Lambda)) ** (1.0 / 3.0)


def fit_static_approach(traj, params, a_bar=None, lo=1e-8, hi=1e-3, floor_factor=30.0,
                        min_samples=8):
    """Exponential rate of |a - a_bar| / a_bar near the static radius.

    Samples whose relative deviation lies in ``(lo, hi)``, and at least
    ``floor_factor`` times the closest approach, are fitted with a
    straight line in log space, up to the sample closest to a_bar. The
    returned rate is positive. A forward run on the low branch at alpha = 1
    approaches a_bar as t -> +inf, a backward run on the high branch as
    t -> -inf; both give c sqrt(Lambda).

    Raises
    ------
    NumericError
        If fewer than ``min_samples`` samples fall in the band, which
        happens for the exact equilibrium (no decay) or a run that never
        gets close to a_bar.
    """
    if not params.Lambda > 0:
        raise DomainError("the static universe needs Lambda > 0")
    a_bar = static_radius(params, traj) if a_bar is None else float(a_bar)
    dev = np.abs(traj.a - a_bar) / a_bar
    # the static point is unstable, so round-off eventually pushes a run away
    # from it again; keep the segment up to the closest approach
    stop = int(np.argmin(dev)) + 1
    lo = max(lo, floor_factor * float(dev[stop - 1]))
    sel = np.zeros(len(dev), dtype=bool)
    sel[:stop] = (dev[:stop] > lo) & (dev[:stop] < hi)
    if sel.sum() < min_samples:
        raise NumericError("no decay: trajectory is not in the asymptotically static regime")
    t = traj.t[sel]
    slope, c0 = np.polyfit(t, np.log(dev[sel]), 1)
    rate = abs(float(slope))
    target = params.static_rate
    return AsymptoticFit("static_approach", "a", rate, target, _rel(rate, target), _window(t),
                         math.exp(c0) * a_bar, n_samples=int(sel.sum()))
