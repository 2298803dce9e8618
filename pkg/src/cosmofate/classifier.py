"""Past and future fate of a universe from its present state.

Labels follow the usual scenario grammar: in the past a universe starts
from a Big Bang (BB), contracts exponentially from infinite size (EC) or
leaves the static state asymptotically (AS); in the future it ends in a Big
Crunch (BC), expands exponentially (EE) or settles asymptotically (AS).

:func:`classify` first applies the sign criteria that decide a label
outright (deceleration or non-positive curvature gives a Big Bang,
acceleration or non-positive curvature gives unbounded expansion) and then
settles the remaining labels by integrating both ways.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import integrator
from .dynamics import State, condition_flags, einstein_static_density
from .errors import DomainError, NumericError
from .integrator import IntegrationConfig

log = logging.getLogger(__name__)

PAST_LABELS = ("BB", "EC", "AS", "STATIC", "UNKNOWN")
FUTURE_LABELS = ("BC", "EE", "AS", "STATIC", "UNKNOWN")

UP, DOWN = "↗", "↘"

_PAST_DIR = {"BB": UP, "EC": DOWN}
_FUTURE_DIR = {"EE": UP, "BC": DOWN}

# a run passing the static point with |adot| and |addot| both below 1e-4 of
# their natural scales is labelled AS; round-off seeds the unstable mode at
# ~1e-11, so a tighter threshold is never reached even on exact alpha = 1 data
CLASSIFY_CONFIG = IntegrationConfig(plateau_tol=1e-4, max_steps=200_000)


def composite_label(past, future):
    """Join two labels with the arrows describing the monotone pieces of a(t)."""
    if past == "STATIC" and future == "STATIC":
        return "STATIC"
    first = _PAST_DIR.get(past)
    last = _FUTURE_DIR.get(future)
    if first is None and last is None:
        return f"{past} ? {future}"
    first = first or last
    last = last or first
    arrows = first if first == last else first + last
    return f"{past} {arrows} {future}"


def _fmt_time(x):
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return float(x)


@dataclass
class ScenarioReport:
    K: float
    flags: object
    past_label: str
    future_label: str
    composite: str
    t_minus: float = -math.inf
    t_plus: float = math.inf
    past_evidence: str = "numerical"
    future_evidence: str = "numerical"
    past_run: Optional[object] = field(default=None, repr=False)
    future_run: Optional[object] = field(default=None, repr=False)

    def to_dict(self):
        return {
            "K": self.K,
            "flags": {"cond8": self.flags.cond_8, "condEx": self.flags.cond_Ex,
                      "condEsc": self.flags.cond_Esc, "adot0_sign": self.flags.adot_sign},
            "past": {"label": self.past_label, "t_minus": _fmt_time(self.t_minus),
                     "evidence": self.past_evidence},
            "future": {"label": self.future_label, "t_plus": _fmt_time(self.t_plus),
                       "evidence": self.future_evidence},
            "composite": self.composite,
        }


def _theorem_labels(flags):
    """Labels licensed by the sign criteria alone, with their justification."""
    past = future = None
    s = flags.adot_sign
    if s > 0:
        if flags.cond_8:
            past = ("BB", "Theorem 1: adot0>0 and 4piG(rho0+3P0/c^2) >= c^2 Lambda")
        if flags.cond_Esc:
            past = past or ("BB", "Corollary 1: adot0>0 and K<=0")
            future = ("EE", "Corollary 2: adot0>0 and K<=0")
        if flags.cond_Ex:
            future = ("EE", "Theorem 2: adot0>0 and 4piG(rho0+3P0/c^2) <= c^2 Lambda")
    elif s < 0:
        if flags.cond_8:
            future = ("BC", "Theorem 1 under time reflection")
        if flags.cond_Esc:
            future = future or ("BC", "Corollary 1 under time reflection")
            past = ("EC", "Corollary 2 under time reflection")
        if flags.cond_Ex:
            past = ("EC", "Theorem 2 under time reflection")
    return past, future


def default_horizon(params, s0):
    """A time span long enough for any run to hit a stop event."""
    a0, adot0, rho0 = s0
    rates = [math.sqrt(params.G * rho0), abs(adot0) / a0]
    if params.Lambda > 0:
        rates.append(params.c * math.sqrt(params.Lambda))
    return 1e12 / max(rates)


_FUTURE_BY_STATUS = {"a_min": "BC", "rho_max": "BC", "a_max": "EE", "plateau": "AS"}
_PAST_BY_STATUS = {"a_min": "BB", "rho_max": "BB", "a_max": "EC", "plateau": "AS"}


def _run_label(run, table):
    if run.status in table:
        return table[run.status]
    if run.status == "step_underflow" and run.singular_approach:
        return table["a_min"]
    return "UNKNOWN"


def _singular_time(run, direction):
    try:
        return integrator.estimate_singular_time(run, direction).t_star
    except (NumericError, DomainError) as exc:
        log.debug("power-law extrapolation failed (%s); using stop time", exc)
        return float(run.t[-1])


def classify(params, model, s0, cfg=None, horizon=None):
    """Classify the past and future of the solution through ``s0``.

    Parameters
    ----------
    params : CosmoParams
    model : EosModel
    s0 : State
        Present state (a0, adot0, rho0).
    cfg : IntegrationConfig, optional
        Configuration for the confirming runs. Defaults to
        :data:`CLASSIFY_CONFIG` (plateau detection at 1e-4).
    horizon : float, optional
        Duration of each run; defaults to :func:`default_horizon`.

    Returns
    -------
    ScenarioReport
    """
    s0 = State(*map(float, s0))
    flags = condition_flags(params, model, s0)
    if flags.adot_sign == 0 and flags.past_crit_sign == 0:
        ev = "equilibrium: adot0=0 and 4piG(rho0+3P0/c^2) = c^2 Lambda"
        return ScenarioReport(flags.K, flags, "STATIC", "STATIC", "STATIC",
                              -math.inf, math.inf, ev, ev)

    cfg = cfg or CLASSIFY_CONFIG
    if cfg.plateau_tol is None:
        cfg = replace(cfg, plateau_tol=CLASSIFY_CONFIG.plateau_tol)
    T = horizon or default_horizon(params, s0)
    fwd = integrator.integrate(params, model, s0, (0.0, T), cfg)
    bwd = integrator.integrate(params, model, s0, (0.0, -T), cfg)
    num_past = _run_label(bwd, _PAST_BY_STATUS)
    num_future = _run_label(fwd, _FUTURE_BY_STATUS)

    thm_past, thm_future = _theorem_labels(flags)
    past, past_ev = thm_past if thm_past else (num_past, f"numerical ({bwd.status})")
    future, future_ev = thm_future if thm_future else (num_future, f"numerical ({fwd.status})")
    if thm_past and num_past != past:
        log.warning("past label %s disagrees with integration (%s)", past, num_past)
        past_ev += f"; integration gave {num_past}"
    if thm_future and num_future != future:
        log.warning("future label %s disagrees with integration (%s)", future, num_future)
        future_ev += f"; integration gave {num_future}"

    t_minus = _singular_time(bwd, "past") if past == "BB" and num_past == "BB" else -math.inf
    t_plus = _singular_time(fwd, "future") if future == "BC" and num_future == "BC" else math.inf
    return ScenarioReport(flags.K, flags, past, future, composite_label(past, future),
                          t_minus, t_plus, past_ev, future_ev, bwd, fwd)


# -- instability of the static universe --------------------------------------------


@dataclass
class StabilityResult:
    epsilon: float
    growth_rate: Optional[float]
    target: float
    rel_err: Optional[float]
    drift: float
    direction: str
    window: tuple
    fate: Optional[str] = None

    def to_dict(self):
        return {"epsilon": self.epsilon, "growth_rate": self.growth_rate, "target": self.target,
                "rel_err": self.rel_err, "drift": self.drift, "direction": self.direction,
                "window": list(self.window), "fate": self.fate}


def stability_probe(params, model, epsilon, a_bar=1.0, n_efolds=10.0, linear_limit=1e-2,
                    with_fate=True):
    """Kick the static dust universe with adot0 = epsilon and measure the growth.

    The deviation |a - a_bar| is fitted to an exponential over the part of
    the run after four e-folds where it stays below ``linear_limit * a_bar``.
    Linearising about the equilibrium gives d^2(da)/dt^2 = 4 pi G rho_bar da =
    c^2 Lambda da, so the expected rate is c sqrt(Lambda).

    Raises
    ------
    DomainError
        For a non-dust model or Lambda = 0.
    NumericError
        If the deviation leaves the linear regime before the fit window.
    """
    if model.kind != "dust":
        raise DomainError("stability_probe expects the dust model")
    if not params.Lambda > 0:
        raise DomainError("the static universe needs Lambda > 0")
    lam = params.static_rate
    rho_bar = einstein_static_density(params, model)
    s0 = State(float(a_bar), float(epsilon), rho_bar)
    T = n_efolds / lam
    cfg = IntegrationConfig(a_min_stop=1e-6 * a_bar, a_max_stop=1e6 * a_bar)
    run = integrator.integrate(params, model, s0, (0.0, T), cfg)
    dev = np.abs(run.a - a_bar) / a_bar
    drift = float(dev.max())
    if epsilon == 0:
        return StabilityResult(0.0, None, lam, None, drift, "static", (0.0, T), "STATIC")
    direction = "expanding" if epsilon > 0 else "contracting"
    start = 4.0 / lam
    sel = (run.t >= start) & (dev > 0)
    if np.any(dev[run.t <= start] > linear_limit):
        raise NumericError("epsilon too large: perturbation is nonlinear before the fit window")
    sel &= dev < linear_limit
    if sel.sum() < 8:
        raise NumericError("too few samples in the linear growth window")
    slope, _ = np.polyfit(run.t[sel], np.log(dev[sel]), 1)
    fate = None
    if with_fate:
        fate = classify(params, model, s0).future_label
    window = (float(run.t[sel][0]), float(run.t[sel][-1]))
    return StabilityResult(float(epsilon), float(slope), lam, abs(slope - lam) / lam, drift,
                           direction, window, fate)


# -- scans -----------------------------------------------------------------------------


@dataclass
class BoundaryScan:
    rows: List[tuple]
    supercritical: bool
    structure_ok: bool
    notes: List[str] = field(default_factory=list)


def _classify_row(args):
    params, model, state, cfg = args
    rep = classify(params, model, state, cfg)
    return (state.adot, rep.composite, rep.past_label, rep.future_label)


def _monotone(labels, first, second):
    """True if ``labels`` reads first*, second* (at most one switch)."""
    switched = False
    for lab in labels:
        if lab == second:
            switched = True
        elif lab == first and switched:
            return False
        elif lab not in (first, second):
            return False
    return True


def fate_boundary_scan(params, model, a0, rho0, adot0_grid, cfg=None, workers=1):
    """Classify a family of states differing only in adot0.

    Checks the expected structure near adot0 = 0: when the present state is
    decelerating, small positive adot0 recollapses; when it is accelerating,
    small negative adot0 bounces and expands.
    """
    grid = sorted(float(x) for x in adot0_grid)
    if len(grid) < 10 or not (grid[0] < 0 < grid[-1]):
        raise DomainError("adot0_grid needs at least 10 values of both signs")
    states = [State(float(a0), v, float(rho0)) for v in grid]
    jobs = [(params, model, s, cfg) for s in states]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_classify_row, jobs))
    else:
        rows = [_classify_row(j) for j in jobs]

    crit = condition_flags(params, model, State(float(a0), 0.0, float(rho0))).past_crit_sign
    pos = [r[3] for r in rows if r[0] > 0]
    neg = [r[3] for r in sorted((r for r in rows if r[0] < 0), key=lambda r: -r[0])]
    notes = []
    ok = True
    if crit > 0:
        if pos[0] != "BC":
            ok = False
            notes.append("smallest positive adot0 does not recollapse")
        if not _monotone(pos, "BC", "EE"):
            ok = False
            notes.append("positive side is not BC...EE")
        if any(lab != "BC" for lab in neg):
            ok = False
            notes.append("a contracting decelerating state must crunch")
    elif crit < 0:
        if neg[0] != "EE":
            ok = False
            notes.append("smallest negative adot0 does not bounce")
        if not _monotone(neg, "EE", "BC"):
            ok = False
            notes.append("negative side is not EE...BC")
        if any(lab != "EE" for lab in pos):
            ok = False
            notes.append("an expanding accelerating state must expand forever")
    return BoundaryScan(rows, crit > 0, ok, notes)
