"""Adaptive integration of the Friedmann system with event detection.

The stepper is the Dormand-Prince 5(4) pair with its free fourth-order
continuous extension, written for the two- or three-component state of this
problem in plain floats (much faster than array code at this size).

Backward runs never take negative steps. They integrate the reflected
solution ``(a(-t), -adot(-t), rho(-t))``, which solves the same system, and
map the samples back.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicHermiteSpline

from . import eos
from .dynamics import State, _check_state, potential_term
from .errors import DomainError, NumericError

CSV_HEADER = ("t", "a", "adot", "rho", "P", "X", "flat_a3")

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                                22 / 525, -1 / 40)
# continuous extension: y(theta) = y + h * sum_k K_k * poly_k(theta)
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

EVENT_KINDS = ("adot_zero", "a_min", "a_max", "rho_max")
_TERMINAL = {"a_min", "a_max", "rho_max"}


def default_min_depth(model):
    """Default ``a_min_stop / a0`` for a model.

    Near a singularity t - t_s scales like a^(3 Gamma / 2), so a fixed depth
    runs into double-precision time resolution for stiff equations of state.
    The depth is 1e-6, raised to 10^(-8 / Gamma) when that is shallower, which
    keeps (a / a0)^(3 Gamma / 2) above about 1e-12.
    """
    return max(1e-6, 10.0 ** (-8.0 / model.high_density_gamma))


@dataclass(frozen=True)
class IntegrationConfig:
    """Step control and stopping rules.

    ``a_min_stop`` and ``a_max_stop`` are absolute scale factors; ``None``
    means ``default_min_depth(model) * a0`` and 1e6 a0. ``a`` and ``rho`` stay positive and are
    controlled in relative terms only; ``abs_tol`` applies to adot measured in
    units of its initial natural scale. ``plateau_tol`` (off by default) stops
    the run once both |adot|/(a c sqrt(Lambda)) and |d adot/dt|/(a c^2 Lambda)
    fall below it, provided the run entered that band from outside.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    a_min_stop: Optional[float] = None
    a_max_stop: Optional[float] = None
    rho_max_stop: float = math.inf
    mode: str = "constrained"
    max_steps: int = 1_000_000
    plateau_tol: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.rel_tol <= 1e-3:
            raise DomainError("rel_tol must lie in (0, 1e-3]")
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if self.a_min_stop is not None and not self.a_min_stop > 0:
            raise DomainError("a_min_stop must be positive")
        if self.mode not in ("direct", "constrained"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.max_steps < 1:
            raise DomainError("max_steps must be positive")


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    state: State


@dataclass
class Trajectory:
    """Time-ordered samples of an integration.

    Samples are stored in integration order, so ``t`` increases for forward
    runs and decreases for backward runs.
    """

    t: np.ndarray
    a: np.ndarray
    adot: np.ndarray
    rho: np.ndarray
    P: np.ndarray
    X: np.ndarray
    flat_a3: np.ndarray
    events: List[Event] = field(default_factory=list)
    status: str = "t_end"
    direction: str = "forward"
    mode: str = "constrained"
    a_min_stop: float = 0.0
    a_max_stop: float = math.inf
    params: object = None
    model: object = None

    def __len__(self):
        return len(self.t)

    @property
    def singular_approach(self):
        return self.status in ("a_min", "rho_max") or (
            self.status == "step_underflow" and self.a[-1] < self.a[0])

    @property
    def states(self):
        return [State(float(a), float(v), float(r)) for a, v, r in zip(self.a, self.adot, self.rho)]

    def state_at_end(self):
        return State(float(self.a[-1]), float(self.adot[-1]), float(self.rho[-1]))

    def events_of(self, kind):
        return [e for e in self.events if e.kind == kind]

    def X_drift(self):
        """max |X(t) - X(0)| / max(1, |X(0)|)."""
        return float(np.max(np.abs(self.X - self.X[0])) / max(1.0, abs(self.X[0])))

    def X_drift_scaled(self):
        """max |X(t) - X(0)| relative to the largest adot^2 along the run.

        X is a difference of two terms that each grow like a^2 on expansion
        and like a^(2 - 3 Gamma) toward a singularity, so round-off alone
        limits |X(t) - X(0)| to machine epsilon times that size.
        """
        return float(np.max(np.abs(self.X - self.X[0])) / np.max(self.adot ** 2))

    def flat_drift(self):
        """max relative change of rho_flat a^3."""
        return float(np.max(np.abs(self.flat_a3 / self.flat_a3[0] - 1.0)))

    def a_at(self, t):
        """Cubic Hermite interpolant of a(t) built from (a, adot) samples."""
        order = np.argsort(self.t)
        ts, idx = np.unique(self.t[order], return_index=True)
        spline = CubicHermiteSpline(ts, self.a[order][idx], self.adot[order][idx])
        return spline(t)

    def to_csv(self, path=None):
        """Write ``t,a,adot,rho,P,X,flat_a3`` rows with 17 significant digits."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in zip(self.t, self.a, self.adot, self.rho, self.P, self.X, self.flat_a3):
            writer.writerow(["%.17g" % v for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source):
        """Read a trajectory written by :meth:`to_csv` (path or CSV text)."""
        if "\n" in str(source):
            text = source
        else:
            with open(source) as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        if tuple(rows[0]) != CSV_HEADER:
            raise DomainError(f"unexpected trajectory header {rows[0]}")
        cols = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, 7)
        t = cols[:, 0]
        direction = "backward" if len(t) > 1 and t[-1] < t[0] else "forward"
        return cls(*(cols[:, i].copy() for i in range(7)), direction=direction)


@dataclass(frozen=True)
class SingularTimeEstimate:
    t_star: float
    direction: str
    exponent: float
    prefactor: float
    uncertainty: float
    n_samples: int
    method: str = "power-law extrapolation"

    def to_dict(self):
        return {"t_star": self.t_star, "direction": self.direction, "exponent": self.exponent,
                "prefactor": self.prefactor, "uncertainty": self.uncertainty,
                "n_samples": self.n_samples, "method": self.method}


# -- vector field in integration variables ----------------------------------------


def _density_map(model, flat_a3):
    """Return rho(a) enforcing rho_flat a^3 = flat_a3."""
    if model.is_pressureless:
        return lambda a: flat_a3 / (a * a * a)
    if model.kind == "gamma_law":
        G = model.params[0]
        return lambda a: (flat_a3 / (a * a * a)) ** G
    return lambda a: eos.rho_from_flat(model, flat_a3 / (a * a * a))


def _make_field(params, model, mode, rho_of_a):
    c2 = params.c ** 2
    k = 4.0 * math.pi * params.G / 3.0
    lam = c2 * params.Lambda / 3.0
    kind = model.kind
    if kind == "dust":
        def press(r):
            return 0.0
    elif kind == "gamma_law":
        wc = (model.params[0] - 1.0) * c2

        def press(r):
            return wc * r
    else:
        def press(r):
            return eos.pressure(model, r)

    if mode == "direct":
        def f(y):
            a, v, r = y
            if not (a > 0 and r > 0) or math.isinf(r):
                raise DomainError("state left the domain a>0, rho>0")
            p = press(r)
            return (v, (lam - k * (r + 3.0 * p / c2)) * a, -3.0 * (r + p / c2) * v / a)
    else:
        def f(y):
            a, v = y
            if not a > 0:
                raise DomainError("state left the domain a>0")
            r = rho_of_a(a)
            if not r > 0 or math.isinf(r):
                raise DomainError("density left the domain")
            return (v, (lam - k * (r + 3.0 * press(r) / c2)) * a)
    return f


def _axpy(y, h, terms):
    """y + h * sum(coef * k) for a list of (coef, k) pairs."""
    out = list(y)
    for coef, kv in terms:
        if coef:
            hc = h * coef
            for i, ki in enumerate(kv):
                out[i] += hc * ki
    return tuple(out)


def _dopri_step(f, y, k1, h):
    k2 = f(_axpy(y, h, ((_A21, k1),)))
    k3 = f(_axpy(y, h, ((_A31, k1), (_A32, k2))))
    k4 = f(_axpy(y, h, ((_A41, k1), (_A42, k2), (_A43, k3))))
    k5 = f(_axpy(y, h, ((_A51, k1), (_A52, k2), (_A53, k3), (_A54, k4))))
    k6 = f(_axpy(y, h, ((_A61, k1), (_A62, k2), (_A63, k3), (_A64, k4), (_A65, k5))))
    y_new = _axpy(y, h, ((_B1, k1), (_B3, k3), (_B4, k4), (_B5, k5), (_B6, k6)))
    k7 = f(y_new)
    err = tuple(h * (_E1 * a1 + _E3 * a3 + _E4 * a4 + _E5 * a5 + _E6 * a6 + _E7 * a7)
                for a1, a3, a4, a5, a6, a7 in zip(k1, k3, k4, k5, k6, k7))
    return y_new, k7, err, (k1, k2, k3, k4, k5, k6, k7)


def _dense(y, h, ks, theta):
    w = [sum(p[j] * theta ** (j + 1) for j in range(4)) for p in _P]
    return _axpy(y, h, tuple(zip(w, ks)))


def _err_norm(err, y, y_new, scale, rtol, atol):
    tot = 0.0
    for e, u, w, s in zip(err, y, y_new, scale):
        sc = atol * s + rtol * max(abs(u), abs(w))
        tot += (e / sc) ** 2
    return math.sqrt(tot / len(err))


def _initial_step(f, y0, f0, scale, rtol, atol):
    sc = [atol * s + rtol * abs(u) for u, s in zip(y0, scale)]
    d0 = math.sqrt(sum((u / s) ** 2 for u, s in zip(y0, sc)) / len(y0))
    d1 = math.sqrt(sum((u / s) ** 2 for u, s in zip(f0, sc)) / len(y0))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    while True:
        try:
            f1 = f(_axpy(y0, h0, ((1.0, f0),)))
            break
        except DomainError:
            h0 *= 0.1
    d2 = math.sqrt(sum(((u - w) / s) ** 2 for u, w, s in zip(f1, f0, sc)) / len(y0)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def _locate(g, y, h, ks, g_old):
    """Fraction theta in (0, 1] of the step where g(dense(theta)) crosses zero."""
    def fun(theta):
        return g(_dense(y, h, ks, theta))

    g_new = fun(1.0)
    if g_new == 0.0:
        return 1.0
    if g_old * g_new > 0:
        return None
    return optimize.brentq(fun, 0.0, 1.0, xtol=1e-15, rtol=1e-15)


# -- public operations ----------------------------------------------------------------


def integrate(params, model, s0, t_span, cfg=None):
    """Integrate from ``s0`` over ``t_span = (t0, t1)``.

    The run halts at ``t1`` or at the first stop event (``a_min``, ``a_max``,
    ``rho_max``). Zero crossings of adot are recorded as non-terminal
    ``adot_zero`` events. When ``t1 < t0`` the reflected solution is
    integrated forward and mapped back.

    Returns
    -------
    Trajectory
        ``status`` is one of ``t_end``, ``a_min``, ``a_max``, ``rho_max``,
        ``plateau``, ``max_steps`` or ``step_underflow``.
    """
    cfg = cfg or IntegrationConfig()
    s0 = State(*map(float, s0))
    _check_state(s0)
    t0, t1 = map(float, t_span)
    sign = 1.0 if t1 >= t0 else -1.0
    tau_end = abs(t1 - t0)
    a0, adot0, rho0 = s0
    a_min = cfg.a_min_stop if cfg.a_min_stop is not None else default_min_depth(model) * a0
    a_max = cfg.a_max_stop if cfg.a_max_stop is not None else 1e6 * a0
    flat_a3 = eos.rho_flat(model, rho0) * a0 ** 3
    rho_of_a = _density_map(model, flat_a3)
    f = _make_field(params, model, cfg.mode, rho_of_a)

    v_scale = math.sqrt(potential_term(params, a0, rho0)) or abs(adot0) or a0
    if cfg.mode == "direct":
        y = (a0, sign * adot0, rho0)
        scale = (0.0, v_scale, 0.0)

        def rho_y(yy):
            return yy[2]
    else:
        y = (a0, sign * adot0)
        scale = (0.0, v_scale)

        def rho_y(yy):
            # the inverse map round-trips rho0 only to an ulp
            return rho0 if yy[0] == a0 else rho_of_a(yy[0])

    guards = [("adot_zero", lambda yy: yy[1]),
              ("a_min", lambda yy: yy[0] - a_min),
              ("a_max", lambda yy: yy[0] - a_max)]
    if math.isfinite(cfg.rho_max_stop):
        guards.append(("rho_max", lambda yy: rho_y(yy) - cfg.rho_max_stop))

    rate = params.c * math.sqrt(params.Lambda)
    plateau = cfg.plateau_tol is not None and rate > 0

    def in_band(yy, dy):
        return (abs(yy[1]) < cfg.plateau_tol * yy[0] * rate
                and abs(dy[1]) < cfg.plateau_tol * yy[0] * rate ** 2)

    taus = [0.0]
    ys = [y]
    events = []  # (tau, kind, y)
    status = "t_end"
    if tau_end == 0.0:
        return _build(params, model, cfg, t0, sign, taus, ys, events, status, rho_y, flat_a3,
                      a_min, a_max)

    k1 = f(y)
    # a run that starts next to the static point only counts as settling
    # once it has left the plateau band and come back
    armed = plateau and not in_band(y, k1)
    h = _initial_step(f, y, k1, scale, cfg.rel_tol, cfg.abs_tol)
    tau = 0.0
    g_vals = [g(y) for _, g in guards]
    steps = 0
    while True:
        if steps >= cfg.max_steps:
            status = "max_steps"
            break
        if h <= 16 * np.finfo(float).eps * max(abs(tau), 1e-300):
            status = "step_underflow"
            break
        h = min(h, tau_end - tau)
        try:
            y_new, k7, err, ks = _dopri_step(f, y, k1, h)
            en = _err_norm(err, y, y_new, scale, cfg.rel_tol, cfg.abs_tol)
        except DomainError:
            h *= 0.25
            continue
        if not math.isfinite(en) or en > 1.0:
            fac = 0.2 if not math.isfinite(en) else max(0.2, 0.9 * en ** -0.2)
            h *= fac
            continue
        steps += 1
        # events inside the accepted step
        hit = None
        crossings = []
        for j, (kind, g) in enumerate(guards):
            g_old = g_vals[j]
            if g_old == 0.0:
                continue
            theta = _locate(g, y, h, ks, g_old)
            if theta is None:
                continue
            if kind in _TERMINAL:
                if hit is None or theta < hit[0]:
                    hit = (theta, kind)
            else:
                crossings.append((theta, kind))
        limit = hit[0] if hit is not None else 1.0
        for theta, kind in crossings:
            if theta <= limit:
                events.append((tau + theta * h, kind, _dense(y, h, ks, theta)))
        if hit is not None:
            theta, kind = hit
            y_stop = _dense(y, h, ks, theta)
            if kind == "a_min":
                y_stop = (a_min,) + tuple(y_stop[1:])
            elif kind == "a_max":
                y_stop = (a_max,) + tuple(y_stop[1:])
            tau_stop = tau + theta * h
            events.append((tau_stop, kind, y_stop))
            if tau_stop > taus[-1]:
                taus.append(tau_stop)
                ys.append(y_stop)
            status = kind
            break

        tau = tau + h if tau + h < tau_end else tau_end
        y, k1 = y_new, k7
        taus.append(tau)
        ys.append(y)
        g_vals = [g(y) for _, g in guards]
        if tau >= tau_end:
            status = "t_end"
            break
        if plateau:
            if in_band(y, k7):
                if armed:
                    status = "plateau"
                    break
            else:
                armed = True
        h *= min(10.0, max(0.2, 0.9 * max(en, 1e-10) ** -0.2))

    return _build(params, model, cfg, t0, sign, taus, ys, events, status, rho_y, flat_a3,
                  a_min, a_max)


def _build(params, model, cfg, t0, sign, taus, ys, events, status, rho_y, flat_a3, a_min, a_max):
    c2 = params.c ** 2
    n = len(ys)
    t = np.empty(n)
    a = np.empty(n)
    adot = np.empty(n)
    rho = np.empty(n)
    P = np.empty(n)
    X = np.empty(n)
    fl = np.empty(n)
    for i, (tau, y) in enumerate(zip(taus, ys)):
        r = rho_y(y)
        t[i] = t0 + sign * tau
        a[i] = y[0]
        adot[i] = sign * y[1]
        rho[i] = r
        P[i] = eos.pressure(model, r)
        X[i] = adot[i] ** 2 - potential_term(params, a[i], r)
        fl[i] = flat_a3 if cfg.mode == "constrained" else eos.rho_flat(model, r) * a[i] ** 3
    evs = [Event(t0 + sign * tau, kind, State(y[0], sign * y[1], rho_y(y)))
           for tau, kind, y in sorted(events, key=lambda e: e[0])]
    return Trajectory(t, a, adot, rho, P, X, fl, evs, status,
                      "forward" if sign > 0 else "backward", cfg.mode, a_min, a_max, params, model)


def integrate_both(params, model, s0, duration, cfg=None):
    """Forward and backward runs of length ``duration`` from t = 0."""
    return (integrate(params, model, s0, (0.0, duration), cfg),
            integrate(params, model, s0, (0.0, -duration), cfg))


# -- singular time ----------------------------------------------------------------------


def power_law_fit(t, y, direction, delta0=None):
    """Fit ``y = C |t - t_star|^p`` with t_star beyond the last sample.

    The fit works in log space. ``t_star`` is parametrised by its distance
    ``delta > 0`` from the last sample (the one nearest the singularity); the
    profile over log(delta) is minimised first and the three parameters are
    then polished jointly with a Gauss-Newton solver.

    Returns
    -------
    (t_star, p, C, sigma_t_star, rms_residual)
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if direction not in ("past", "future"):
        raise DomainError("direction must be 'past' or 'future'")
    if len(t) < 4:
        raise NumericError("too few samples for a power-law fit")
    edge = t[-1]
    s = np.abs(t - edge)
    ly = np.log(y)
    if delta0 is None or not delta0 > 0:
        delta0 = max(s[-2], 1e-300)

    def linfit(ld):
        x = np.log(s + math.exp(ld))
        A = np.vstack([np.ones_like(x), x]).T
        coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
        return coef, ly - A @ coef

    def cost(ld):
        return float(np.sum(linfit(ld)[1] ** 2))

    ld0 = math.log(delta0)
    grid = ld0 + np.linspace(-12.0, 12.0, 97)
    vals = [cost(g) for g in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(cost, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    ld = float(res.x)
    (lc, p), _ = linfit(ld)

    def resid(theta):
        return theta[0] + theta[1] * np.log(s + math.exp(theta[2])) - ly

    sol = optimize.least_squares(resid, [lc, p, ld], method="lm", xtol=1e-15, ftol=1e-15,
                                 gtol=1e-15)
    lc, p, ld = sol.x
    dof = max(len(t) - 3, 1)
    s2 = float(np.sum(sol.fun ** 2)) / dof
    try:
        cov = np.linalg.inv(sol.jac.T @ sol.jac) * s2
        sig_ld = math.sqrt(max(cov[2, 2], 0.0))
    except np.linalg.LinAlgError:
        sig_ld = math.inf
    delta = math.exp(ld)
    t_star = edge - delta if direction == "past" else edge + delta
    return t_star, float(p), math.exp(lc), delta * sig_ld, math.sqrt(s2)


def estimate_singular_time(traj, direction, window_factor=10.0, min_samples=20):
    """Extrapolate the end of the existence interval from a singular approach.

    Uses the samples with ``a < window_factor * a_min_stop`` and fits
    ``a = C (t - t_star)^p``.

    Raises
    ------
    DomainError
        If the trajectory does not approach a singularity in ``direction``.
    NumericError
        If fewer than ``min_samples`` samples lie in the fit window.
    """
    want = "backward" if direction == "past" else "forward"
    if traj.direction != want or not traj.singular_approach:
        raise DomainError(f"trajectory does not approach a singularity toward the {direction}")
    mask = traj.a < window_factor * traj.a_min_stop
    # keep the contiguous tail only
    idx = np.nonzero(~mask)[0]
    start = idx[-1] + 1 if len(idx) else 0
    tt, aa, vv = traj.t[start:], traj.a[start:], traj.adot[start:]
    if len(tt) < min_samples:
        raise NumericError(f"only {len(tt)} samples in the singular window (need {min_samples})")
    delta0 = (2.0 / 3.0) * aa[-1] / max(abs(vv[-1]), 1e-300)
    t_star, p, C, sig, _ = power_law_fit(tt, aa, direction, delta0)
    return SingularTimeEstimate(t_star, direction, p, C, sig, len(tt))


def cross_check_modes(params, model, s0, t_span, cfg=None):
    """Largest relative difference of a(t) between direct and constrained runs."""
    cfg = cfg or IntegrationConfig()
    d = integrate(params, model, s0, t_span, replace(cfg, mode="direct"))
    c = integrate(params, model, s0, t_span, replace(cfg, mode="constrained"))
    lo = max(min(d.t.min(), d.t.max()), min(c.t.min(), c.t.max()))
    hi = min(max(d.t.min(), d.t.max()), max(c.t.min(), c.t.max()))
    sel = (d.t >= lo) & (d.t <= hi)
    if not np.any(sel):
        raise NumericError("direct and constrained runs share no time range")
    a_c = c.a_at(d.t[sel])
    return float(np.max(np.abs(d.a[sel] - a_c) / np.abs(a_c)))
