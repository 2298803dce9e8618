"""Command-line front end.

Every subcommand is a thin wrapper around library calls; results go to
stdout or to ``--out`` (written atomically). Exit codes: 0 success, 2 domain
error, 3 numerical failure, 64 usage error, 74 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import asymptotics, classifier, dust_oracle, eos, integrator
from .dynamics import CosmoParams, State
from .errors import DomainError, NumericError

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_USAGE, EXIT_IO = 0, 2, 3, 64, 74


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}\n\n{self.format_help()}")


# -- output helpers -----------------------------------------------------------------


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _clean(obj):
    """Make an object JSON-safe: numpy scalars to float, non-finite to strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "+inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _emit(text, out):
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def emit_plotdata(traj, directory, stem="trajectory"):
    """Write two-column text files ``t a``, ``t rho`` and ``t adot``.

    Returns the list of written paths. Values use 17 significant digits so a
    reader recovers the samples exactly.
    """
    if len(traj.t) == 0:
        raise DomainError("empty trajectory")
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {directory}: {exc.strerror or exc}") from exc
    paths = []
    for name, col in (("a", traj.a), ("rho", traj.rho), ("adot", traj.adot)):
        path = os.path.join(directory, f"{stem}_{name}.dat")
        lines = [f"# t {name}\n"] + ["%.17g %.17g\n" % (t, v) for t, v in zip(traj.t, col)]
        atomic_write(path, "".join(lines))
        paths.append(path)
    return paths


# -- argument parsing ---------------------------------------------------------------


def _span(text):
    try:
        parts = [float(x) for x in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad span {text!r}") from None
    if len(parts) == 1:
        return (0.0, parts[0])
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"bad span {text!r}, expected t1 or t0:t1")
    return tuple(parts)


def _alpha_grid(text):
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"bad alpha grid {text!r}, expected lo:hi:n") from None
    if n < 1:
        raise argparse.ArgumentTypeError("grid size must be positive")
    return np.linspace(lo, hi, n)


def _physics(p):
    p.add_argument("--c", type=float, default=1.0, help="speed of light")
    p.add_argument("--G", type=float, default=1.0, help="gravitational constant")
    p.add_argument("--lambda", dest="Lambda", type=float, default=1.0,
                   help="cosmological constant")
    p.add_argument("--preset", choices=["natural"], help="natural: c = G = 1")


def _eos(p):
    p.add_argument("--eos", default="dust",
                   help="dust | gamma:<Gamma> | poly:<gamma>:<coef> | neutron:<A>")


def _state(p):
    p.add_argument("--a0", type=float, required=True)
    p.add_argument("--adot0", type=float, required=True)
    p.add_argument("--rho0", type=float, required=True)


def _integration(p):
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--mode", choices=["constrained", "direct"], default="constrained")
    p.add_argument("--a-min-stop", type=float, default=None)
    p.add_argument("--a-max-stop", type=float, default=None)
    p.add_argument("--max-steps", type=int, default=1_000_000)


def _output(p, formats=("json",), default="json"):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=list(formats), default=default)


def build_parser():
    parser = _Parser(prog="cosmofate", description="Fate of homogeneous universes.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("simulate", help="integrate a trajectory")
    for add in (_physics, _eos, _state, _integration):
        add(p)
    p.add_argument("--t-span", type=_span, default=(0.0, 10.0), help="t1 or t0:t1")
    _output(p, ("csv", "json"), "csv")
    p.add_argument("--plotdata", help="directory for two-column plot files")

    p = sub.add_parser("classify", help="past and future fate of a state")
    for add in (_physics, _eos, _state, _integration):
        add(p)
    _output(p)

    p = sub.add_parser("dust-scan", help="dust scenario table over an alpha grid")
    p.add_argument("--alpha", type=_alpha_grid, required=True, help="lo:hi:n or a single value")
    p.add_argument("--branch", choices=["low", "high", "both"], default="low")
    p.add_argument("--sign", type=int, choices=[1, -1], default=1, help="sign of adot0")
    _output(p, ("csv", "json"), "csv")

    p = sub.add_parser("eos-check", help="check pressure-law assumptions on a density grid")
    _physics(p)
    _eos(p)
    p.add_argument("--rho-min", type=float, default=1e-6)
    p.add_argument("--rho-max", type=float, default=1e3)
    p.add_argument("--n", type=int, default=91)
    _output(p)

    p = sub.add_parser("fit", help="fit an asymptotic regime")
    for add in (_physics, _eos, _state, _integration):
        add(p)
    p.add_argument("--regime", choices=["bigbang", "bigcrunch", "latetime", "static"],
                   required=True)
    p.add_argument("--duration", type=float, default=1e4)
    _output(p)

    p = sub.add_parser("stability", help="perturb the static dust universe")
    _physics(p)
    p.add_argument("--epsilon", type=float, required=True, help="initial adot")
    p.add_argument("--a-bar", type=float, default=1.0)
    _output(p)
    return parser


def _params(ns):
    if ns.preset == "natural":
        return CosmoParams.natural(ns.Lambda)
    return CosmoParams(ns.c, ns.G, ns.Lambda)


def _config(ns, **extra):
    return integrator.IntegrationConfig(rel_tol=ns.rtol, abs_tol=ns.atol, mode=ns.mode,
                                        a_min_stop=ns.a_min_stop, a_max_stop=ns.a_max_stop,
                                        max_steps=ns.max_steps, **extra)


# -- subcommands ----------------------------------------------------------------------


def _cmd_simulate(ns):
    params = _params(ns)
    model = eos.EosModel.from_spec(ns.eos, params.c)
    traj = integrator.integrate(params, model, State(ns.a0, ns.adot0, ns.rho0), ns.t_span,
                                _config(ns))
    if ns.format == "csv":
        text = traj.to_csv()
    else:
        text = to_json({
            "status": traj.status, "direction": traj.direction, "mode": traj.mode,
            "eos": model.to_spec(), "X_drift": traj.X_drift(), "flat_drift": traj.flat_drift(),
            "events": [{"t": e.t, "kind": e.kind, "state": list(e.state)} for e in traj.events],
            "samples": {k: getattr(traj, k).tolist() for k in integrator.CSV_HEADER},
        })
    _emit(text, ns.out)
    if ns.plotdata:
        emit_plotdata(traj, ns.plotdata)


def _cmd_classify(ns):
    params = _params(ns)
    model = eos.EosModel.from_spec(ns.eos, params.c)
    cfg = _config(ns, plateau_tol=classifier.CLASSIFY_CONFIG.plateau_tol)
    rep = classifier.classify(params, model, State(ns.a0, ns.adot0, ns.rho0), cfg)
    _emit(to_json(rep.to_dict()), ns.out)


def _cmd_dust_scan(ns):
    rows = dust_oracle.scan(ns.alpha, ns.branch, ns.sign)
    if ns.format == "csv":
        lines = ["alpha,branch,case,xi1,xi2,scenario\n"]
        lines += ["%.17g,%s,%s,%.17g,%.17g,%s\n" % r for r in rows]
        text = "".join(lines)
    else:
        keys = ("alpha", "branch", "case", "xi1", "xi2", "scenario")
        text = to_json([dict(zip(keys, r)) for r in rows])
    _emit(text, ns.out)


def _cmd_eos_check(ns):
    params = _params(ns)
    model = eos.EosModel.from_spec(ns.eos, params.c)
    if not (0 < ns.rho_min < ns.rho_max) or ns.n < 2:
        raise DomainError("need 0 < rho-min < rho-max and n >= 2")
    grid = np.geomspace(ns.rho_min, ns.rho_max, ns.n)
    report = eos.check_a0_a1_a2(model, grid)
    _emit(to_json(report.to_dict()), ns.out)


def _cmd_fit(ns):
    params = _params(ns)
    model = eos.EosModel.from_spec(ns.eos, params.c)
    s0 = State(ns.a0, ns.adot0, ns.rho0)
    cfg = _config(ns)
    if ns.regime in ("bigbang", "bigcrunch"):
        span = (0.0, -ns.duration) if ns.regime == "bigbang" else (0.0, ns.duration)
        traj = integrator.integrate(params, model, s0, span, cfg)
        fits = asymptotics.fit_bigbang(traj, model.high_density_gamma, params)
    elif ns.regime == "latetime":
        traj = integrator.integrate(params, model, s0, (0.0, ns.duration), cfg)
        fits = asymptotics.fit_latetime(traj, params, model)
    else:
        if model.kind != "dust":
            raise DomainError("the static regime is defined for dust")
        traj = integrator.integrate(params, model, s0, (0.0, ns.duration), cfg)
        fits = (asymptotics.fit_static_approach(traj, params),)
    _emit(to_json({"status": traj.status, "fits": [f.to_dict() for f in fits]}), ns.out)


def _cmd_stability(ns):
    params = _params(ns)
    res = classifier.stability_probe(params, eos.EosModel.dust(params.c), ns.epsilon, ns.a_bar)
    _emit(to_json(res.to_dict()), ns.out)


COMMANDS = {
    "simulate": _cmd_simulate,
    "classify": _cmd_classify,
    "dust-scan": _cmd_dust_scan,
    "eos-check": _cmd_eos_check,
    "fit": _cmd_fit,
    "stability": _cmd_stability,
}


def _join_span(argv):
    # argparse reads "-2:5" as an option, so glue span values to their flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--t-span":
            out.append(f"--t-span={next(it, '')}")
        else:
            out.append(tok)
    return out


def run(argv=None):
    """Parse ``argv``, dispatch and return the exit code."""
    argv = _join_span(sys.argv[1:] if argv is None else list(argv))
    try:
        ns = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        COMMANDS[ns.command](ns)
    except DomainError as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return EXIT_DOMAIN
    except NumericError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
