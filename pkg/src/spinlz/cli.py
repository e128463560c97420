"""``spinlz`` command-line interface.

Every command writes a JSON envelope (default) or CSV. Parameters may come
from ``--config`` (key=value lines, JSON, TOML, or a previous JSON envelope);
explicit flags override the file. Exit codes: 0 success, 2 usage error,
3 numerical failure.
"""

import argparse
import csv
from datetime import datetime, timezone
import io
import json
import math
from pathlib import Path
import subprocess
import sys

import numpy as np

from .errors import CapabilityError, DomainError, SpinLZError
from .su2_algebra import SpinValue

SCHEMA_VERSION = "1.0"
EXIT_USAGE, EXIT_NUMERIC = 2, 3


class UsageError(Exception):
    pass


# --- configuration ---------------------------------------------------------


def _parse_scalar(text):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    return text.strip("\"'")


def load_config(path):
    """Read a config file into a flat dict with underscore keys."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            data = json.loads(raw)
            if isinstance(data, dict) and "schema_version" in data and "config" in data:
                data = data["config"]
        elif suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            data = tomllib.loads(raw)
        else:
            data = {}
            for n, line in enumerate(raw.splitlines(), 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{n}: expected key=value")
                key, value = line.split("=", 1)
                data[key.strip()] = _parse_scalar(value)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


# --- output ------------------------------------------------------------------


def _build_id():
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"], cwd=here, capture_output=True, text=True, timeout=5
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


def _version():
    from . import __version__

    return __version__


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def envelope(command, config, tm=None, extra=None, seed=None):
    """Result envelope; floats are written with round-trip (17-digit) precision."""
    env = {"schema_version": SCHEMA_VERSION, "command": command, "config": config}
    if tm is not None:
        env["labels_two_m"] = list(tm.labels)
        env["matrix"] = tm.p.tolist()
        if tm.stderr is not None:
            env["stderr"] = tm.stderr.tolist()
    if extra:
        env.update(_jsonable(extra))
    env["provenance"] = {
        "package_version": _version(),
        "build_id": _build_id(),
        "seed": seed,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return env


def matrix_csv(env):
    """CSV with a header row; rows labelled by quantity and 2m of the start state."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    labels = env["labels_two_m"]
    w.writerow(["quantity", "from_two_m"] + [f"to_{x}" for x in labels])
    for name in ("matrix", "stderr"):
        if name in env:
            for lab, row in zip(labels, env[name]):
                w.writerow([name, lab] + [f"{x:.17g}" for x in row])
    return buf.getvalue()


def emit(env, args):
    if args.format == "csv":
        if "matrix" not in env:
            raise UsageError(f"command {env['command']} has no matrix payload for CSV output")
        text = matrix_csv(env)
    else:
        text = json.dumps(env, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- commands ----------------------------------------------------------------


def _spin(args):
    if args.two_s is None:
        raise UsageError("--two-s is required")
    return SpinValue(args.two_s)


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")


def _nonneg(args, *names):
    for n in names:
        val = getattr(args, n, None)
        if val is not None and val < 0:
            raise UsageError(f"--{n.replace('_', '-')} must be non-negative")


def cmd_lz(args):
    from .lz_analytic import lz_matrix
    from .propagator import lz_numeric_probabilities

    s = _spin(args)
    _need(args, "delta_param")
    _nonneg(args, "delta_param")
    extra = {"mode": args.mode}
    analytic = lz_matrix(s, args.delta_param) if args.mode in ("analytic", "both") else None
    numeric = None
    if args.mode in ("numeric", "both"):
        numeric = lz_numeric_probabilities(
            s, args.delta_param, window_scale=args.window_scale, rel_tol=args.rel_tol, abs_tol=args.abs_tol
        )
    tm = analytic if analytic is not None else numeric
    if args.mode == "both":
        extra["numeric_matrix"] = numeric.p
        extra["max_deviation"] = float(np.abs(analytic.p - numeric.p).max())
    return envelope("lz", vars_config(args), tm, extra)


def cmd_propagate(args):
    from .propagator import (
        DriveProfile,
        IntegrationWindow,
        TransitionMatrix,
        load_drive_csv,
        propagate_direct,
        solve_fundamental,
    )
    from .wei_norman import represent

    s = _spin(args)
    if args.drive_csv:
        drive = load_drive_csv(args.drive_csv)
        t0 = drive.times[0] if args.t_start is None else args.t_start
        t1 = drive.times[-1] if args.t_end is None else args.t_end
    else:
        _need(args, "delta", "v", "t_start", "t_end")
        drive = DriveProfile.lz(args.delta, args.v)
        t0, t1 = args.t_start, args.t_end
    window = IntegrationWindow(t0, t1, args.rel_tol, args.abs_tol)
    if args.method == "direct":
        u = propagate_direct(s, drive, window)
    else:
        u = represent(solve_fundamental(drive, window, method=args.method), s)
    tm = TransitionMatrix.from_propagator(u, s)
    extra = {"propagator": {"real": u.real, "imag": u.imag}}
    return envelope("propagate", vars_config(args), tm, extra)


def _theta_from_args(args):
    from .noise_analytic import accumulated_theta

    if args.theta is not None:
        _nonneg(args, "theta")
        return args.theta
    _need(args, "eta", "gamma", "v")
    t1 = args.half_window if args.half_window is not None else math.inf
    return float(accumulated_theta(args.eta, args.gamma, args.v, t1, -t1, convention=args.theta_convention))


def cmd_fast_noise(args):
    from .noise_analytic import fast_noise_matrix

    s = _spin(args)
    theta = _theta_from_args(args)
    return envelope("fast-noise", vars_config(args), fast_noise_matrix(s, theta), {"theta": theta})


def cmd_slow_noise(args):
    from .noise_analytic import SlowNoiseParams, slow_noise_matrix, slow_noise_quadrature

    s = _spin(args)
    _need(args, "eta", "v")
    params = SlowNoiseParams(args.eta, args.v, args.kappa)
    if args.method == "quadrature":
        tm = slow_noise_quadrature(s, params, nodes=args.nodes)
    else:
        tm = slow_noise_matrix(s, params)
    return envelope("slow-noise", vars_config(args), tm)


def cmd_noise_mc(args):
    from .noise_analytic import SlowNoiseParams, fast_noise_matrix, slow_noise_matrix
    from .noise_mc import NoiseConfig, dump_paths_csv, monte_carlo_ensemble, noise_grid, ou_sample_path
    from .propagator import IntegrationWindow

    s = _spin(args)
    if args.seed is None:
        raise UsageError("--seed is required for stochastic commands")
    _need(args, "eta", "gamma", "v", "n_traj")
    cfg = NoiseConfig(args.eta, args.gamma, args.components, args.seed, args.n_traj)
    window = IntegrationWindow.symmetric(args.half_window)
    tm = monte_carlo_ensemble(s, args.v, cfg, window, delta=args.delta or 0.0, threads=args.threads)
    extra = {}
    if args.compare != "none":
        if args.compare == "fast":
            theta = _theta_from_args(args)
            ref = fast_noise_matrix(s, theta)
            extra["reference"] = {"kind": "fast", "theta": theta, "theta_convention": args.theta_convention}
        else:
            kappa = 2 if args.components == "XY" else 1
            ref = slow_noise_matrix(s, SlowNoiseParams(args.eta, args.v, kappa))
            extra["reference"] = {"kind": "slow", "kappa": kappa}
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(tm.stderr > 0, (tm.p - ref.p) / tm.stderr, 0.0)
        extra["reference"]["matrix"] = ref.p
        extra["z_scores"] = z
    if args.dump_paths:
        grid = noise_grid(cfg, args.v, window)
        with open(args.dump_paths, "w", newline="", encoding="utf-8") as fh:
            dump_paths_csv((ou_sample_path(cfg, grid, k) for k in range(min(args.dump_count, cfg.n_traj))), fh)
    config = vars_config(args)
    config.pop("threads", None)  # scheduling only; never changes the payload
    return envelope("noise-mc", config, tm, extra, seed=args.seed)


def cmd_tables(args):
    from .noise_analytic import SlowNoiseParams, fast_noise_coefficients, fast_noise_matrix, slow_noise_matrix

    if args.preset == "fast-noise-coefficients":
        two_s = args.two_s or 3
        s = SpinValue(two_s)
        theta = args.theta if args.theta is not None else 0.0
        _nonneg(args, "theta")
        coeffs = {
            f"{i}->{j}": {str(L): str(c) for L, c in fast_noise_coefficients(s, i, j).items()}
            for i in s.two_m
            for j in s.two_m
        }
        exps = {str(L): f"exp(-{L * (L + 1)}*theta/4)" for L in range(s.two_s + 1)}
        extra = {"coefficients": coeffs, "exponentials": exps, "theta": theta}
        return envelope("tables", vars_config(args), fast_noise_matrix(s, theta), extra)
    if args.preset == "slow-noise-matrices":
        _need(args, "eta", "v")
        params = SlowNoiseParams(args.eta, args.v, args.kappa)
        mats = {str(t): slow_noise_matrix(t, params).p for t in (1, 2, 3)}
        p_powers = {str(n): params.p_power(n) for n in (1, 2, 3)}
        return envelope("tables", vars_config(args), None, {"matrices": mats, "p_powers": p_powers})
    raise UsageError(f"unknown preset {args.preset!r}")


def cmd_validate(args):
    from .acceptance import run_all

    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = run_all(quick=args.quick, only=only)
    for r in results:
        print(r.line(), file=sys.stderr)
    env = envelope(
        "validate",
        vars_config(args),
        None,
        {"results": [{"criterion": r.number, "passed": r.passed, "detail": r.detail, "seconds": r.elapsed} for r in results]},
    )
    env["all_passed"] = all(r.passed for r in results)
    return env


COMMANDS = {
    "lz": cmd_lz,
    "propagate": cmd_propagate,
    "noise-mc": cmd_noise_mc,
    "fast-noise": cmd_fast_noise,
    "slow-noise": cmd_slow_noise,
    "tables": cmd_tables,
    "validate": cmd_validate,
}

_NOT_CONFIG = {"command", "config", "output", "format", "handler"}


def vars_config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


# --- parser --------------------------------------------------------------------


def _parent(*specs):
    parser = argparse.ArgumentParser(add_help=False)
    for flags, kw in specs:
        parser.add_argument(*flags, **kw)
    return parser


# argparse shares parent actions between subparsers, so set_defaults on one
# subcommand would leak into the others; every subcommand gets fresh parents
_COMMON = [
    (("--config",), dict(help="key=value, .json or .toml file; flags override it")),
    (("--format",), dict(choices=("json", "csv"), default="json")),
    (("--output", "-o"), dict(help="write here instead of stdout")),
]
_SPIN = [(("--two-s",), dict(type=int, help="twice the spin, e.g. 1 for S=1/2"))]
_TOL = [
    (("--rel-tol",), dict(type=float, default=1e-10)),
    (("--abs-tol",), dict(type=float, default=1e-12)),
]
_NOISE = [
    (("--eta",), dict(type=float)),
    (("--gamma",), dict(type=float)),
    (("--v",), dict(type=float, default=1.0)),
]
_THETA = [
    (("--theta",), dict(type=float, help="accumulated phase (overrides eta/gamma/v)")),
    (("--theta-convention",), dict(choices=("integral", "doubled"), default="doubled")),
    (("--half-window",), dict(type=float, help="finite sweep |t| <= half_window (default: full sweep)")),
]


def build_parser():
    p = argparse.ArgumentParser(prog="spinlz", description="Landau-Zener transitions of arbitrary spin, with and without noise.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("lz", parents=[_parent(*_COMMON, *_SPIN, *_TOL)], help="LZ transition matrix")
    c.add_argument("--delta-param", type=float, help="adiabaticity delta = Delta^2 / v")
    c.add_argument("--mode", choices=("analytic", "numeric", "both"), default="analytic")
    c.add_argument("--window-scale", type=float, default=200.0, help="numeric window sqrt(2v)|t| <= this")

    c = sub.add_parser("propagate", parents=[_parent(*_COMMON, *_SPIN, *_TOL)], help="propagate an LZ or sampled drive")
    c.add_argument("--drive-csv", help="CSV with columns t, theta_x, theta_y, theta_z")
    c.add_argument("--delta", type=float)
    c.add_argument("--v", type=float)
    c.add_argument("--t-start", type=float)
    c.add_argument("--t-end", type=float)
    c.add_argument("--method", choices=("rk", "magnus", "direct"), default="rk")

    c = sub.add_parser("noise-mc", parents=[_parent(*_COMMON, *_SPIN, *_NOISE, *_THETA)], help="Monte Carlo under colored noise")
    c.set_defaults(half_window=60.0)
    c.add_argument("--delta", type=float, default=0.0, help="deterministic LZ coupling")
    c.add_argument("--components", choices=("X", "XY"), default="X")
    c.add_argument("--n-traj", type=int, default=1000)
    c.add_argument("--seed", type=int)
    c.add_argument("--threads", type=int)
    c.add_argument("--compare", choices=("none", "fast", "slow"), default="none")
    c.add_argument("--dump-paths", help="CSV file for sampled noise paths")
    c.add_argument("--dump-count", type=int, default=10)

    sub.add_parser("fast-noise", parents=[_parent(*_COMMON, *_SPIN, *_NOISE, *_THETA)], help="fast-noise closed form")

    c = sub.add_parser("slow-noise", parents=[_parent(*_COMMON, *_SPIN)], help="slow-noise Gaussian average")
    c.add_argument("--eta", type=float)
    c.add_argument("--v", type=float, default=1.0)
    c.add_argument("--kappa", type=int, choices=(1, 2), default=2)
    c.add_argument("--method", choices=("monomial", "quadrature"), default="monomial")
    c.add_argument("--nodes", type=int, default=64)

    c = sub.add_parser("tables", parents=[_parent(*_COMMON, *_SPIN)], help="regenerate reference tables")
    c.add_argument("--preset", default="fast-noise-coefficients", help="fast-noise-coefficients or slow-noise-matrices")
    c.add_argument("--theta", type=float)
    c.add_argument("--eta", type=float)
    c.add_argument("--v", type=float, default=1.0)
    c.add_argument("--kappa", type=int, choices=(1, 2), default=2)

    c = sub.add_parser("validate", parents=[_parent(*_COMMON)], help="run the acceptance suite")
    c.add_argument("--quick", action="store_true", help="1000 trajectories for the Monte Carlo checks")
    c.add_argument("--only", help="comma-separated criterion numbers")
    return p


def _apply_config(parser, argv):
    """Parse twice: once to find --config, then with file values as defaults."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = load_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    unknown = sorted(set(values) - set(known) - _NOT_CONFIG)
    if unknown:
        raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
    defaults = {}
    for key, val in values.items():
        if key in _NOT_CONFIG:
            continue
        action = known[key]
        if val is not None and action.type is not None and not isinstance(val, bool):
            try:
                val = action.type(val)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
        if action.choices is not None and val is not None and val not in action.choices:
            raise UsageError(f"config key {key}: {val!r} not in {list(action.choices)}")
        defaults[key] = val
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        env = COMMANDS[args.command](args)
        emit(env, args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, DomainError, CapabilityError) as exc:
        print(f"spinlz: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SpinLZError, FloatingPointError, ArithmeticError) as exc:
        print(f"spinlz: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "validate" and not env["all_passed"]:
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
