"""Command-line front end: ``fgs-tfim <command> [options]``.

Every option can also come from a flat ``key = value`` config file passed
with ``--config``; command-line flags win. Keys are the long option names
with dashes or underscores (``max-iters`` and ``max_iters`` are the same key).
Angles may be written as multiples of pi, e.g. ``0.3013pi``.

Exit codes: 0 success (including flagged non-convergence), 1 a validation
check failed, 2 configuration error, 3 numerical failure.

Output formats
--------------
JSON results carry ``command``, ``version`` (``git describe`` or the package
version), the fully resolved ``config`` and, with ``--timestamp``, a UTC
``timestamp``. Keys are sorted so identical runs give identical bytes.

Sweep CSVs start with ``#`` comment lines (version, config, optional
timestamp) followed by the header ``N,alpha,theta,energy,entropy,method,
converged,seed``. ``theta`` is in radians, ``entropy`` in nats.

``--checkpoint PATH`` stores the covariance matrix. The default is binary:
the four bytes ``FGS1``, ``N`` as little-endian uint32, then the ``N(2N-1)``
strictly upper-triangular entries in row-major order as little-endian
float64. A path ending in ``.csv`` gives the text form instead: a first line
``N,<N>`` and then one entry per line in the same order.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .gaussian import write_checkpoint, write_checkpoint_csv
from .model import ModelSpec, parse_alpha
from .observables import half_chain_entropy
from .solvers import SolverOptions, solve, write_energy_trace

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# -- value parsing ---------------------------------------------------------------


def parse_angle(text) -> float:
    """``0.3``, ``0.3pi``, ``pi/4``, ``0.25*pi`` -> radians."""
    s = str(text).strip().lower().replace(" ", "")
    try:
        if s.endswith("pi"):
            head = s[:-2].rstrip("*")
            return math.pi * (float(head) if head not in ("", "+") else 1.0)
        if s.startswith("pi/"):
            return math.pi / float(s[3:])
        return float(s)
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


def parse_int_list(text) -> list[int]:
    """``20,30,40`` or ``20:100:10`` (inclusive end)."""
    s = str(text).strip()
    try:
        if ":" in s:
            a, b, step = (int(v) for v in s.split(":"))
            return list(range(a, b + 1, step))
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse integer list {text!r}") from None


def parse_angle_list(text) -> list[float]:
    """``0.1pi,0.2pi`` or ``lo:hi:count`` (inclusive linspace)."""
    s = str(text).strip()
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise ConfigError(f"angle range must be lo:hi:count, got {text!r}")
        try:
            count = int(parts[2])
        except ValueError:
            raise ConfigError(f"bad point count in {text!r}") from None
        return list(np.linspace(parse_angle(parts[0]), parse_angle(parts[1]), count))
    return [parse_angle(v) for v in s.split(",") if v.strip()]


def parse_alpha_list(text) -> list:
    try:
        return [parse_alpha(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean {text!r}")


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key = value")
        k, v = (x.strip() for x in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


# -- option tables ---------------------------------------------------------------
# name -> (parser, default, help). Shared by flags and config keys.

SOLVER_KEYS = {
    "method": (str, "zt", "ite or zt"),
    "dtau": (float, 0.05, "ITE step"),
    "max_iters": (int, None, "iteration cap per restart"),
    "energy_tol": (float, 1e-10, "|dE| convergence threshold"),
    "grad_tol": (float, 1e-7, "max |[H, Gamma]| convergence threshold"),
    "restarts": (int, 5, "random initialisations"),
    "mixing": (float, 1.0, "ZT damping weight in (0, 1]"),
    "seed": (int, 0, "base RNG seed"),
    "max_halvings": (int, 20, "ITE dtau halvings allowed"),
    "stall_window": (int, 25, "ZT iterations without progress before damping (0 = never)"),
}

COMMAND_KEYS = {
    "solve": {
        "n": (int, None, "number of spins"),
        "alpha": (parse_alpha, None, "decay exponent (or inf)"),
        "nearest_neighbor": (parse_bool, False, "nearest-neighbour couplings only"),
        "theta": (parse_angle, None, "angle, e.g. 0.2pi"),
        "validate": (parse_bool, False, "compare with exact diagonalisation"),
        "checkpoint": (str, None, "write Gamma to this FGS1 file"),
        "trace": (str, None, "write the energy trace CSV here"),
    },
    "phase-diagram": {
        "n": (int, 20, "number of spins"),
        "alphas": (parse_alpha_list, None, "comma-separated alphas"),
        "thetas": (parse_angle_list, None, "angles: list or lo:hi:count"),
        "svg": (str, None, "heat-map output"),
    },
    "critical-point": {
        "alpha": (parse_alpha, None, "decay exponent"),
        "ns": (parse_int_list, [20, 30, 40, 50, 60, 70, 80, 90, 100], "chain lengths"),
        "bracket": (parse_angle_list, None, "lo,hi search bracket"),
        "rows": (str, None, "CSV of N,theta_max rows to fit instead of solving"),
        "svg": (str, None, "theta_max vs 1/N plot"),
    },
    "central-charge": {
        "alpha": (parse_alpha, None, "decay exponent"),
        "ns": (parse_int_list, [20, 30, 40, 50, 60, 70, 80, 90, 100], "chain lengths"),
        "exclude": (parse_int_list, [20, 30, 40], "chain lengths left out of the fit"),
        "bracket": (parse_angle_list, None, "lo,hi search bracket"),
        "gapped_sweep": (parse_bool, False, "fit c(theta) on a grid instead of at theta_max"),
        "thetas": (parse_angle_list, None, "grid for --gapped-sweep"),
        "rows": (str, None, "CSV of N,S rows to fit instead of solving"),
        "svg": (str, None, "plot output"),
    },
    "validate": {
        "max_n": (int, 10, "largest chain in the battery"),
    },
}

COMMON_KEYS = {
    "out": (str, None, "main output file (JSON or CSV)"),
    "workers": (int, 0, "parallel jobs (0 = all cores)"),
    "timestamp": (parse_bool, False, "add a timestamp line to outputs"),
}

def _keys_for(command):
    keys = dict(COMMON_KEYS)
    if command != "validate":
        keys.update(SOLVER_KEYS)
    keys.update(COMMAND_KEYS[command])
    return keys


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fgs-tfim", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMAND_KEYS:
        p = sub.add_parser(command)
        p.add_argument("--config", help="flat key = value file")
        for key, (_, default, help_) in _keys_for(command).items():
            flag = "--" + key.replace("_", "-")
            if key in ("nearest_neighbor", "validate", "gapped_sweep", "timestamp"):
                p.add_argument(flag, dest=key, action="store_const", const="true",
                               default=None, help=help_)
            else:
                p.add_argument(flag, dest=key, default=None, help=f"{help_} (default {default})")
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults < config file < flags, every value parsed and checked."""
    keys = _keys_for(command)
    raw = {}
    if args.config:
        for k, v in read_config(args.config).items():
            if k not in keys:
                raise ConfigError(f"unknown config key {k!r} for {command}")
            raw[k] = v
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            raw[k] = v
    cfg = {}
    for k, (parse, default, _) in keys.items():
        if k in raw:
            try:
                cfg[k] = parse(raw[k])
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{k}: {exc}") from None
        else:
            cfg[k] = default
    return cfg


def solver_options(cfg) -> SolverOptions:
    try:
        return SolverOptions(**{k: cfg[k] for k in SOLVER_KEYS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def version_stamp() -> str:
    """Package version plus ``git describe`` when run from a checkout."""
    stamp = f"fgs-tfim {__version__}"
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            stamp += f" ({out.stdout.strip()})"
    except (OSError, subprocess.SubprocessError):
        pass
    return stamp


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return str(v)


def _envelope(command, cfg, payload) -> dict:
    record = {"command": command, "version": version_stamp(), "config": _jsonable(cfg)}
    if cfg.get("timestamp"):
        record["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    record.update(_jsonable(payload))
    return record


def _emit_json(cfg, record) -> None:
    text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _preamble(command, cfg) -> str:
    lines = [version_stamp(), "config " + json.dumps(_jsonable(cfg), sort_keys=True)]
    if cfg.get("timestamp"):
        lines.append("timestamp " + datetime.datetime.now(datetime.timezone.utc).isoformat())
    return "\n".join(lines)


def _write_svg(path, text):
    if path:
        Path(path).write_text(text, encoding="utf-8")


# -- commands --------------------------------------------------------------------


def _spec_from(cfg) -> ModelSpec:
    if cfg["n"] is None or cfg["theta"] is None:
        raise ConfigError("solve needs n and theta")
    alpha = "inf" if cfg["nearest_neighbor"] else cfg["alpha"]
    if alpha is None:
        raise ConfigError("solve needs alpha (or nearest-neighbor)")
    try:
        return ModelSpec(cfg["n"], cfg["theta"], alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_solve(cfg) -> int:
    spec = _spec_from(cfg)
    opts = solver_options(cfg)
    if cfg["trace"]:
        opts = replace(opts, record_trace=True)
    res = solve(spec, opts)
    payload = {
        "model": spec.to_dict(),
        "theta_over_pi": spec.theta / math.pi,
        "entropy": half_chain_entropy(res.gamma),
        **res.summary(),
    }
    if cfg["validate"]:
        from .oracle import exact_ground

        ex = exact_ground(spec)
        payload["exact_energy"] = ex.energy
        payload["energy_delta"] = res.energy - ex.energy
        payload["exact_degenerate"] = ex.degenerate
    if cfg["checkpoint"]:
        dump = write_checkpoint_csv if cfg["checkpoint"].endswith(".csv") else write_checkpoint
        dump(cfg["checkpoint"], res.gamma)
    if cfg["trace"]:
        write_energy_trace(cfg["trace"], res)
    _emit_json(cfg, _envelope("solve", cfg, payload))
    return EXIT_OK


def cmd_phase_diagram(cfg) -> int:
    from .scaling import REFERENCE_THRESHOLDS, phase_diagram, write_scan_csv
    from .svgplot import heatmap

    if not cfg["alphas"] or not cfg["thetas"]:
        raise ConfigError("phase-diagram needs alphas and thetas")
    opts = solver_options(cfg)
    points = phase_diagram(cfg["n"], cfg["alphas"], cfg["thetas"], opts, cfg["workers"])
    out = cfg["out"] or "phase_diagram.csv"
    write_scan_csv(out, points, _preamble("phase-diagram", cfg))
    if cfg["svg"]:
        # the nearest-neighbour row has no place on a numeric alpha axis
        alphas = sorted({float(p.alpha) for p in points if p.alpha != "inf"})
        thetas = np.asarray(cfg["thetas"]) / math.pi
        Z = np.full((len(alphas), len(thetas)), np.nan)
        for p in points:
            if p.alpha != "inf":
                j = int(np.argmin(np.abs(thetas - p.theta / math.pi)))
                Z[alphas.index(float(p.alpha)), j] = p.entropy
        ys = np.array(alphas)
        marks = [(REFERENCE_THRESHOLDS[a][0], a) for a in ys if a in REFERENCE_THRESHOLDS]
        _write_svg(cfg["svg"], heatmap(thetas, ys, Z, title=f"S_N/2, N={cfg['n']}",
                                       xlabel="theta/pi", ylabel="alpha", markers=marks))
    unconverged = sum(not p.converged for p in points)
    print(f"wrote {len(points)} points to {out} ({unconverged} unconverged)")
    return EXIT_OK


def _read_rows(path):
    rows = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read rows {path}: {exc}") from None
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        a, b = line.split(",")[:2]
        try:
            rows.append((int(a), float(b)))
        except ValueError:
            continue  # header
    return rows


def _bracket(cfg):
    from .scaling import DEFAULT_BRACKET

    b = cfg.get("bracket")
    if b is None:
        return DEFAULT_BRACKET
    if len(b) != 2:
        raise ConfigError("bracket needs exactly two angles")
    return tuple(b)


def cmd_critical_point(cfg) -> int:
    from .scaling import critical_point, fit_threshold, REFERENCE_THRESHOLDS
    from .svgplot import line_plot

    if cfg["rows"]:
        rows = _read_rows(cfg["rows"])
        details = {}
    else:
        if cfg["alpha"] is None:
            raise ConfigError("critical-point needs alpha (or rows)")
        results, _ = critical_point(cfg["alpha"], cfg["ns"], solver_options(cfg),
                                    _bracket(cfg), cfg["workers"])
        rows = []
        details = {}
        for n, r in results.items():
            details[str(n)] = {"theta_max": r.theta, "theta_max_over_pi": r.theta / math.pi,
                               "entropy": r.entropy, "converged": r.converged,
                               "unimodal": r.unimodal, "evaluations": r.evaluations}
            if r.converged:
                rows.append((n, r.theta))
            else:
                print(f"warning: N={n} left out (unconverged solves)", file=sys.stderr)
    try:
        fit = fit_threshold(rows)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    payload = {"fit": fit.to_dict(), "points": details,
               "theta_c_over_pi": fit.params["theta_c"] / math.pi,
               "theta_c_stderr_over_pi": fit.stderr["theta_c"] / math.pi}
    ref = REFERENCE_THRESHOLDS.get(cfg["alpha"]) if cfg["alpha"] is not None else None
    if ref:
        payload["reference_theta_c_over_pi"] = ref[0]
    _emit_json(cfg, _envelope("critical-point", cfg, payload))
    if cfg["svg"]:
        x = [1.0 / n for n in fit.Ns]
        y = [v / math.pi for v in fit.y]
        xf = [0.0, max(x)]
        yf = [(fit.params["theta_c"] + fit.params["a"] * t) / math.pi for t in xf]
        _write_svg(cfg["svg"], line_plot(
            [{"x": x, "y": y, "markers": True, "line": False, "label": "theta_max"},
             {"x": xf, "y": yf, "label": "fit"}],
            title="theta_max vs 1/N", xlabel="1/N", ylabel="theta_max/pi"))
    return EXIT_OK


def cmd_central_charge(cfg) -> int:
    from .scaling import (central_charge_at_peak, effective_charge_sweep,
                          fit_central_charge, write_scan_csv)
    from .svgplot import line_plot

    opts = solver_options(cfg)
    payload = {}
    if cfg["rows"]:
        try:
            fit = fit_central_charge(_read_rows(cfg["rows"]), cfg["exclude"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        payload["fit"] = fit.to_dict()
        svg_series = [{"x": list(np.log(fit.Ns)), "y": list(fit.y), "markers": True}]
        xlabel, ylabel = "log N", "S"
    elif cfg["gapped_sweep"]:
        if cfg["alpha"] is None or not cfg["thetas"]:
            raise ConfigError("gapped sweep needs alpha and thetas")
        try:
            fits, points = effective_charge_sweep(cfg["alpha"], cfg["thetas"], cfg["ns"], opts,
                                                  exclude=cfg["exclude"], workers=cfg["workers"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        payload["sweep"] = [{"theta": t, "theta_over_pi": t / math.pi, "fit": f.to_dict()}
                            for t, f in fits]
        if cfg["out"]:
            write_scan_csv(Path(cfg["out"]).with_suffix(".points.csv"), points,
                           _preamble("central-charge", cfg))
        svg_series = [{"x": [t / math.pi for t, _ in fits],
                       "y": [f.params["c"] for _, f in fits], "markers": True}]
        xlabel, ylabel = "theta/pi", "c"
    else:
        if cfg["alpha"] is None:
            raise ConfigError("central-charge needs alpha (or rows)")
        try:
            results, fit = central_charge_at_peak(cfg["alpha"], cfg["ns"], opts, _bracket(cfg),
                                                  cfg["exclude"], cfg["workers"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        payload["fit"] = fit.to_dict()
        payload["points"] = {str(n): {"theta_max": r.theta, "entropy": r.entropy,
                                      "converged": r.converged} for n, r in results.items()}
        svg_series = [{"x": list(np.log(fit.Ns)), "y": list(fit.y), "markers": True}]
        xlabel, ylabel = "log N", "S_max"
    _emit_json(cfg, _envelope("central-charge", cfg, payload))
    if cfg["svg"]:
        _write_svg(cfg["svg"], line_plot(svg_series, title="central charge",
                                         xlabel=xlabel, ylabel=ylabel))
    return EXIT_OK


def run_validation(max_n: int = 10) -> list[dict]:
    """Oracle battery: sign conventions, variational bound, free-fermion exactness."""
    from .gaussian import fermion_parity, random_pure_covariance, wick_expectation
    from .oracle import exact_correlator, exact_entropy, exact_ground, gaussian_state_vector

    checks = []

    def record(name, params, margin, passed):
        checks.append({"check": name, "params": params, "margin": float(margin),
                       "passed": bool(passed)})

    for seed in range(3):
        g = random_pure_covariance(4, seed)
        psi = gaussian_state_vector(g)
        worst = 0.0
        for idx in [(0, 1), (1, 2), (2, 5), (0, 3, 4, 7), (1, 2, 3, 6)]:
            worst = max(worst, abs(exact_correlator(psi, idx) - wick_expectation(g, idx)))
        record("wick-vs-exact", {"N": 4, "seed": seed}, 1e-9 - worst, worst <= 1e-9)
    opts = SolverOptions(restarts=3)
    sizes = [n for n in (4, 6, 8, 10, 12) if n <= max_n]
    for N in sizes:
        for th in (0.2, 0.3, 0.45):
            spec = ModelSpec(N, th * math.pi, "inf")
            res = solve(spec, opts)
            ex = exact_ground(spec, parity=fermion_parity(res.gamma))
            rel = abs(res.energy - ex.energy) / abs(ex.energy)
            dS = abs(half_chain_entropy(res.gamma) - exact_entropy(ex.state, range(N // 2)))
            record("free-fermion-energy", {"N": N, "theta/pi": th}, 1e-8 - rel, rel <= 1e-8)
            record("free-fermion-entropy", {"N": N, "theta/pi": th}, 1e-8 - dS, dS <= 1e-8)
        for alpha in (0.5, 1.0, 2.0, 3.0):
            for th in (0.1, 0.25, 0.4):
                spec = ModelSpec(N, th * math.pi, alpha)
                res = solve(spec, opts)
                ex = exact_ground(spec)
                gap = res.energy - ex.energy
                record("variational-bound", {"N": N, "alpha": alpha, "theta/pi": th},
                       gap + 1e-9, gap >= -1e-9)
    return checks


def cmd_validate(cfg) -> int:
    checks = run_validation(cfg["max_n"])
    failed = [c for c in checks if not c["passed"]]
    payload = {"checks": checks, "passed": not failed, "n_checks": len(checks),
               "n_failed": len(failed)}
    _emit_json(cfg, _envelope("validate", cfg, payload))
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


COMMANDS = {
    "solve": cmd_solve,
    "phase-diagram": cmd_phase_diagram,
    "critical-point": cmd_critical_point,
    "central-charge": cmd_central_charge,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
