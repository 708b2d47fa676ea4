"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import fileio
from .bounds import (
    DEFAULT_EPS,
    DEFAULT_TAU,
    BoundParams,
    detectability_condition,
    detection_probability_lower_bound,
    lemma1_tail,
    lemma2_tail,
    min_attack_norm,
    min_window,
    tail_probability,
    threshold_ell,
    threshold_u,
)
from .detector import HistoryDetector, estimate_stream
from .errors import NoSolutionError, SvdAlarmError
from .grid import build_h_matrix, load_grid, make_unobservable_attack
from .harness import (
    DEFAULT_SUPPORT,
    ExperimentSpec,
    estimate_noise_std,
    run_fig1,
    run_fig2,
    run_fig3,
    run_tail_validation,
    simulate,
)
from .numerics import spectral_norm
from .sim import AttackScenario

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="base random seed")


def _bound_flags(p, with_nu=True):
    if with_nu:
        p.add_argument("--nu", type=float, help="noise standard deviation")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--gamma", type=float, default=0.0, help="state-variation radius")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svdalarm", description="SVD history-matrix change detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a measurement stream CSV")
    _common(p)
    p.add_argument("--grid", default="default")
    p.add_argument("--config", help="JSON {gamma, nu, T, seed}")
    p.add_argument("--nu", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--T", type=int)
    p.add_argument("--attack", help="attack JSON file")
    p.add_argument("--support", type=int, nargs="+", help="attacked buses (unobservable attack)")
    p.add_argument("--a-norm", type=float, default=2.0)
    p.add_argument("--t-a", type=int, default=129)
    p.add_argument("--truth", action="store_true", help="include x_ truth columns")
    p.add_argument("--output", required=True)

    p = sub.add_parser("detect", help="run the streaming detector on a measurement CSV")
    _common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="verdict CSV (default: stdout)")
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--threshold", default="auto", help="'auto' (ell) or a number")
    p.add_argument("--source", choices=["measurements", "estimates"], default="measurements")
    p.add_argument("--grid", default="default", help="grid for estimates or gamma > 0")
    _bound_flags(p)

    p = sub.add_parser("bounds", help="evaluate thresholds and detectability")
    _common(p)
    p.add_argument("--params", help="JSON with BoundParams keys")
    p.add_argument("--nu", type=float)
    p.add_argument("--m", type=int, dest="M")
    p.add_argument("--w", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--h-norm", type=float)
    p.add_argument("--a-norm", type=float)

    p = sub.add_parser("experiment", help="run a reproduction experiment")
    p.add_argument("name", choices=["fig1", "fig2", "fig3", "tails"])
    _common(p)
    p.add_argument("--output", required=True, help="result CSV; metadata goes to <stem>.json")
    p.add_argument("--grid", default="default")
    p.add_argument("--w", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--a-norm", type=float, default=2.0)
    p.add_argument("--t-a", type=int, default=129)
    p.add_argument("--T", type=int, default=256)
    p.add_argument("--support", type=int, nargs="+", default=list(DEFAULT_SUPPORT))
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--realizations", type=int)
    p.add_argument("--nus", type=float, nargs="+")
    p.add_argument("--a-norms", type=float, nargs="+")

    p = sub.add_parser("grid", help="grid utilities")
    gsub = p.add_subparsers(dest="grid_command", required=True)
    g = gsub.add_parser("info", help="print grid dimensions")
    _common(g)
    g.add_argument("source", nargs="?", default="default", help="'default' or a grid JSON path")
    return parser


def _cmd_simulate(args) -> int:
    grid = load_grid(args.grid)
    H = build_h_matrix(grid)
    cfg = fileio.load_sim_config(args.config) if args.config else dict(fileio.SIM_CONFIG_DEFAULTS, seed=args.seed)
    for key in ("nu", "gamma", "T"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if args.attack:
        scenario = fileio.scenario_from_doc(fileio.load_json(args.attack), H)
    elif args.support:
        attack = make_unobservable_attack(H, args.support, args.a_norm)
        scenario = AttackScenario(attack=attack, t_a=args.t_a)
    else:
        scenario = None
    frames = simulate(H, scenario, float(cfg["nu"]), float(cfg["gamma"]), int(cfg["T"]), int(cfg["seed"]))
    fileio.write_measurement_csv(args.output, frames, include_truth=args.truth)
    return EXIT_OK


def _cmd_detect(args) -> int:
    times, ys, _ = fileio.read_measurement_csv(args.input)
    needs_grid = args.source == "estimates" or args.gamma > 0
    H = build_h_matrix(load_grid(args.grid)) if needs_grid else None
    if args.source == "estimates":
        ys = estimate_stream(ys, H, np.ones(H.M))
    if args.threshold == "auto":
        nu = args.nu if args.nu is not None else estimate_noise_std(ys)
        p = BoundParams(
            nu=nu,
            M=ys.shape[1],
            w=args.w,
            tau=args.tau,
            eps=args.eps,
            gamma=args.gamma,
            h_norm=spectral_norm(H.H) if H is not None else 0.0,
        )
        threshold = threshold_ell(p)
    else:
        try:
            threshold = float(args.threshold)
        except ValueError:
            raise UsageError(f"--threshold must be 'auto' or a number, got {args.threshold!r}") from None
    verdicts = HistoryDetector(args.w, threshold, args.source).run(ys, list(times))
    if args.output:
        fileio.write_verdict_csv(args.output, verdicts)
    else:
        _verdicts_to_stdout(verdicts)
    return EXIT_OK


def _verdicts_to_stdout(verdicts) -> None:
    sys.stdout.write("t,sigma1,alarm,threshold\n")
    for v in verdicts:
        sys.stdout.write(f"{v.t},{fileio.fmt(v.sigma1)},{fileio.fmt(v.alarmed)},{fileio.fmt(v.threshold_used)}\n")


def _cmd_bounds(args) -> int:
    doc = fileio.load_json(args.params) if args.params else {}
    a_norm = doc.pop("a_norm", None)
    for key in ("nu", "M", "w", "tau", "eps", "gamma", "h_norm"):
        if getattr(args, key) is not None:
            doc[key] = getattr(args, key)
    if args.a_norm is not None:
        a_norm = args.a_norm
    if "nu" not in doc or "M" not in doc:
        raise UsageError("bounds needs --nu and --m (or a --params file providing them)")
    window_given = "w" in doc
    p = BoundParams.from_dict(doc)
    out = {
        "params": p.to_dict(),
        "lemma1_tail": lemma1_tail(p.eps, p.M),
        "lemma2_tail": lemma2_tail(p.tau),
        "tail_probability": tail_probability(p),
        "detection_probability": detection_probability_lower_bound(p),
    }
    if window_given:
        out["ell"] = threshold_ell(p)
        out["min_attack_norm"] = min_attack_norm(p)
    if a_norm is not None:
        out["a_norm"] = a_norm
        if window_given:
            out["u"] = threshold_u(a_norm, p)
            out["detectable"] = detectability_condition(a_norm, p)
        try:
            out["min_window"] = min_window(a_norm, p)
        except NoSolutionError:
            out["min_window"] = None
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


_EXPERIMENT_DEFAULTS = {
    "fig1": {"w": 16, "nu": 0.05, "realizations": 1},
    "fig2": {"w": 8, "nu": 0.01, "realizations": 300},
    "fig3": {"w": 1, "nu": 0.05, "realizations": 1},
    "tails": {"w": 8, "nu": 0.01, "realizations": 1000},
}


def _cmd_experiment(args) -> int:
    defaults = _EXPERIMENT_DEFAULTS[args.name]
    spec = ExperimentSpec(
        grid=args.grid,
        nu=args.nu if args.nu is not None else defaults["nu"],
        gamma=args.gamma,
        T=args.T,
        w=args.w if args.w is not None else defaults["w"],
        t_a=args.t_a,
        a_norm=args.a_norm,
        support=tuple(args.support),
        tau=args.tau,
        eps=args.eps,
        realizations=args.realizations if args.realizations is not None else defaults["realizations"],
        base_seed=args.seed,
        nus=tuple(args.nus or (np.round(np.arange(0.01, 0.0701, 0.005), 4).tolist() if args.name == "fig3" else ())),
        a_norms=tuple(args.a_norms or (np.round(np.arange(1.25, 4.01, 0.25), 4).tolist() if args.name == "fig3" else ())),
    )
    runner = {"fig1": run_fig1, "fig2": run_fig2, "fig3": run_fig3, "tails": run_tail_validation}[args.name]
    result = runner(spec)
    result.write(args.output)
    json.dump({"experiment": result.name, "output": args.output, "summary": result.summary}, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def _cmd_grid(args) -> int:
    grid = load_grid(args.source)
    H = build_h_matrix(grid)
    info = {
        "name": grid.name,
        "M": H.M,
        "N": H.N,
        "m": grid.n_branches,
        "buses": grid.n_buses,
        "slack": grid.slack_bus,
        "h_norm": spectral_norm(H.H),
    }
    json.dump(info, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "detect": _cmd_detect,
    "bounds": _cmd_bounds,
    "experiment": _cmd_experiment,
    "grid": _cmd_grid,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"svdalarm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SvdAlarmError, OSError, ValueError) as exc:
        print(f"svdalarm: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
