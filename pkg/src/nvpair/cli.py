"""Command-line entry point.

Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
"""

import argparse
import os
import sys

import numpy as np

from . import experiments as ex
from .config import FIELD_DOCS, Config, ConfigError, parse_config
from .csvio import read_csv, write_csv, write_table
from .dynamics import DegenerateSteadyStateError, IntegrationError
from .fitting import FitError, fit_double_lorentzian, fit_exp_decay
from .hamiltonian import LabelError, TrackingError, level_diagram
from .spin import EigenSolverError

SIM_COMMANDS = ("levels", "field-sweep", "esr", "esr-map", "power-sweep", "pump-probe")
RUNTIME_ERRORS = (
    DegenerateSteadyStateError, IntegrationError, EigenSolverError, LabelError,
    TrackingError, FitError, RuntimeError, OSError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _defaults_epilog():
    cfg = Config()
    lines = ["config defaults (origin in brackets):"]
    for key, (meaning, origin) in FIELD_DOCS.items():
        section, _, name = key.partition(".")
        value = getattr(getattr(cfg, section), name) if name else getattr(cfg, section)
        lines.append(f"  {key} = {value!r}  -- {meaning} [{origin}]")
    lines.append("all other keys: artifact defaults, see README")
    return "\n".join(lines)


def build_parser():
    parser = _Parser(prog="nvpair", description="NV + single-nitrogen spin pair simulator",
                     epilog=_defaults_epilog(),
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SIM_COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--seed", type=int, help="RNG seed, overrides the config")
    p = sub.add_parser("fit")
    p.add_argument("--model", required=True, choices=("double-lorentzian", "exp-decay"))
    p.add_argument("--data", required=True, help="two-column CSV")
    p.add_argument("--config", help="accepted for symmetry; unused")
    p.add_argument("--out", help="write fitted curve to this CSV")
    p.add_argument("--seed", type=int)
    return parser


def _resolve_seed(config, cli_seed):
    if cli_seed is not None:
        config.seed = cli_seed
    elif os.environ.get("SEED"):
        try:
            config.seed = int(os.environ["SEED"])
        except ValueError:
            raise ConfigError(f"SEED environment variable is not an integer: {os.environ['SEED']!r}")
    return config


def _print_fit(fit, out):
    for name, value in fit.params.items():
        print(f"{name:>6} = {value:.10g} +/- {fit.stderr[name]:.3g}", file=out)
    print(f"   sse = {fit.sse:.6g}, converged = {fit.converged}, iterations = {fit.iterations}",
          file=out)
    for w in fit.warnings:
        print(f"warning: {w}", file=out)


def _run_sim(args, out):
    config = _resolve_seed(parse_config(args.config), args.seed)
    cmd = args.command
    if cmd == "levels":
        lc = config.levels
        res = level_diagram(config.system_params(), config.dipole_geometry(),
                            np.linspace(lc.b_min, lc.b_max, lc.n))
        res.meta.update(config=config.digest(), seed=config.seed)
        print(f"{res.y.shape[1]} levels over {lc.n} fields, {lc.b_min}-{lc.b_max} G", file=out)
    elif cmd == "field-sweep":
        res = ex.field_sweep(config)
        dips = ex.find_dips(res, 3)
        print("dips at " + ", ".join(f"{d:.2f} G" for d in dips), file=out)
    elif cmd == "esr":
        res = ex.esr_sweep(config)
        P, fit = ex.measure_polarization(res)
        print(f"lines at {fit['c1']:.3f} and {fit['c2']:.3f} MHz, "
              f"amplitudes {fit['a1']:.4g} / {fit['a2']:.4g}, P = {P:.4f}", file=out)
        if fit.unreliable:
            print("warning: dips overlap, polarization unreliable", file=out)
    elif cmd == "esr-map":
        maps = ex.esr_field_map(config)
        if args.out:
            write_table(args.out, ["B (G)", "f - f0 (MHz)", "dI_PL (counts/us)"],
                        ex.map_rows(maps),
                        {"config": config.digest(), "seed": config.seed, "experiment": "esr-map"})
        print(f"{len(maps)} fields x {len(maps[0])} frequencies", file=out)
        return 0
    elif cmd == "power-sweep":
        res = ex.power_sweep(config)
        for p, pol, bad in zip(res.x, res.y, res.meta["unreliable"]):
            print(f"{p:8.1f} uW  P = {pol:.4f}{'  (unreliable fit)' if bad else ''}", file=out)
    elif cmd == "pump-probe":
        res, fit = ex.pump_probe(config)
        print(f"T1 = {fit['t1']:.3f} +/- {fit.stderr['t1']:.3f} us, "
              f"P(0) = {fit['y0']:.4f}, P(inf) = {fit['y_inf']:.4f}", file=out)
        if not fit.converged:
            raise RuntimeError("T1 fit did not converge")
    if args.out:
        write_csv(res, args.out)
    return 0


def _run_fit(args, out):
    data = read_csv(args.data)
    if data.y.ndim != 1:
        raise FitError("fit needs a two-column file")
    if args.model == "exp-decay":
        fit = fit_exp_decay(data.x, data.y)
    else:
        fit = fit_double_lorentzian(data.x, data.y)
    _print_fit(fit, out)
    if args.out:
        from .fitting import double_lorentzian, exp_decay
        model = exp_decay if args.model == "exp-decay" else double_lorentzian
        write_table(args.out, [data.x_label, "model"],
                    zip(data.x, model(data.x, *fit.params.values())),
                    {"model": fit.model, **fit.params})
    return 0 if fit.converged else 2


def run_cli(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=err)
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    try:
        if args.command == "fit":
            return _run_fit(args, out)
        return _run_sim(args, out)
    except (ConfigError, ValueError) as e:
        if isinstance(e, FitError):
            print(f"error: {e}", file=err)
            return 2
        print(f"config error: {e}", file=err)
        return 1
    except RUNTIME_ERRORS as e:
        print(f"runtime error: {e}", file=err)
        return 2


def main():
    sys.exit(run_cli())
