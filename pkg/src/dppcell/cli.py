"""Command-line interface.

Every artifact-writing subcommand writes deterministic CSV files and a
``manifest.json`` into ``--out``; passing that manifest back through
``--config`` repeats the run with identical outputs.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical
non-convergence (outputs are still written, with unreliable rows flagged).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analytic.interference import (
    Association,
    InterferenceQuery,
    laplace_interference,
    mean_interference_fixed,
    mean_interference_nearest,
)
from .analytic.pathloss import PathLossModel
from .analytic.sir import parse_grid, sir_ccdf, sir_ccdf_diag_approx
from .analytic.spatial import empty_space_fn, nearest_neighbor_fn
from .curves import CurveNonConvergence, CurveTable
from .data_io import PRESETS, DataError, load_config, load_pattern, preset, preset_window
from .kernels import Family, KernelModel, existence_check, repulsiveness_mu
from .numerics.series import SeriesNonConvergence
from .parallel import default_threads
from .simulation import (
    HexGrid,
    SimConfig,
    Window,
    analytic_k,
    build_envelope,
    ripley_k_single,
    run_coverage,
    sample_many,
    sample_pattern,
)

__all__ = ["main", "build_parser"]

log = logging.getLogger("dppcell")

DEFAULT_SEED = 20161
EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE = 0, 2, 3
# run-control keys that are not echoed as part of the reproducible configuration
_NOT_ECHOED = {"config", "func", "out", "quiet", "threads"}


class ConfigError(ValueError):
    """Inconsistent or missing command-line configuration."""


class NonConvergence(RuntimeError):
    """Raised after outputs are written when some rows failed to converge."""


# ----------------------------------------------------------------------------
# argument parsing


def _add_model_args(p, allow_hex=False):
    g = p.add_argument_group("model")
    g.add_argument("--preset", choices=sorted(PRESETS), help="built-in fitted model")
    fams = "gauss, cauchy, gengamma, poisson" + (", hex" if allow_hex else "")
    g.add_argument("--model", help=f"kernel family ({fams})")
    g.add_argument("--lambda", dest="lam", type=float, help="intensity per km^2")
    g.add_argument("--alpha", type=float, help="scale parameter in km")
    g.add_argument("--nu", type=float, help="shape parameter")
    if allow_hex:
        g.add_argument("--eta", type=float, default=0.5, help="hex perturbation fraction (default 0.5)")


def _add_run_args(p, seeded=False):
    p.add_argument("--config", help="TOML/JSON config or a manifest.json to replay")
    p.add_argument("--out", default="dppcell-out", help="output directory (default dppcell-out)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: available cores)")
    p.add_argument("--quiet", action="store_true")
    if seeded:
        p.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")


def _add_series_args(p, qmc=2**13):
    p.add_argument("--qmc", type=int, default=qmc, help="QMC points per series order (power of two)")
    p.add_argument("--tail-tol", type=float, default=1e-3, help="series truncation tolerance")
    p.add_argument("--nmax", type=int, default=20, help="maximum series order")


def _add_radius_args(p, rmax=2.0, rstep=0.05):
    p.add_argument("--rmax", type=float, default=rmax, help=f"largest radius in km (default {rmax})")
    p.add_argument("--rstep", type=float, default=rstep, help=f"radius spacing in km (default {rstep})")


def _add_pathloss_args(p, kind="pure"):
    p.add_argument("--beta", type=float, default=4.0, help="path-loss exponent (default 4)")
    p.add_argument("--pathloss", choices=["pure", "bounded"], default=kind,
                   help=f"r^-beta or min(1, r^-beta) (default {kind})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dppcell", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dppcell {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    presets_help = ", ".join(PRESETS)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    for name, func, text in (("esf", cmd_esf, "empty space function F(r)"),
                             ("nnf", cmd_nnf, "nearest-neighbour distance distribution D(r)")):
        p = add(name, func, text)
        _add_model_args(p)
        _add_radius_args(p)
        _add_series_args(p)
        p.add_argument("--method", choices=["series", "fredholm"], default="series")
        _add_run_args(p)

    p = add("kfn", cmd_kfn, "Ripley K function (model, and optionally an observed pattern)")
    _add_model_args(p)
    _add_radius_args(p, 3.0, 0.05)
    p.add_argument("--pattern", help="CSV with x_km,y_km columns for an empirical K")
    p.add_argument("--window", help="observation window: W,H or x0,x1,y0,y1 (default: bounding box)")
    _add_run_args(p)

    p = add("mean-interference", cmd_mean_interference, "mean interference at the typical user")
    _add_model_args(p)
    _add_pathloss_args(p, "bounded")
    p.add_argument("--r0", default="0.5", help="serving distance(s): list a,b,c or start:step:stop")
    p.add_argument("--power", type=float, default=1.0)
    p.add_argument("--association", choices=["fixed", "nearest"], default="nearest")
    p.add_argument("--method", choices=["series", "fredholm", "auto", "closed", "quadrature"], default=None,
                   help="nearest: series|fredholm (default series); fixed: auto|closed|quadrature")
    _add_series_args(p)
    _add_run_args(p)

    p = add("laplace", cmd_laplace, "Laplace transform of the interference, nearest-BS association")
    _add_model_args(p)
    _add_pathloss_args(p)
    p.add_argument("--r0", default="0.5", help="serving distance(s)")
    p.add_argument("--s", default="0.1,1,10", help="transform variable(s)")
    p.add_argument("--power", type=float, default=1.0)
    p.add_argument("--method", choices=["series", "fredholm"], default="fredholm")
    _add_series_args(p)
    _add_run_args(p)

    for name, func, text in (("sir", cmd_sir, "coverage probability P(SIR > T)"),
                             ("sir-approx", cmd_sir_approx, "coverage under the diagonal approximation")):
        p = add(name, func, text)
        _add_model_args(p)
        p.add_argument("--beta", type=float, default=4.0, help="path-loss exponent (default 4)")
        p.add_argument("--tgrid", default="-10:1:20", help="thresholds in dB, start:step:stop (default -10:1:20)")
        p.add_argument("--nodes", type=int, default=32, help="quadrature nodes over the serving distance")
        if name == "sir":
            p.add_argument("--method", choices=["fredholm", "series"], default="fredholm")
            _add_series_args(p)
        _add_run_args(p)

    p = add("simulate", cmd_simulate, "draw point patterns")
    _add_model_args(p, allow_hex=True)
    p.add_argument("--window", help="W,H or x0,x1,y0,y1 in km (default: preset window or 16,16)")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--margin", type=float, default=None, help="sampling buffer in km")
    _add_run_args(p, seeded=True)

    p = add("coverage", cmd_coverage, "Monte Carlo coverage at the window centre")
    _add_model_args(p, allow_hex=True)
    p.add_argument("--window", help="W,H or x0,x1,y0,y1 in km (default: preset window or 16,16)")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--fades", type=int, default=64, help="fading draws per replication")
    p.add_argument("--beta", type=float, default=4.0)
    p.add_argument("--tgrid", default="-10:1:20")
    _add_run_args(p, seeded=True)

    p = add("envelope-test", cmd_envelope_test, "K-function envelope test of a pattern against a model")
    _add_model_args(p, allow_hex=True)
    p.add_argument("--pattern", help="observed CSV (default: one pattern simulated from the model)")
    p.add_argument("--window", help="W,H or x0,x1,y0,y1 in km")
    p.add_argument("--reps", type=int, default=1000)
    _add_radius_args(p, 3.0, 0.1)
    _add_run_args(p, seeded=True)

    p = add("mu", cmd_mu, "repulsiveness measure mu")
    _add_model_args(p)
    p.add_argument("--config", help="TOML/JSON model config")
    p = add("presets", cmd_presets, f"list built-in models ({presets_help})")
    p = add("check-existence", cmd_check_existence, "check the spectral existence condition")
    _add_model_args(p)
    p.add_argument("--config", help="TOML/JSON model config")
    return parser


# ----------------------------------------------------------------------------
# configuration


def _normalise_config(cfg: dict) -> tuple[Optional[str], dict]:
    """Flatten a config file or manifest into ``(subcommand, argparse defaults)``."""
    sub = None
    if "subcommand" in cfg and isinstance(cfg.get("config"), dict):
        sub, cfg = cfg["subcommand"], dict(cfg["config"])
    else:
        cfg = dict(cfg)
        sub = cfg.pop("subcommand", None)
    model = cfg.pop("model", None)
    if isinstance(model, dict):
        for k, v in model.items():
            cfg.setdefault({"family": "model", "lambda": "lam"}.get(k, k), v)
    elif model is not None:
        cfg["model"] = model
    if "lambda" in cfg:
        cfg["lam"] = cfg.pop("lambda")
    if "family" in cfg:
        cfg["model"] = cfg.pop("family")
    return sub, {k.replace("-", "_"): v for k, v in cfg.items()}


_GRID_FLAGS = ("--tgrid", "--r0", "--s")


def _join_negative_values(argv):
    # let "--tgrid -10:1:20" through; argparse would read the value as a flag
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _GRID_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2].isdigit():
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _parse(argv):
    argv = _join_negative_values(argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        sub, defaults = _normalise_config(load_config(known.config))
        names = set(parser._subparsers._group_actions[0].choices)
        if sub and not any(a in names for a in argv):
            argv = [sub] + list(argv)
        chosen = next((a for a in argv if a in names), None)
        if chosen is None:
            raise ConfigError("no subcommand given")
        subparser = parser._subparsers._group_actions[0].choices[chosen]
        dests = {a.dest for a in subparser._actions}
        unknown = sorted(set(defaults) - dests - {"seed"})
        if unknown:
            raise ConfigError(f"unknown config keys for {chosen}: {', '.join(unknown)}")
        subparser.set_defaults(**{k: v for k, v in defaults.items() if k in dests})
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_help(sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    return args


def _model(args, allow_hex=False):
    if getattr(args, "preset", None):
        return preset(args.preset)
    if not args.model:
        raise ConfigError("specify --preset or --model (with --lambda, --alpha, --nu as needed)")
    if args.lam is None:
        raise ConfigError("--lambda is required with --model")
    if args.model.strip().lower() == "hex":
        if not allow_hex:
            raise ConfigError("the hex model is only available for simulate, coverage and envelope-test")
        return HexGrid.from_intensity(args.lam, args.eta)
    fam = Family.parse(args.model)
    if fam is not Family.POISSON and args.alpha is None:
        raise ConfigError(f"--alpha is required for the {fam.value} family")
    if fam in (Family.CAUCHY, Family.GENGAMMA) and args.nu is None:
        raise ConfigError(f"--nu is required for the {fam.value} family")
    return KernelModel(fam, args.lam, args.alpha, args.nu)


def _window(args):
    if getattr(args, "window", None):
        return Window.parse(args.window)
    if getattr(args, "preset", None):
        return preset_window(args.preset)
    return Window.square(16.0)


def _r_grid(args) -> np.ndarray:
    if not (args.rstep > 0 and args.rmax > 0):
        raise ConfigError("--rmax and --rstep must be positive")
    n = int(round(args.rmax / args.rstep))
    return np.arange(0, n + 1) * args.rstep


def _values(text) -> np.ndarray:
    if isinstance(text, (int, float)):
        return np.array([float(text)])
    if isinstance(text, (list, tuple)):
        return np.array([float(v) for v in text])
    if ":" in str(text):
        return parse_grid(text)
    return np.array([float(v) for v in str(text).split(",") if v.strip()])


def _threads(args):
    return default_threads() if args.threads is None else max(1, args.threads)


def _seed(args) -> int:
    if args.seed is None:
        args.seed = DEFAULT_SEED
        print(f"seed: {DEFAULT_SEED} (default)", file=sys.stderr)
    return args.seed


# ----------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


class _Run:
    """Collects outputs and writes the manifest."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.flags = []

    def path(self, name) -> Path:
        self.outputs.append(name)
        return self.out / name

    def curve(self, name, curve: CurveTable) -> None:
        curve.to_csv(self.path(name))
        bad = curve.abscissa[~curve.reliable]
        if bad.size:
            self.flags.append({"output": name, "unreliable_abscissa": [float(x) for x in bad]})

    def finish(self, status="ok") -> None:
        config = {k: v for k, v in sorted(vars(self.args).items()) if k not in _NOT_ECHOED and k != "subcommand"}
        manifest = {
            "subcommand": self.args.subcommand,
            "config": config,
            "seed": config.get("seed"),
            "version": __version__,
            "outputs": self.outputs,
            "status": status,
            "flags": self.flags,
        }
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _say(args, text) -> None:
    if not getattr(args, "quiet", False):
        print(text)


# ----------------------------------------------------------------------------
# subcommands


def _void_cmd(args, fn, name):
    model = _model(args)
    run = _Run(args)
    try:
        curve = fn(model, _r_grid(args), method=args.method, qmc_points=args.qmc, tail_tol=args.tail_tol,
                   n_max=args.nmax, threads=_threads(args))
        status = "ok"
    except CurveNonConvergence as exc:
        curve, status = exc.partial, "non_converged"
    run.curve(f"{name}.csv", curve)
    run.finish(status)
    _say(args, f"wrote {run.out / (name + '.csv')}")
    if status != "ok":
        raise NonConvergence(f"{name}: some radii did not converge (flagged in the CSV)")


def cmd_esf(args):
    _void_cmd(args, empty_space_fn, "esf")


def cmd_nnf(args):
    _void_cmd(args, nearest_neighbor_fn, "nnf")


def cmd_kfn(args):
    model = _model(args)
    r = _r_grid(args)
    cols = {"r": r, "K_model": analytic_k(model, r), "K_poisson": math.pi * r**2}
    if args.pattern:
        ds = load_pattern(args.pattern, args.window)
        cols["K_empirical"] = ripley_k_single(ds.pattern, r)
    run = _Run(args)
    _write_rows(run.path("kfn.csv"), list(cols), zip(*cols.values()))
    run.finish()
    _say(args, f"wrote {run.out / 'kfn.csv'}")


def _pathloss(args):
    return PathLossModel(args.pathloss, args.beta)


def cmd_mean_interference(args):
    model = _model(args)
    pl = _pathloss(args)
    rows, failed = [], False
    for r0 in _values(args.r0):
        q = InterferenceQuery(model, pl, args.power, float(r0), Association(args.association))
        ok = True
        if q.association is Association.FIXED:
            val = mean_interference_fixed(q, args.method or "auto")
        else:
            try:
                val = mean_interference_nearest(q, method=args.method or "series", qmc_points=args.qmc,
                                                tail_tol=args.tail_tol, n_max=args.nmax)
            except SeriesNonConvergence as exc:
                val, ok, failed = exc.partial.value, False, True
        rows.append((float(r0), val, ok))
        _say(args, f"r0={r0:g}  mean interference={val:.6g}" + ("" if ok else "  (not converged)"))
    run = _Run(args)
    _write_rows(run.path("mean_interference.csv"), ["r0", "value", "converged"], rows)
    run.finish("non_converged" if failed else "ok")
    if failed:
        raise NonConvergence("mean interference: some series did not converge")


def cmd_laplace(args):
    model = _model(args)
    pl = _pathloss(args)
    rows, failed = [], False
    for r0 in _values(args.r0):
        q = InterferenceQuery(model, pl, args.power, float(r0))
        for s in _values(args.s):
            ok = True
            try:
                val = laplace_interference(q, float(s), method=args.method, qmc_points=args.qmc,
                                           tail_tol=args.tail_tol, n_max=args.nmax)
            except SeriesNonConvergence as exc:
                val, ok, failed = math.nan, False, True
            rows.append((float(r0), float(s), val, ok))
    run = _Run(args)
    _write_rows(run.path("laplace.csv"), ["r0", "s", "value", "converged"], rows)
    run.finish("non_converged" if failed else "ok")
    _say(args, f"wrote {run.out / 'laplace.csv'}")
    if failed:
        raise NonConvergence("laplace: some series did not converge")


def cmd_sir(args):
    model = _model(args)
    pl = PathLossModel.pure(args.beta)
    curve = sir_ccdf(model, pl, parse_grid(args.tgrid), method=args.method, nodes=args.nodes,
                     qmc_points=args.qmc, tail_tol=args.tail_tol, n_max=args.nmax, threads=_threads(args))
    run = _Run(args)
    run.curve("sir.csv", curve)
    status = "ok" if curve.reliable.all() else "non_converged"
    run.finish(status)
    _say(args, f"wrote {run.out / 'sir.csv'}")
    if status != "ok":
        raise NonConvergence("sir: some thresholds relied on interpolated or unreliable values")


def cmd_sir_approx(args):
    model = _model(args)
    curve = sir_ccdf_diag_approx(model, PathLossModel.pure(args.beta), parse_grid(args.tgrid), nodes=args.nodes)
    run = _Run(args)
    run.curve("sir_approx.csv", curve)
    run.finish()
    _say(args, f"wrote {run.out / 'sir_approx.csv'}")


def _sim_config(args, reps):
    return SimConfig(_model(args, allow_hex=True), _window(args), replications=reps, rng_seed=_seed(args),
                     margin=getattr(args, "margin", None))


def cmd_simulate(args):
    cfg = _sim_config(args, args.reps)
    pats = sample_many(cfg, _threads(args))
    run = _Run(args)
    width = max(4, len(str(args.reps - 1)))
    for i, pat in enumerate(pats):
        pat.to_csv(run.path(f"pattern_{i:0{width}d}.csv"))
    _write_rows(run.path("simulate.csv"), ["replication", "points", "intensity"],
                [(i, len(p), p.intensity) for i, p in enumerate(pats)])
    run.finish()
    _say(args, f"wrote {len(pats)} patterns to {run.out}")


def cmd_coverage(args):
    cfg = _sim_config(args, args.reps)
    res = run_coverage(cfg, PathLossModel.pure(args.beta), parse_grid(args.tgrid), n_fades=args.fades,
                       threads=_threads(args))
    run = _Run(args)
    res.to_csv(run.path("coverage.csv"))
    run.finish()
    _say(args, f"wrote {run.out / 'coverage.csv'}")


def cmd_envelope_test(args):
    model = _model(args, allow_hex=True)
    r = _r_grid(args)
    seed = _seed(args)
    if args.pattern:
        observed = load_pattern(args.pattern, args.window).pattern
        win = observed.window
    else:
        win = _window(args)
        observed = sample_pattern(SimConfig(model, win, rng_seed=seed + 1), 0)
    cfg = SimConfig(model, win, replications=args.reps, rng_seed=seed)
    env = build_envelope(sample_many(cfg, _threads(args)), r)
    res = env.contains(r, ripley_k_single(observed, r))
    run = _Run(args)
    _write_rows(run.path("envelope.csv"), ["r", "K_observed", "K_low", "K_high", "outside"],
                zip(r, ripley_k_single(observed, r), env.low, env.high, res.outside))
    run.finish()
    _say(args, f"envelope test: {'PASS' if res.passed else 'FAIL'} (exceedance fraction {res.exceedance:.4f})")


def cmd_mu(args):
    model = _model(args)
    print(f"{repulsiveness_mu(model).mu:.4f}")


def cmd_presets(args):
    print(f"{'name':<18}{'family':<10}{'lambda':>8}{'alpha':>8}{'nu':>8}{'mu':>8}")
    for name in PRESETS:
        m = preset(name)
        nu = "" if m.nu is None else f"{m.nu:g}"
        print(f"{name:<18}{m.family.value:<10}{m.lam:>8g}{m.alpha:>8g}{nu:>8}{repulsiveness_mu(m).mu:>8.4f}")


def cmd_check_existence(args):
    if getattr(args, "preset", None):
        fam, lam, alpha, nu = PRESETS[args.preset]
    else:
        if not args.model or args.lam is None:
            raise ConfigError("specify --preset or --model with --lambda, --alpha, --nu")
        fam, lam, alpha, nu = Family.parse(args.model), args.lam, args.alpha, args.nu
    rep = existence_check(fam, lam, alpha, nu)
    print(f"{'OK' if rep.ok else 'FAIL'}: {rep.message}")
    print(f"sup phi (closed form) = {rep.max_spectral:.6g}, sup phi (grid) = {rep.grid_max_spectral:.6g}")
    if not rep.ok:
        raise ConfigError("existence condition violated")


# ----------------------------------------------------------------------------


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    except (ConfigError, DataError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.func(args)
    except NonConvergence as exc:
        print(f"warning: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (SeriesNonConvergence, CurveNonConvergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ConfigError, DataError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
