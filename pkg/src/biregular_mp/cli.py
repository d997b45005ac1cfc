"""Command-line front end.

Option precedence: JSON config file < ``SEED`` environment variable < flags.
A config file may also be a ``manifest.json`` from an earlier run, which
reproduces that run's CSV output byte for byte.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import mp_law, spectral
from .errors import ConfigError, GuardExceeded, NumericFailure
from .graphs import config_for, validate_config
from .records import write_csv, write_json
from .switching import run_chain, uniformity_report

SUBCOMMANDS = ("sample", "spectrum", "mp-eval", "uniformity", "local-law", "delocalization",
               "rigidity", "esd", "sce", "identities")
EXPERIMENTS = ("local-law", "delocalization", "rigidity", "esd", "sce", "identities")

# option name -> default; None means "unset"
OPTIONS = {
    "M": None, "N": None, "d_b": None, "d_w": None, "gamma": None,
    "seed": 0, "steps": None, "samples": None, "kernel": "mixed",
    "grid": "default", "xi": None, "epsilon": 0.0, "override_eta_floor": False,
    "kappa": 0.1, "bins": 10,
}


def version_string() -> str:
    try:
        v = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        v = "0+unknown"
    try:
        here = Path(__file__).resolve().parent
        desc = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=here,
                              capture_output=True, text=True, timeout=5)
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{v}+g{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biregular-mp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config or earlier manifest")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--workers", type=int, default=None, help="parallel sample workers")
        p.add_argument("--M", type=int)
        p.add_argument("--N", type=int)
        p.add_argument("--d_b", type=int)
        p.add_argument("--d_w", type=int)
        p.add_argument("--gamma", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--kernel", choices=("mixed", "switching"))
        p.add_argument("--grid", help="'default', 'schedule' or 'E1,E2,...;eta1,eta2,...'")
        p.add_argument("--xi", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--override-eta-floor", dest="override_eta_floor", action="store_true",
                       default=None)
        p.add_argument("--kappa", type=float)
        p.add_argument("--bins", type=int)
    return parser


def resolve(args: argparse.Namespace, environ=os.environ) -> dict:
    opts = dict(OPTIONS)
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if "resolved" in data:
            data = data["resolved"]
        unknown = set(data) - set(OPTIONS) - {"command"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        opts.update({k: v for k, v in data.items() if k in OPTIONS})
    if environ.get("SEED"):
        try:
            opts["seed"] = int(environ["SEED"])
        except ValueError as exc:
            raise ConfigError(f"SEED must be an integer, got {environ['SEED']!r}") from exc
    for k in OPTIONS:
        v = getattr(args, k, None)
        if v is not None:
            opts[k] = v
    return opts


def graph_config(opts: dict):
    M, N, d_b, d_w, gamma = (opts[k] for k in ("M", "N", "d_b", "d_w", "gamma"))
    if None not in (M, N, d_b, d_w):
        return validate_config(M, N, d_b, d_w)
    if N is not None and d_b is not None:
        if gamma is None and M is not None:
            gamma = N / M
        return config_for(N, d_b, 1.0 if gamma is None else gamma)
    raise ConfigError("give --M --N --d_b --d_w, or --N --d_b [--gamma]")


def parse_grid(text: str, N: int, xi: float) -> tuple:
    energies = [0.5, 1.0, 1.5, 2.0, 2.5]
    if text == "default":
        floor = xi ** 2 / N
        return tuple(complex(E, eta) for eta in (floor, 2 * floor) for E in energies)
    if text == "schedule":
        return ex.z_schedule(N, energies)
    try:
        e_part, eta_part = text.split(";")
        es = [float(x) for x in e_part.split(",") if x]
        etas = [float(x) for x in eta_part.split(",") if x]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}") from exc
    return tuple(complex(E, eta) for eta in etas for E in es)


def experiment_spec(opts: dict, name: str) -> ex.ExperimentSpec:
    cfg = graph_config(opts)
    xi = mp_law.ControlParams(cfg.N, cfg.d_b, cfg.N / cfg.M, opts["xi"]).xi
    grid = parse_grid(opts["grid"], cfg.N, xi) if name in ("local-law", "sce") else ()
    return ex.ExperimentSpec(
        cfg, samples=opts["samples"] or 1, seed=opts["seed"], chain_steps=opts["steps"],
        z_grid=grid, epsilon=opts["epsilon"], xi=opts["xi"],
        override_eta_floor=bool(opts["override_eta_floor"]), kernel=opts["kernel"], name=name,
    )


# -- subcommands ----------------------------------------------------------------

def cmd_sample(opts, out: Path, workers: int) -> list[Path]:
    cfg = graph_config(opts)
    steps = opts["steps"] if opts["steps"] is not None else 20 * cfg.n_edges
    graph = run_chain(cfg, steps, opts["seed"], opts["kernel"])
    path = out / "graph.json"
    path.write_text(json.dumps(graph.to_dict(), sort_keys=True) + "\n")
    return [path]


def cmd_spectrum(opts, out: Path, workers: int) -> list[Path]:
    spec = experiment_spec(opts, "spectrum")
    _, _, S = ex.sample_spectra(spec, 0)
    paths = []
    for label, data in (("X", S.X), ("small", S.small), ("large", S.large)):
        paths.append(write_csv(out / f"spectrum_{label}.csv", ("index", "eigenvalue"),
                               spectral.spectrum_rows(data)))
    xi = spec.control.xi
    grid = parse_grid(opts["grid"], spec.config.N, xi)
    rows = [spectral.stieltjes_all(S, z, with_gamma=True).csv_row() for z in grid]
    paths.append(write_csv(out / "green.csv", spectral.GreenEvaluation.CSV_HEADER, rows))
    return paths


def cmd_mp_eval(opts, out: Path, workers: int) -> list[Path]:
    gamma = opts["gamma"] if opts["gamma"] is not None else 1.0
    p = mp_law.MPParams(gamma)
    if opts["grid"] == "default":
        zs = [complex(E, eta) for eta in (1e-3, 1e-2, 1e-1, 1.0) for E in np.linspace(-1, 5, 61)]
    else:
        zs = list(parse_grid(opts["grid"], 1, 1.0))
    rows = []
    for z in zs:
        v = mp_law.m_variants(z, p)
        rows.append((z.real, z.imag, *(c for m in (v.m_inf, v.m_inf_plus, v.m_lin, v.m_lin_plus)
                                        for c in (complex(m).real, complex(m).imag))))
    header = ("re_z", "im_z", "re_m_inf", "im_m_inf", "re_m_inf_plus", "im_m_inf_plus",
              "re_m_lin", "im_m_lin", "re_m_lin_plus", "im_m_lin_plus")
    paths = [write_csv(out / "transforms.csv", header, rows)]
    x = np.linspace(0, p.lambda_plus * 1.05, 201)
    E = np.linspace(-2.2, 2.2, 201)
    paths.append(write_csv(out / "density.csv", ("x", "rho_mp", "E", "rho_linear"),
                           zip(x.tolist(), np.atleast_1d(mp_law.rho_mp(x, p)).tolist(),
                               E.tolist(), np.atleast_1d(mp_law.rho_linear(E, p)).tolist())))
    if opts["N"]:
        locs = mp_law.classical_locations(opts["N"], p)
        paths.append(write_csv(out / "classical_locations.csv", ("index", "location"),
                               ((i + 1, float(v)) for i, v in enumerate(locs))))
    return paths


def cmd_uniformity(opts, out: Path, workers: int) -> list[Path]:
    cfg = graph_config(opts)
    steps = opts["steps"] if opts["steps"] is not None else 10_000
    samples = opts["samples"] or 10_000
    rep = uniformity_report(cfg, steps, samples, opts["seed"], opts["kernel"])
    return [write_csv(out / "uniformity.csv", rep.CSV_HEADER, [rep.csv_row()])]


def cmd_experiment(opts, out: Path, workers: int, name: str) -> list[Path]:
    spec = experiment_spec(opts, name)
    if name == "local-law":
        res = ex.local_law_run(spec, workers)
    elif name == "delocalization":
        res = ex.delocalization_run(spec, workers)
    elif name == "rigidity":
        res = ex.rigidity_run(spec, opts["kappa"], workers)
    elif name == "esd":
        res = ex.esd_compare_run(spec, ex.default_intervals(spec.gamma, opts["bins"]), workers)
    elif name == "sce":
        res = ex.sce_stability_run(spec, workers)
    else:
        res = ex.identities_run(spec, workers)
    return [write_csv(out / "records.csv", ex.RunRecord.CSV_HEADER, res.rows()),
            write_json(out / "summary.json", res.summary())]


def run(argv=None, environ=os.environ) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        opts = resolve(args, environ)
        out = args.out if args.out is not None else Path("runs") / args.command
        out.mkdir(parents=True, exist_ok=True)
        workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
        if args.command in EXPERIMENTS:
            paths = cmd_experiment(opts, out, workers, args.command)
        else:
            handler = {"sample": cmd_sample, "spectrum": cmd_spectrum, "mp-eval": cmd_mp_eval,
                       "uniformity": cmd_uniformity}[args.command]
            paths = handler(opts, out, workers)
        manifest = {
            "command": args.command,
            "resolved": {"command": args.command, **opts},
            "version": version_string(),
            "wall_time_s": time.perf_counter() - start,
            "outputs": [p.name for p in paths],
        }
        write_json(out / "manifest.json", manifest)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except GuardExceeded as exc:
        print(f"guard exceeded: {exc}", file=sys.stderr)
        return 4
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
