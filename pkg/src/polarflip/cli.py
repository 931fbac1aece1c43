"""Command-line interface.

Subcommands: construct, profile, simulate, sweep-omega, sweep-crc,
sweep-tmax. Option precedence is flags > TOML config file > defaults.
Exit codes: 0 success, 2 usage/validation error, 3 insufficient data.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .code import (DimensionError, construct_code, load_construction,
                   save_construction)
from .flip import CriticalSet
from .profiler import (InsufficientDataError, derive_critical_set, profile_e1,
                       sweep_crc, sweep_threshold, sweep_tmax)
from .simulate import DecoderConfig, StopRule, run_campaign

USAGE_ERROR = 2
INSUFFICIENT_DATA = 3


class CliError(Exception):
    """Validation failure that should exit with the usage code."""


def parse_grid(text: str) -> list:
    """Parse '0:2.5:25' (start:step:stop, inclusive) or a comma list."""
    text = text.strip()
    if not text:
        raise CliError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError(f"grid must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise CliError(f"bad grid bounds {text!r}")
        n = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    return [float(p) for p in text.split(",")]


def _load_config(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _merged(args, command: str, defaults: dict) -> dict:
    """flags > [command] table > top-level table > built-in defaults."""
    cfg = {}
    if getattr(args, "config", None):
        doc = _load_config(args.config)
        cfg = {k: v for k, v in doc.items() if not isinstance(v, dict)}
        cfg.update(doc.get(command, {}))
    out = {}
    for key, default in defaults.items():
        val = getattr(args, key, None)
        if val is None:
            val = cfg.get(key, None if default is REQUIRED else default)
        if val is None and default is REQUIRED:
            raise CliError(f"missing required option --{key.replace('_', '-')}")
        out[key] = val
    return out


REQUIRED = object()


def _spec_from(opts) -> "PolarCodeSpec":
    if opts.get("code"):
        return load_construction(opts["code"])
    if opts.get("n") is None or opts.get("k") is None:
        raise CliError("provide either --code or both --n and --k")
    return construct_code(int(opts["n"]), int(opts["k"]), int(opts["crc"]),
                          float(opts["design_ebn0"]))


def _add_code_opts(p, need_code_file=False):
    p.add_argument("--code", help="construction JSON from `construct`")
    p.add_argument("--n", type=int, help="block length N (power of two)")
    p.add_argument("--k", type=int, help="information bits K")
    p.add_argument("--crc", type=int, help="CRC remainder length C")
    p.add_argument("--design-ebn0", type=float, dest="design_ebn0",
                   help="construction design point, dB")


def cmd_construct(args) -> int:
    opts = _merged(args, "construct", dict(
        n=REQUIRED, k=REQUIRED, crc=0, design_ebn0=2.5,
        output="construction.json"))
    spec = construct_code(int(opts["n"]), int(opts["k"]), int(opts["crc"]),
                          float(opts["design_ebn0"]))
    save_construction(spec, opts["output"])
    print(f"wrote {opts['output']}: PC({spec.N},{spec.K}) C={spec.C} "
          f"design_ebn0={spec.design_ebn0} dB")
    return 0


def cmd_profile(args) -> int:
    opts = _merged(args, "profile", dict(
        code=None, n=None, k=None, crc=0, design_ebn0=2.5,
        ebn0=REQUIRED, gamma=0.9999, min_events=2000, max_frames=10_000_000,
        seed=1, profile_output="e1_profile.csv",
        critical_set_output="critical_set.json"))
    gamma = float(opts["gamma"])
    if not 0 < gamma <= 1:
        raise CliError(f"gamma must be in (0, 1], got {gamma}")
    spec = _spec_from(opts)
    profile = profile_e1(spec, float(opts["ebn0"]),
                         min_events=int(opts["min_events"]),
                         max_frames=int(opts["max_frames"]),
                         seed=int(opts["seed"]))
    cs = derive_critical_set(profile.f_e1, gamma,
                             source_ebn0=float(opts["ebn0"]))
    profile.save_csv(opts["profile_output"])
    cs.save(opts["critical_set_output"], spec)
    print(f"profiled {profile.n_frames} frames, {profile.n_failures} failures; "
          f"critical set size {len(cs)} -> {opts['critical_set_output']}")
    if not profile.meets_target:
        print(f"warning: only {profile.n_failures} failures "
              f"(target {profile.target_events})", file=sys.stderr)
    return 0


def _decoder_configs(opts) -> list:
    names = opts["decoder"]
    if isinstance(names, str):
        names = [names]
    cs = CriticalSet.load(opts["critical_set"]) if opts.get("critical_set") \
        else None
    configs = []
    for name in names:
        if name in ("tscf", "fis", "eis") and cs is None:
            raise CliError(f"decoder {name} requires --critical-set")
        configs.append(DecoderConfig(
            kind=name, t_max=int(opts["tmax"]) if name != "sc" else 1,
            omega=float(opts["omega"]), critical_set=cs, label=name))
    return configs


def cmd_simulate(args) -> int:
    opts = _merged(args, "simulate", dict(
        code=None, n=None, k=None, crc=0, design_ebn0=2.5,
        decoder=REQUIRED, tmax=10, omega=0.0, critical_set=None,
        ebn0=REQUIRED, target_errors=200, max_frames=5_000_000, seed=1,
        workers=1, output="results.csv"))
    spec = _spec_from(opts)
    ebn0_list = parse_grid(str(opts["ebn0"]))
    report = run_campaign(spec, _decoder_configs(opts), ebn0_list,
                          stop=StopRule(int(opts["target_errors"]),
                                        int(opts["max_frames"])),
                          seed=int(opts["seed"]), workers=int(opts["workers"]))
    report.to_csv(opts["output"])
    print(f"wrote {opts['output']} ({len(report.rows)} rows)")
    return 0


def cmd_sweep_omega(args) -> int:
    opts = _merged(args, "sweep_omega", dict(
        code=None, n=None, k=None, crc=0, design_ebn0=2.5,
        critical_set=REQUIRED, ebn0=REQUIRED, omega_grid="0:2.5:25", tmax=10,
        frames=100_000, seed=1, output="sweep_omega.csv"))
    spec = _spec_from(opts)
    cs = CriticalSet.load(opts["critical_set"])
    sweep = sweep_threshold(spec, cs, parse_grid(str(opts["ebn0"])),
                            parse_grid(str(opts["omega_grid"])),
                            int(opts["tmax"]), int(opts["frames"]),
                            seed=int(opts["seed"]))
    sweep.save_csv(opts["output"])
    for pi, ebn0 in enumerate(sweep.ebn0_list):
        print(f"ebn0={ebn0:g} dB: best omega {sweep.best_omega(pi):g}")
    return 0


def cmd_sweep_crc(args) -> int:
    opts = _merged(args, "sweep_crc", dict(
        n=REQUIRED, k=REQUIRED, crc_list=REQUIRED, ebn0=REQUIRED, tmax=10,
        design_ebn0=2.5, target_errors=100, max_frames=1_000_000, seed=1,
        workers=1, output="sweep_crc.csv"))
    c_list = [int(c) for c in str(opts["crc_list"]).split(",") if c.strip()]
    if not c_list:
        raise CliError("empty CRC list")
    sweep = sweep_crc(int(opts["n"]), int(opts["k"]), c_list,
                      parse_grid(str(opts["ebn0"])), int(opts["tmax"]),
                      StopRule(int(opts["target_errors"]),
                               int(opts["max_frames"])),
                      design_ebn0=float(opts["design_ebn0"]),
                      seed=int(opts["seed"]), workers=int(opts["workers"]))
    sweep.save_csv(opts["output"])
    for pi, ebn0 in enumerate(sweep.ebn0_list):
        print(f"ebn0={ebn0:g} dB: best C {sweep.best_c(pi)}")
    return 0


def cmd_sweep_tmax(args) -> int:
    opts = _merged(args, "sweep_tmax", dict(
        code=None, n=None, k=None, crc=0, design_ebn0=2.5,
        critical_set=REQUIRED, omega=REQUIRED, ebn0=REQUIRED, tmax_grid="1:1:20",
        frames=100_000, seed=1, output="sweep_tmax.csv"))
    spec = _spec_from(opts)
    cs = CriticalSet.load(opts["critical_set"])
    grid = [int(t) for t in parse_grid(str(opts["tmax_grid"]))]
    sweep = sweep_tmax(spec, cs, float(opts["omega"]), float(opts["ebn0"]),
                       grid, int(opts["frames"]), seed=int(opts["seed"]))
    sweep.save_csv(opts["output"])
    print(f"wrote {opts['output']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarflip",
        description="Polar code SC-Flip / TSCF simulation toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build and persist a code construction")
    _add_code_opts(p)
    p.add_argument("--output", "-o")
    p.add_argument("--config")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("profile", help="estimate the first-error distribution "
                       "and derive a critical set")
    _add_code_opts(p)
    p.add_argument("--ebn0", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--min-events", type=int, dest="min_events")
    p.add_argument("--max-frames", type=int, dest="max_frames")
    p.add_argument("--seed", type=int)
    p.add_argument("--profile-output", dest="profile_output")
    p.add_argument("--critical-set-output", dest="critical_set_output")
    p.add_argument("--config")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("simulate", help="Monte Carlo FER campaign")
    _add_code_opts(p)
    p.add_argument("--decoder", action="append",
                   choices=["sc", "scflip", "tscf", "fis", "eis", "sco1"])
    p.add_argument("--tmax", type=int)
    p.add_argument("--omega", type=float)
    p.add_argument("--critical-set", dest="critical_set")
    p.add_argument("--ebn0", help="comma list or start:step:stop, dB")
    p.add_argument("--target-errors", type=int, dest="target_errors")
    p.add_argument("--max-frames", type=int, dest="max_frames")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", "-o")
    p.add_argument("--config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-omega", help="TSCF threshold sweep")
    _add_code_opts(p)
    p.add_argument("--critical-set", dest="critical_set")
    p.add_argument("--ebn0")
    p.add_argument("--omega-grid", dest="omega_grid")
    p.add_argument("--tmax", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o")
    p.add_argument("--config")
    p.set_defaults(func=cmd_sweep_omega)

    p = sub.add_parser("sweep-crc", help="SC-Flip FER vs CRC length")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--crc-list", dest="crc_list")
    p.add_argument("--ebn0")
    p.add_argument("--tmax", type=int)
    p.add_argument("--design-ebn0", type=float, dest="design_ebn0")
    p.add_argument("--target-errors", type=int, dest="target_errors")
    p.add_argument("--max-frames", type=int, dest="max_frames")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", "-o")
    p.add_argument("--config")
    p.set_defaults(func=cmd_sweep_crc)

    p = sub.add_parser("sweep-tmax", help="FER vs iteration budget for "
                       "SC-Flip and TSCF")
    _add_code_opts(p)
    p.add_argument("--critical-set", dest="critical_set")
    p.add_argument("--omega", type=float)
    p.add_argument("--ebn0", type=float)
    p.add_argument("--tmax-grid", dest="tmax_grid")
    p.add_argument("--frames", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o")
    p.add_argument("--config")
    p.set_defaults(func=cmd_sweep_tmax)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INSUFFICIENT_DATA
    except (CliError, DimensionError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
