"""Command-line driver.

Subcommands:
    pattern        analytic coincidence surface
    simulate       Monte Carlo coincidence histogram with singles
    analyze        cuts, fringe fits and stripe tilt (plus Monte Carlo when
                   --events is given)
    oracle-check   compare the analytic surface against the brute-force
                   exact-path computation
    reproduce-fig4 run all four bundled presets end to end
    presets        list the bundled presets

Configuration is merged from, in increasing priority: a preset (--preset),
a config file (--config), then individual flags.

Exit codes: 0 success, 1 configuration error, 2 physics/validation failure,
3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import (ConfigError, PRESETS, load_preset, manifest_from_items,
                     parse_config_text, preset_items)
from .runner import run

_COMMAND_OUTPUTS = {
    "pattern": ("surface", "summary"),
    "simulate": ("histogram", "summary"),
    "analyze": ("surface", "cuts", "fits", "tilt", "summary"),
    "oracle-check": ("oracle-check", "summary"),
}

_DEFAULT_EVENTS = 1_000_000


class _Parser(argparse.ArgumentParser):
    # Usage mistakes are configuration errors (exit 1), not argparse's exit 2.
    def error(self, message):
        raise ConfigError(message)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", help="bundled preset name (see 'presets')")
    parser.add_argument("--config", help="config file path")
    parser.add_argument("--seed", type=int, help="sampler seed (64-bit)")
    parser.add_argument("--events", type=int, help="Monte Carlo event count")
    parser.add_argument("--bins", type=int, help="bins per axis")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--no-envelope", action="store_true",
                        help="disable the finite-slit-width envelope")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biphoton",
                     description="Two-photon double-slit interference simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in [
            ("pattern", "emit the analytic coincidence surface"),
            ("simulate", "emit a Monte Carlo coincidence histogram"),
            ("analyze", "emit cuts, fringe fits and stripe tilt"),
            ("oracle-check", "validate the analytic surface against exact paths"),
            ("reproduce-fig4", "run all four bundled presets end to end")]:
        _add_common_flags(sub.add_parser(name, help=help_text))
    presets = sub.add_parser("presets", help="list bundled presets")
    presets.add_argument("action", nargs="?", default="list", choices=["list"])
    return parser


def _collect_items(args, command: str) -> dict[str, str]:
    items: dict[str, str] = {}
    if args.preset:
        items.update(preset_items(args.preset))
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        items.update(parse_config_text(path.read_text(), source=str(path)))
    if args.seed is not None:
        items["seed"] = str(args.seed)
    if args.events is not None:
        items["events"] = str(args.events)
    if args.bins is not None:
        items["bins"] = str(args.bins)
        if command == "pattern":
            items["surface_bins"] = str(args.bins)
    if args.out is not None:
        items["output_dir"] = args.out
    if args.no_envelope:
        items["envelope"] = "false"

    if command == "simulate" and "events" not in items:
        items["events"] = str(_DEFAULT_EVENTS)
    if "events" in items and command in ("analyze", "simulate"):
        items.setdefault("seed", "42")
    outputs = list(_COMMAND_OUTPUTS[command])
    if command == "analyze" and "events" in items:
        outputs.insert(1, "histogram")
    items["outputs"] = ",".join(outputs)
    # Sampler keys without events would be rejected; drop strays from presets.
    if "events" not in items:
        for key in ("seed", "bins", "poisson_noise", "chunk_size"):
            items.pop(key, None)
    return items


def _cmd_presets() -> int:
    for name in sorted(PRESETS):
        manifest = load_preset(name)
        cfg = manifest.experiment
        print(f"{name}: scheme {cfg.scheme.value}, "
              f"{cfg.lambda1 * 1e9:.0f}/{cfg.lambda2 * 1e9:.0f} nm, "
              f"z = {cfg.distance * 1e2:.1f} cm, "
              f"d = {cfg.slit_spacing * 1e6:.0f} um, "
              f"b = {cfg.slit_width * 1e6:.0f} um, "
              f"window = +/-{cfg.window_halfwidth * 1e3:.1f} mm")
    return 0


def _cmd_reproduce_fig4(args) -> int:
    base_out = Path(args.out) if args.out else Path("out") / "fig4"
    status = 0
    for name in sorted(PRESETS):
        items = preset_items(name)
        if args.config:
            path = Path(args.config)
            if not path.is_file():
                raise ConfigError(f"config file not found: {path}")
            items.update(parse_config_text(path.read_text(), source=str(path)))
        items["events"] = str(args.events if args.events is not None else _DEFAULT_EVENTS)
        items["seed"] = str(args.seed if args.seed is not None else 42)
        if args.bins is not None:
            items["bins"] = str(args.bins)
        if args.no_envelope:
            items["envelope"] = "false"
        items["output_dir"] = str(base_out / name)
        items["outputs"] = "surface,histogram,cuts,fits,tilt,summary"
        manifest = manifest_from_items(items)
        if not args.quiet:
            print(f"== {name} ==")
        status = max(status, run(manifest, quiet=args.quiet))
    return status


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "presets":
            return _cmd_presets()
        if args.command == "reproduce-fig4":
            return _cmd_reproduce_fig4(args)
        items = _collect_items(args, args.command)
        manifest = manifest_from_items(items)
        return run(manifest, quiet=args.quiet)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
