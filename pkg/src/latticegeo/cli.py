"""Command-line front end.

Exit codes: 0 success, 2 invalid configuration, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import ScenarioConfig, apply_overrides, config_from_mapping, parse_value
from .errors import ConfigError, DivergenceError
from .presets import list_presets, load_preset
from .runner import load_config_file, resolve_output_dir, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

log = logging.getLogger("latticegeo")


def _parse_assignment(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(text, "expected key=value")
    return key.strip(), value.strip()


def _load(args) -> tuple[ScenarioConfig, str | None]:
    if args.preset and args.config:
        raise ConfigError("command line", "give either a config file or --preset, not both")
    if args.preset:
        try:
            cfg = load_preset(args.preset)
        except KeyError as exc:
            raise ConfigError("--preset", str(exc.args[0])) from exc
    elif args.config:
        try:
            cfg = load_config_file(args.config)
        except OSError as exc:
            raise ConfigError(str(args.config), f"cannot read: {exc.strerror}") from exc
    else:
        cfg = config_from_mapping({})
    overrides = dict(_parse_assignment(a) for a in args.set or [])
    if overrides:
        cfg = apply_overrides(cfg, {k: parse_value(v) for k, v in overrides.items()})
    return cfg, args.preset


def _cmd_run(args) -> int:
    cfg, preset = _load(args)
    result = run_scenario(cfg, args.out, preset=preset)
    d = result.diagnostics
    print(f"wrote {result.output_dir}")
    print(
        f"s = {d['final_s']:g}  max |norm drift| = {d['max_abs_norm_drift']:.3g}  "
        f"imag mass = {d['final_imag_mass']:.3g}  {d['tracked']} peak velocity = {d['peak_velocity']}"
    )
    return EXIT_OK


def _cmd_list(args) -> int:
    for name, desc in list_presets():
        print(f"{name}\n    {desc}")
    return EXIT_OK


def _sweep_worker(cfg_data: dict, out_dir: str) -> dict:
    cfg = config_from_mapping(cfg_data)
    try:
        result = run_scenario(cfg, out_dir)
    except DivergenceError as exc:
        return {"dir": out_dir, "status": "diverged", "last_good_s": exc.last_good_s}
    return {"dir": out_dir, "status": "ok", "peak_velocity": result.diagnostics["peak_velocity"]}


def _cmd_sweep(args) -> int:
    cfg, _ = _load(args)
    axes = []
    for spec in args.vary:
        key, raw = _parse_assignment(spec)
        axes.append([(key, parse_value(v.strip())) for v in raw.split(",") if v.strip()])
    base = resolve_output_dir(cfg, args.out)
    jobs = []
    for combo in itertools.product(*axes):
        variant = apply_overrides(cfg, dict(combo))
        name = "__".join(f"{k}={v}" for k, v in combo)
        jobs.append((variant.to_dict(), str(base / name)))

    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(_sweep_worker, *zip(*jobs)))
    results.sort(key=lambda r: r["dir"])
    base.mkdir(parents=True, exist_ok=True)
    with (base / "sweep.json").open("w", encoding="utf-8") as handle:
        json.dump(results, handle, indent=2, sort_keys=True)
        handle.write("\n")
    for r in results:
        print(f"{r['status']:9s} {r['dir']}")
    return EXIT_DIVERGED if any(r["status"] != "ok" for r in results) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticegeo",
        description="Quantum geodesic flows on the integer lattice line.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("config", nargs="?", help="TOML scenario file or a previous run.json")
        p.add_argument("--preset", help="start from a named preset (see list-presets)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override section.key")
        p.add_argument("--out", help="output directory (default: $OUTPUT_DIR, then output.dir)")

    run = sub.add_parser("run", help="run one scenario")
    scenario_args(run)
    run.set_defaults(func=_cmd_run)

    lst = sub.add_parser("list-presets", help="list named scenarios")
    lst.set_defaults(func=_cmd_list)

    sweep = sub.add_parser("sweep", help="run a grid of scenarios in parallel")
    scenario_args(sweep)
    sweep.add_argument("--vary", action="append", required=True, metavar="KEY=V1,V2,...")
    sweep.add_argument("--jobs", type=int, default=None, help="worker processes")
    sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"numerical divergence: {exc} (last good s = {exc.last_good_s:g})", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
