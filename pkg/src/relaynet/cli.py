"""Command-line entry point: ``relaynet run|episode|baseline|validate-config``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__
from .config import (ConfigError, ExperimentConfig, POLICIES, PROFILES, coerce, read_config_file,
                     resolve)
from .engine import episode_seed, run_episode, run_experiment
from .export import (OutputError, read_manifest, write_curves_csv, write_manifest,
                     write_metrics_csv, write_radius_heatmap_csv, write_snapshot, write_summary)
from .qnet import DivergenceError

OUTPUT_ENV = "RELAYNET_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

log = logging.getLogger("relaynet")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat 'key = value' config file")
    p.add_argument("--profile", choices=sorted(PROFILES))
    group = p.add_argument_group("experiment fields (override the config file)")
    for f in fields(ExperimentConfig):
        if f.name == "profile":
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            group.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        else:
            group.add_argument(flag, dest=f.name, type=str, default=None, metavar=f.type.upper())


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None,
                   help=f"output directory (default: ${OUTPUT_ENV} or ./relaynet-out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaynet", description=__doc__)
    parser.add_argument("--version", action="version", version=f"relaynet {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full experiment over all episodes")
    _add_config_flags(run)
    _add_output(run)
    run.add_argument("--manifest", type=Path, help="replay the config stored in a manifest")

    ep = sub.add_parser("episode", help="one episode with heatmap and topology snapshots")
    _add_config_flags(ep)
    _add_output(ep)
    ep.add_argument("--episode-index", type=int, default=0)
    ep.add_argument("--snapshot-steps", default="30,60,120,150",
                    help="comma-separated 1-based steps to export")

    base = sub.add_parser("baseline", help="experiment with a non-learning policy")
    _add_config_flags(base)
    _add_output(base)
    base.add_argument("--baseline", choices=[p for p in POLICIES if p != "learned"], default="random")

    val = sub.add_parser("validate-config", help="resolve and print a configuration")
    _add_config_flags(val)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Profile defaults < ``--config`` file < explicit flags."""
    file_values = read_config_file(args.config) if args.config else {}
    flags = {}
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is None:
            continue
        if isinstance(value, str):
            value = coerce(f.name, value)
        flags[f.name] = value
    if args.profile:
        flags["profile"] = args.profile
    return resolve(file_values, flags)


def _out_dir(args) -> Path:
    return args.out or Path(os.environ.get(OUTPUT_ENV, "relaynet-out"))


def _experiment(cfg: ExperimentConfig, out: Path, command: str) -> None:
    artifacts = {"metrics": "metrics.csv", "curves": "curves.csv", "summary": "summary.json"}
    write_manifest(cfg, command, artifacts, out / "manifest.json")
    report, traces = run_experiment(cfg)
    write_metrics_csv(traces, out / "metrics.csv")
    write_curves_csv(report, out / "curves.csv")
    write_summary(report, out / "summary.json")
    print(f"policy={cfg.policy} episodes={report.n_episodes} window={report.window[0]}-{report.window[1]} "
          f"connectivity={report.connectivity:.4f} goodput={report.goodput:.2f}Mbps "
          f"power={report.power_dbm:.2f}dBm -> {out}")


def cmd_run(args) -> None:
    if args.manifest:
        doc = read_manifest(args.manifest)
        cfg = resolve(None, doc["config"])
    else:
        cfg = config_from_args(args)
    _experiment(cfg, _out_dir(args), "run")


def cmd_baseline(args) -> None:
    args.policy = args.policy or args.baseline
    cfg = config_from_args(args)
    _experiment(cfg, _out_dir(args), "baseline")


def cmd_episode(args) -> None:
    cfg = config_from_args(args).replace(record_snapshots=True)
    steps = [int(s) for s in args.snapshot_steps.split(",") if s.strip()]
    for s in steps:
        if not 1 <= s <= cfg.horizon:
            raise ConfigError(f"snapshot step {s} outside 1..{cfg.horizon}")
    out = _out_dir(args)
    artifacts = {"metrics": "metrics.csv", "heatmap": "radius_heatmap.csv",
                 **{f"snapshot_{s}": f"snapshot_{s:04d}.txt" for s in steps}}
    write_manifest(cfg, "episode", artifacts, out / "manifest.json")
    trace = run_episode(cfg, episode_seed(cfg.seed, args.episode_index))
    write_metrics_csv([trace], out / "metrics.csv")
    write_radius_heatmap_csv(trace, out / "radius_heatmap.csv")
    for s in steps:
        write_snapshot(trace, s, out / f"snapshot_{s:04d}.txt")
    print(f"episode {args.episode_index}: {trace.n_relays} relays, "
          f"final connectivity {trace.metrics[-1].connectivity_ratio:.2f} -> {out}")


def cmd_validate(args) -> None:
    cfg = config_from_args(args)
    for k, v in cfg.to_dict().items():
        print(f"{k} = {v}")


COMMANDS = {"run": cmd_run, "episode": cmd_episode, "baseline": cmd_baseline,
            "validate-config": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OutputError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DivergenceError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
