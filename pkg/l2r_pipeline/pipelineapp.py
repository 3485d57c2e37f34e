#!/usr/bin/python
# -*- coding: utf-8 -*-

import dataclasses
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

from argparse_dataclass import ArgumentParser

from l2r_pipeline import (
    __version__,
    __copyright__,
    __author__,
    __licence__,
)
from l2r_pipeline.configfile import load_config
from l2r_pipeline.errors import (
    AdaptationError,
    ChecksumMismatch,
    CollectionError,
    ConfigError,
    ExplorationFailure,
    InsufficientDataError,
    MissingArtifactError,
    NumericalFailure,
    StageError,
    TrackGenerationError,
    TrainingFailure,
)
from l2r_pipeline.harness import cmd_adapt, cmd_evaluate, cmd_pipeline, cmd_report
from l2r_pipeline.harness.evaluate import metrics_table

logger = logging.getLogger('l2r_pipeline')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_ARTIFACT = 4

COMMANDS = ('run', 'evaluate', 'adapt', 'report')


def _config_field():
    return field(
        default="pipeline.cfg",
        metadata={
            "args": ["config"],
            "nargs": "?",
            "type": str,
            "help": "pipeline configuration file (default pipeline.cfg)",
        },
    )


def _seed_field():
    return field(
        default=None,
        metadata={
            "args": ["--seed"],
            "type": int,
            "metavar": "N",
            "help": "override the global seed of the configuration file",
        },
    )


def _verbose_field():
    return field(
        default=False,
        metadata={
            "args": ["--verbose"],
            "help": "log at DEBUG level",
        },
    )


def _track_seed_field():
    return field(
        default=None,
        metadata={
            "args": ["--track-seed"],
            "type": int,
            "metavar": "N",
            "help": "track to use (default: the configured training track)",
        },
    )


@dataclass
class RunOptions:
    """Options of ``l2r-pipeline run``."""

    config: str = _config_field()
    force: bool = field(
        default=False,
        metadata={
            "args": ["--force"],
            "help": "re-run every stage even when its cached artifacts are valid",
        },
    )
    seed: Optional[int] = _seed_field()
    verbose: bool = _verbose_field()


@dataclass
class EvaluateOptions:
    """Options of ``l2r-pipeline evaluate``."""

    config: str = _config_field()
    track_seed: Optional[int] = _track_seed_field()
    episodes: Optional[int] = field(
        default=None,
        metadata={
            "args": ["--episodes"],
            "type": int,
            "metavar": "N",
            "help": "number of evaluation episodes (default from the configuration, 5)",
        },
    )
    laps: Optional[int] = field(
        default=None,
        metadata={
            "args": ["--laps"],
            "type": int,
            "metavar": "N",
            "help": "laps per episode (default from the configuration, 3)",
        },
    )
    no_correction: bool = field(
        default=False,
        metadata={
            "args": ["--no-correction"],
            "help": "drive the base policy in unsafe states too",
        },
    )
    no_adaptation: bool = field(
        default=False,
        metadata={
            "args": ["--no-adaptation"],
            "help": "use the initial target speed on every segment",
        },
    )
    seed: Optional[int] = _seed_field()
    verbose: bool = _verbose_field()


@dataclass
class AdaptOptions:
    """Options of ``l2r-pipeline adapt``."""

    config: str = _config_field()
    track_seed: Optional[int] = _track_seed_field()
    runs: Optional[int] = field(
        default=None,
        metadata={
            "args": ["--runs"],
            "type": int,
            "metavar": "R",
            "help": "number of adaptation runs (default from the configuration, 15)",
        },
    )
    seed: Optional[int] = _seed_field()
    verbose: bool = _verbose_field()


@dataclass
class ReportOptions:
    """Options of ``l2r-pipeline report``."""

    artifact_dir: str = field(
        default="artifacts",
        metadata={
            "args": ["artifact_dir"],
            "nargs": "?",
            "type": str,
            "help": "artifact directory written by 'run' (default artifacts)",
        },
    )
    verbose: bool = _verbose_field()


OPTIONS = {
    'run': (RunOptions, "Run every pipeline stage, skipping the ones whose artifacts are current."),
    'evaluate': (EvaluateOptions, "Evaluate the trained agent and write its metrics."),
    'adapt': (AdaptOptions, "Re-adapt the per-segment target speeds on a track."),
    'report': (ReportOptions, "Summarize an artifact directory."),
}


def _description():
    return "l2r-pipeline v{0} - {1} - {2} - {3}".format(
        __version__,
        __copyright__,
        __author__,
        __licence__,
    )


def usage():
    lines = [f"usage: l2r-pipeline {{{','.join(COMMANDS)}}} [options]", '', _description(), '']
    for name in COMMANDS:
        lines.append(f"  {name:<10} {OPTIONS[name][1]}")
    lines.append('')
    lines.append("Use 'l2r-pipeline <command> --help' for the options of a command.")
    return '\n'.join(lines) + '\n'


def load_options_config(args):
    """Load the configuration named by ``args`` and apply the command-line overrides.

    A relative ``artifact_dir`` is resolved against the configuration file's directory.
    """
    cfg = load_config(args.config)
    if getattr(args, 'seed', None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if not os.path.isabs(cfg.artifact_dir):
        base = os.path.dirname(os.path.abspath(args.config))
        cfg = dataclasses.replace(cfg, artifact_dir=os.path.join(base, cfg.artifact_dir))
    return cfg


def run(command, args):
    if command == 'run':
        cfg = load_options_config(args)
        store = cmd_pipeline(cfg, force=args.force)
        print(f"artifacts written to {store.root}")
        metrics = store.path('metrics.txt')
        if os.path.exists(metrics):
            with open(metrics, 'r', encoding='utf-8') as f:
                sys.stdout.write(f.read())
    elif command == 'evaluate':
        cfg = load_options_config(args)
        metrics = cmd_evaluate(cfg, track_seed=args.track_seed, episodes=args.episodes, laps=args.laps,
                               use_correction=not args.no_correction, use_adaptation=not args.no_adaptation)
        sys.stdout.write(metrics_table(metrics))
    elif command == 'adapt':
        cfg = load_options_config(args)
        model = cmd_adapt(cfg, track_seed=args.track_seed, runs=args.runs)
        print(f"adapted {model.segment_count} segments")
    else:
        for path in cmd_report(args.artifact_dir):
            print(path)
    return EXIT_OK


def exit_code(error):
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, (MissingArtifactError, ChecksumMismatch)):
        return EXIT_ARTIFACT
    if isinstance(error, StageError):
        return exit_code(error.cause) if isinstance(error.cause, ConfigError) else EXIT_STAGE
    if isinstance(error, (TrainingFailure, NumericalFailure, CollectionError, ExplorationFailure,
                          InsufficientDataError, AdaptationError, TrackGenerationError)):
        return EXIT_STAGE
    return EXIT_FAILURE


def _main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ('-h', '--help'):
        sys.stdout.write(usage())
        return EXIT_OK if argv else EXIT_CONFIG
    if argv[0] in ('-v', '--version'):
        print(_description())
        return EXIT_OK
    command = argv[0]
    if command not in OPTIONS:
        sys.stderr.write(f"l2r-pipeline: unknown command '{command}'\n")
        sys.stderr.write(usage())
        return EXIT_CONFIG

    options_type, description = OPTIONS[command]
    parser = ArgumentParser(
        options_type,
        prog=f"l2r-pipeline {command}",
        description=description,
    )
    args = parser.parse_args(argv[1:])

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return run(command, args)


def main(argv=None):
    try:
        code = _main(argv)
    except Exception as e:
        code = exit_code(e)
        print(f"ERROR: {type(e).__name__}: {e}", file=sys.stderr)
        if code == EXIT_FAILURE or logger.isEnabledFor(logging.DEBUG):
            import traceback
            traceback.print_exc(file=sys.stderr)
    sys.exit(code)


if __name__ == "__main__":
    main()
