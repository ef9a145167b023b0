"""Command-line interface.

Subcommands cover the full loop: simulate telemetry, train the graph
model, diagnose a run directory, evaluate against ground truth, and
re-render reports.  Exit codes: 0 success, 1 usage or configuration
error, 2 unreadable or inconsistent data, 3 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback

from . import runio
from .causal import FitError
from .config import ConfigError, RunConfig, apply_overrides, load_config
from .explain import render_records_text
from .pipeline import (
    load_model_config,
    run_diagnose,
    run_evaluate,
    run_simulate,
    run_train,
)
from .runio import DataError
from .scenarios import ScenarioError, template_names
from .topology import TopologyError, load_topology

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):          # exit 1 on usage errors
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="INI configuration file")
    parser.add_argument(
        "--set",
        dest="overrides",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="override one configuration key (repeatable)",
    )


def _config_from_args(args: argparse.Namespace, base: RunConfig | None = None) -> RunConfig:
    if base is None:
        return load_config(args.config, args.overrides)
    if args.config is not None:
        file_config = load_config(args.config)
        base = file_config
    apply_overrides(base, args.overrides)
    base.validate()
    return base


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="stackrca",
        description="simulate a layered host/pod/service system and diagnose "
        "the root cause of injected cascading faults",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate telemetry for one scenario")
    p_sim.add_argument("--out", required=True, metavar="DIR", help="run directory to create")
    p_sim.add_argument("--template", help="scenario template (see --list-templates)")
    p_sim.add_argument("--seed", type=int, help="random seed")
    p_sim.add_argument("--duration", type=float, metavar="SECONDS", help="simulated duration")
    p_sim.add_argument("--topology", metavar="FILE", help="topology INI file")
    _add_config_args(p_sim)

    p_list = sub.add_parser("templates", help="list scenario template names")
    del p_list

    p_train = sub.add_parser("train", help="train the graph attention model")
    p_train.add_argument("--model-dir", required=True, metavar="DIR")
    p_train.add_argument("--topology", metavar="FILE", help="topology INI file")
    _add_config_args(p_train)

    p_diag = sub.add_parser("diagnose", help="diagnose a telemetry run directory")
    p_diag.add_argument("--data", required=True, metavar="DIR", help="telemetry directory")
    p_diag.add_argument("--model-dir", required=True, metavar="DIR")
    p_diag.add_argument("--out", metavar="DIR", help="artifact directory (default: the data directory)")
    p_diag.add_argument(
        "--resume",
        action="store_true",
        help="reuse completed stage artifacts already in the output directory",
    )
    _add_config_args(p_diag)

    p_eval = sub.add_parser("evaluate", help="score diagnoses against ground truth")
    p_eval.add_argument("--run", required=True, nargs="+", metavar="DIR")
    p_eval.add_argument(
        "--out", metavar="FILE",
        help="metrics file (default: eval.txt in the run directory; "
        "required with several run directories)",
    )

    p_rep = sub.add_parser("report", help="render the text report of a diagnosed run")
    p_rep.add_argument("--run", required=True, metavar="DIR")
    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    if args.template is not None:
        config.template = args.template
    if args.seed is not None:
        config.seed = args.seed
    if args.duration is not None:
        config.duration_s = args.duration
    topology = load_topology(args.topology) if args.topology else None
    run_simulate(config, args.out, topology)
    print(f"wrote scenario {config.template!r} (seed {config.seed}) to {args.out}")
    return EXIT_OK


def _cmd_templates(_args: argparse.Namespace) -> int:
    for name in template_names():
        print(name)
    return EXIT_OK


def _cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    topology = load_topology(args.topology) if args.topology else None
    model = run_train(config, args.model_dir, topology)
    print(
        f"trained graph model ({len(model.loss_history)} epochs) "
        f"into {args.model_dir}"
    )
    return EXIT_OK


def _cmd_diagnose(args: argparse.Namespace) -> int:
    manifest = os.path.join(args.model_dir, runio.MANIFEST_FILE)
    base = load_model_config(args.model_dir) if os.path.exists(manifest) else None
    config = _config_from_args(args, base)
    diagnosis = run_diagnose(
        config,
        data_dir=args.data,
        model_dir=args.model_dir,
        out_dir=args.out,
        resume=args.resume,
    )
    out_dir = args.out if args.out else args.data
    root = diagnosis.chain.root
    if root is None:
        print(f"no fault detected; artifacts in {out_dir}")
    else:
        print(f"root cause: {root}; artifacts in {out_dir}")
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    if args.out is None:
        if len(args.run) > 1:
            raise ConfigError("--out is required when evaluating several run directories")
        out_path = os.path.join(args.run[0], runio.EVAL_FILE)
    else:
        out_path = args.out
    result = run_evaluate(args.run, out_path)
    sys.stdout.write(result.render())
    print(f"wrote {out_path}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    records = runio.read_jsonl(os.path.join(args.run, runio.REPORT_JSON_FILE))
    sys.stdout.write(render_records_text(records))
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "templates": _cmd_templates,
    "train": _cmd_train,
    "diagnose": _cmd_diagnose,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:       # argparse --help exits 0, usage errors 1
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"stackrca: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ScenarioError, TopologyError, FitError, ValueError) as exc:
        print(f"stackrca: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:               # noqa: BLE001 - last-resort boundary
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
