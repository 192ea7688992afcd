"""Command-line entry point: one experiment per invocation.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, NumericalFailure, ParameterError
from . import studies
from .config import RunConfig, load_config, serialize_config
from .io import write_timeseries

log = logging.getLogger("rodkinetics")

MODEL_COMMANDS = {
    "model1": "I",
    "model1-scaled": "I-scaled",
    "model2": "II",
    "model3": "III",
}
STUDY_COMMANDS = ("study-localization", "study-diffusion-limit", "study-agents", "norms")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rodkinetics", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(MODEL_COMMANDS) + ["agents"] + list(STUDY_COMMANDS):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--out", type=Path, help="output directory (overrides 'out')")
        p.add_argument("--seed", type=int, help="64-bit seed (overrides 'seed')")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.command in MODEL_COMMANDS:
        model = MODEL_COMMANDS[args.command]
        # model2 runs the regularized variant when eps_reg is set
        if model == "II" and cfg.eps_reg > 0:
            model = "II-regularized"
        changes["model"] = model
    if args.out is not None:
        changes["out"] = str(args.out)
    if args.seed is not None:
        changes["seed"] = args.seed
    return cfg.updated(**changes) if changes else cfg


def _write_study(table, out: Path, name: str):
    write_timeseries(table, out / f"{name}.csv")
    if table.meta:
        write_timeseries(table.meta_table(), out / f"{name}_summary.csv")


def execute(args) -> int:
    cfg = _resolve(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(serialize_config(cfg), encoding="utf-8")
    cmd = args.command
    if cmd in MODEL_COMMANDS:
        res = studies.run_model(cfg, out)
        last = res["series"].rows[-1]
        log.info("t=%s mass=%s", last[0], last[1])
    elif cmd == "agents":
        studies.run_agent_model(cfg, out)
    elif cmd == "study-localization":
        _write_study(studies.study_localization(cfg, cfg.eps_list, out), out, "localization")
    elif cmd == "study-diffusion-limit":
        _write_study(studies.study_diffusion_limit(cfg, cfg.eps_list, out), out, "diffusion_limit")
    elif cmd == "study-agents":
        _write_study(studies.study_agents_vs_kinetic(cfg, cfg.n_list, cfg.seeds, out), out, "agents_vs_kinetic")
    elif cmd == "norms":
        _write_study(studies.study_norms(cfg, cfg.eps_list, out), out, "norms")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return execute(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
