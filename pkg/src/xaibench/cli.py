"""Command-line interface.

Subcommands mirror the pipeline stages (run, train, perturb, explain, irt,
stability, stats, report); each reads and writes the serialized artifacts
of the upstream stages under the output directory.  Exit codes: 0 success,
1 stage failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .data import PERTURBATION_KINDS
from .datasets import write_synthetic_diabetes
from .explainers import EXPLAINERS
from .models import MODEL_KINDS
from .pipeline import STAGES, PipelineError, RunConfig, run_all, run_stage

_CONFIG_KEYS = {
    "dataset": str,
    "out": str,
    "seed": int,
    "train_fraction": float,
    "perturbation_kind": str,
    "models": str,
    "explainers": str,
    "levels": str,
    "noise_scale": float,
    "cv_folds": int,
    "repetitions": int,
    "coalition_budget": int,
    "bootstrap_respondents": int,
}


def parse_config_file(path) -> dict:
    """Flat key = value format; '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _CONFIG_KEYS[key](value)
    return out


def _csv_list(value: str) -> tuple:
    return tuple(s.strip() for s in value.split(",") if s.strip())


def build_config(args) -> RunConfig:
    settings = {}
    if args.config:
        settings.update(parse_config_file(args.config))
    for key in _CONFIG_KEYS:
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            settings[key] = cli_value
    if "dataset" not in settings:
        raise ValueError("a dataset is required (--dataset or config file)")
    if "out" not in settings:
        raise ValueError("an output directory is required (--out or config file)")
    kwargs = {
        "dataset": settings["dataset"],
        "out_dir": settings["out"],
    }
    if "seed" in settings:
        kwargs["master_seed"] = settings["seed"]
    if "train_fraction" in settings:
        kwargs["train_fraction"] = settings["train_fraction"]
    if "perturbation_kind" in settings:
        kwargs["perturbation_kind"] = settings["perturbation_kind"]
    if "noise_scale" in settings:
        kwargs["noise_scale"] = settings["noise_scale"]
    if "models" in settings:
        kwargs["models"] = _csv_list(settings["models"])
    if "explainers" in settings:
        kwargs["explainers"] = _csv_list(settings["explainers"])
    if "levels" in settings:
        kwargs["fractions"] = tuple(float(v) / 100.0 for v in _csv_list(settings["levels"]))
    for key in ("cv_folds", "repetitions", "coalition_budget", "bootstrap_respondents"):
        if key in settings:
            kwargs[key] = settings[key]
    return RunConfig(**kwargs)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="input CSV (header row, class column last)")
    p.add_argument("--config", help="flat key = value config file; CLI flags override it")
    p.add_argument("--seed", type=int, help="master seed (default 7)")
    p.add_argument("--out", help="output directory for all artifacts")
    p.add_argument("--models", help=f"comma list from {','.join(MODEL_KINDS)}")
    p.add_argument("--explainers", help=f"comma list from {','.join(EXPLAINERS)}")
    p.add_argument("--levels", help="comma list of perturbation percents, e.g. 0,4,6,10")
    p.add_argument("--perturbation-kind", dest="perturbation_kind",
                   choices=PERTURBATION_KINDS)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--noise-scale", dest="noise_scale", type=float)
    p.add_argument("--cv-folds", dest="cv_folds", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--coalition-budget", dest="coalition_budget", type=int)
    p.add_argument("--bootstrap-respondents", dest="bootstrap_respondents", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xaibench",
        description="Model-reliability (3PL IRT) and explainer-stability benchmark")
    parser.add_argument("--version", action="version", version=f"xaibench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute the full pipeline")
    _add_common_flags(run_p)
    for stage in STAGES:
        sp = sub.add_parser(stage, help=f"run only the {stage} stage")
        _add_common_flags(sp)
    synth = sub.add_parser("synth-data", help="write the bundled synthetic dataset")
    synth.add_argument("--out", required=True, help="CSV path to write")
    synth.add_argument("--seed", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth-data":
            if args.seed is None:
                write_synthetic_diabetes(args.out)
            else:
                write_synthetic_diabetes(args.out, seed=args.seed)
            return 0
        cfg = build_config(args)
        if args.command == "run":
            run_all(cfg)
        else:
            run_stage(cfg, args.command)
        return 0
    except (PipelineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
