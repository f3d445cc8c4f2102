"""Command line entry point: ``lattice-homog {run,verify,plot}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiments import ExperimentConfig, emit_plots, plot_directory, run_experiment
from .integrators import YOSHIDA6_A
from .verify import MUTATED_YOSHIDA, verify_suite


def _epsilons(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from exc


def _overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--epsilons", type=_epsilons, help="comma or space separated")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lattice-homog", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--no-plots", action="store_true")
    _overrides(run)

    ver = sub.add_parser("verify", help="run the invariant checks")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--mutate", action="store_true", help="use a corrupted Yoshida weight (should fail)")

    plot = sub.add_parser("plot", help="re-plot a finished output directory")
    plot.add_argument("--input", required=True, type=Path)
    return p


def _run_verify(seed: int, mutate: bool) -> int:
    results = verify_suite(seed=seed, weights=MUTATED_YOSHIDA if mutate else YOSHIDA6_A)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return _run_verify(args.seed, args.mutate)
    if args.command == "plot":
        for path in plot_directory(args.input):
            print(path)
        return 0

    config = ExperimentConfig.from_yaml(args.config).override(
        seed=args.seed, trials=args.trials, epsilons=args.epsilons,
        output_dir=args.output_dir, workers=args.workers,
    )
    if config.experiment == "verify_suite":
        return _run_verify(config.seed, False)
    records = run_experiment(config)
    out = Path(config.output_dir)
    summary = json.loads((out / "summary.json").read_text())
    for variant, block in summary["variants"].items():
        fits = {k: (round(v["slope"], 4) if v else None) for k, v in block["fits"].items()}
        print(f"{config.experiment} {variant or '-'}: slopes {fits}")
    if not args.no_plots:
        for path in emit_plots(records, out, config.config_hash()):
            print(path)
    failed = [r for r in records if not r.ok]
    if failed:
        print(f"{len(failed)} work items failed; see records.csv", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
