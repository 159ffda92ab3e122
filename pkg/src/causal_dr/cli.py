"""Command-line entry point: ``causal-dr simulate | analyze | report``.

Exit status: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import report
from .config import OUT_ENV, UsageError, dump_config, parse_config
from .errors import CausalDRError
from .realdata import analyze, forest_rows, prepare, result_rows
from .simharness import run_grid

SNAPSHOT = "resolved-config.snapshot"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _scenario_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of scenario ids, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="causal-dr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("simulate", "analyze"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out")
        p.add_argument("--force", action="store_true")
        if name == "simulate":
            p.add_argument("--B", dest="B", type=int)
            p.add_argument("--scenarios", type=_scenario_list)
        else:
            p.add_argument("--bootstrap-B", dest="bootstrap_B", type=int)
    p = sub.add_parser("report")
    p.add_argument("results_dir", nargs="?")
    p.add_argument("--out", dest="out_dir")
    return parser


def _prepare_out(cfg, force: bool) -> Path:
    out = Path(cfg.out)
    snap = out / SNAPSHOT
    if snap.exists() and not force:
        try:
            previous = parse_config(snap)
        except UsageError:
            previous = None
        if previous is None or previous.seed != cfg.seed:
            raise UsageError(
                f"{out} already holds results from a different run (seed "
                f"{getattr(previous, 'seed', '?')}); pass --force to overwrite"
            )
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg, force: bool = False) -> int:
    out = _prepare_out(cfg, force)
    (out / SNAPSHOT).write_text(dump_config(cfg))
    result = run_grid(
        scenario_ids=cfg.scenarios, n_values=cfg.n_values, rho_values=cfg.rho_values, B=cfg.B,
        master_seed=cfg.seed, learners=cfg.learners, params=cfg.dgp, workers=cfg.workers,
        bounds=(cfg.lower, cfg.upper), progress=lambda msg: print(msg, flush=True),
        estimators=cfg.estimators,
    )
    report.write_csv(out / "summary.csv", result.summary, report.SUMMARY_COLUMNS)
    report.write_csv(out / "replicates.csv", result.replicates, report.REPLICATE_COLUMNS)
    (out / "summary.md").write_text(report.summary_markdown(result.summary, cfg.dgp.tau))
    return EXIT_OK


def cmd_analyze(cfg, force: bool = False) -> int:
    out = _prepare_out(cfg, force)
    (out / SNAPSHOT).write_text(dump_config(cfg))
    data, loaded, _ = prepare(cfg.analysis_csv, cfg.analysis)
    print(f"loaded {data.n} rows ({loaded.report}); treated {int(data.A.sum())}, control {data.n - int(data.A.sum())}")
    result = analyze(data, cfg.analysis, cfg.learners, cfg.seed)
    report.write_csv(out / "analysis.csv", result_rows(result), report.ANALYSIS_COLUMNS)
    report.write_csv(out / "forest.csv", forest_rows(result), report.FOREST_COLUMNS)
    return EXIT_OK


def cmd_report(results_dir, out_dir=None) -> int:
    src = Path(results_dir)
    dst = Path(out_dir) if out_dir else src
    summary = report.read_csv(src / "summary.csv", report.SUMMARY_COLUMNS)
    reps = report.read_csv(src / "replicates.csv", report.REPLICATE_COLUMNS)
    tau = None
    if (src / SNAPSHOT).exists():
        tau = parse_config(src / SNAPSHOT).dgp.tau
    dst.mkdir(parents=True, exist_ok=True)
    (dst / "summary.md").write_text(report.summary_markdown(summary, tau))
    report.write_csv(dst / "boxplots.csv", report.boxplot_rows(reps), report.BOXPLOT_COLUMNS)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            results_dir = args.results_dir or os.environ.get(OUT_ENV)
            if not results_dir:
                raise UsageError("report needs a results directory")
            return cmd_report(results_dir, args.out_dir)
        overrides = {k: getattr(args, k, None) for k in ("seed", "workers", "out", "B", "scenarios", "bootstrap_B")}
        overrides["mode"] = args.command
        cfg = parse_config(args.config, overrides)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.force)
        return cmd_analyze(cfg, args.force)
    except UsageError as exc:
        print(f"causal-dr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CausalDRError, OSError) as exc:
        print(f"causal-dr: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
