"""Command-line front door for the selection pipeline.

Subcommands: ``synth`` (planted pools), ``select`` (featurize + pick),
``baselines`` (rollout scores + rank-and-take), ``analyze`` (correlation
report), and ``grpo-check`` (objective kernels on a JSON fixture).

Exit codes: 0 on success; 1 for any named pipeline error, with
``error: <Name>: <detail>`` on stderr; 2 for argument-parsing errors.
Existing output files abort the run unless --force is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, baselines, grpo, pool_io, select, synth
from .errors import InvalidParams, OutputConflict, RirsError
from .features import VARIANTS, featurize_pool


def _prepare_out(out_dir: str, filenames: list[str], force: bool) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not force:
        clashes = [name for name in filenames if (out / name).exists()]
        if clashes:
            raise OutputConflict(
                f"refusing to overwrite {', '.join(clashes)} in {out} (use --force)"
            )
    return out


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.n < 1 or args.dim < 1:
        raise InvalidParams("--n and --dim must be >= 1")
    out = _prepare_out(args.out, ["pool.json", "pool.bin", "labels.csv"], args.force)
    paths = synth.write_synth_pool(
        args.n, args.dim, args.layers, args.clusters, args.seed, out
    )
    print(f"wrote {paths['manifest']} ({args.n} instances, dim {args.dim}, "
          f"{args.layers} layer(s), {args.clusters} cluster(s), seed {args.seed})")
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    records, _ = pool_io.read_pool(args.pool)
    features = featurize_pool(records, args.variant)
    config = select.SelectionConfig(
        budget=args.budget,
        method=args.method,
        feature_variant=args.variant,
        seed=args.seed,
    )
    result = select.run_selection(features, config, threads=args.threads)
    result.config["seed"] = args.seed

    out = _prepare_out(args.out, ["selection.json", "selected_ids.txt"], args.force)
    select.write_selection(result, out / "selection.json", out / "selected_ids.txt")
    for instance_id in result.selected_ids:
        print(instance_id)
    return 0


def _cmd_baselines(args: argparse.Namespace) -> int:
    records = pool_io.read_rollout_records(args.rollouts)
    table = baselines.score_rollouts(records, args.score)
    result = baselines.rank_and_take(table, args.budget)

    out = _prepare_out(
        args.out, ["selection.json", "selected_ids.txt", "scores.csv"], args.force
    )
    select.write_selection(result, out / "selection.json", out / "selected_ids.txt")
    baselines.write_score_table(table, out / "scores.csv")
    for instance_id in result.selected_ids:
        print(instance_id)
    return 0


def _load_selection(path: str) -> select.SelectionResult:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    steps = [select.SelectionStep(**s) for s in doc["steps"]]
    return select.SelectionResult(
        selected_ids=doc["selected_ids"], steps=steps, config=doc.get("config", {})
    )


def _cmd_analyze(args: argparse.Namespace) -> int:
    correlations = []
    features = []

    if args.pilot_fixture:
        series = analysis.pilot_validation_series()
        rho = analysis.spearman_rho(series)
        tau = analysis.kendall_tau(series)
        correlations.append(
            {
                "pair": "utility_rank_vs_gain_rank",
                "n": len(series.xs),
                "spearman": rho,
                "kendall": tau,
            }
        )

    if args.pool:
        records, _ = pool_io.read_pool(args.pool)
        features = featurize_pool(records, args.variant)
        if args.rollouts:
            rollouts = pool_io.read_rollout_records(args.rollouts)
            correlations.extend(analysis.length_correlation(features, rollouts))

    selections = [_load_selection(p) for p in args.selection or []]

    for row in correlations:
        print(
            f"{row['pair']}: spearman={row['spearman']:.4f} "
            f"kendall={row['kendall']:.4f} n={row['n']}"
        )

    if args.out:
        out = _prepare_out(
            args.out, ["features.csv", "trace.csv", "report.json"], args.force
        )
        paths = analysis.emit_report(features, selections, correlations, out)
        print(f"wrote {paths['report_json']}")
    return 0


def _cmd_grpo_check(args: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(args.fixture).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InvalidParams(f"cannot read fixture {args.fixture}: {exc}") from exc
    groups, params = grpo.load_fixture(doc)
    report = grpo.objective_report(groups, params)
    print(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rirs",
        description="Training-free, label-free data selection from single-rollout "
        "hidden-state shifts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic pool with planted structure")
    p.add_argument("--n", type=int, required=True, help="number of instances")
    p.add_argument("--dim", type=int, required=True, help="hidden dimension")
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--clusters", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("select", help="featurize a pool and select a subset")
    p.add_argument("--pool", required=True, help="pool manifest path")
    p.add_argument("--method", choices=select.METHODS, default="qwff")
    p.add_argument("--variant", choices=VARIANTS, default="s_plus_delta")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("baselines", help="score rollout records and rank-and-take")
    p.add_argument("--rollouts", required=True, help="rollout records JSONL path")
    p.add_argument("--score", choices=sorted(baselines.SCORE_DIRECTIONS), required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_baselines)

    p = sub.add_parser("analyze", help="correlation report and per-instance CSV")
    p.add_argument("--pool", help="pool manifest path")
    p.add_argument("--rollouts", help="rollout records JSONL (for length correlations)")
    p.add_argument("--variant", choices=VARIANTS, default="s_plus_delta")
    p.add_argument("--selection", action="append", help="selection.json to include")
    p.add_argument(
        "--pilot-fixture",
        action="store_true",
        help="report correlations on the built-in utility-rank vs gain pilot data",
    )
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("grpo-check", help="evaluate objective kernels on a JSON fixture")
    p.add_argument("--fixture", required=True)
    p.set_defaults(func=_cmd_grpo_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RirsError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
