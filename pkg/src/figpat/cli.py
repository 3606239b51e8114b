"""Command line interface.

Subcommands: generate (dataset from a statement), challenge (built-in
setups), evaluate (hypothesis vs dataset labels), split (compositional
train/test design), render (re-render figures), print-config (show the
resolved configuration). Summaries go to stdout as JSON, diagnostics
to stderr, and each error class maps to a stable exit code:

    0  success
    2  command line usage error
    3  configuration problem
    4  statement problem (syntax, types, missing, unknown id)
    5  placement exhausted (over-dense universe)
    6  yield too low (statement too rare or unsatisfiable)
    7  no near miss found / unsound constructive generator
    8  dataset io failure (read, write, label check)
    9  split infeasible
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .challenges import LATENT_STATEMENT_ID, corrupt_challenge1, generate_challenge1, get_challenge
from .config import (
    Settings,
    format_settings,
    resolve_settings,
    resolve_universe,
    write_run_config,
)
from .dataio import DatasetRecord, confusion, read_dataset, write_dataset
from .dsl import Statement, parse_statement, load_statements
from .errors import (
    ConfigError,
    FigpatError,
    GeneratorUnsound,
    Infeasible,
    InvalidAlpha,
    IoFailure,
    LabelInconsistency,
    MissingStatement,
    NoNearMissFound,
    ParseFailure,
    PlacementExhausted,
    StatementSyntaxError,
    StatementTypeError,
    UnknownStatementId,
    YieldTooLow,
)
from .model import UniverseConfig
from .render import RenderStyle, render_png, save_svg
from .report import confusion_chart, count_histogram, divergence_trajectory
from .sampler import Pattern, generate_near_misses, generate_negatives, generate_positives
from .splits import SplitItem, design_split


def _csv(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with [run], [split] and [universe] sections")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--count", "--n-true", dest="count", type=int, default=None,
                   help="positive figures (negatives and counterfactuals default to the same)")
    p.add_argument("--n-false", dest="n_false", type=int, default=None,
                   help="negative figures (default: same as --count)")
    p.add_argument("--near-misses", "--n-cf", dest="near_misses", type=int, default=None,
                   help="counterfactual figures (default: same as --count, 0 disables)")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--yield-floor", dest="yield_floor", type=float, default=None)
    p.add_argument("--placement-tries", dest="placement_tries", type=int, default=None)
    p.add_argument("--canvas-px", dest="canvas_px", type=int, default=None)
    p.add_argument("--max-edits", dest="max_edits", type=int, default=None)
    p.add_argument("--eval-budget", dest="eval_budget", type=int, default=None)


def _add_split_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=None)
    p.add_argument("--alpha-atoms", dest="alpha_atoms", type=float, default=None)
    p.add_argument("--alpha-compounds", dest="alpha_compounds", type=float, default=None)
    p.add_argument("--depth", type=int, default=None, help="compound height cap")
    p.add_argument("--atom-cap", dest="atom_cap", type=float, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--target-compound", dest="target_compound", type=float, default=None)


def _add_universe_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-min", dest="n_min", type=int, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--shapes", dest="allowed_shapes", type=_csv, default=None)
    p.add_argument("--colors", dest="allowed_colors", type=_csv, default=None)
    p.add_argument("--size-min", dest="size_min", type=float, default=None)
    p.add_argument("--size-max", dest="size_max", type=float, default=None)
    p.add_argument("--threshold", dest="small_big_threshold", type=float, default=None)
    p.add_argument("--min-gap", dest="min_gap", type=float, default=None)


def _add_statement_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--statement", help="statement text, or a path to a .kps statement file")
    p.add_argument("--statement-file", dest="statement_file", help="statement file (.kps)")
    p.add_argument("--statement-id", dest="statement_id", help="statement name to select or assign")


def _settings_from(args: argparse.Namespace) -> Settings:
    cli = {name: getattr(args, name, None) for name in vars(args)}
    return resolve_settings(cli, getattr(args, "config", None))


def _universe_from(args: argparse.Namespace, base: UniverseConfig | None = None) -> UniverseConfig:
    cli = {name: getattr(args, name, None) for name in vars(args)}
    return resolve_universe(base, getattr(args, "config", None), cli)


def _resolve_statement(args: argparse.Namespace, universe: UniverseConfig) -> tuple[str, Statement] | None:
    text = getattr(args, "statement", None)
    file = getattr(args, "statement_file", None)
    sid = getattr(args, "statement_id", None)
    if text and file:
        raise ConfigError("give either --statement or --statement-file, not both")
    if text and (text.endswith(".kps") or Path(text).is_file()):
        file, text = text, None
    if text:
        return (sid or "s1"), parse_statement(text, universe)
    if file:
        loaded = load_statements(file, universe)
        if sid:
            if sid not in loaded:
                raise UnknownStatementId(f"{file} does not define statement {sid!r}")
            return sid, loaded[sid]
        if len(loaded) == 1:
            return next(iter(loaded.items()))
        raise ConfigError(
            f"{file} defines {len(loaded)} statements; pick one with --statement-id"
        )
    return None


def _emit(summary: dict) -> None:
    print(json.dumps(summary, indent=2, sort_keys=True))


def _build_records(
    sid: str,
    seed: int,
    positives,
    negatives,
    near,
) -> tuple[list[DatasetRecord], dict[str, tuple]]:
    records: list[DatasetRecord] = []
    trails: dict[str, tuple] = {}
    for i, fig in enumerate(positives):
        records.append(DatasetRecord(f"true-{i:04d}", "true", sid, seed, fig.objects))
    for i, fig in enumerate(negatives):
        records.append(DatasetRecord(f"false-{i:04d}", "false", sid, seed, fig.objects))
    for i, nm in enumerate(near):
        rid = f"counterfactual-{i:04d}"
        records.append(DatasetRecord(rid, "counterfactual", sid, seed, nm.figure.objects))
        trails[rid] = nm.edits
    return records, trails


def _generate_classes(pattern: Pattern, sid: str, s: Settings):
    positives, report = generate_positives(
        pattern, s.count, s.seed,
        workers=s.workers, yield_floor=s.yield_floor, placement_tries=s.placement_tries,
    )
    negatives = generate_negatives(
        pattern, s.count if s.n_false is None else s.n_false, s.seed,
        positives=positives, workers=s.workers,
        yield_floor=s.yield_floor, placement_tries=s.placement_tries,
    )
    want_near = s.count if s.near_misses is None else s.near_misses
    near = []
    if want_near > 0:
        try:
            near = generate_near_misses(
                pattern, positives, s.seed,
                max_edits=s.max_edits, count=want_near,
                eval_budget=s.eval_budget, workers=s.workers,
            )
        except NoNearMissFound:
            # not every positive flips within the edit limit; widen the
            # source pool (same per-index streams, so the first count
            # figures are the records above) and try again
            sources, _ = generate_positives(
                pattern, 4 * s.count, s.seed,
                workers=s.workers, yield_floor=s.yield_floor,
                placement_tries=s.placement_tries,
            )
            near = generate_near_misses(
                pattern, sources, s.seed,
                max_edits=s.max_edits, count=want_near,
                eval_budget=s.eval_budget, workers=s.workers,
            )
    records, trails = _build_records(sid, s.seed, positives, negatives, near)
    return records, trails, report


def _write_common(out: Path, records, statements, universe, s: Settings, trails) -> dict:
    style = RenderStyle(canvas_px=s.canvas_px)
    ds = write_dataset(out, records, statements, universe, style=style, edit_trails=trails)
    write_run_config(s, universe, out)
    counts = {label: [len(r.objects) for r in ds.by_label(label)]
              for label in ("true", "false", "counterfactual")}
    counts = {k: v for k, v in counts.items() if v}
    report_path = count_histogram(counts, out / "report" / "count-histogram.png")
    return {
        "out": str(out),
        "records": {k: len(v) for k, v in counts.items()},
        "report": str(report_path),
    }


def _cmd_generate(args: argparse.Namespace) -> int:
    s = _settings_from(args)
    universe = _universe_from(args)
    resolved = _resolve_statement(args, universe)
    if resolved is None:
        raise MissingStatement("generate needs --statement or --statement-file")
    sid, stmt = resolved
    pattern = Pattern(stmt, universe)
    records, trails, report = _generate_classes(pattern, sid, s)
    out = Path(s.out)
    summary = _write_common(out, records, {sid: stmt}, universe, s, trails)
    summary.update(
        statement_id=sid,
        seed=s.seed,
        attempts=report.attempts,
        rejection_rate=round(report.rejection_rate, 6),
    )
    _emit(summary)
    return 0


def _cmd_challenge(args: argparse.Namespace) -> int:
    spec = get_challenge(args.challenge)
    if getattr(args, "max_edits", None) is None:
        args.max_edits = spec.max_edits
    s = _settings_from(args)
    universe = _universe_from(args, spec.universe)
    out = Path(s.out)

    if spec.id == "challenge-1":
        n = s.count
        instances = generate_challenge1(3 * n, s.seed, universe=universe)
        records: list[DatasetRecord] = []
        for i, (fig, regions) in enumerate(instances[:n]):
            records.append(
                DatasetRecord(f"true-{i:04d}", "true", LATENT_STATEMENT_ID, s.seed, fig.objects, regions)
            )
        for i, (fig, regions) in enumerate(instances[n : 2 * n]):
            broken = corrupt_challenge1(fig, regions, s.seed, n + i, edits=2, universe=universe)
            records.append(
                DatasetRecord(f"false-{i:04d}", "false", LATENT_STATEMENT_ID, s.seed, broken.objects, regions)
            )
        for i, (fig, regions) in enumerate(instances[2 * n :]):
            broken = corrupt_challenge1(fig, regions, s.seed, 2 * n + i, edits=1, universe=universe)
            records.append(
                DatasetRecord(
                    f"counterfactual-{i:04d}", "counterfactual", LATENT_STATEMENT_ID, s.seed,
                    broken.objects, regions,
                )
            )
        summary = _write_common(out, records, {}, universe, s, {})
        summary.update(challenge=spec.id, seed=s.seed)
        _emit(summary)
        return 0

    if spec.id == "definitions-example":
        sid, stmt = "gt", spec.gt
        statements = {"gt": spec.gt, **spec.hypotheses}
    else:
        resolved = _resolve_statement(args, universe)
        if resolved is None:
            raise MissingStatement(f"{spec.id} needs the statement under study; pass --statement")
        sid, stmt = resolved
        statements = {sid: stmt}

    pattern = Pattern(
        stmt,
        universe,
        figure_sampler=spec.figure_sampler,
        positive_generator=spec.positive_generator,
        edit_kinds=spec.edit_kinds,
    )
    records, trails, report = _generate_classes(pattern, sid, s)
    summary = _write_common(out, records, statements, universe, s, trails)
    summary.update(
        challenge=spec.id,
        statement_id=sid,
        seed=s.seed,
        attempts=report.attempts,
        rejection_rate=round(report.rejection_rate, 6),
    )
    _emit(summary)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    ds = read_dataset(args.dataset)
    resolved = None
    if args.statement or args.statement_file:
        resolved = _resolve_statement(args, ds.universe)
    elif args.statement_id:
        if args.statement_id not in ds.statements:
            raise UnknownStatementId(
                f"dataset defines {sorted(ds.statements)} but not {args.statement_id!r}"
            )
        resolved = (args.statement_id, ds.statements[args.statement_id])
    if resolved is None:
        raise MissingStatement("evaluate needs --statement, --statement-file or --statement-id")
    sid, hyp = resolved
    conf = confusion(ds.records, hyp, ds.universe)
    report_path = confusion_chart(conf, ds.root / "report" / f"confusion-{sid}.png")
    summary = dict(conf)
    summary.update(dataset=str(ds.root), statement_id=sid, report=str(report_path))
    _emit(summary)
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    s = _settings_from(args)
    ds = read_dataset(args.dataset)
    items = []
    for rec in ds.records:
        if rec.statement_id == LATENT_STATEMENT_ID:
            raise ConfigError("latent-rule datasets carry no statements to split on")
        if rec.statement_id not in ds.statements:
            raise UnknownStatementId(f"record {rec.id} refers to {rec.statement_id!r}")
        items.append(SplitItem(rec.id, ds.statements[rec.statement_id], rec.figure))
    result = design_split(
        items,
        seed=s.seed,
        test_fraction=s.test_fraction,
        atom_cap=s.atom_cap,
        alpha_atoms=s.alpha_atoms,
        alpha_compounds=s.alpha_compounds,
        depth=s.depth,
        restarts=s.restarts,
        target_compound=s.target_compound,
        universe=ds.universe,
    )
    metrics = {
        "atom_divergence": result.atom_divergence,
        "compound_divergence": result.compound_divergence,
        "train": len(result.train_ids),
        "test": len(result.test_ids),
        "seed": s.seed,
        "test_fraction": s.test_fraction,
        "atom_cap": s.atom_cap,
        "alpha_atoms": s.alpha_atoms,
        "alpha_compounds": s.alpha_compounds,
        "depth": s.depth,
        "target_compound": s.target_compound,
    }
    train_path = ds.root / "train.txt"
    test_path = ds.root / "test.txt"
    metrics_path = ds.root / "split-metrics.json"
    try:
        train_path.write_text("".join(f"{rid}\n" for rid in result.train_ids), encoding="utf-8")
        test_path.write_text("".join(f"{rid}\n" for rid in result.test_ids), encoding="utf-8")
        metrics_path.write_text(json.dumps(metrics, indent=2, sort_keys=True), encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write split files under {ds.root}: {e}") from e
    report_path = divergence_trajectory(result.history, ds.root / "report" / "divergence-trajectory.png")
    _emit(
        {
            "dataset": str(ds.root),
            "train": len(result.train_ids),
            "test": len(result.test_ids),
            "atom_divergence": round(result.atom_divergence, 6),
            "compound_divergence": round(result.compound_divergence, 6),
            "train_file": str(train_path),
            "test_file": str(test_path),
            "metrics": str(metrics_path),
            "report": str(report_path),
        }
    )
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    ds = read_dataset(args.dataset, verify=False, check_images=False)
    out = Path(args.out) if args.out else ds.root
    style = RenderStyle(canvas_px=args.canvas_px) if args.canvas_px else None
    written = 0
    for rec in ds.records:
        target = out / (rec.image_path or f"{rec.label}/{rec.id}.svg")
        if args.format == "png":
            render_png(rec.figure, target.with_suffix(".png"), style)
        else:
            save_svg(rec.figure, target, style)
        written += 1
    _emit({"dataset": str(ds.root), "out": str(out), "format": args.format, "rendered": written})
    return 0


def _cmd_print_config(args: argparse.Namespace) -> int:
    s = _settings_from(args)
    universe = _universe_from(args)
    sys.stdout.write(format_settings(s, universe))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figpat",
        description="Generate, label, evaluate and split figure datasets driven by statements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a labeled dataset from a statement")
    _add_statement_flags(p)
    _add_run_flags(p)
    _add_universe_flags(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("challenge", help="generate one of the built-in challenge datasets")
    p.add_argument("challenge", help="definitions-example, challenge-1, challenge-2 or challenge-3")
    _add_statement_flags(p)
    _add_run_flags(p)
    _add_universe_flags(p)
    p.set_defaults(func=_cmd_challenge)

    p = sub.add_parser("evaluate", help="score a hypothesis statement against dataset labels")
    p.add_argument("dataset", help="dataset directory")
    _add_statement_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("split", help="design a compositional train/test split of a dataset")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--config", help="INI file with a [split] section")
    p.add_argument("--seed", type=int, default=None)
    _add_split_flags(p)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("render", help="re-render the figures of a dataset")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--out", default=None, help="target directory (default: in place)")
    p.add_argument("--format", choices=("svg", "png"), default="svg")
    p.add_argument("--canvas-px", dest="canvas_px", type=int, default=None)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("print-config", help="show the fully resolved configuration")
    _add_run_flags(p)
    _add_split_flags(p)
    _add_universe_flags(p)
    p.set_defaults(func=_cmd_print_config)

    return parser


_EXIT_MAP: tuple[tuple[type, int], ...] = (
    (StatementSyntaxError, 4),
    (StatementTypeError, 4),
    (MissingStatement, 4),
    (UnknownStatementId, 4),
    (PlacementExhausted, 5),
    (YieldTooLow, 6),
    (GeneratorUnsound, 7),
    (NoNearMissFound, 7),
    (IoFailure, 8),
    (ParseFailure, 8),
    (LabelInconsistency, 8),
    (Infeasible, 9),
    (InvalidAlpha, 3),
    (ConfigError, 3),
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FigpatError as e:
        for etype, code in _EXIT_MAP:
            if isinstance(e, etype):
                print(f"figpat: error: {e}", file=sys.stderr)
                return code
        print(f"figpat: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
