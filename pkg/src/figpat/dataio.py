"""Dataset serialization.

A dataset directory holds:

    manifest.jsonl     one record per line
    statements.kps     the statements records refer to, `name: text`
    dataset.ini        universe and bookkeeping
    true/ false/ counterfactual/
                       one SVG per record, 00000.svg onward
    edits.jsonl        edit trails for counterfactual records, if any
    report/            optional PNG charts

Records store their objects inline, so the manifest alone reproduces
every figure; the SVGs are derived artifacts. Floats are written via
a 12-significant-digit round trip, which json.loads inverts exactly.

Labels are never trusted: write_dataset and read_dataset both re-check
every record against its statement (or against the latent-region rules
when the statement id is the reserved challenge1-latent) and raise
LabelInconsistency on the first mismatch.
"""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .challenges import LATENT_STATEMENT_ID, LatentRegion, validate_challenge1
from .dsl import Statement, evaluate, load_statements, save_statements
from .errors import (
    IoFailure,
    LabelInconsistency,
    ParseFailure,
    UnknownStatementId,
)
from .gestalt import GestaltConfig
from .model import Figure, ObjectSpec, UniverseConfig
from .render import RenderStyle, save_svg

LABELS = ("true", "false", "counterfactual")

MANIFEST_NAME = "manifest.jsonl"
STATEMENTS_NAME = "statements.kps"
CONFIG_NAME = "dataset.ini"
EDITS_NAME = "edits.jsonl"


def _round12(x: float) -> float:
    return float(f"{x:.12g}")


@dataclass(frozen=True)
class DatasetRecord:
    """One labeled figure."""

    id: str
    label: str
    statement_id: str
    seed: int
    objects: tuple[ObjectSpec, ...]
    latent: tuple[LatentRegion, ...] | None = None
    image_path: str = ""

    @property
    def figure(self) -> Figure:
        return Figure(self.objects)

    def to_dict(self) -> dict:
        d: dict = {
            "id": self.id,
            "label": self.label,
            "statement_id": self.statement_id,
            "seed": self.seed,
            "objects": [
                {
                    "shape": o.shape,
                    "color": o.color,
                    "size": _round12(o.size),
                    "x": _round12(o.x),
                    "y": _round12(o.y),
                }
                for o in self.objects
            ],
            "image_path": self.image_path,
        }
        if self.latent is not None:
            d["latent"] = [
                {
                    "shape": r.shape,
                    "x": _round12(r.x),
                    "y": _round12(r.y),
                    "size": _round12(r.size),
                    "members": list(r.members),
                }
                for r in self.latent
            ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetRecord":
        latent = None
        if d.get("latent") is not None:
            latent = tuple(LatentRegion.from_dict(r) for r in d["latent"])
        return cls(
            id=str(d["id"]),
            label=str(d["label"]),
            statement_id=str(d["statement_id"]),
            seed=int(d["seed"]),
            objects=tuple(ObjectSpec.from_dict(o) for o in d["objects"]),
            latent=latent,
            image_path=str(d.get("image_path", "")),
        )


@dataclass(frozen=True)
class Dataset:
    root: Path
    universe: UniverseConfig
    statements: Mapping[str, Statement]
    records: tuple[DatasetRecord, ...]
    edit_trails: Mapping[str, tuple[dict, ...]]

    def by_label(self, label: str) -> tuple[DatasetRecord, ...]:
        return tuple(r for r in self.records if r.label == label)


# --------------------------------------------------------------------------
# label oracle


def record_truth(
    record: DatasetRecord,
    statements: Mapping[str, Statement],
    universe: UniverseConfig,
    gestalt_config: GestaltConfig | None = None,
) -> bool:
    """Ground truth for one record, independent of its stored label."""
    fig = record.figure
    if record.statement_id == LATENT_STATEMENT_ID:
        if record.latent is None:
            raise LabelInconsistency(
                f"record {record.id} uses {LATENT_STATEMENT_ID} but carries no latent regions"
            )
        return validate_challenge1(fig, record.latent).ok
    if record.statement_id not in statements:
        raise UnknownStatementId(f"record {record.id} refers to unknown statement {record.statement_id!r}")
    return evaluate(statements[record.statement_id], fig, universe=universe, gestalt_config=gestalt_config)


def check_labels(
    records: Sequence[DatasetRecord],
    statements: Mapping[str, Statement],
    universe: UniverseConfig,
    gestalt_config: GestaltConfig | None = None,
) -> None:
    for rec in records:
        if rec.label not in LABELS:
            raise LabelInconsistency(f"record {rec.id} has unknown label {rec.label!r}")
        truth = record_truth(rec, statements, universe, gestalt_config)
        want = rec.label == "true"
        if truth != want:
            raise LabelInconsistency(
                f"record {rec.id} is labeled {rec.label!r} but its statement "
                f"evaluates {truth} on the stored figure"
            )


def confusion(
    records: Sequence[DatasetRecord],
    hypothesis: Statement,
    universe: UniverseConfig,
    gestalt_config: GestaltConfig | None = None,
) -> dict:
    """Confusion counts of a hypothesis against stored labels. The
    counterfactual class counts as a negative label and is also broken
    out separately, since near-misses are the interesting errors."""
    out = {"tp": 0, "fn": 0, "fp": 0, "tn": 0, "counterfactual_fp": 0}
    for rec in records:
        pred = evaluate(hypothesis, rec.figure, universe=universe, gestalt_config=gestalt_config)
        actual = rec.label == "true"
        if actual and pred:
            out["tp"] += 1
        elif actual:
            out["fn"] += 1
        elif pred:
            out["fp"] += 1
            if rec.label == "counterfactual":
                out["counterfactual_fp"] += 1
        else:
            out["tn"] += 1
    n = len(records)
    out["accuracy"] = (out["tp"] + out["tn"]) / n if n else 0.0
    return out


# --------------------------------------------------------------------------
# universe <-> ini


def _universe_to_ini(u: UniverseConfig, cp: configparser.ConfigParser) -> None:
    cp["universe"] = {
        "n_min": str(u.n_min),
        "n_max": str(u.n_max),
        "allowed_shapes": ",".join(u.allowed_shapes),
        "allowed_colors": ",".join(u.allowed_colors),
        "size_min": repr(u.size_min),
        "size_max": repr(u.size_max),
        "small_big_threshold": repr(u.small_big_threshold),
        "min_gap": repr(u.min_gap),
        "seed": str(u.seed),
    }


def universe_from_ini(section: Mapping[str, str]) -> UniverseConfig:
    try:
        return UniverseConfig(
            n_min=int(section["n_min"]),
            n_max=int(section["n_max"]),
            allowed_shapes=tuple(s for s in section["allowed_shapes"].split(",") if s),
            allowed_colors=tuple(s for s in section["allowed_colors"].split(",") if s),
            size_min=float(section["size_min"]),
            size_max=float(section["size_max"]),
            small_big_threshold=float(section["small_big_threshold"]),
            min_gap=float(section["min_gap"]),
            seed=int(section.get("seed", "0")),
        )
    except (KeyError, ValueError) as e:
        raise ParseFailure(f"bad universe section: {e}") from e


# --------------------------------------------------------------------------
# write / read


def write_dataset(
    root: str | Path,
    records: Sequence[DatasetRecord],
    statements: Mapping[str, Statement],
    universe: UniverseConfig,
    *,
    style: RenderStyle | None = None,
    edit_trails: Mapping[str, Sequence] | None = None,
    gestalt_config: GestaltConfig | None = None,
    verify: bool = True,
    render: bool = True,
) -> Dataset:
    """Write a dataset directory; records get image paths assigned
    per class in input order."""
    out = Path(root)
    if verify:
        check_labels(records, statements, universe, gestalt_config)

    counters = {label: 0 for label in LABELS}
    final: list[DatasetRecord] = []
    for rec in records:
        if rec.label not in counters:
            raise LabelInconsistency(f"record {rec.id} has unknown label {rec.label!r}")
        idx = counters[rec.label]
        counters[rec.label] += 1
        path = rec.image_path or f"{rec.label}/{idx:05d}.svg"
        final.append(replace(rec, image_path=path))

    try:
        out.mkdir(parents=True, exist_ok=True)
        if render:
            for rec in final:
                save_svg(rec.figure, out / rec.image_path, style)
        with (out / MANIFEST_NAME).open("w", encoding="utf-8") as fh:
            for rec in final:
                fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
        if statements:
            save_statements(dict(statements), out / STATEMENTS_NAME)
        cp = configparser.ConfigParser()
        _universe_to_ini(universe, cp)
        cp["dataset"] = {
            "records": str(len(final)),
            "statements": ",".join(statements.keys()),
            "classes": ",".join(label for label in LABELS if counters[label]),
        }
        with (out / CONFIG_NAME).open("w", encoding="utf-8") as fh:
            cp.write(fh)
        trails: dict[str, tuple[dict, ...]] = {}
        if edit_trails:
            with (out / EDITS_NAME).open("w", encoding="utf-8") as fh:
                for rid, ops in edit_trails.items():
                    ser = tuple(op.to_dict() if hasattr(op, "to_dict") else dict(op) for op in ops)
                    trails[rid] = ser
                    fh.write(json.dumps({"id": rid, "edits": list(ser)}, sort_keys=True) + "\n")
    except OSError as e:
        raise IoFailure(f"cannot write dataset under {out}: {e}") from e

    return Dataset(out, universe, dict(statements), tuple(final), trails)


def read_dataset(
    root: str | Path,
    *,
    gestalt_config: GestaltConfig | None = None,
    verify: bool = True,
    check_images: bool = True,
) -> Dataset:
    out = Path(root)
    ini = out / CONFIG_NAME
    if not ini.is_file():
        raise IoFailure(f"{out} is not a dataset directory: missing {CONFIG_NAME}")
    cp = configparser.ConfigParser()
    try:
        cp.read_string(ini.read_text(encoding="utf-8"), source=str(ini))
    except (OSError, configparser.Error) as e:
        raise ParseFailure(f"cannot parse {ini}: {e}", path=str(ini)) from e
    if "universe" not in cp:
        raise ParseFailure(f"{ini} lacks a [universe] section", path=str(ini))
    universe = universe_from_ini(cp["universe"])

    stmt_path = out / STATEMENTS_NAME
    statements = load_statements(stmt_path, universe) if stmt_path.is_file() else {}

    manifest = out / MANIFEST_NAME
    if not manifest.is_file():
        raise IoFailure(f"missing {manifest}")
    records: list[DatasetRecord] = []
    try:
        lines = manifest.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise IoFailure(f"cannot read {manifest}: {e}") from e
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            rec = DatasetRecord.from_dict(d)
        except (ValueError, KeyError, TypeError) as e:
            raise ParseFailure(
                f"bad record on line {lineno}: {e}", path=str(manifest), line=lineno
            ) from e
        records.append(rec)

    if check_images:
        for rec in records:
            if rec.image_path and not (out / rec.image_path).is_file():
                raise IoFailure(f"record {rec.id}: image {rec.image_path} missing under {out}")

    trails: dict[str, tuple[dict, ...]] = {}
    edits = out / EDITS_NAME
    if edits.is_file():
        for lineno, line in enumerate(edits.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                trails[str(d["id"])] = tuple(dict(e) for e in d["edits"])
            except (ValueError, KeyError, TypeError) as e:
                raise ParseFailure(
                    f"bad edit trail on line {lineno}: {e}", path=str(edits), line=lineno
                ) from e

    if verify:
        check_labels(records, statements, universe, gestalt_config)
    return Dataset(out, universe, statements, tuple(records), trails)
