"""Scaled aggregate measure for checkpoint selection.

Raw metric values from a cohort of training checkpoints are min-max scaled
per metric to [0, 1], higher-is-better metrics are reversed after scaling,
and the unweighted mean across metrics gives one score per checkpoint; the
argmin is the selected checkpoint.

The cohort is exactly the set of checkpoints passed to one call: adding or
removing a checkpoint re-anchors the per-metric min and max, which can
change every scaled value and the selection.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path


class Direction(Enum):
    LOWER_BETTER = "lower"
    HIGHER_BETTER = "higher"


# default registry; FID-family metrics match by prefix
DEFAULT_DIRECTIONS = {
    "mse": Direction.LOWER_BETTER,
    "mae": Direction.LOWER_BETTER,
    "lpips": Direction.LOWER_BETTER,
    "ssim": Direction.HIGHER_BETTER,
    "ms_ssim": Direction.HIGHER_BETTER,
    "psnr": Direction.HIGHER_BETTER,
    "dice": Direction.HIGHER_BETTER,
}


def default_direction(metric: str) -> Direction:
    key = metric.lower()
    if key in DEFAULT_DIRECTIONS:
        return DEFAULT_DIRECTIONS[key]
    if key.startswith("fid") or key.startswith("fd"):
        return Direction.LOWER_BETTER
    raise KeyError(
        f"no default direction for metric {metric!r}; supply one explicitly"
    )


@dataclass(frozen=True)
class CheckpointRecord:
    """Raw metric values for one training checkpoint."""

    checkpoint_id: str
    raw: dict[str, float]


@dataclass(frozen=True)
class SAMeTable:
    """Scaled values and aggregate scores for one cohort, in cohort order."""

    checkpoint_ids: tuple[str, ...]
    metrics: tuple[str, ...]
    scaled: dict[str, dict[str, float]]  # checkpoint -> metric -> [0,1]
    scores: dict[str, float]             # checkpoint -> aggregate score
    selected: str


def scale_cohort(
    records: list[CheckpointRecord],
    directions: dict[str, Direction] | None = None,
) -> SAMeTable:
    """Min-max scale each metric over the cohort and aggregate.

    Higher-is-better metrics are reversed after scaling so that smaller
    always means better. A metric that is constant across the cohort gets
    0.5 everywhere (it cannot discriminate).
    """
    if len(records) < 2:
        raise ValueError(f"cohort needs at least 2 checkpoints, got {len(records)}")
    metrics = tuple(records[0].raw.keys())
    metric_set = set(metrics)
    for r in records:
        missing = metric_set.symmetric_difference(r.raw)
        if missing:
            raise ValueError(
                f"checkpoint {r.checkpoint_id!r} has inconsistent metrics; "
                f"mismatch on {sorted(missing)}"
            )
        for m, v in r.raw.items():
            if not _finite(v):
                raise ValueError(f"non-finite value for {m!r} at {r.checkpoint_id!r}")
    dirs = {
        m: (directions[m] if directions and m in directions else default_direction(m))
        for m in metrics
    }
    scaled: dict[str, dict[str, float]] = {r.checkpoint_id: {} for r in records}
    for m in metrics:
        vals = [r.raw[m] for r in records]
        lo, hi = min(vals), max(vals)
        for r in records:
            if hi == lo:
                s = 0.5
            elif dirs[m] is Direction.HIGHER_BETTER:
                # algebraic form of 1 - minmax(x); bitwise equal to
                # min-max scaling the negated metric
                s = (hi - r.raw[m]) / (hi - lo)
            else:
                s = (r.raw[m] - lo) / (hi - lo)
            scaled[r.checkpoint_id][m] = s
    scores = {
        cid: sum(row.values()) / len(metrics) for cid, row in scaled.items()
    }
    order = tuple(r.checkpoint_id for r in records)
    selected = min(order, key=lambda cid: (scores[cid], order.index(cid)))
    return SAMeTable(
        checkpoint_ids=order, metrics=metrics, scaled=scaled,
        scores=scores, selected=selected,
    )


def select_checkpoint(table: SAMeTable) -> str:
    """Checkpoint with the minimal score; ties go to the earliest in cohort order."""
    return min(table.checkpoint_ids, key=lambda cid: (table.scores[cid],
                                                      table.checkpoint_ids.index(cid)))


def _finite(v: float) -> bool:
    return math.isfinite(v)


# --- files ------------------------------------------------------------------

def read_cohort_csv(path: str | Path) -> list[CheckpointRecord]:
    """One row per checkpoint: checkpoint_id,<metric>,<metric>,..."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or reader.fieldnames[0] != "checkpoint_id":
            raise ValueError(f"{path}: first column must be checkpoint_id")
        metrics = reader.fieldnames[1:]
        records = []
        for row in reader:
            records.append(
                CheckpointRecord(
                    checkpoint_id=row["checkpoint_id"],
                    raw={m: float(row[m]) for m in metrics},
                )
            )
    return records


def read_directions_json(path: str | Path) -> dict[str, Direction]:
    raw = json.loads(Path(path).read_text())
    return {m: Direction(v) for m, v in raw.items()}


def write_scaled_csv(table: SAMeTable, path: str | Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["checkpoint_id", *table.metrics, "same"])
        for cid in table.checkpoint_ids:
            writer.writerow(
                [cid, *(repr(table.scaled[cid][m]) for m in table.metrics),
                 repr(table.scores[cid])]
            )


def selection_json_dict(table: SAMeTable) -> dict:
    return {
        "selected": table.selected,
        "scores": {cid: table.scores[cid] for cid in table.checkpoint_ids},
    }
