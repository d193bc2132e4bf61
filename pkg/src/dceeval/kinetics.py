"""Lesion-level contrast-enhancement kinetics.

For each case and DCE phase, all pixels inside the lesion bounding box are
pooled over the annotated axial slice range and summarized as mean and
population standard deviation. Case series are aggregated across a dataset
and compared between real and synthetic sources.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .images import BoundingBox, Phase, Volume

PHASE_ORDER = (Phase.PRE, Phase.DCE_P1, Phase.DCE_P2, Phase.DCE_P3)
POST_CONTRAST = (Phase.DCE_P1, Phase.DCE_P2, Phase.DCE_P3)


class Source(Enum):
    REAL = "real"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class PhaseStats:
    mean: float
    std: float
    pixel_count: int


@dataclass(frozen=True)
class KineticsSeries:
    """Per-phase bounding-box intensity statistics for one case."""

    case_id: str
    source: Source
    phases: dict[Phase, PhaseStats]
    missing_phases: tuple[Phase, ...] = ()


@dataclass(frozen=True)
class PhaseAggregate:
    """Dataset-level statistics for one phase.

    mean_of_means is the unweighted mean of case means; std_across_cases is
    the population std of those case means; std_within_pixels pools every
    bounding-box pixel of every case into one flat population std.
    """

    mean_of_means: float
    std_across_cases: float
    std_within_pixels: float


@dataclass(frozen=True)
class KineticsAggregate:
    source: Source
    n_cases: int
    phases: dict[Phase, PhaseAggregate] = field(default_factory=dict)


def case_kinetics(
    volumes: dict[Phase, Volume],
    bbox: BoundingBox,
    source: Source = Source.REAL,
    case_id: str | None = None,
) -> KineticsSeries:
    """Pool bbox pixels over the annotated slice range, per phase.

    Phases absent from `volumes` are omitted from the series and flagged.
    """
    if not volumes:
        raise ValueError("no volumes supplied")
    if case_id is None:
        case_id = next(iter(volumes.values())).case_id
    stats: dict[Phase, PhaseStats] = {}
    missing = []
    for phase in PHASE_ORDER:
        vol = volumes.get(phase)
        if vol is None:
            missing.append(phase)
            continue
        if not bbox.fits(vol.width, vol.height, vol.depth):
            raise ValueError(
                f"bbox for {bbox.case_id!r} out of bounds for {phase.value} volume "
                f"({vol.width}x{vol.height}x{vol.depth})"
            )
        region = vol.to_array()[bbox.slice_lo:bbox.slice_hi,
                                bbox.y0:bbox.y1, bbox.x0:bbox.x1]
        pixels = region.astype(np.float64).ravel()
        stats[phase] = PhaseStats(
            mean=float(pixels.mean()),
            std=float(pixels.std()),
            pixel_count=pixels.size,
        )
    return KineticsSeries(
        case_id=case_id, source=source, phases=stats, missing_phases=tuple(missing)
    )


def aggregate_kinetics(series: list[KineticsSeries]) -> KineticsAggregate:
    """Aggregate case series of one source across the dataset.

    Sorted by case_id before reduction, so the result is independent of
    input order and worker count.
    """
    if not series:
        raise ValueError("cannot aggregate an empty series list")
    sources = {s.source for s in series}
    if len(sources) > 1:
        raise ValueError(f"mixed sources in one aggregate: {sorted(s.value for s in sources)}")
    series = sorted(series, key=lambda s: s.case_id)
    phases: dict[Phase, PhaseAggregate] = {}
    for phase in PHASE_ORDER:
        per_case = [s.phases[phase] for s in series if phase in s.phases]
        if not per_case:
            continue
        means = np.asarray([p.mean for p in per_case])
        counts = np.asarray([p.pixel_count for p in per_case], dtype=np.float64)
        variances = np.asarray([p.std ** 2 for p in per_case])
        # pooled pixel statistics: equivalent to one flat pass over all pixels
        grand = float((counts * means).sum() / counts.sum())
        pooled_var = float(
            (counts * (variances + (means - grand) ** 2)).sum() / counts.sum()
        )
        phases[phase] = PhaseAggregate(
            mean_of_means=float(means.mean()),
            std_across_cases=float(means.std()),
            std_within_pixels=float(np.sqrt(pooled_var)),
        )
    return KineticsAggregate(source=series[0].source, n_cases=len(series), phases=phases)


def ordering_fraction(series: list[KineticsSeries]) -> float:
    """Fraction of cases whose post-contrast means strictly increase P1<P2<P3."""
    if not series:
        raise ValueError("cannot compute an ordering fraction on no cases")
    increasing = 0
    for s in series:
        for phase in POST_CONTRAST:
            if phase not in s.phases:
                raise ValueError(f"case {s.case_id!r} is missing phase {phase.value}")
        m1, m2, m3 = (s.phases[p].mean for p in POST_CONTRAST)
        if m1 < m2 < m3:
            increasing += 1
    return increasing / len(series)


def source_offset(
    real: KineticsAggregate, syn: KineticsAggregate
) -> dict[Phase, float]:
    """Signed per-phase offset: real mean-of-means minus synthetic."""
    if set(real.phases) != set(syn.phases):
        raise ValueError(
            f"phase mismatch: real has {sorted(p.value for p in real.phases)}, "
            f"synthetic has {sorted(p.value for p in syn.phases)}"
        )
    return {
        p: real.phases[p].mean_of_means - syn.phases[p].mean_of_means
        for p in PHASE_ORDER if p in real.phases
    }


# --- report files ----------------------------------------------------------

KINETICS_CSV_HEADER = ["case_id", "source", "phase", "mean", "std", "pixel_count"]


def write_series_csv(series: list[KineticsSeries], path: str | Path):
    series = sorted(series, key=lambda s: (s.source.value, s.case_id))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(KINETICS_CSV_HEADER)
        for s in series:
            for phase in PHASE_ORDER:
                if phase not in s.phases:
                    continue
                st = s.phases[phase]
                writer.writerow(
                    [s.case_id, s.source.value, phase.value,
                     repr(st.mean), repr(st.std), st.pixel_count]
                )


def aggregate_json_dict(agg: KineticsAggregate) -> dict:
    return {
        "source": agg.source.value,
        "n_cases": agg.n_cases,
        "phases": {
            p.value: {
                "mean_of_means": agg.phases[p].mean_of_means,
                "std_across_cases": agg.phases[p].std_across_cases,
                "std_within_pixels": agg.phases[p].std_within_pixels,
            }
            for p in PHASE_ORDER if p in agg.phases
        },
    }


def ordering_report_dict(series: list[KineticsSeries]) -> dict:
    frac = ordering_fraction(series)
    return {
        "n_cases": len(series),
        "n_increasing": round(frac * len(series)),
        "fraction": frac,
    }


def write_json(obj: dict, path: str | Path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
