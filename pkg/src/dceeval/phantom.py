"""Deterministic lesion phantoms with programmed per-phase enhancement.

Phantoms serve as ground-truth oracles for the kinetics and metric
pipelines: an ellipsoidal lesion inside a noisy background, whose mean
intensity per DCE phase is programmed by a PhantomSpec. Noise comes from the Philox
counter-based generator, so identical specs produce bit-identical volumes
on every platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .images import (
    BoundingBox, Image2D, Phase, Volume, round_half_up, write_bboxes,
    write_volume_dir,
)

PHASE_ORDER = (Phase.PRE, Phase.DCE_P1, Phase.DCE_P2, Phase.DCE_P3)


@dataclass(frozen=True)
class PhantomSpec:
    case_id: str
    seed: int
    width: int
    height: int
    depth: int
    background_mean: float
    background_noise_amplitude: int
    lesion_center: tuple[float, float, float]   # (x, y, z)
    lesion_semi_axes: tuple[float, float, float]  # (rx, ry, rz)
    phase_means: dict[Phase, float] = field(default_factory=dict)

    def __post_init__(self):
        for p, v in self.phase_means.items():
            if not 0.0 <= v <= 255.0:
                raise ValueError(f"phase mean for {p.value} out of [0,255]: {v}")
        cx, cy, cz = self.lesion_center
        rx, ry, rz = self.lesion_semi_axes
        if min(rx, ry, rz) <= 0:
            raise ValueError("lesion semi-axes must be positive")
        if (cx - rx < 0 or cx + rx > self.width - 1
                or cy - ry < 0 or cy + ry > self.height - 1
                or cz - rz < 0 or cz + rz > self.depth - 1):
            raise ValueError("lesion ellipsoid extends outside the volume")

    def to_json_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "seed": self.seed,
            "width": self.width,
            "height": self.height,
            "depth": self.depth,
            "background_mean": self.background_mean,
            "background_noise_amplitude": self.background_noise_amplitude,
            "lesion_center": list(self.lesion_center),
            "lesion_semi_axes": list(self.lesion_semi_axes),
            "phase_means": {p.value: v for p, v in self.phase_means.items()},
        }

    @staticmethod
    def from_json_dict(raw: dict) -> "PhantomSpec":
        return PhantomSpec(
            case_id=raw["case_id"],
            seed=int(raw["seed"]),
            width=int(raw["width"]),
            height=int(raw["height"]),
            depth=int(raw["depth"]),
            background_mean=float(raw["background_mean"]),
            background_noise_amplitude=int(raw["background_noise_amplitude"]),
            lesion_center=tuple(float(v) for v in raw["lesion_center"]),
            lesion_semi_axes=tuple(float(v) for v in raw["lesion_semi_axes"]),
            phase_means={Phase(k): float(v) for k, v in raw["phase_means"].items()},
        )


@dataclass(frozen=True)
class PhantomResult:
    volumes: dict[Phase, Volume]
    bbox: BoundingBox
    mask: np.ndarray  # (depth, height, width) bool, lesion voxels


def _lesion_mask(spec: PhantomSpec) -> np.ndarray:
    cx, cy, cz = spec.lesion_center
    rx, ry, rz = spec.lesion_semi_axes
    z = (np.arange(spec.depth) - cz) / rz
    y = (np.arange(spec.height) - cy) / ry
    x = (np.arange(spec.width) - cx) / rx
    dist = (z[:, None, None] ** 2 + y[None, :, None] ** 2 + x[None, None, :] ** 2)
    return dist <= 1.0


def generate_phantom(spec: PhantomSpec) -> PhantomResult:
    """Build per-phase volumes, the tight lesion bounding box, and the mask."""
    if not spec.phase_means:
        raise ValueError("phase_means must name at least one phase")
    mask = _lesion_mask(spec)
    if not mask.any():
        raise ValueError("lesion ellipsoid contains no voxels")
    zs, ys, xs = np.nonzero(mask)
    bbox = BoundingBox(
        case_id=spec.case_id,
        x0=int(xs.min()), y0=int(ys.min()),
        x1=int(xs.max()) + 1, y1=int(ys.max()) + 1,
        slice_lo=int(zs.min()), slice_hi=int(zs.max()) + 1,
    )
    rng = np.random.Generator(np.random.Philox(spec.seed))
    amp = spec.background_noise_amplitude
    shape = (spec.depth, spec.height, spec.width)
    volumes: dict[Phase, Volume] = {}
    for phase in PHASE_ORDER:
        if phase not in spec.phase_means:
            continue
        base = np.full(shape, spec.background_mean, dtype=np.float64)
        base[mask] = spec.phase_means[phase]
        if amp > 0:
            base += rng.integers(-amp, amp + 1, size=shape)
        pixels = np.clip(round_half_up(base), 0, 255).astype(np.uint8)
        slices = tuple(
            Image2D(pixels[k], case_id=spec.case_id, phase=phase, slice_index=k)
            for k in range(spec.depth)
        )
        volumes[phase] = Volume(slices)
    return PhantomResult(volumes=volumes, bbox=bbox, mask=mask)


def write_phantom(result: PhantomResult, outdir: str | Path, spec: PhantomSpec | None = None):
    """Write phase volumes, mask PNGs, and the bbox CSV row to disk."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    case = result.bbox.case_id
    for phase, vol in result.volumes.items():
        write_volume_dir(vol, outdir / case / phase.value)
    mask_dir = outdir / case / "mask"
    mask_dir.mkdir(parents=True, exist_ok=True)
    for k in range(result.mask.shape[0]):
        img = (result.mask[k].astype(np.uint8)) * 255
        PILImage.fromarray(img, mode="L").save(
            mask_dir / f"{case}_mask_{k:04d}.png", compress_level=1
        )
    write_bboxes([result.bbox], outdir / case / "bboxes.csv")
    if spec is not None:
        (outdir / case / "phantom-spec.json").write_text(
            json.dumps(spec.to_json_dict(), indent=2, sort_keys=True) + "\n"
        )
