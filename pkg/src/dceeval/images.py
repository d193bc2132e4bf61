"""Image and volume data model: ingestion, resizing, stacking, subtraction.

All pixel data is 8-bit grayscale in [0, 255]. Slices carry identity
metadata (case, DCE phase, axial slice index) so that pairing across
datasets can be done by identity alone.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image as PILImage


class Phase(Enum):
    """DCE acquisition phase: pre-contrast plus three post-contrast timepoints."""

    PRE = "PRE"
    DCE_P1 = "DCE_P1"
    DCE_P2 = "DCE_P2"
    DCE_P3 = "DCE_P3"


POST_PHASES = (Phase.DCE_P1, Phase.DCE_P2, Phase.DCE_P3)

_SLICE_NAME_RE = re.compile(
    r"^(?P<case>.+)_(?P<phase>PRE|DCE_P1|DCE_P2|DCE_P3)_(?P<idx>\d{4,})$"
)


@dataclass(frozen=True)
class Image2D:
    """One axial grayscale slice with identity metadata.

    pixels is a read-only (height, width) uint8 array.
    """

    pixels: np.ndarray
    case_id: str
    phase: Phase
    slice_index: int

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"pixels must be 2-D, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {px.dtype}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image dimensions must be at least 1x1")
        if self.slice_index < 0:
            raise ValueError(f"slice_index must be >= 0, got {self.slice_index}")
        px = px.copy() if px.flags.writeable else px
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def filename(self) -> str:
        """Canonical on-disk name; lexicographic order equals stack order."""
        return f"{self.case_id}_{self.phase.value}_{self.slice_index:04d}.png"


@dataclass(frozen=True)
class Volume:
    """Ordered stack of slices forming one case/phase acquisition."""

    slices: tuple[Image2D, ...]
    voxel_values_raw: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.slices:
            raise ValueError("volume must contain at least one slice")
        first = self.slices[0]
        for i, s in enumerate(self.slices):
            if (s.width, s.height) != (first.width, first.height):
                raise ValueError(
                    f"slice {i} has dims {s.width}x{s.height}, "
                    f"expected {first.width}x{first.height}"
                )
            if s.case_id != first.case_id or s.phase != first.phase:
                raise ValueError(f"slice {i} has mismatched case/phase identity")
            if s.slice_index != i:
                if i > 0 and self.slices[i - 1].slice_index + 1 < s.slice_index:
                    raise ValueError(f"gap at index {self.slices[i - 1].slice_index + 1}")
                raise ValueError(
                    f"slice indices must be consecutive from 0; position {i} "
                    f"holds index {s.slice_index}"
                )

    @property
    def width(self) -> int:
        return self.slices[0].width

    @property
    def height(self) -> int:
        return self.slices[0].height

    @property
    def depth(self) -> int:
        return len(self.slices)

    @property
    def case_id(self) -> str:
        return self.slices[0].case_id

    @property
    def phase(self) -> Phase:
        return self.slices[0].phase

    def to_array(self) -> np.ndarray:
        """(depth, height, width) uint8 view of the stacked slices."""
        return np.stack([s.pixels for s in self.slices], axis=0)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned lesion ROI; coordinates are inclusive-exclusive."""

    case_id: str
    x0: int
    y0: int
    x1: int
    y1: int
    slice_lo: int
    slice_hi: int

    def __post_init__(self):
        if not (0 <= self.x0 < self.x1):
            raise ValueError(f"need 0 <= x0 < x1, got x0={self.x0}, x1={self.x1}")
        if not (0 <= self.y0 < self.y1):
            raise ValueError(f"need 0 <= y0 < y1, got y0={self.y0}, y1={self.y1}")
        if not (0 <= self.slice_lo < self.slice_hi):
            raise ValueError(
                f"need 0 <= slice_lo < slice_hi, got {self.slice_lo}, {self.slice_hi}"
            )

    def fits(self, width: int, height: int, depth: int) -> bool:
        return self.x1 <= width and self.y1 <= height and self.slice_hi <= depth


def round_half_up(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer with .5 going up (numpy rounds half to even)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def normalize_volume(
    raw: np.ndarray,
    case_id: str = "case",
    phase: Phase = Phase.PRE,
    keep_raw: bool = True,
) -> Volume:
    """Min-max normalize a raw (depth, height, width) array to [0, 255].

    v' = round_half_up((v - min) / (max - min) * 255). A constant volume
    maps to all zeros.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[np.newaxis, :, :]
    if arr.ndim != 3 or arr.size == 0:
        raise ValueError(f"raw volume must be a non-empty 3-D array, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        idx = tuple(int(v) for v in np.argwhere(bad)[0])
        raise ValueError(f"non-finite value at voxel index {idx}")
    lo, hi = arr.min(), arr.max()
    if hi > lo:
        scaled = round_half_up((arr - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(arr)
    pixels = np.clip(scaled, 0, 255).astype(np.uint8)
    slices = tuple(
        Image2D(pixels[k], case_id=case_id, phase=phase, slice_index=k)
        for k in range(pixels.shape[0])
    )
    return Volume(slices, voxel_values_raw=np.asarray(raw) if keep_raw else None)


def resize_to_unit_aspect(img: Image2D, target_w: int, target_h: int) -> Image2D:
    """Bilinear resize with half-pixel-centered sampling and round-half-up."""
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {target_w}x{target_h}")
    src = img.pixels.astype(np.float64)
    h, w = src.shape
    if (target_w, target_h) == (w, h):
        return img

    def _coords(n_dst: int, n_src: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5
        x = np.clip(x, 0.0, n_src - 1.0)
        lo = np.floor(x).astype(np.intp)
        hi = np.minimum(lo + 1, n_src - 1)
        return lo, hi, x - lo

    ylo, yhi, wy = _coords(target_h, h)
    xlo, xhi, wx = _coords(target_w, w)
    top = src[ylo][:, xlo] * (1 - wx) + src[ylo][:, xhi] * wx
    bot = src[yhi][:, xlo] * (1 - wx) + src[yhi][:, xhi] * wx
    out = top * (1 - wy[:, None]) + bot * wy[:, None]
    out = np.clip(round_half_up(out), 0, 255).astype(np.uint8)
    return Image2D(out, img.case_id, img.phase, img.slice_index)


def stack_volume(slices: list[Image2D] | tuple[Image2D, ...]) -> Volume:
    """Stack ordered slices into a volume, preserving pixels bit-exactly."""
    return Volume(tuple(slices))


def extract_slices(vol: Volume) -> list[Image2D]:
    """Axial slices of a volume, in stack order."""
    return list(vol.slices)


def subtraction_image(pre: Image2D, post: Image2D) -> Image2D:
    """Post minus pre with negative values clipped to 0."""
    if (pre.width, pre.height) != (post.width, post.height):
        raise ValueError(
            f"dimension mismatch: pre {pre.width}x{pre.height} "
            f"vs post {post.width}x{post.height}"
        )
    diff = post.pixels.astype(np.int16) - pre.pixels.astype(np.int16)
    out = np.maximum(diff, 0).astype(np.uint8)
    return Image2D(out, post.case_id, post.phase, post.slice_index)


# --- on-disk formats -------------------------------------------------------

def parse_slice_filename(name: str) -> tuple[str, Phase, int]:
    stem = name[:-4] if name.lower().endswith(".png") else name
    m = _SLICE_NAME_RE.match(stem)
    if m is None:
        raise ValueError(f"file name {name!r} does not follow <case>_<phase>_<index>.png")
    return m.group("case"), Phase(m.group("phase")), int(m.group("idx"))


def read_png(path: str | Path, case_id=None, phase=None, slice_index=None) -> Image2D:
    """Read an 8-bit grayscale PNG; 3-channel accepted only if channels match.

    Identity metadata is parsed from the file name unless given explicitly.
    """
    path = Path(path)
    if case_id is None or phase is None or slice_index is None:
        case_id, phase, slice_index = parse_slice_filename(path.name)
    with PILImage.open(path) as im:
        if im.mode == "L":
            px = np.asarray(im, dtype=np.uint8)
        elif im.mode == "RGB":
            arr = np.asarray(im, dtype=np.uint8)
            if not (arr[..., 0] == arr[..., 1]).all() or not (arr[..., 0] == arr[..., 2]).all():
                raise ValueError(f"{path}: 3-channel image with differing channels rejected")
            px = arr[..., 0]
        else:
            raise ValueError(f"{path}: unsupported image mode {im.mode!r}; need 8-bit gray")
    return Image2D(px, case_id, phase, slice_index)


def write_png(img: Image2D, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / img.filename()
    PILImage.fromarray(img.pixels, mode="L").save(path, compress_level=1)
    return path


def write_volume_dir(vol: Volume, directory: str | Path, manifest: bool = True) -> Path:
    """Write a volume as slice PNGs plus an optional JSON sidecar manifest."""
    directory = Path(directory)
    for s in vol.slices:
        write_png(s, directory)
    if manifest:
        meta = {
            "case_id": vol.case_id,
            "phase": vol.phase.value,
            "width": vol.width,
            "height": vol.height,
            "slice_count": vol.depth,
        }
        (directory / "manifest.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n"
        )
    return directory


def read_volume_dir(directory: str | Path) -> Volume:
    """Read a directory of slice PNGs back into a volume.

    Validates against the sidecar manifest when one is present.
    """
    directory = Path(directory)
    files = sorted(p for p in directory.glob("*.png"))
    if not files:
        raise ValueError(f"no PNG slices found in {directory}")
    parsed = sorted(
        (parse_slice_filename(p.name) + (p,) for p in files), key=lambda t: t[2]
    )
    slices = [read_png(p, c, ph, i) for c, ph, i, p in parsed]
    vol = Volume(tuple(slices))
    manifest_path = directory / "manifest.json"
    if manifest_path.exists():
        meta = json.loads(manifest_path.read_text())
        actual = {
            "case_id": vol.case_id,
            "phase": vol.phase.value,
            "width": vol.width,
            "height": vol.height,
            "slice_count": vol.depth,
        }
        for key, want in meta.items():
            if key in actual and actual[key] != want:
                raise ValueError(
                    f"{directory}: manifest says {key}={want}, found {actual[key]}"
                )
    return vol


BBOX_CSV_HEADER = ["case_id", "x0", "y0", "x1", "y1", "slice_lo", "slice_hi"]


def read_bboxes(path: str | Path) -> dict[str, BoundingBox]:
    """Read lesion bounding boxes; one annotation per case across all phases."""
    boxes: dict[str, BoundingBox] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != BBOX_CSV_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(BBOX_CSV_HEADER)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            box = BoundingBox(
                case_id=row["case_id"],
                x0=int(row["x0"]), y0=int(row["y0"]),
                x1=int(row["x1"]), y1=int(row["y1"]),
                slice_lo=int(row["slice_lo"]), slice_hi=int(row["slice_hi"]),
            )
            boxes[box.case_id] = box
    return boxes


def write_bboxes(boxes: list[BoundingBox] | dict[str, BoundingBox], path: str | Path):
    if isinstance(boxes, dict):
        boxes = [boxes[k] for k in sorted(boxes)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BBOX_CSV_HEADER)
        for b in boxes:
            writer.writerow([b.case_id, b.x0, b.y0, b.x1, b.y1, b.slice_lo, b.slice_hi])
