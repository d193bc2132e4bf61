"""Fréchet distance between image sets via Gaussian fits on embedding
features, plus a deterministic built-in baseline extractor and the
FeatureSet binary file format.

The distance uses the symmetric sandwich form
tr((Sx^{1/2} Sy Sx^{1/2})^{1/2}) with eigenvalue clamping, which tolerates
singular covariances (n < d is allowed, as in routine FID practice).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .images import Image2D

FSET_MAGIC = b"FSET"
FSET_VERSION = 1
BASELINE_EXTRACTOR_ID = "baseline-avgpool-8x8"

# roundoff tolerance: a final result below this magnitude of negative is a bug
_NEGATIVE_TOLERANCE = 1e-8
_RIDGE = 1e-6


@dataclass(frozen=True)
class FeatureSet:
    """n x d embedding matrix, one row per image, with extractor identity."""

    data: np.ndarray
    extractor_id: str

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"feature matrix must be 2-D and non-empty, got {arr.shape}")
        if not np.isfinite(arr).all():
            idx = tuple(int(v) for v in np.argwhere(~np.isfinite(arr))[0])
            raise ValueError(f"non-finite feature value at {idx}")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class GaussianFit:
    """Mean vector and symmetrized covariance of one feature set."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64).reshape(-1)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if sigma.shape != (mu.size, mu.size):
            raise ValueError(f"sigma shape {sigma.shape} does not match d={mu.size}")
        if np.abs(sigma - sigma.T).max(initial=0.0) > 1e-12:
            sigma = (sigma + sigma.T) / 2.0
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def d(self) -> int:
        return self.mu.size


def fit_gaussian(fs: FeatureSet) -> GaussianFit:
    """Column means and unbiased (n-1) covariance, symmetrized."""
    if fs.n < 2:
        raise ValueError(f"need at least 2 samples to fit a covariance, got {fs.n}")
    mu = fs.data.mean(axis=0)
    centered = fs.data - mu
    sigma = centered.T @ centered / (fs.n - 1)
    sigma = (sigma + sigma.T) / 2.0
    return GaussianFit(mu=mu, sigma=sigma)


def _clamped_eigvals(w: np.ndarray) -> np.ndarray:
    # zero everything below a relative floor: sqrt() of roundoff-sized
    # eigenvalues (~eps*lambda_max) would otherwise pollute singular cases
    floor = 1e-12 * max(float(w.max(initial=0.0)), 0.0)
    return np.where(w > floor, w, 0.0)


def _sqrt_psd(sym: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(sym)
    w = _clamped_eigvals(w)
    return (v * np.sqrt(w)) @ v.T


def _trace_sqrt_product(sx: np.ndarray, sy: np.ndarray) -> float:
    half = _sqrt_psd(sx)
    inner = half @ sy @ half
    w = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    return float(np.sqrt(_clamped_eigvals(w)).sum())


def frechet_distance(x: GaussianFit, y: GaussianFit) -> float:
    """||mu_x - mu_y||^2 + tr(Sx + Sy - 2 (Sx Sy)^{1/2}), clamped at 0."""
    if x.d != y.d:
        raise ValueError(f"dimension mismatch: {x.d} vs {y.d}")
    diff = x.mu - y.mu
    try:
        tr_sqrt = _trace_sqrt_product(x.sigma, y.sigma)
    except np.linalg.LinAlgError:
        ridge = _RIDGE * np.eye(x.d)
        try:
            tr_sqrt = _trace_sqrt_product(x.sigma + ridge, y.sigma + ridge)
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"eigendecomposition failed even with ridge: {exc}") from exc
    fd = float(diff @ diff + np.trace(x.sigma) + np.trace(y.sigma) - 2.0 * tr_sqrt)
    if fd < -_NEGATIVE_TOLERANCE:
        raise ValueError(f"Fréchet distance came out negative ({fd}); inputs are suspect")
    return max(fd, 0.0)


def frechet_between_sets(a: FeatureSet, b: FeatureSet) -> float:
    if a.d != b.d:
        raise ValueError(f"feature dimension mismatch: {a.d} vs {b.d}")
    return frechet_distance(fit_gaussian(a), fit_gaussian(b))


def _pad_replicate(px: np.ndarray, grid: int) -> np.ndarray:
    h, w = px.shape
    ph = (-h) % grid
    pw = (-w) % grid
    if ph or pw:
        px = np.pad(px, ((0, ph), (0, pw)), mode="edge")
    return px


def baseline_extract(images: list[Image2D], grid: int = 8) -> FeatureSet:
    """Deterministic stand-in extractor: 8x8 block means scaled to [0, 1].

    Lets FID-style evaluation run without a pretrained network.
    """
    if not images:
        raise ValueError("cannot extract features from an empty image list")
    dims = {(im.width, im.height) for im in images}
    if len(dims) > 1:
        raise ValueError(f"all images must share dimensions, saw {sorted(dims)}")
    rows = []
    for im in images:
        px = _pad_replicate(im.pixels.astype(np.float64), grid)
        h, w = px.shape
        blocks = px.reshape(grid, h // grid, grid, w // grid).mean(axis=(1, 3))
        rows.append(blocks.reshape(-1) / 255.0)
    return FeatureSet(np.asarray(rows), extractor_id=BASELINE_EXTRACTOR_ID)


# --- FeatureSet binary format ----------------------------------------------
#
# magic "FSET" | u32 version | u64 n | u64 d | u32 id_len | id utf-8
# | n*d float32 little-endian, row-major

_MAX_ELEMENTS = 1 << 40


def write_featureset(fs: FeatureSet, path: str | Path):
    ident = fs.extractor_id.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(FSET_MAGIC)
        fh.write(struct.pack("<I", FSET_VERSION))
        fh.write(struct.pack("<QQ", fs.n, fs.d))
        fh.write(struct.pack("<I", len(ident)))
        fh.write(ident)
        fh.write(fs.data.astype("<f4").tobytes(order="C"))


def read_featureset(path: str | Path) -> FeatureSet:
    blob = Path(path).read_bytes()
    if blob[:4] != FSET_MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:4]!r} at offset 0")
    off = 4
    try:
        (version,) = struct.unpack_from("<I", blob, off); off += 4
        n, d = struct.unpack_from("<QQ", blob, off); off += 16
        (id_len,) = struct.unpack_from("<I", blob, off); off += 4
    except struct.error as exc:
        raise ValueError(f"{path}: truncated header at offset {off}: {exc}") from exc
    if version != FSET_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    if n * d > _MAX_ELEMENTS or n < 1 or d < 1:
        raise ValueError(f"{path}: dimension overflow (n={n}, d={d}) at offset 8")
    if len(blob) < off + id_len:
        raise ValueError(f"{path}: truncated extractor_id at offset {off}")
    extractor_id = blob[off:off + id_len].decode("utf-8")
    off += id_len
    need = n * d * 4
    if len(blob) - off < need:
        have_rows = (len(blob) - off) // (d * 4)
        raise ValueError(
            f"{path}: truncated payload at offset {off}: "
            f"declared {n} rows, only {have_rows} present"
        )
    data = np.frombuffer(blob, dtype="<f4", count=n * d, offset=off)
    return FeatureSet(data.reshape(n, d).astype(np.float64), extractor_id=extractor_id)


def read_featureset_csv(path: str | Path, extractor_id: str) -> FeatureSet:
    """Fallback import: headerless CSV, one feature row per line."""
    data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return FeatureSet(data, extractor_id=extractor_id)
