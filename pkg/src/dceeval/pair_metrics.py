"""Full-reference pair metrics (MSE, MAE, PSNR, SSIM, MS-SSIM), Dice overlap,
and dataset-level aggregation with mean and standard deviation.

All metrics operate on the [0, 255] intensity scale in double precision.
SSIM uses the canonical settings of the original reference: 11x11 Gaussian
window, sigma 1.5, K1=0.01, K2=0.03, L=255; MS-SSIM uses 5 dyadic scales
with the standard published weights.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .images import Image2D

DYNAMIC_RANGE = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
C1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
C2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2

MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
MSSSIM_SCALES = len(MSSSIM_WEIGHTS)
# five dyadic scales, each needing an 11-tap valid window
MSSSIM_MIN_DIM = SSIM_WINDOW * 2 ** (MSSSIM_SCALES - 1)

PAIR_METRIC_NAMES = ("mse", "mae", "psnr", "ssim", "ms_ssim")


def _as_f64(img) -> np.ndarray:
    px = img.pixels if isinstance(img, Image2D) else np.asarray(img)
    if px.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got shape {px.shape}")
    return px.astype(np.float64)


def _check_dims(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def mse(a, b) -> float:
    a, b = _as_f64(a), _as_f64(b)
    _check_dims(a, b)
    d = a - b
    return float(np.mean(d * d))


def mae(a, b) -> float:
    a, b = _as_f64(a), _as_f64(b)
    _check_dims(a, b)
    return float(np.mean(np.abs(a - b)))


def psnr(a, b) -> float:
    """10*log10(255^2 / MSE) in decibels; +inf for identical images."""
    m = mse(a, b)
    if m == 0.0:
        return math.inf
    return 10.0 * math.log10(DYNAMIC_RANGE ** 2 / m)


def _gaussian_kernel_1d() -> np.ndarray:
    r = np.arange(SSIM_WINDOW, dtype=np.float64) - (SSIM_WINDOW - 1) / 2
    k = np.exp(-(r * r) / (2.0 * SSIM_SIGMA ** 2))
    return k / k.sum()


_KERNEL_1D = _gaussian_kernel_1d()
_HALF = SSIM_WINDOW // 2


def _filter_valid(img: np.ndarray) -> np.ndarray:
    """Separable Gaussian filtering restricted to fully-inside windows."""
    out = cv2.sepFilter2D(img, cv2.CV_64F, _KERNEL_1D, _KERNEL_1D,
                          borderType=cv2.BORDER_REPLICATE)
    return out[_HALF:-_HALF, _HALF:-_HALF]


def _ssim_components(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Mean SSIM map and mean contrast-structure map over valid windows."""
    mu_a = _filter_valid(a)
    mu_b = _filter_valid(b)
    var_a = _filter_valid(a * a)
    var_b = _filter_valid(b * b)
    cov_ab = _filter_valid(a * b)
    mu_ab = mu_a * mu_b
    mu_a2 = mu_a * mu_a
    mu_b2 = mu_b * mu_b
    var_a -= mu_a2
    var_b -= mu_b2
    cov_ab -= mu_ab
    lum = (2.0 * mu_ab + C1) / (mu_a2 + mu_b2 + C1)
    cs = (2.0 * cov_ab + C2) / (var_a + var_b + C2)
    return float(np.mean(lum * cs)), float(np.mean(cs))


def ssim(a, b) -> float:
    a, b = _as_f64(a), _as_f64(b)
    _check_dims(a, b)
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(
            f"image {a.shape[1]}x{a.shape[0]} smaller than the "
            f"{SSIM_WINDOW}x{SSIM_WINDOW} window"
        )
    return _ssim_components(a, b)[0]


def _downsample2(img: np.ndarray) -> np.ndarray:
    """2x2 average pooling; trailing odd row/column dropped."""
    h, w = img.shape[0] // 2 * 2, img.shape[1] // 2 * 2
    c = img[:h, :w]
    return (c[0::2, 0::2] + c[0::2, 1::2] + c[1::2, 0::2] + c[1::2, 1::2]) / 4.0


def _ms_ssim_with_first(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """(ms_ssim, scale-1 ssim); lets callers reuse the full-resolution pass."""
    if min(a.shape) < MSSSIM_MIN_DIM:
        raise ValueError(
            f"image {a.shape[1]}x{a.shape[0]} too small for {MSSSIM_SCALES} "
            f"scales; both dimensions must be at least {MSSSIM_MIN_DIM}"
        )
    result = 1.0
    first_sim = 1.0
    for level, weight in enumerate(MSSSIM_WEIGHTS):
        sim, cs = _ssim_components(a, b)
        if level == 0:
            first_sim = sim
        term = sim if level == MSSSIM_SCALES - 1 else cs
        result *= max(term, 0.0) ** weight
        if level < MSSSIM_SCALES - 1:
            a, b = _downsample2(a), _downsample2(b)
    return float(result), first_sim


def ms_ssim(a, b) -> float:
    """Multi-scale SSIM over 5 dyadic scales.

    Contrast-structure terms are clamped at 0 before exponentiation so that
    fractional powers stay defined; the result lies in [0, 1].
    """
    a, b = _as_f64(a), _as_f64(b)
    _check_dims(a, b)
    return _ms_ssim_with_first(a, b)[0]


def dice(a, b) -> float:
    """2|A∩B| / (|A|+|B|) overlap between binary masks; both empty -> 1.0."""
    a = np.asarray(a).astype(bool)
    b = np.asarray(b).astype(bool)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / total


@dataclass(frozen=True)
class PairMetricsRecord:
    pair_id: str
    mse: float
    mae: float
    psnr: float
    ssim: float | None = None
    ms_ssim: float | None = None

    def value(self, metric: str) -> float | None:
        return getattr(self, metric)


def compute_pair_record(
    pair_id: str, a, b, metrics: tuple[str, ...] = PAIR_METRIC_NAMES
) -> PairMetricsRecord:
    """Evaluate the selected metrics for one image pair.

    mse/mae/psnr are always present in the record; the single float
    conversion and the full-resolution SSIM pass are shared so that the
    full metric suite stays cheap at batch scale.
    """
    unknown = set(metrics) - set(PAIR_METRIC_NAMES)
    if unknown:
        raise ValueError(f"unknown metrics {sorted(unknown)}; choose from {PAIR_METRIC_NAMES}")
    af, bf = _as_f64(a), _as_f64(b)
    _check_dims(af, bf)
    d = af - bf
    mse_v = float(np.mean(d * d))
    mae_v = float(np.mean(np.abs(d)))
    psnr_v = math.inf if mse_v == 0.0 else 10.0 * math.log10(DYNAMIC_RANGE ** 2 / mse_v)
    ssim_v = ms_ssim_v = None
    if "ms_ssim" in metrics:
        ms_ssim_v, first_sim = _ms_ssim_with_first(af, bf)
        if "ssim" in metrics:
            ssim_v = first_sim
    elif "ssim" in metrics:
        ssim_v = ssim(af, bf)
    return PairMetricsRecord(
        pair_id=pair_id, mse=mse_v, mae=mae_v, psnr=psnr_v,
        ssim=ssim_v, ms_ssim=ms_ssim_v,
    )


@dataclass(frozen=True)
class DatasetMetricsSummary:
    """Per-metric mean and population standard deviation across pairs.

    Pairs with infinite PSNR are excluded from the PSNR statistics; their
    count is reported in psnr_excluded_count.
    """

    n_pairs: int
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)
    n: dict[str, int] = field(default_factory=dict)
    psnr_excluded_count: int = 0

    def to_json_dict(self) -> dict:
        metrics = {
            m: {"mean": self.mean[m], "std": self.std[m], "n": self.n[m]}
            for m in sorted(self.mean)
        }
        return {
            "metrics": metrics,
            "n_pairs": self.n_pairs,
            "psnr_excluded_count": self.psnr_excluded_count,
        }


def summarize_pairs(records: list[PairMetricsRecord]) -> DatasetMetricsSummary:
    """Arithmetic mean and population std per metric over a record set.

    Records are sorted by pair_id before reduction so the result does not
    depend on input order or worker count.
    """
    if not records:
        raise ValueError("cannot summarize an empty record list")
    records = sorted(records, key=lambda r: r.pair_id)
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    n: dict[str, int] = {}
    excluded = 0
    for m in PAIR_METRIC_NAMES:
        vals = [r.value(m) for r in records if r.value(m) is not None]
        if m == "psnr":
            finite = [v for v in vals if math.isfinite(v)]
            excluded = len(vals) - len(finite)
            vals = finite
        if not vals:
            continue
        arr = np.asarray(vals, dtype=np.float64)
        mean[m] = float(arr.mean())
        std[m] = float(arr.std())
        n[m] = len(vals)
    return DatasetMetricsSummary(
        n_pairs=len(records), mean=mean, std=std, n=n, psnr_excluded_count=excluded
    )


# --- report files ----------------------------------------------------------

PAIR_CSV_HEADER = ["pair_id", "mse", "mae", "psnr", "ssim", "ms_ssim"]


def _fmt(v: float | None) -> str:
    if v is None:
        return ""
    if math.isinf(v):
        return "inf"
    return repr(v)


def write_records_csv(records: list[PairMetricsRecord], path: str | Path):
    records = sorted(records, key=lambda r: r.pair_id)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PAIR_CSV_HEADER)
        for r in records:
            writer.writerow(
                [r.pair_id, _fmt(r.mse), _fmt(r.mae), _fmt(r.psnr),
                 _fmt(r.ssim), _fmt(r.ms_ssim)]
            )


def read_records_csv(path: str | Path) -> list[PairMetricsRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PAIR_CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(PAIR_CSV_HEADER)}")
        for row in reader:
            out.append(
                PairMetricsRecord(
                    pair_id=row["pair_id"],
                    mse=float(row["mse"]),
                    mae=float(row["mae"]),
                    psnr=float(row["psnr"]),
                    ssim=float(row["ssim"]) if row["ssim"] else None,
                    ms_ssim=float(row["ms_ssim"]) if row["ms_ssim"] else None,
                )
            )
    return out
