"""Command-line surface for batch evaluation runs.

Every command writes its report files plus a run-manifest.json capturing
the configuration, input digests, and toolkit version. Reports are
byte-identical for identical inputs regardless of worker count: pair tasks
are computed independently and assembled after a deterministic sort.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import multiprocessing
import os
import sys
import traceback
from pathlib import Path

import click

from . import __version__
from . import frechet as fr
from . import images as im
from . import kinetics as kn
from . import pair_metrics as pm
from . import phantom as ph
from . import same as sm

PairKey = tuple[str, str, int]


def _err_json(exc: Exception) -> str:
    return json.dumps(
        {"error": type(exc).__name__, "message": str(exc)}, sort_keys=True
    )


def report_errors(fn):
    """Emit machine-readable error JSON on stderr and exit nonzero."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:
            print(_err_json(exc), file=sys.stderr)
            if os.environ.get("DCEEVAL_DEBUG"):
                traceback.print_exc()
            sys.exit(1)

    return wrapper


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("DCEEVAL_WORKERS", "1")))
    except ValueError:
        return 1


def _discover(root: Path) -> dict[PairKey, Path]:
    """Map (case_id, phase, slice_index) -> path for every PNG under root."""
    found: dict[PairKey, Path] = {}
    for path in sorted(root.rglob("*.png")):
        try:
            case, phase, idx = im.parse_slice_filename(path.name)
        except ValueError:
            continue
        key = (case, phase.value, idx)
        if key in found:
            raise ValueError(f"duplicate slice identity {key} at {path} and {found[key]}")
        found[key] = path
    return found


def _slice_paths(root: Path) -> list[Path]:
    """Sorted slice PNGs under root; files not following the naming
    convention (e.g. lesion masks) are skipped, as in pair discovery."""
    paths = []
    for path in sorted(root.rglob("*.png")):
        try:
            im.parse_slice_filename(path.name)
        except ValueError:
            continue
        paths.append(path)
    return paths


def _digest_root(root: Path) -> dict:
    h = hashlib.sha256()
    count = 0
    for path in sorted(root.rglob("*.png")):
        h.update(str(path.relative_to(root)).encode())
        h.update(hashlib.sha256(path.read_bytes()).digest())
        count += 1
    return {"path": str(root), "file_count": count, "sha256": h.hexdigest()}


def _write_manifest(out: Path, command: str, config: dict, inputs: list[Path]):
    manifest = {
        "command": command,
        "config": config,
        "inputs": [_digest_root(p) if p.is_dir() else _digest_file(p) for p in inputs],
        "toolkit_version": __version__,
    }
    (out / "run-manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def _digest_file(path: Path) -> dict:
    return {
        "path": str(path),
        "file_count": 1,
        "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
    }


def _write_json(obj: dict, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_unpaired(out: Path, only_a: list[Path], only_b: list[Path]):
    with open(out / "unpaired.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["side", "path"])
        for p in only_a:
            writer.writerow(["a", str(p)])
        for p in only_b:
            writer.writerow(["b", str(p)])


@click.group()
@click.version_option(__version__)
def main():
    """Batch evaluation toolkit for paired DCE-MRI synthesis."""


# --- evaluate-pairs ---------------------------------------------------------

_WORKER_METRICS: tuple[str, ...] = ()


def _init_worker(metrics: tuple[str, ...]):
    global _WORKER_METRICS
    _WORKER_METRICS = metrics


def _pair_task(args: tuple[str, str, str]) -> pm.PairMetricsRecord:
    pair_id, path_a, path_b = args
    a = im.read_png(path_a)
    b = im.read_png(path_b)
    return pm.compute_pair_record(pair_id, a, b, metrics=_WORKER_METRICS)


def _parse_metrics(spec: str) -> tuple[str, ...]:
    alias = {"msssim": "ms_ssim", "ms-ssim": "ms_ssim"}
    names = []
    for token in spec.split(","):
        token = token.strip().lower()
        if not token:
            continue
        names.append(alias.get(token, token))
    for n in names:
        if n not in pm.PAIR_METRIC_NAMES:
            raise click.BadParameter(f"unknown metric {n!r}")
    return tuple(names)


@main.command("evaluate-pairs")
@click.option("--inputs-a", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--inputs-b", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--workers", type=int, default=None, help="defaults to $DCEEVAL_WORKERS or 1")
@click.option("--metrics", default="mse,mae,psnr,ssim,msssim", show_default=True)
@report_errors
def evaluate_pairs(inputs_a: Path, inputs_b: Path, out: Path, workers, metrics):
    """Compute pair metrics over images matched by (case, phase, slice)."""
    workers = workers or _default_workers()
    metric_names = _parse_metrics(metrics)
    out.mkdir(parents=True, exist_ok=True)
    side_a = _discover(inputs_a)
    side_b = _discover(inputs_b)
    shared = sorted(set(side_a) & set(side_b))
    only_a = [side_a[k] for k in sorted(set(side_a) - set(side_b))]
    only_b = [side_b[k] for k in sorted(set(side_b) - set(side_a))]
    _write_unpaired(out, only_a, only_b)
    if not shared:
        raise ValueError("no matching pairs between the two input roots")
    tasks = [
        (f"{c}_{p}_{i:04d}", str(side_a[(c, p, i)]), str(side_b[(c, p, i)]))
        for c, p, i in shared
    ]
    if workers > 1:
        with multiprocessing.Pool(
            workers, initializer=_init_worker, initargs=(metric_names,)
        ) as pool:
            records = pool.map(_pair_task, tasks, chunksize=64)
    else:
        _init_worker(metric_names)
        records = [_pair_task(t) for t in tasks]
    records.sort(key=lambda r: r.pair_id)
    pm.write_records_csv(records, out / "pair_metrics.csv")
    _write_json(pm.summarize_pairs(records).to_json_dict(), out / "summary.json")
    _write_manifest(
        out, "evaluate-pairs",
        {"inputs_a": str(inputs_a), "inputs_b": str(inputs_b),
         "metrics": list(metric_names)},
        [inputs_a, inputs_b],
    )
    click.echo(f"evaluated {len(records)} pairs -> {out}")


# --- frechet ----------------------------------------------------------------

@main.command("frechet")
@click.option("--features-a", type=click.Path(exists=True, path_type=Path))
@click.option("--features-b", type=click.Path(exists=True, path_type=Path))
@click.option("--inputs-a", type=click.Path(exists=True, path_type=Path))
@click.option("--inputs-b", type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@report_errors
def frechet_cmd(features_a, features_b, inputs_a, inputs_b, out: Path):
    """Fréchet distance between two feature sets (or two image roots,
    embedded with the built-in baseline extractor)."""
    out.mkdir(parents=True, exist_ok=True)

    def _load(features, inputs, label) -> tuple[fr.FeatureSet, Path]:
        if features is not None:
            return _read_features(features), features
        if inputs is not None:
            paths = _slice_paths(Path(inputs))
            if not paths:
                raise ValueError(f"no slice PNG images under {inputs}")
            images = [im.read_png(p) for p in paths]
            return fr.baseline_extract(images), inputs
        raise ValueError(f"supply --features-{label} or --inputs-{label}")

    fs_a, src_a = _load(features_a, inputs_a, "a")
    fs_b, src_b = _load(features_b, inputs_b, "b")
    fd = fr.frechet_between_sets(fs_a, fs_b)
    _write_json(
        {
            "frechet_distance": fd,
            "a": {"n": fs_a.n, "d": fs_a.d, "extractor_id": fs_a.extractor_id},
            "b": {"n": fs_b.n, "d": fs_b.d, "extractor_id": fs_b.extractor_id},
        },
        out / "frechet.json",
    )
    _write_manifest(out, "frechet", {"a": str(src_a), "b": str(src_b)}, [src_a, src_b])
    click.echo(f"frechet_distance={fd}")


def _read_features(path: Path) -> fr.FeatureSet:
    if path.suffix.lower() == ".csv":
        return fr.read_featureset_csv(path, extractor_id="csv-import")
    return fr.read_featureset(path)


# --- extract-features -------------------------------------------------------

@main.command("extract-features")
@click.option("--inputs-a", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@report_errors
def extract_features(inputs_a: Path, out: Path):
    """Embed every slice PNG under a root with the baseline extractor."""
    paths = _slice_paths(inputs_a)
    if not paths:
        raise ValueError(f"no PNG images under {inputs_a}")
    images = [im.read_png(p) for p in paths]
    fs = fr.baseline_extract(images)
    out.parent.mkdir(parents=True, exist_ok=True)
    fr.write_featureset(fs, out)
    click.echo(f"wrote {fs.n}x{fs.d} features -> {out}")


# --- same-select ------------------------------------------------------------

@main.command("same-select")
@click.option("--inputs-a", "cohort_csv", required=True,
              type=click.Path(exists=True, path_type=Path),
              help="cohort CSV: checkpoint_id,<metric>,...")
@click.option("--directions", type=click.Path(exists=True, path_type=Path),
              help="JSON sidecar {metric: 'lower'|'higher'}")
@click.option("--out", required=True, type=click.Path(path_type=Path))
@report_errors
def same_select(cohort_csv: Path, directions, out: Path):
    """Scale a checkpoint cohort and select the best checkpoint."""
    out.mkdir(parents=True, exist_ok=True)
    records = sm.read_cohort_csv(cohort_csv)
    dirs = sm.read_directions_json(directions) if directions else None
    table = sm.scale_cohort(records, dirs)
    sm.write_scaled_csv(table, out / "same_scaled.csv")
    _write_json(sm.selection_json_dict(table), out / "selection.json")
    inputs = [cohort_csv] + ([Path(directions)] if directions else [])
    _write_manifest(out, "same-select", {"cohort": str(cohort_csv)}, inputs)
    click.echo(f"selected {table.selected}")


# --- subtract ---------------------------------------------------------------

@main.command("subtract")
@click.option("--inputs-a", required=True, type=click.Path(exists=True, path_type=Path),
              help="pre-contrast root (PRE slices)")
@click.option("--inputs-b", required=True, type=click.Path(exists=True, path_type=Path),
              help="post-contrast root")
@click.option("--out", required=True, type=click.Path(path_type=Path))
@report_errors
def subtract(inputs_a: Path, inputs_b: Path, out: Path):
    """Write post-minus-pre subtraction images, negatives clipped to 0.

    Slices pair by (case_id, slice_index): each post-contrast slice is
    matched with the PRE slice of the same case and index.
    """
    out.mkdir(parents=True, exist_ok=True)
    pre_by_key = {
        (c, i): p for (c, phv, i), p in _discover(inputs_a).items() if phv == "PRE"
    }
    post = _discover(inputs_b)
    only_b, written = [], 0
    for (c, phv, i), path_b in sorted(post.items()):
        pre_path = pre_by_key.get((c, i))
        if pre_path is None:
            only_b.append(path_b)
            continue
        pre_img = im.read_png(pre_path)
        post_img = im.read_png(path_b)
        im.write_png(im.subtraction_image(pre_img, post_img), out / "images")
        written += 1
    used = {(c, i) for (c, phv, i) in post if (c, i) in pre_by_key}
    only_a = [pre_by_key[k] for k in sorted(set(pre_by_key) - used)]
    _write_unpaired(out, only_a, only_b)
    if written == 0:
        raise ValueError("no pre/post slice pairs found")
    _write_manifest(out, "subtract",
                    {"inputs_a": str(inputs_a), "inputs_b": str(inputs_b)},
                    [inputs_a, inputs_b])
    click.echo(f"wrote {written} subtraction images -> {out / 'images'}")


# --- stack ------------------------------------------------------------------

@main.command("stack")
@click.option("--inputs-a", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@report_errors
def stack(inputs_a: Path, out: Path):
    """Validate and stack a slice directory into a volume manifest."""
    out.mkdir(parents=True, exist_ok=True)
    vol = im.read_volume_dir(inputs_a)
    _write_json(
        {
            "case_id": vol.case_id,
            "phase": vol.phase.value,
            "width": vol.width,
            "height": vol.height,
            "slice_count": vol.depth,
        },
        out / "volume.json",
    )
    _write_manifest(out, "stack", {"inputs_a": str(inputs_a)}, [inputs_a])
    click.echo(f"stacked {vol.depth} slices of {vol.case_id}/{vol.phase.value}")


# --- kinetics ---------------------------------------------------------------

def _load_case_volumes(root: Path) -> dict[str, dict[im.Phase, im.Volume]]:
    """Read root/<case_id>/<PHASE>/ slice directories."""
    cases: dict[str, dict[im.Phase, im.Volume]] = {}
    for case_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        vols: dict[im.Phase, im.Volume] = {}
        for phase in kn.PHASE_ORDER:
            phase_dir = case_dir / phase.value
            if phase_dir.is_dir():
                vols[phase] = im.read_volume_dir(phase_dir)
        if vols:
            cases[case_dir.name] = vols
    if not cases:
        raise ValueError(f"no case/phase volume directories under {root}")
    return cases


def _case_series(root: Path, boxes: dict[str, im.BoundingBox],
                 source: kn.Source) -> list[kn.KineticsSeries]:
    series = []
    for case_id, vols in _load_case_volumes(root).items():
        if case_id not in boxes:
            raise ValueError(f"no bounding box annotation for case {case_id!r}")
        series.append(
            kn.case_kinetics(vols, boxes[case_id], source=source, case_id=case_id)
        )
    return series


@main.command("kinetics")
@click.option("--inputs-a", required=True, type=click.Path(exists=True, path_type=Path),
              help="real volumes: <root>/<case>/<PHASE>/")
@click.option("--inputs-b", type=click.Path(exists=True, path_type=Path),
              help="synthetic volumes, same layout")
@click.option("--bboxes", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@report_errors
def kinetics_cmd(inputs_a: Path, inputs_b, bboxes: Path, out: Path):
    """Lesion kinetics per case plus dataset aggregates and ordering report."""
    out.mkdir(parents=True, exist_ok=True)
    boxes = im.read_bboxes(bboxes)
    real_series = _case_series(inputs_a, boxes, kn.Source.REAL)
    all_series = list(real_series)
    real_agg = kn.aggregate_kinetics(real_series)
    _write_json(kn.aggregate_json_dict(real_agg), out / "aggregate_real.json")
    if inputs_b is not None:
        syn_series = _case_series(Path(inputs_b), boxes, kn.Source.SYNTHETIC)
        all_series += syn_series
        syn_agg = kn.aggregate_kinetics(syn_series)
        _write_json(kn.aggregate_json_dict(syn_agg), out / "aggregate_synthetic.json")
        offsets = kn.source_offset(real_agg, syn_agg)
        _write_json({p.value: v for p, v in offsets.items()}, out / "offsets.json")
        _write_json(kn.ordering_report_dict(syn_series), out / "ordering.json")
    else:
        _write_json(kn.ordering_report_dict(real_series), out / "ordering.json")
    kn.write_series_csv(all_series, out / "kinetics.csv")
    inputs = [inputs_a] + ([Path(inputs_b)] if inputs_b else []) + [bboxes]
    _write_manifest(out, "kinetics", {"inputs_a": str(inputs_a)}, inputs)
    click.echo(f"kinetics for {len(all_series)} case series -> {out}")


# --- phantom ----------------------------------------------------------------

@main.command("phantom")
@click.option("--spec", "spec_path", required=True,
              type=click.Path(exists=True, path_type=Path),
              help="phantom spec JSON")
@click.option("--out", required=True, type=click.Path(path_type=Path))
@report_errors
def phantom_cmd(spec_path: Path, out: Path):
    """Generate a deterministic lesion phantom from a JSON spec."""
    out.mkdir(parents=True, exist_ok=True)
    spec = ph.PhantomSpec.from_json_dict(json.loads(spec_path.read_text()))
    result = ph.generate_phantom(spec)
    ph.write_phantom(result, out, spec=spec)
    _write_manifest(out, "phantom", {"spec": str(spec_path)}, [spec_path])
    click.echo(f"phantom {spec.case_id} -> {out}")


if __name__ == "__main__":
    main()
