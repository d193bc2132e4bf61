#!/usr/bin/env python3
"""End-to-end demo on a synthetic phantom cohort, driven through the CLI.

Generates a small cohort of lesion phantoms (the "real" arm) plus several
progressively degraded synthetic arms standing in for generator checkpoints,
then exercises every pipeline stage:

  phantom -> evaluate-pairs -> frechet -> kinetics -> subtract -> stack
          -> same-select over the simulated checkpoint cohort

Run:  python3 scripts/run_phantom_demo.py --out demo-output
"""

from __future__ import annotations

import argparse
import csv
import json
import subprocess
import sys
from pathlib import Path

N_CASES = 3
SIZE = 192          # in-plane, large enough for multi-scale SSIM
DEPTH = 4
PHASE_MEANS = {"PRE": 60.0, "DCE_P1": 120.0, "DCE_P2": 150.0, "DCE_P3": 170.0}
# Per-checkpoint degradation: additive lesion-mean bias and noise amplitude.
CHECKPOINTS = {"ep10": (18.0, 9), "ep30": (8.0, 5), "ep50": (3.0, 3)}


def run(*args: str) -> None:
    print("+ dceeval", " ".join(args))
    subprocess.run(["dceeval", *args], check=True)


def spec_dict(case: str, seed: int, bias: float, noise: int) -> dict:
    return {
        "case_id": case,
        "seed": seed,
        "width": SIZE,
        "height": SIZE,
        "depth": DEPTH,
        "background_mean": 40.0,
        "background_noise_amplitude": noise,
        "lesion_center": [SIZE / 2, SIZE / 2, DEPTH / 2 - 0.5],
        "lesion_semi_axes": [SIZE / 5, SIZE / 6, DEPTH / 2 - 0.6],
        "phase_means": {
            p: (v if p == "PRE" else min(255.0, v + bias))
            for p, v in PHASE_MEANS.items()
        },
    }


def make_cohort(root: Path, arm: str, bias: float, noise: int, seed0: int) -> Path:
    arm_dir = root / arm
    for i in range(N_CASES):
        case = f"case{i:02d}"
        spec_path = root / "specs" / f"{arm}_{case}.json"
        spec_path.parent.mkdir(parents=True, exist_ok=True)
        spec_path.write_text(json.dumps(spec_dict(case, seed0 + i, bias, noise)))
        run("phantom", "--spec", str(spec_path), "--out", str(arm_dir))
    return arm_dir


def merge_bboxes(arm_dir: Path, out_csv: Path) -> None:
    rows, header = [], None
    for per_case in sorted(arm_dir.glob("*/bboxes.csv")):
        with open(per_case, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows.extend(reader)
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("demo-output"))
    ap.add_argument("--seed", type=int, default=20240)
    args = ap.parse_args()
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)

    real = make_cohort(out / "data", "real", bias=0.0, noise=2, seed0=args.seed)
    merge_bboxes(real, out / "data" / "bboxes.csv")

    cohort_rows = []
    best_arm: Path | None = None
    for ckpt, (bias, noise) in CHECKPOINTS.items():
        arm = make_cohort(out / "data", ckpt, bias, noise, seed0=args.seed + 1000)
        best_arm = arm
        run("evaluate-pairs", "--inputs-a", str(real), "--inputs-b", str(arm),
            "--out", str(out / "pairs" / ckpt))
        summary = json.loads((out / "pairs" / ckpt / "summary.json").read_text())
        cohort_rows.append({
            "checkpoint_id": ckpt,
            **{m: summary["metrics"][m]["mean"] for m in ("mse", "mae", "ssim", "psnr")},
        })

    cohort_csv = out / "cohort.csv"
    with open(cohort_csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(cohort_rows[0]))
        writer.writeheader()
        writer.writerows(cohort_rows)
    run("same-select", "--inputs-a", str(cohort_csv), "--out", str(out / "selection"))

    run("frechet", "--inputs-a", str(real), "--inputs-b", str(best_arm),
        "--out", str(out / "frechet"))
    run("kinetics", "--inputs-a", str(real), "--inputs-b", str(best_arm),
        "--bboxes", str(out / "data" / "bboxes.csv"), "--out", str(out / "kinetics"))
    run("subtract", "--inputs-a", str(real), "--inputs-b", str(real),
        "--out", str(out / "subtraction"))
    run("stack", "--inputs-a", str(real / "case00" / "DCE_P1"),
        "--out", str(out / "stack"))

    selection = json.loads((out / "selection" / "selection.json").read_text())
    fd = json.loads((out / "frechet" / "frechet.json").read_text())
    print()
    print(f"selected checkpoint : {selection['selected']}")
    print(f"frechet distance    : {fd['frechet_distance']:.4f} (real vs selected arm)")
    print(f"all outputs under   : {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
