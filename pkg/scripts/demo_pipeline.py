"""End-to-end demo on synthetic data: generate, predict, score, correlate.

There is no segmentation model in this repository, so predictions are
simulated by corrupting the ground truth inside a ring around the object
boundary. Thin branchy objects are nearly all boundary, so they lose a
larger share of their pixels than blobs do, which is enough to make the
metric-vs-IoU correlation machinery show something meaningful.

Usage:
    python3 scripts/demo_pipeline.py --out /tmp/demo --objects 8
"""

import argparse
import json
import os
import sys

import numpy as np

from segmetrics.cli import main as segmetrics_main
from segmetrics.imgcore import erode_diamond, load_mask, save_mask
from segmetrics.manifest import read_manifest, resolve_path, write_manifest
from segmetrics.seeding import record_rng
from segmetrics.separability import boundary_band


def simulate_predictions(corpus_dir: str, seed: int, per_record: int = 3) -> str:
    """Write noisy predictions next to each object and a new manifest."""
    manifest = os.path.join(corpus_dir, "manifest.jsonl")
    records = read_manifest(manifest)
    out = []
    for rec in records:
        gt = load_mask(resolve_path(manifest, rec.gt_mask_path))
        outer = boundary_band(gt, 2)
        inner = gt & ~erode_diamond(gt, 2)
        rng = record_rng(seed, rec.id)
        pred_paths = []
        for k in range(per_record):
            pred = gt.copy()
            pred[outer] = rng.random(int(outer.sum())) < 0.35
            pred[inner] &= rng.random(int(inner.sum())) >= 0.35
            rel = f"{rec.id}/pred_{k}.png"
            save_mask(os.path.join(corpus_dir, rel), pred)
            pred_paths.append(rel)
        rec.pred_mask_paths.extend(pred_paths)
        out.append(rec)
    scored_manifest = os.path.join(corpus_dir, "manifest_scored.jsonl")
    write_manifest(scored_manifest, out)
    return scored_manifest


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, help="working directory")
    ap.add_argument("--objects", type=int, default=8)
    ap.add_argument("--canvas", type=int, default=256)
    ap.add_argument("--target-bbox", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--group-size", type=int, default=3)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    corpus = os.path.join(args.out, "corpus")
    print("== 1/4 synthesizing corpus ==")
    code = segmetrics_main(
        ["synth", "--out", corpus, "--objects", str(args.objects),
         "--canvas", str(args.canvas), "--target-bbox", str(args.target_bbox),
         "--seed", str(args.seed)]
    )
    if code:
        return code

    print("== 2/4 simulating predictions ==")
    manifest = simulate_predictions(corpus, args.seed)

    print("== 3/4 scoring ==")
    results = os.path.join(args.out, "results.csv")
    code = segmetrics_main(
        ["metrics", manifest, "--out", results, "--jobs", str(args.jobs),
         "--resize-to", str(args.canvas), "--seed", str(args.seed)]
    )
    if code:
        return code

    print("== 4/4 correlating ==")
    for metric in ("cpr", "dogd"):
        report_path = os.path.join(args.out, f"correlation_{metric}.json")
        code = segmetrics_main(
            ["correlate", results, "--metric", metric,
             "--group-size", str(args.group_size), "--out-json", report_path]
        )
        if code:
            return code
        report = json.load(open(report_path))
        print(
            f"  {metric:5s} vs IoU: tau={report['kendall_tau']}, "
            f"rho={report['spearman_rho']}, r={report['pearson_r']} "
            f"({report['n_groups']} groups)"
        )
    print(f"done; artifacts under {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
