"""Effective patch size: object scale vs measured tree-likeness.

Zooms each synthetic object so that the longer edge of its tight
bounding box lands on a grid of sizes p, then recomputes CPR on the
zoomed mask. Shrinking an object (small p) packs its branches into
fewer pixels, so typical CPR rises; datapoints where zooming in would
push the object outside the frame are discarded, and the rejection
count per p is reported.

Usage:
    python3 scripts/patch_size_study.py --objects 12 --canvas 1024
"""

import argparse
import csv
import sys

import numpy as np

from segmetrics.synthgen import (
    SynthSpec,
    generate_dataset,
    procedural_texture_bank,
    random_tree_mask,
    zoom_to_scale,
)
from segmetrics.treelike import cpr

P_GRID = "32,64,96,160,224,352,480,736"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--objects", type=int, default=12)
    ap.add_argument("--canvas", type=int, default=1024)
    ap.add_argument("--target-bbox", type=int, default=512)
    ap.add_argument("--p-grid", default=P_GRID)
    ap.add_argument("--r", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", default=None, help="optional per-sample dump")
    args = ap.parse_args()

    grid = [int(t) for t in args.p_grid.split(",") if t.strip()]
    sources = []
    for i in range(args.objects):
        rng = np.random.default_rng([args.seed, i])
        sources.append(
            random_tree_mask(768, 768, rng, radius=int(rng.integers(0, 8)),
                             max_depth=int(rng.integers(4, 7)))
        )
    spec = SynthSpec(canvas=args.canvas, target_bbox=args.target_bbox,
                     texture_pairs=1, seed=args.seed)
    items = generate_dataset(sources, procedural_texture_bank(args.seed, count=4), spec)

    rows = []
    for index, item in enumerate(items):
        image = item.images[0]
        for p in grid:
            zoomed = zoom_to_scale(image, item.mask, p)
            if zoomed is None:
                rows.append((index, p, None))
                continue
            _, zoomed_mask = zoomed
            rows.append((index, p, cpr(zoomed_mask, args.r)))

    print(f"{len(items)} objects on {args.canvas}x{args.canvas}, CPR radius {args.r}")
    print(f"{'p':>5} {'kept':>5} {'rejected':>9} {'cpr mean':>9} {'cpr sd':>7}")
    for p in grid:
        values = [c for (_, q, c) in rows if q == p and c is not None]
        rejected = sum(1 for (_, q, c) in rows if q == p and c is None)
        if values:
            print(f"{p:>5} {len(values):>5} {rejected:>9} "
                  f"{np.mean(values):>9.4f} {np.std(values):>7.4f}")
        else:
            print(f"{p:>5} {0:>5} {rejected:>9} {'-':>9} {'-':>7}")

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["object", "p", "cpr"])
            for index, p, value in rows:
                writer.writerow([index, p, "" if value is None else repr(value)])
        print(f"wrote {args.csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
