"""Command-line driver for corpus-scale runs.

Subcommands:

* metrics          per-record CPR / DoGD / separability / IoU over a manifest
* synth            generate a synthetic textured corpus
* correlate        rank/linear correlation of a metrics CSV column against IoU
* sweep            re-evaluate correlations across a parameter grid
* ablate-thickness rewrite masks to fixed stroke widths and re-score them
* make-bank        write a seeded random filter bank file

Record-level failures never abort a run: the offending record is written
to the output CSV with skipped_reason set and the details go to a JSONL
sidecar next to the output. The exit code is nonzero only when no record
succeeded at all (or the run could not start).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidConfig, InvalidGrid, SegmetricsError
from .imgcore import load_image, load_mask, resize_image, resize_mask_nn, save_image, save_mask
from .manifest import ManifestRecord, read_manifest, resolve_path, write_manifest
from .seeding import record_seed
from .separability import (
    ConvFilterBank,
    ProbeConfig,
    load_filter_bank,
    random_filter_bank,
    save_filter_bank,
    separability_samples,
    textural_separability,
    train_probe,
)
from .stats import MetricSeries, correlate, iou, majority_vote
from .synthgen import (
    SynthSpec,
    generate_dataset,
    load_texture_bank,
    procedural_texture_bank,
    random_tree_mask,
    thicken_skeleton,
)
from .treelike import TreelikeConfig, cpr, dogd

CSV_COLUMNS = [
    "id",
    "dataset",
    "object_class",
    "cpr",
    "dogd",
    "separability",
    "iou",
    "fg_pixels",
    "skipped_reason",
]

BANK_ENV_VAR = "SEGMETRICS_FILTER_BANK"
# Seed of the fallback bank used when neither --filter-bank nor the
# environment variable provides one; fixed so bare runs stay reproducible.
DEFAULT_BANK_SEED = 2470

R_GRID = (1, 3, 5, 7, 9, 11)
A_GRID = (63, 127, 255)
B_GRID = (3, 7, 15, 31)
C_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class RunConfig:
    """Shared evaluation settings assembled from command-line flags."""

    r: int = 5
    a: int = 127
    b: int = 3
    seed: int = 0
    jobs: int = 1
    resize_to: int | None = 1024
    clf_c: float = 2.0
    boundary_radius: int = 5

    def __post_init__(self) -> None:
        TreelikeConfig(r=self.r, a=self.a, b=self.b)
        ProbeConfig(clf_c=self.clf_c, boundary_radius=self.boundary_radius)
        if self.seed < 0:
            raise InvalidConfig(f"seed must be >= 0, got {self.seed}")
        if self.jobs < 1:
            raise InvalidConfig(f"jobs must be >= 1, got {self.jobs}")
        if self.resize_to is not None and self.resize_to < 16:
            raise InvalidConfig(f"resize_to must be >= 16, got {self.resize_to}")

    def probe_config(self, seed: int) -> ProbeConfig:
        return ProbeConfig(
            clf_c=self.clf_c, boundary_radius=self.boundary_radius, seed=seed
        )


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        r=args.r,
        a=args.a,
        b=args.b,
        seed=args.seed,
        jobs=args.jobs,
        resize_to=None if args.no_resize else args.resize_to,
        clf_c=args.clf_c,
        boundary_radius=args.boundary_radius,
    )


def _resolve_bank(path: str | None) -> ConvFilterBank:
    path = path or os.environ.get(BANK_ENV_VAR)
    if path:
        return load_filter_bank(path)
    return random_filter_bank(DEFAULT_BANK_SEED)


def _map_records(worker, payloads: list, jobs: int) -> list:
    if jobs == 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    chunk = max(1, len(payloads) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, payloads, chunksize=chunk))


def _load_gt(record: ManifestRecord, cfg: RunConfig, manifest_path: str) -> np.ndarray:
    gt = load_mask(resolve_path(manifest_path, record.gt_mask_path))
    if cfg.resize_to is not None:
        gt = resize_mask_nn(gt, cfg.resize_to, cfg.resize_to)
    return gt


def _load_fused_pred(
    record: ManifestRecord, cfg: RunConfig, manifest_path: str, gt_shape
) -> np.ndarray | None:
    if not record.pred_mask_paths:
        return None
    preds = []
    for p in record.pred_mask_paths:
        pm = load_mask(resolve_path(manifest_path, p))
        if cfg.resize_to is not None:
            pm = resize_mask_nn(pm, cfg.resize_to, cfg.resize_to)
        preds.append(pm)
    return preds[0] if len(preds) == 1 else majority_vote(preds)


# ---------------------------------------------------------------- metrics


def _metrics_one(payload):
    record, cfg, bank, manifest_path = payload
    try:
        gt_native = load_mask(resolve_path(manifest_path, record.gt_mask_path))
        img = load_image(resolve_path(manifest_path, record.image_path))
        if img.shape[:2] != gt_native.shape:
            raise InvalidConfig(
                f"image {img.shape[:2]} and mask {gt_native.shape} sizes differ"
            )
        if cfg.resize_to is not None:
            gt = resize_mask_nn(gt_native, cfg.resize_to, cfg.resize_to)
            img = resize_image(img, cfg.resize_to, cfg.resize_to)
        else:
            gt = gt_native
        fg = int(gt.sum())
        cpr_value = cpr(gt, cfg.r)
        dogd_value = dogd(gt, cfg.a, cfg.b)
        sep_cfg = cfg.probe_config(record_seed(cfg.seed, record.id))
        sep_value = textural_separability(img, gt, bank, sep_cfg)
        fused = _load_fused_pred(record, cfg, manifest_path, gt.shape)
        iou_value = None if fused is None else iou(fused, gt)
        return {
            "ok": True,
            "id": record.id,
            "dataset": record.dataset,
            "object_class": record.object_class,
            "cpr": cpr_value,
            "dogd": dogd_value,
            "separability": sep_value,
            "iou": iou_value,
            "fg_pixels": fg,
        }
    except Exception as exc:
        return {
            "ok": False,
            "id": record.id,
            "dataset": record.dataset,
            "object_class": record.object_class,
            "reason": type(exc).__name__,
            "detail": str(exc),
        }


def _write_sidecar(out_path: str, failures: list[dict]) -> str:
    sidecar = out_path + ".errors.jsonl"
    with open(sidecar, "w", encoding="utf-8") as fh:
        for item in failures:
            fh.write(
                json.dumps(
                    {"id": item["id"], "reason": item["reason"], "detail": item["detail"]}
                )
                + "\n"
            )
    return sidecar


def cmd_metrics(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    bank = _resolve_bank(args.filter_bank)
    records = read_manifest(args.manifest)
    payloads = [(rec, cfg, bank, args.manifest) for rec in records]
    results = _map_records(_metrics_one, payloads, cfg.jobs)
    results.sort(key=lambda res: res["id"])
    rows = []
    failures = []
    for res in results:
        if res["ok"]:
            rows.append(
                [
                    res["id"],
                    res["dataset"],
                    res["object_class"],
                    _fmt(res["cpr"]),
                    _fmt(res["dogd"]),
                    _fmt(res["separability"]),
                    _fmt(res["iou"]),
                    str(res["fg_pixels"]),
                    "",
                ]
            )
        else:
            failures.append(res)
            rows.append(
                [res["id"], res["dataset"], res["object_class"], "", "", "", "", "", res["reason"]]
            )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(rows)
    sidecar = _write_sidecar(args.out, failures)
    ok = len(results) - len(failures)
    print(
        f"metrics: {len(results)} records, {ok} scored, {len(failures)} skipped "
        f"-> {args.out} (errors: {sidecar})"
    )
    return 0 if ok > 0 else 1


# ------------------------------------------------------------------ synth


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        canvas=args.canvas,
        target_bbox=args.target_bbox,
        texture_pairs=args.pairs,
        keep_aspect=args.keep_aspect,
        seed=args.seed,
    )
    if args.textures:
        bank = load_texture_bank(args.textures)
    else:
        bank = procedural_texture_bank(seed=args.seed, count=8)
    if args.masks:
        names = sorted(
            f for f in os.listdir(args.masks) if f.lower().endswith((".png", ".jpg", ".jpeg"))
        )
        sources = [load_mask(os.path.join(args.masks, f)) for f in names]
    else:
        sources = []
        for i in range(args.objects):
            rng = np.random.default_rng(np.random.SeedSequence([args.seed, 7, i]))
            radius = int(rng.integers(0, 8))
            sources.append(
                random_tree_mask(768, 768, rng, radius=radius, max_depth=int(rng.integers(4, 7)))
            )
    items = generate_dataset(sources, bank, spec)
    os.makedirs(args.out, exist_ok=True)
    records = []
    for i, item in enumerate(items):
        obj_id = f"obj{i:04d}"
        obj_dir = os.path.join(args.out, obj_id)
        os.makedirs(obj_dir, exist_ok=True)
        save_mask(os.path.join(obj_dir, "mask.png"), item.mask)
        for k, image in enumerate(item.images):
            save_image(os.path.join(obj_dir, f"img_{k}.png"), image)
        records.append(
            ManifestRecord(
                id=obj_id,
                image_path=f"{obj_id}/img_0.png",
                gt_mask_path=f"{obj_id}/mask.png",
                dataset="synthetic",
            )
        )
    write_manifest(os.path.join(args.out, "manifest.jsonl"), records)
    print(
        f"synth: wrote {len(items)} objects x {spec.texture_pairs} texture pairs "
        f"to {args.out}"
    )
    return 0


# -------------------------------------------------------------- correlate


def _read_metric_series(csv_path: str, metric: str) -> MetricSeries:
    with open(csv_path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for needed in ("id", metric, "iou", "skipped_reason"):
            if needed not in fields:
                raise InvalidConfig(f"{csv_path} has no column {needed!r}")
        ids = []
        metric_vals = []
        iou_vals = []
        for row in reader:
            if row["skipped_reason"] or not row[metric] or not row["iou"]:
                continue
            ids.append(row["id"])
            metric_vals.append(float(row[metric]))
            iou_vals.append(float(row["iou"]))
    return MetricSeries(ids=ids, metric=np.array(metric_vals), iou=np.array(iou_vals))


def cmd_correlate(args: argparse.Namespace) -> int:
    series = _read_metric_series(args.results_csv, args.metric)
    if len(series) == 0:
        print("correlate: no usable rows (need metric and iou values)", file=sys.stderr)
        return 1
    report = correlate(series, metric_name=args.metric, group_size=args.group_size)
    payload = {
        "metric": report.metric_name,
        "group_size": report.group_size,
        "n_records": len(series),
        "n_groups": report.n,
        "kendall_tau": report.kendall,
        "spearman_rho": report.spearman,
        "pearson_r": report.pearson,
        "notes": report.notes,
    }
    with open(args.out_json, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    if args.scatter_csv:
        from .stats import aggregate

        agg = aggregate(series, args.group_size) if args.group_size > 1 else series
        with open(args.scatter_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["group_id", args.metric, "iou"])
            for gid, mv, iv in zip(agg.ids, agg.metric, agg.iou):
                writer.writerow([gid, repr(float(mv)), repr(float(iv))])
    print(
        f"correlate: {args.metric} vs iou over {len(series)} records "
        f"(groups of {args.group_size}) -> {args.out_json}"
    )
    return 0


# ------------------------------------------------------------------ sweep


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _sweep_points(args: argparse.Namespace) -> list[tuple]:
    if args.grid == "cpr-r":
        values = _parse_int_list(args.r_values) if args.r_values else list(R_GRID)
        points = [(r,) for r in values]
    elif args.grid == "dogd-ab":
        a_values = _parse_int_list(args.a_values) if args.a_values else list(A_GRID)
        b_values = _parse_int_list(args.b_values) if args.b_values else list(B_GRID)
        points = [(a, b) for a in a_values for b in b_values if a > b]
    else:
        values = _parse_float_list(args.c_values) if args.c_values else list(C_GRID)
        points = [(c,) for c in values]
    if not points:
        raise InvalidGrid(f"grid {args.grid} has no valid points")
    return points


def _sweep_one(payload):
    record, cfg, bank, manifest_path, grid, points = payload
    try:
        gt = _load_gt(record, cfg, manifest_path)
        fused = _load_fused_pred(record, cfg, manifest_path, gt.shape)
        if fused is None:
            return {
                "ok": False,
                "id": record.id,
                "reason": "NoPredictions",
                "detail": "sweep correlates against IoU; record lists no predictions",
            }
        iou_value = iou(fused, gt)
        values: list[float | None] = []
        if grid == "sep-c":
            img = load_image(resolve_path(manifest_path, record.image_path))
            if cfg.resize_to is not None:
                img = resize_image(img, cfg.resize_to, cfg.resize_to)
            sep_cfg = cfg.probe_config(record_seed(cfg.seed, record.id))
            x, y = separability_samples(img, gt, bank, sep_cfg)
            for (c,) in points:
                try:
                    values.append(train_probe(x, y, replace(sep_cfg, clf_c=c))[1])
                except Exception:
                    values.append(None)
        elif grid == "cpr-r":
            for (r,) in points:
                try:
                    values.append(cpr(gt, r))
                except Exception:
                    values.append(None)
        else:
            for a, b in points:
                try:
                    values.append(dogd(gt, a, b))
                except Exception:
                    values.append(None)
        return {"ok": True, "id": record.id, "iou": iou_value, "values": values}
    except Exception as exc:
        return {
            "ok": False,
            "id": record.id,
            "reason": type(exc).__name__,
            "detail": str(exc),
        }


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    points = _sweep_points(args)
    bank = _resolve_bank(args.filter_bank) if args.grid == "sep-c" else None
    records = read_manifest(args.manifest)
    payloads = [(rec, cfg, bank, args.manifest, args.grid, points) for rec in records]
    results = _map_records(_sweep_one, payloads, cfg.jobs)
    results.sort(key=lambda res: res["id"])
    scored = [res for res in results if res["ok"]]
    failures = [res for res in results if not res["ok"]]
    rows = []
    for pi, point in enumerate(points):
        ids = [res["id"] for res in scored if res["values"][pi] is not None]
        metric = [res["values"][pi] for res in scored if res["values"][pi] is not None]
        ious = [res["iou"] for res in scored if res["values"][pi] is not None]
        param = {"r": "", "a": "", "b": "", "clf_c": ""}
        if args.grid == "cpr-r":
            param["r"] = str(point[0])
            name = "cpr"
        elif args.grid == "dogd-ab":
            param["a"], param["b"] = str(point[0]), str(point[1])
            name = "dogd"
        else:
            param["clf_c"] = repr(float(point[0]))
            name = "separability"
        if len(ids) < 2:
            rows.append(
                [args.grid, param["r"], param["a"], param["b"], param["clf_c"], len(ids), 0, "", "", "", "insufficient records"]
            )
            continue
        series = MetricSeries(ids=ids, metric=np.array(metric), iou=np.array(ious))
        report = correlate(series, metric_name=name, group_size=args.group_size)
        rows.append(
            [
                args.grid,
                param["r"],
                param["a"],
                param["b"],
                param["clf_c"],
                len(ids),
                report.n,
                _fmt(report.kendall),
                _fmt(report.spearman),
                _fmt(report.pearson),
                "; ".join(report.notes),
            ]
        )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["grid", "r", "a", "b", "clf_c", "n_records", "n_groups", "kendall_tau", "spearman_rho", "pearson_r", "notes"]
        )
        writer.writerows(rows)
    sidecar = _write_sidecar(args.out, failures)
    print(
        f"sweep: {len(points)} grid points over {len(scored)}/{len(results)} records "
        f"-> {args.out} (errors: {sidecar})"
    )
    return 0 if scored else 1


# ------------------------------------------------------- ablate-thickness


def _ablate_one(payload):
    record, cfg, manifest_path, radii = payload
    try:
        gt = _load_gt(record, cfg, manifest_path)
    except Exception as exc:
        return {
            "ok": False,
            "id": record.id,
            "reason": type(exc).__name__,
            "detail": str(exc),
        }
    rows = []
    for radius in radii:
        try:
            thick = thicken_skeleton(gt, radius)
            rows.append(
                (radius, cpr(thick, cfg.r), dogd(thick, cfg.a, cfg.b), int(thick.sum()), "")
            )
        except Exception as exc:
            rows.append((radius, None, None, None, type(exc).__name__))
    return {"ok": True, "id": record.id, "rows": rows}


def cmd_ablate_thickness(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    radii = _parse_int_list(args.radii)
    if not radii:
        raise InvalidGrid("no thickness radii given")
    records = read_manifest(args.manifest)
    payloads = [(rec, cfg, args.manifest, radii) for rec in records]
    results = _map_records(_ablate_one, payloads, cfg.jobs)
    results.sort(key=lambda res: res["id"])
    failures = [res for res in results if not res["ok"]]
    ok_rows = 0
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "radius", "cpr", "dogd", "fg_pixels", "skipped_reason"])
        for res in results:
            if not res["ok"]:
                writer.writerow([res["id"], "", "", "", "", res["reason"]])
                continue
            for radius, cpr_value, dogd_value, fg, reason in res["rows"]:
                if not reason:
                    ok_rows += 1
                writer.writerow(
                    [
                        res["id"],
                        str(radius),
                        _fmt(cpr_value),
                        _fmt(dogd_value),
                        "" if fg is None else str(fg),
                        reason,
                    ]
                )
    sidecar = _write_sidecar(args.out, failures)
    print(
        f"ablate-thickness: {len(records)} records x {len(radii)} radii, "
        f"{ok_rows} rows scored -> {args.out} (errors: {sidecar})"
    )
    return 0 if ok_rows > 0 else 1


# -------------------------------------------------------------- make-bank


def cmd_make_bank(args: argparse.Namespace) -> int:
    bank = random_filter_bank(
        seed=args.seed,
        num_filters=args.filters,
        in_channels=args.channels,
        kernel_size=args.kernel,
        stride=args.stride,
        padding=args.padding,
    )
    save_filter_bank(args.out, bank)
    print(
        f"make-bank: {args.filters}x{args.channels}x{args.kernel}x{args.kernel} "
        f"stride {args.stride} pad {args.padding} -> {args.out}"
    )
    return 0


# ------------------------------------------------------------------- main


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segmetrics",
        description="Mask-geometry and textural-separability metrics over image corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--r", type=int, default=5, help="CPR neighborhood radius")
    shared.add_argument("--a", type=int, default=127, help="large Gini window")
    shared.add_argument("--b", type=int, default=3, help="small Gini window")
    shared.add_argument("--seed", type=int, default=0, help="global random seed")
    shared.add_argument("--jobs", type=int, default=1, help="worker processes")
    shared.add_argument(
        "--resize-to",
        type=int,
        default=1024,
        help="working resolution (square); metrics are resolution-sensitive",
    )
    shared.add_argument(
        "--no-resize",
        action="store_true",
        help="evaluate at native resolution instead of --resize-to",
    )
    shared.add_argument("--clf-c", type=float, default=2.0, help="probe inverse regularization")
    shared.add_argument("--boundary-radius", type=int, default=5, help="band dilation radius")
    shared.add_argument(
        "--filter-bank",
        default=None,
        help=f"filter bank file (falls back to ${BANK_ENV_VAR}, then a built-in seeded bank)",
    )

    p = sub.add_parser("metrics", parents=[shared], help="score every manifest record")
    p.add_argument("manifest", help="JSONL corpus manifest")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("synth", help="generate a synthetic textured corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--objects", type=int, default=8, help="number of objects (procedural sources)")
    p.add_argument("--masks", default=None, help="directory of source masks (instead of procedural)")
    p.add_argument("--textures", default=None, help="directory of texture tiles")
    p.add_argument("--pairs", type=int, default=7, help="texture pairs per object")
    p.add_argument("--canvas", type=int, default=1024)
    p.add_argument("--target-bbox", type=int, default=512)
    p.add_argument("--keep-aspect", action="store_true", help="fit instead of stretch to the box")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("correlate", help="correlate a metrics CSV column against IoU")
    p.add_argument("results_csv")
    p.add_argument("--metric", choices=["cpr", "dogd", "separability"], default="cpr")
    p.add_argument("--group-size", type=int, default=5, help="chunked-average group size")
    p.add_argument("--out-json", required=True)
    p.add_argument("--scatter-csv", default=None, help="also write aggregated (metric, iou) pairs")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("sweep", parents=[shared], help="correlations across a parameter grid")
    p.add_argument("manifest")
    p.add_argument("--grid", choices=["cpr-r", "dogd-ab", "sep-c"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--group-size", type=int, default=5)
    p.add_argument("--r-values", default=None, help="comma-separated radii (default 1,3,5,7,9,11)")
    p.add_argument("--a-values", default=None, help="comma-separated large windows (default 63,127,255)")
    p.add_argument("--b-values", default=None, help="comma-separated small windows (default 3,7,15,31)")
    p.add_argument("--c-values", default=None, help="comma-separated probe C values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "ablate-thickness", parents=[shared], help="re-score masks at fixed stroke widths"
    )
    p.add_argument("manifest")
    p.add_argument("--radii", default="1,2,3,4,6,8", help="comma-separated dilation radii")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate_thickness)

    p = sub.add_parser("make-bank", help="write a seeded random filter bank")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_BANK_SEED)
    p.add_argument("--filters", type=int, default=64)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--kernel", type=int, default=7)
    p.add_argument("--stride", type=int, default=2)
    p.add_argument("--padding", type=int, default=3)
    p.set_defaults(func=cmd_make_bank)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SegmetricsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
