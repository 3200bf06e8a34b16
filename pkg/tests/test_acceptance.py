"""Acceptance gate: one test per release criterion, one printed line each.

Every test emits "[PASS] ..." or "[FAIL] ..." through capsys.disabled()
so the verdict shows up in any pytest invocation, then asserts. Run just
this gate with:

    pytest tests/test_acceptance.py -v
"""

import time

import numpy as np
import pytest

from segmetrics.cli import main
from segmetrics.errors import EmptyMask, Undefined
from segmetrics.imgcore import save_image, save_mask, tight_bbox
from segmetrics.manifest import ManifestRecord, write_manifest
from segmetrics.separability import (
    ProbeConfig,
    extract_features,
    logistic_loss_grad,
    random_filter_bank,
    save_filter_bank,
    textural_separability,
)
from segmetrics.stats import kendall_tau, majority_vote, morans_i, pearson_r, spearman_rho
from segmetrics.synthgen import (
    SynthSpec,
    generate_dataset,
    procedural_texture_bank,
    random_tree_mask,
    random_tree_skeleton,
    texturize,
    thicken_skeleton,
)
from segmetrics.treelike import cpr, dogd, gini_map

from oracles import (
    cpr_reference,
    dogd_reference,
    kendall_reference,
    majority_reference,
    pearson_reference,
    random_mask,
    spearman_reference,
)


@pytest.fixture
def report(capsys):
    def _emit(name: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}"
        if detail:
            line += f" -- {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return _emit


def test_c01_cpr_equals_bruteforce(report):
    rng = np.random.default_rng(11)
    start = time.perf_counter()
    mismatches = []
    checks = 0
    for _ in range(200):
        h = int(rng.integers(2, 65))
        w = int(rng.integers(2, 65))
        mask = random_mask(rng, h, w)
        if not mask.any():
            mask[rng.integers(h), rng.integers(w)] = True
        for r in (1, 3, 5, 7):
            fast = cpr(mask, r)
            slow = cpr_reference(mask, r)
            checks += 1
            if fast != slow:
                mismatches.append((h, w, r, fast, slow))
    elapsed = time.perf_counter() - start
    report(
        "C1 CPR equals per-pixel scan exactly (200 masks, R in {1,3,5,7})",
        not mismatches and elapsed < 10.0,
        f"{checks} checks, 0 tolerance, {elapsed:.1f}s (limit 10s)"
        + (f", first mismatch {mismatches[0]}" if mismatches else ""),
    )


def test_c02_dogd_matches_window_loop(report):
    rng = np.random.default_rng(22)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        h = int(rng.integers(32, 65))
        w = int(rng.integers(32, 65))
        mask = random_mask(rng, h, w)
        for a, b in ((15, 3), (15, 7), (31, 3)):
            worst = max(worst, abs(dogd(mask, a, b) - dogd_reference(mask, a, b)))
    elapsed = time.perf_counter() - start
    report(
        "C2 DoGD matches all-windows double loop (100 masks, 3 scale pairs)",
        worst <= 1e-9 and elapsed < 30.0,
        f"max |diff| {worst:.2e} (tol 1e-9), {elapsed:.1f}s (limit 30s)",
    )


def test_c03_range_invariants_on_fuzzed_masks(report):
    rng = np.random.default_rng(33)
    bad = []
    for i in range(10_000):
        h = int(rng.integers(6, 17))
        w = int(rng.integers(6, 17))
        mask = random_mask(rng, h, w) if rng.random() > 0.05 else np.zeros((h, w), bool)
        r = int(rng.integers(1, 4))
        b = int(rng.integers(1, 3))
        a = b + int(rng.integers(1, 4))
        if mask.any():
            c = cpr(mask, r)
            if not 0.0 <= c <= 1.0:
                bad.append(("cpr", i, c))
        else:
            try:
                cpr(mask, r)
                bad.append(("no-raise", i, None))
            except EmptyMask:
                pass
        for k in (b, a):
            values = gini_map(mask, k).values
            if values.min() < 0.0 or values.max() > 0.5:
                bad.append(("gini", i, (values.min(), values.max())))
        d = dogd(mask, a, b)
        if not -0.25 <= d <= 0.25:
            bad.append(("dogd", i, d))
    report(
        "C3 range invariants on 10,000 fuzzed masks (+ EmptyMask iff empty)",
        not bad,
        "cpr in [0,1], gini in [0,0.5], dogd in [-0.25,0.25]"
        + (f", first violation {bad[0]}" if bad else ""),
    )


def test_c04_cpr_decreases_with_stroke_thickness(report):
    radii = (1, 2, 3, 4, 6, 8)
    violations = 0
    for i in range(20):
        skel = random_tree_skeleton(256, 256, np.random.default_rng(1000 + i))
        series = [cpr(thicken_skeleton(skel, r), 5) for r in radii]
        violations += sum(1 for p, q in zip(series, series[1:]) if q > p + 1e-12)

    widths = []
    for vertical in (False, True):
        line = np.zeros((64, 64), bool)
        if vertical:
            line[10:55, 32] = True
            spans = thicken_skeleton(line, 4).sum(axis=1)[10:55]
        else:
            line[32, 10:55] = True
            spans = thicken_skeleton(line, 4).sum(axis=0)[10:55]
        widths.extend(np.unique(spans).tolist())
    report(
        "C4 CPR(R=5) non-increasing in dilation radius; radius-4 bars 9 px wide",
        violations == 0 and set(widths) == {9},
        f"20 skeletons x radii {radii}, {violations} violations; "
        f"straight-bar widths {sorted(set(widths))}",
    )


def test_c05_cpr_dogd_anticorrelation(report):
    start = time.perf_counter()
    cprs = []
    dogds = []
    for i in range(200):
        rng = np.random.default_rng(5000 + i)
        mask = random_tree_mask(
            256, 256, rng, radius=i % 8, max_depth=int(rng.integers(4, 7))
        )
        cprs.append(cpr(mask, 5))
        dogds.append(dogd(mask, 127, 3))
    r = pearson_r(cprs, dogds)
    elapsed = time.perf_counter() - start
    report(
        "C5 Pearson(CPR, DoGD) <= -0.5 on 200 tree masks, widths 1..15",
        r <= -0.5 and elapsed < 120.0,
        f"r = {r:.3f}, {elapsed:.1f}s (limit 120s)",
    )


def test_c06_correlations_match_closed_forms(report):
    rng = np.random.default_rng(66)
    worst = 0.0
    done = 0
    while done < 1000:
        n = int(rng.integers(2, 13))
        x = rng.integers(0, 6, size=n).astype(float)
        y = rng.integers(0, 6, size=n).astype(float)
        if np.all(x == x[0]) or np.all(y == y[0]):
            continue
        worst = max(
            worst,
            abs(kendall_tau(x, y) - kendall_reference(x, y)),
            abs(spearman_rho(x, y) - spearman_reference(x, y)),
            abs(pearson_r(x, y) - pearson_reference(x, y)),
        )
        done += 1
    report(
        "C6 tau/rho/r match exhaustive-pair oracles on 1,000 tied short lists",
        worst <= 1e-12,
        f"max |diff| {worst:.2e} (tol 1e-12)",
    )


def test_c07_separability_endpoints_and_gradient(report):
    bank = random_filter_bank(1)
    yy, xx = np.mgrid[:128, :128]
    mask = (yy - 64) ** 2 + (xx - 64) ** 2 <= 40 * 40

    contrast = []
    for s in range(2):
        img = texturize(mask, np.full((8, 8, 3), 200, np.uint8), np.full((8, 8, 3), 40, np.uint8))
        contrast.append(textural_separability(img, mask, bank, ProbeConfig(seed=s)))

    identical = []
    for t in range(20):
        noise = np.random.default_rng(9000 + t).integers(0, 256, (128, 128, 3)).astype(np.uint8)
        identical.append(textural_separability(noise, mask, bank, ProbeConfig(seed=t)))

    rng = np.random.default_rng(7)
    x = rng.normal(size=(40, 6))
    ys = np.where(rng.random(40) < 0.5, -1.0, 1.0)
    params = rng.normal(size=7)
    _, grad = logistic_loss_grad(params, x, ys, lam=0.3)
    eps = 1e-6
    numeric = np.empty_like(grad)
    for j in range(params.size):
        step = np.zeros_like(params)
        step[j] = eps
        hi, _ = logistic_loss_grad(params + step, x, ys, lam=0.3)
        lo, _ = logistic_loss_grad(params - step, x, ys, lam=0.3)
        numeric[j] = (hi - lo) / (2 * eps)
    rel = float(np.linalg.norm(grad - numeric) / max(np.linalg.norm(numeric), 1e-12))

    ok = (
        min(contrast) >= 0.95
        and all(0.4 <= v <= 0.6 for v in identical)
        and rel <= 1e-5
    )
    report(
        "C7 probe endpoints (contrast >= 0.95, same-texture ~ chance) + gradient",
        ok,
        f"contrast min {min(contrast):.3f}; identical-texture range "
        f"[{min(identical):.3f}, {max(identical):.3f}] over 20 trials; "
        f"grad rel err {rel:.1e} (tol 1e-5)",
    )


def test_c08_canonical_feature_geometry(report):
    image = np.random.default_rng(88).integers(0, 256, (1024, 1024, 3)).astype(np.uint8)
    bank = random_filter_bank(2470)
    first = extract_features(image, bank)
    second = extract_features(image.copy(), bank)
    ok = first.shape == (64, 512, 512) and first.tobytes() == second.tobytes()
    report(
        "C8 1024x1024 through 64x7x7 stride-2 pad-3 bank -> 64x512x512, bit-stable",
        ok,
        f"shape {first.shape}, reruns byte-identical: {first.tobytes() == second.tobytes()}",
    )


def test_c09_synthetic_pipeline_fidelity(report):
    sources = [
        random_tree_mask(768, 768, np.random.default_rng(77 + i), radius=2 + 3 * i, max_depth=5)
        for i in range(2)
    ]
    bank = procedural_texture_bank(3, count=8)
    spec = SynthSpec(seed=123)
    items = generate_dataset(sources, bank, spec)
    again = generate_dataset(sources, bank, spec)

    problems = []
    for item, copy in zip(items, again):
        box = tight_bbox(item.mask)
        if (box.height, box.width) != (512, 512):
            problems.append(f"bbox {box.height}x{box.width}")
        if item.mask.shape != (1024, 1024):
            problems.append(f"canvas {item.mask.shape}")
        if len(item.images) != 7 or len(set(item.pairs)) != 7:
            problems.append("texture pairs not 7 distinct")
        if any(fg == bg for fg, bg in item.pairs):
            problems.append("fg == bg pair")
        if item.mask.tobytes() != copy.mask.tobytes() or any(
            a.tobytes() != b.tobytes() for a, b in zip(item.images, copy.images)
        ):
            problems.append("rerun differs")

    rng = np.random.default_rng(99)
    small = items[0].mask[::16, ::16]
    preds = [small ^ (rng.random(small.shape) < 0.2) for _ in range(7)]
    if not np.array_equal(majority_vote(preds), majority_reference(preds)):
        problems.append("majority vote != counting oracle")

    report(
        "C9 synthetic objects: exact 512x512 bbox, K=7 pairs, fusion oracle, seeded",
        not problems,
        "2 objects x 7 renderings" + (f"; problems: {problems}" if problems else ""),
    )


def test_c10_morans_i_fixed_points(report):
    checker = np.array([[1.0, 0.0], [0.0, 1.0]])
    rook = morans_i(checker, "rook")
    halves = np.zeros((8, 8))
    halves[:, 4:] = 0.8
    halves[:, :4] = 0.2
    positive = morans_i(halves, "rook")
    try:
        morans_i(np.full((5, 5), 0.3), "rook")
        raised = False
    except Undefined:
        raised = True
    ok = rook == -1.0 and positive > 0.0 and raised
    report(
        "C10 Moran's I: checkerboard -1.0 exact, halves positive, constant undefined",
        ok,
        f"checker {rook}, halves {positive:.3f}, constant raised Undefined: {raised}",
    )


def test_c11_cli_byte_identical_across_jobs(report, tmp_path):
    tiles = procedural_texture_bank(13, count=4, size=16).tiles
    records = []
    for i in range(50):
        rng = np.random.default_rng(3000 + i)
        mask = random_tree_mask(64, 64, rng, radius=i % 5, max_depth=4)
        save_mask(str(tmp_path / f"m{i}.png"), mask)
        save_image(str(tmp_path / f"i{i}.png"), texturize(mask, tiles[i % 4], tiles[(i + 1) % 4]))
        pred = mask ^ (rng.random(mask.shape) < 0.02)
        save_mask(str(tmp_path / f"p{i}.png"), pred)
        records.append(
            ManifestRecord(
                id=f"rec{i:03d}",
                image_path=f"i{i}.png",
                gt_mask_path=f"m{i}.png",
                pred_mask_paths=[f"p{i}.png"],
            )
        )
    manifest = str(tmp_path / "manifest.jsonl")
    write_manifest(manifest, records)
    bank_path = str(tmp_path / "bank.txfb")
    save_filter_bank(
        bank_path, random_filter_bank(9, num_filters=8, kernel_size=5, stride=2, padding=2)
    )
    args = [
        "metrics", manifest, "--filter-bank", bank_path,
        "--resize-to", "64", "--a", "31", "--b", "3",
    ]
    out1 = str(tmp_path / "jobs1.csv")
    out8 = str(tmp_path / "jobs8.csv")
    code1 = main(args + ["--out", out1, "--jobs", "1"])
    code8 = main(args + ["--out", out8, "--jobs", "8"])
    same = open(out1, "rb").read() == open(out8, "rb").read()
    report(
        "C11 cmd_metrics on 50 records byte-identical for --jobs 1 vs --jobs 8",
        code1 == 0 and code8 == 0 and same,
        f"exit codes ({code1}, {code8}), identical bytes: {same}",
    )


def test_c12_metric_throughput_at_native_resolution(report):
    masks = []
    for i in range(50):
        masks.append(
            random_tree_mask(1024, 1024, np.random.default_rng(4000 + i), radius=i % 8, max_depth=5)
        )
    rng = np.random.default_rng(41)
    for _ in range(50):
        m = np.zeros((1024, 1024), bool)
        y0, x0 = rng.integers(0, 512, size=2)
        m[y0 : y0 + rng.integers(64, 512), x0 : x0 + rng.integers(64, 512)] = True
        masks.append(m)

    start = time.perf_counter()
    for m in masks:
        cpr(m, 5)
        dogd(m, 127, 3)
    elapsed = time.perf_counter() - start
    report(
        "C12 CPR + DoGD on 100 masks at 1024x1024 under 20s",
        elapsed < 20.0,
        f"{elapsed:.1f}s",
    )
