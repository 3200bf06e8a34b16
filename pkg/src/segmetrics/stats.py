"""Evaluation statistics: IoU, mask fusion, rank correlations, spatial autocorrelation.

The correlation functions are written against their textbook pair/rank
definitions (Kendall tau-b with tie correction, Spearman as Pearson of
midranks) rather than calling out to a stats library, because their tie
conventions are part of this package's contract and are pinned by tests
against exhaustive-pair oracles.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import (
    DimensionMismatch,
    EmptyList,
    FormatError,
    InvalidConfig,
    IoError,
    LengthMismatch,
    Undefined,
)
from .imgcore import as_mask


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two masks; 1.0 when both are empty."""
    ma = as_mask(a)
    mb = as_mask(b)
    if ma.shape != mb.shape:
        raise DimensionMismatch(f"mask shapes differ: {ma.shape} vs {mb.shape}")
    union = int(np.logical_or(ma, mb).sum())
    if union == 0:
        return 1.0
    return int(np.logical_and(ma, mb).sum()) / union


def majority_vote(masks: list[np.ndarray]) -> np.ndarray:
    """Pixelwise strict-majority fusion; ties go to background."""
    if not masks:
        raise EmptyList("majority_vote needs at least one mask")
    first = as_mask(masks[0])
    counts = np.zeros(first.shape, dtype=np.int64)
    for m in masks:
        mm = as_mask(m)
        if mm.shape != first.shape:
            raise DimensionMismatch(f"mask shapes differ: {mm.shape} vs {first.shape}")
        counts += mm
    return counts * 2 > len(masks)


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=np.float64).ravel()
    ya = np.asarray(y, dtype=np.float64).ravel()
    if xa.shape != ya.shape:
        raise LengthMismatch(f"lengths differ: {xa.size} vs {ya.size}")
    if xa.size < 2:
        raise Undefined("need at least two paired observations")
    return xa, ya


def _tie_pairs(v: np.ndarray) -> int:
    _, counts = np.unique(v, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def kendall_tau(x, y) -> float:
    """Kendall's tau-b: (concordant - discordant) / sqrt((n0-n1)(n0-n2))."""
    xa, ya = _paired(x, y)
    n = xa.size
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(xa)
    n2 = _tie_pairs(ya)
    if n0 == n1 or n0 == n2:
        raise Undefined("tau is undefined when one variable is constant")
    s = 0
    for start in range(0, n, 512):
        block = slice(start, min(start + 512, n))
        sx = np.sign(xa[block, None] - xa[None, :]).astype(np.int8)
        sy = np.sign(ya[block, None] - ya[None, :]).astype(np.int8)
        s += int((sx * sy).sum(dtype=np.int64))
    # every unordered pair appears twice with the same product
    s //= 2
    tau = s / math.sqrt(float(n0 - n1) * float(n0 - n2))
    return min(max(tau, -1.0), 1.0)


def midranks(v) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    va = np.asarray(v, dtype=np.float64).ravel()
    order = np.argsort(va, kind="stable")
    sv = va[order]
    cuts = np.flatnonzero(np.diff(sv)) + 1
    starts = np.concatenate(([0], cuts))
    ends = np.concatenate((cuts, [va.size]))
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(va.size, dtype=np.float64)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def spearman_rho(x, y) -> float:
    """Spearman correlation: Pearson correlation of midranks."""
    xa, ya = _paired(x, y)
    return pearson_r(midranks(xa), midranks(ya))


def pearson_r(x, y) -> float:
    """Product-moment correlation; Undefined when either side is constant."""
    xa, ya = _paired(x, y)
    xm = xa - xa.mean()
    ym = ya - ya.mean()
    sx = math.sqrt(float(xm @ xm))
    sy = math.sqrt(float(ym @ ym))
    if sx == 0.0 or sy == 0.0:
        raise Undefined("correlation is undefined for constant data")
    r = float(xm @ ym) / (sx * sy)
    return min(max(r, -1.0), 1.0)


@dataclass
class MetricSeries:
    """Paired per-record metric and IoU values, keyed by record id."""

    ids: list[str]
    metric: np.ndarray
    iou: np.ndarray

    def __post_init__(self) -> None:
        self.metric = np.asarray(self.metric, dtype=np.float64)
        self.iou = np.asarray(self.iou, dtype=np.float64)
        if not (len(self.ids) == self.metric.size == self.iou.size):
            raise LengthMismatch("ids, metric and iou must be parallel")

    def __len__(self) -> int:
        return len(self.ids)


def aggregate(series: MetricSeries, group_size: int) -> MetricSeries:
    """Denoise by chunked averaging.

    Records are sorted by metric value (ties broken by id), split into
    consecutive chunks of group_size (the final chunk may be smaller),
    and each chunk is replaced by its mean metric and mean IoU. With
    group_size 1 this is a stable sort of the input.
    """
    if group_size < 1:
        raise InvalidConfig(f"group_size must be >= 1, got {group_size}")
    n = len(series)
    order = np.lexsort((np.asarray(series.ids, dtype=np.str_), series.metric))
    ids = []
    metric = []
    iou_vals = []
    for gi, start in enumerate(range(0, n, group_size)):
        chunk = order[start : start + group_size]
        ids.append(f"g{gi:05d}")
        metric.append(float(series.metric[chunk].mean()))
        iou_vals.append(float(series.iou[chunk].mean()))
    return MetricSeries(ids=ids, metric=np.array(metric), iou=np.array(iou_vals))


@dataclass
class CorrelationReport:
    """Rank and linear correlations between a metric and IoU."""

    metric_name: str
    n: int
    group_size: int
    kendall: float | None = None
    spearman: float | None = None
    pearson: float | None = None
    notes: list[str] = field(default_factory=list)


def correlate(
    series: MetricSeries, metric_name: str, group_size: int = 1
) -> CorrelationReport:
    """Aggregate a series and correlate metric against IoU.

    Statistics that are undefined for the data (constant columns) are
    reported as None with an explanatory note instead of aborting.
    """
    agg = aggregate(series, group_size) if group_size > 1 else series
    report = CorrelationReport(metric_name=metric_name, n=len(agg), group_size=group_size)
    for name, fn in (
        ("kendall", kendall_tau),
        ("spearman", spearman_rho),
        ("pearson", pearson_r),
    ):
        try:
            setattr(report, name, fn(agg.metric, agg.iou))
        except Undefined as exc:
            report.notes.append(f"{name}: {exc}")
    return report


def morans_i(values: np.ndarray, contiguity: str = "rook") -> float:
    """Moran's I of a 2-D map under binary rook or queen contiguity.

    I = (N / W) * sum_ij w_ij (x_i - m)(x_j - m) / sum_i (x_i - m)^2 with
    w_ii = 0 and w_ij = 1 for grid neighbors. Raises Undefined for a
    constant map (zero variance).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise DimensionMismatch(f"attention map must be 2-D, got shape {v.shape}")
    if contiguity not in ("rook", "queen"):
        raise InvalidConfig(f"contiguity must be rook or queen, got {contiguity!r}")
    x = v - v.mean()
    denom = float((x * x).sum())
    if denom == 0.0:
        raise Undefined("Moran's I is undefined for a constant map")
    h, w = v.shape
    cross = float((x[:, :-1] * x[:, 1:]).sum() + (x[:-1, :] * x[1:, :]).sum())
    n_links = h * (w - 1) + (h - 1) * w
    if contiguity == "queen":
        cross += float((x[:-1, :-1] * x[1:, 1:]).sum() + (x[:-1, 1:] * x[1:, :-1]).sum())
        n_links += 2 * (h - 1) * (w - 1)
    # symmetric weights: each undirected link counts twice
    total_w = 2.0 * n_links
    return (v.size / total_w) * (2.0 * cross) / denom


def load_attention_map(path: str) -> np.ndarray:
    """Read an attention map as float64 in [0, 1].

    CSV files are parsed as a rectangular numeric grid and must already
    be scaled to [0, 1]; image files are read as grayscale and divided
    by 255.
    """
    ext = os.path.splitext(path)[1].lower()
    if ext == ".csv":
        try:
            arr = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
        except OSError as exc:
            raise IoError(f"cannot read attention map {path}: {exc}") from exc
        except ValueError as exc:
            raise FormatError(f"{path}: not a rectangular numeric grid: {exc}") from exc
        if not np.all(np.isfinite(arr)):
            raise FormatError(f"{path}: attention values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise FormatError(f"{path}: attention values must lie in [0, 1]")
        return arr
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    except FileNotFoundError as exc:
        raise IoError(f"cannot read attention map {path}: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read attention map {path}: {exc}") from exc
