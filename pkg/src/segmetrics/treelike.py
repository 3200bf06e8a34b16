"""Tree-likeness metrics computed from binary masks.

Two families of scores:

* contour pixel rate (CPR): fraction of foreground pixels whose L1
  neighborhood of radius r touches at least one background cell. Thin,
  branchy shapes have CPR near 1; blobs have CPR near 0.
* difference of Gini dispersion (DoGD): the Gini impurity of the
  foreground fraction is mapped over sliding windows at two scales, and
  the population standard deviations of the two maps are subtracted
  (sigma_large - sigma_small). More negative values indicate more
  tree-like masks.

Both are resolution-sensitive, so corpus drivers normalize inputs to a
common working resolution before calling in here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMask, InvalidConfig, WindowTooLarge
from .imgcore import as_mask, erode_diamond


@dataclass(frozen=True)
class TreelikeConfig:
    """Parameters for the standard CPR + DoGD pair.

    r is the CPR neighborhood radius; a and b are the large and small
    Gini window sizes (a > b >= 1).
    """

    r: int = 5
    a: int = 127
    b: int = 3

    def __post_init__(self) -> None:
        if self.r < 1:
            raise InvalidConfig(f"r must be >= 1, got {self.r}")
        if self.b < 1:
            raise InvalidConfig(f"b must be >= 1, got {self.b}")
        if self.a <= self.b:
            raise InvalidConfig(f"need a > b, got a={self.a} b={self.b}")


def cpr(mask: np.ndarray, r: int = 5) -> float:
    """Contour pixel rate: |contour| / |foreground|.

    A foreground pixel belongs to the contour when its diamond
    neighborhood of radius r (cells at L1 distance <= r, with the border
    zero-padded) contains at least one background cell; equivalently,
    when it does not survive erosion by that diamond.
    """
    m = as_mask(mask)
    fg = int(m.sum())
    if fg == 0:
        raise EmptyMask("CPR is undefined for an empty mask")
    if r < 1:
        raise InvalidConfig(f"r must be >= 1, got {r}")
    contour = m & ~erode_diamond(m, r)
    return int(contour.sum()) / fg


def window_fg_counts(mask: np.ndarray, k: int) -> np.ndarray:
    """Foreground counts over all fully-inside k x k windows.

    Output shape is (H - k + 1, W - k + 1); windows never cross the
    image border. Computed with a summed-area table.
    """
    m = as_mask(mask)
    h, w = m.shape
    if k < 1:
        raise InvalidConfig(f"window size must be >= 1, got {k}")
    if k > min(h, w):
        raise WindowTooLarge(f"window {k} exceeds image {h}x{w}")
    sat = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(m, axis=0, out=sat[1:, 1:])
    np.cumsum(sat[1:, 1:], axis=1, out=sat[1:, 1:])
    return sat[k:, k:] - sat[:-k, k:] - sat[k:, :-k] + sat[:-k, :-k]


@dataclass(frozen=True)
class GiniMap:
    """Gini impurity of the foreground fraction per k x k window."""

    window: int
    values: np.ndarray  # float64, shape (H - k + 1, W - k + 1)


def gini_map(mask: np.ndarray, k: int) -> GiniMap:
    """Per-window Gini impurity 1 - p^2 - (1-p)^2 with p the fg fraction.

    Values live in [0, 0.5]; 0 for pure windows, 0.5 for an even split.
    """
    counts = window_fg_counts(mask, k)
    p = counts / float(k * k)
    values = 1.0 - p * p - (1.0 - p) * (1.0 - p)
    return GiniMap(window=k, values=values)


def gini_std(mask: np.ndarray, k: int) -> float:
    """Population standard deviation of the Gini map (in [0, 0.25])."""
    return float(np.std(gini_map(mask, k).values))


def dogd(mask: np.ndarray, a: int = 127, b: int = 3) -> float:
    """Difference of Gini dispersion: gini_std(a) - gini_std(b).

    Lies in [-0.25, 0.25]; more negative means more tree-like. Raises
    WindowTooLarge when the larger window does not fit the mask and
    InvalidConfig unless a > b >= 1.
    """
    if b < 1 or a <= b:
        raise InvalidConfig(f"need a > b >= 1, got a={a} b={b}")
    return gini_std(mask, a) - gini_std(mask, b)


def treelike_scores(mask: np.ndarray, cfg: TreelikeConfig) -> tuple[float, float]:
    """Convenience wrapper returning (cpr, dogd) under one config."""
    return cpr(mask, cfg.r), dogd(mask, cfg.a, cfg.b)
