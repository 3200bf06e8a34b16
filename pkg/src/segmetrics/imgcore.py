"""Core raster primitives: masks, structuring elements, morphology, resizing, IO.

Masks are 2-D numpy bool arrays (True = foreground). Images are uint8
arrays, either (H, W) grayscale or (H, W, 3) RGB. Everything downstream
builds on the conventions fixed here, in particular the center-sampling
resize rules and the zero-padded neighborhood counting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage
from skimage.morphology import skeletonize as _zhang_skeletonize

from .errors import DimensionMismatch, EmptyMask, InvalidConfig, IoError


@dataclass(frozen=True)
class StructuringElement:
    """A centered neighborhood described by its (dy, dx) offsets.

    Attributes
    ----------
    shape : str
        Either "diamond" (L1 ball) or "disk" (Euclidean ball).
    radius : int
        Nonnegative radius. Radius 0 is the single origin cell.
    offsets : np.ndarray
        Integer array of shape (n_cells, 2); always contains (0, 0).
    """

    shape: str
    radius: int
    offsets: np.ndarray

    @property
    def size(self) -> int:
        return len(self.offsets)

    def footprint(self) -> np.ndarray:
        """Dense bool footprint of shape (2r+1, 2r+1) with the origin at the center."""
        r = self.radius
        fp = np.zeros((2 * r + 1, 2 * r + 1), dtype=bool)
        fp[self.offsets[:, 0] + r, self.offsets[:, 1] + r] = True
        return fp


def make_element(shape: str, radius: int) -> StructuringElement:
    """Build a diamond (|dy|+|dx| <= r) or disk (dy^2+dx^2 <= r^2) element."""
    if radius < 0:
        raise InvalidConfig(f"radius must be >= 0, got {radius}")
    if shape not in ("diamond", "disk"):
        raise InvalidConfig(f"unknown element shape {shape!r}")
    rng = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(rng, rng, indexing="ij")
    if shape == "diamond":
        keep = np.abs(dy) + np.abs(dx) <= radius
    else:
        keep = dy * dy + dx * dx <= radius * radius
    offsets = np.stack([dy[keep], dx[keep]], axis=1).astype(np.int64)
    return StructuringElement(shape=shape, radius=radius, offsets=offsets)


def as_mask(arr: np.ndarray) -> np.ndarray:
    """Validate and coerce an array to a 2-D bool mask."""
    a = np.asarray(arr)
    if a.ndim != 2:
        raise DimensionMismatch(f"mask must be 2-D, got shape {a.shape}")
    return a.astype(bool, copy=False)


def dilate(mask: np.ndarray, element: StructuringElement) -> np.ndarray:
    """Binary dilation; the output always contains the input."""
    m = as_mask(mask)
    if element.radius == 0:
        return m.copy()
    return ndimage.binary_dilation(m, structure=element.footprint())


def erode_diamond(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary erosion by an L1 ball, zero-padded outside the image.

    Diamond(r) decomposes into r erosions by Diamond(1), which is much
    faster at large radii than one pass with the full footprint.
    """
    m = as_mask(mask)
    if radius == 0:
        return m.copy()
    unit = make_element("diamond", 1).footprint()
    return ndimage.binary_erosion(m, structure=unit, iterations=radius, border_value=0)


def neighbor_counts(mask: np.ndarray, element: StructuringElement) -> np.ndarray:
    """Count foreground cells inside the element footprint centered at each pixel.

    Cells of the footprint falling outside the image count as background
    (zero padding). For diamond elements this runs in O(H*W) independent
    of the radius via an integral image on the 45-degree rotated lattice:
    under u = y + x, v = y - x + (W-1) the L1 ball becomes an
    axis-aligned box, because |dy| + |dx| = max(|du|, |dv|).
    """
    m = as_mask(mask)
    if element.shape == "diamond":
        return _diamond_counts(m, element.radius)
    return _generic_counts(m, element)


def _diamond_counts(mask: np.ndarray, radius: int) -> np.ndarray:
    h, w = mask.shape
    n = h + w - 1
    rot = np.zeros((n, n), dtype=np.int64)
    yy, xx = np.indices((h, w))
    u = yy + xx
    v = yy - xx + (w - 1)
    rot[u, v] = mask
    integ = np.zeros((n + 1, n + 1), dtype=np.int64)
    np.cumsum(rot, axis=0, out=integ[1:, 1:])
    np.cumsum(integ[1:, 1:], axis=1, out=integ[1:, 1:])
    u0 = np.clip(u - radius, 0, n)
    u1 = np.clip(u + radius + 1, 0, n)
    v0 = np.clip(v - radius, 0, n)
    v1 = np.clip(v + radius + 1, 0, n)
    return (
        integ[u1, v1] - integ[u0, v1] - integ[u1, v0] + integ[u0, v0]
    )


def _generic_counts(mask: np.ndarray, element: StructuringElement) -> np.ndarray:
    h, w = mask.shape
    counts = np.zeros((h, w), dtype=np.int64)
    for dy, dx in element.offsets:
        if abs(dy) >= h or abs(dx) >= w:
            continue
        ys = slice(max(0, -dy), min(h, h - dy))
        xs = slice(max(0, -dx), min(w, w - dx))
        yd = slice(max(0, dy), min(h, h + dy))
        xd = slice(max(0, dx), min(w, w + dx))
        counts[ys, xs] += mask[yd, xd]
    return counts


@dataclass(frozen=True)
class BBox:
    """Tight axis-aligned bounding box (top/left inclusive)."""

    top: int
    left: int
    height: int
    width: int

    @property
    def slices(self) -> tuple[slice, slice]:
        return (
            slice(self.top, self.top + self.height),
            slice(self.left, self.left + self.width),
        )


def tight_bbox(mask: np.ndarray) -> BBox:
    """Smallest box covering all foreground pixels. Raises EmptyMask if none."""
    m = as_mask(mask)
    rows = np.flatnonzero(m.any(axis=1))
    if rows.size == 0:
        raise EmptyMask("mask has no foreground pixels")
    cols = np.flatnonzero(m.any(axis=0))
    return BBox(
        top=int(rows[0]),
        left=int(cols[0]),
        height=int(rows[-1] - rows[0] + 1),
        width=int(cols[-1] - cols[0] + 1),
    )


@dataclass(frozen=True)
class LabeledComponents:
    """Connected-component labelling: 0 = background, 1..count = components.

    Labels are assigned in raster-scan order of each component's first
    pixel, so the numbering is reproducible across runs and platforms.
    """

    labels: np.ndarray
    count: int

    def component(self, label: int) -> np.ndarray:
        if not 1 <= label <= self.count:
            raise InvalidConfig(f"label {label} outside 1..{self.count}")
        return self.labels == label


def connected_components(mask: np.ndarray, connectivity: int = 8) -> LabeledComponents:
    """Label connected foreground regions with 4- or 8-connectivity."""
    m = as_mask(mask)
    if connectivity == 8:
        structure = np.ones((3, 3), dtype=bool)
    elif connectivity == 4:
        structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    else:
        raise InvalidConfig(f"connectivity must be 4 or 8, got {connectivity}")
    raw, count = ndimage.label(m, structure=structure)
    if count == 0:
        return LabeledComponents(labels=raw.astype(np.int32), count=0)
    # Renumber so that label order follows first appearance in raster order.
    uniq, first = np.unique(raw.ravel(), return_index=True)
    fg = uniq > 0
    order = np.argsort(first[fg], kind="stable")
    lut = np.zeros(count + 1, dtype=np.int32)
    lut[uniq[fg][order]] = np.arange(1, count + 1, dtype=np.int32)
    return LabeledComponents(labels=lut[raw], count=int(count))


def skeletonize(mask: np.ndarray) -> np.ndarray:
    """Thin a mask to a 1-pixel-wide skeleton (Zhang-Suen)."""
    return _zhang_skeletonize(as_mask(mask)).astype(bool)


def resize_mask_nn(mask: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest-neighbor resize with center sampling.

    Destination pixel i samples source index floor((i + 0.5) * src / dst),
    clipped into range. Identity when sizes match.
    """
    m = as_mask(mask)
    if height < 1 or width < 1:
        raise InvalidConfig(f"target size must be positive, got {height}x{width}")
    rows = _nn_indices(m.shape[0], height)
    cols = _nn_indices(m.shape[1], width)
    return m[rows[:, None], cols[None, :]]


def _nn_indices(src: int, dst: int) -> np.ndarray:
    idx = np.floor((np.arange(dst) + 0.5) * (src / dst)).astype(np.intp)
    return np.clip(idx, 0, src - 1)


def resize_image(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of a uint8 image with edge clamping.

    Source coordinates use the same center-sampling convention as the
    nearest-neighbor path: src = (dst + 0.5) * scale - 0.5, clamped to the
    valid range. Results are rounded half-to-even back to uint8, so a
    constant image stays exactly constant.
    """
    img = np.asarray(image)
    if img.ndim not in (2, 3):
        raise DimensionMismatch(f"image must be 2-D or 3-D, got shape {img.shape}")
    if height < 1 or width < 1:
        raise InvalidConfig(f"target size must be positive, got {height}x{width}")
    src_h, src_w = img.shape[:2]
    fy = np.clip((np.arange(height) + 0.5) * (src_h / height) - 0.5, 0, src_h - 1)
    fx = np.clip((np.arange(width) + 0.5) * (src_w / width) - 0.5, 0, src_w - 1)
    y0 = np.floor(fy).astype(np.intp)
    x0 = np.floor(fx).astype(np.intp)
    y1 = np.minimum(y0 + 1, src_h - 1)
    x1 = np.minimum(x0 + 1, src_w - 1)
    wy = (fy - y0)[:, None]
    wx = (fx - x0)[None, :]
    if img.ndim == 3:
        wy = wy[..., None]
        wx = wx[..., None]
    vals = img.astype(np.float64)
    top = vals[y0][:, x0] * (1 - wx) + vals[y0][:, x1] * wx
    bot = vals[y1][:, x0] * (1 - wx) + vals[y1][:, x1] * wx
    out = top * (1 - wy) + bot * wy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def load_image(path: str) -> np.ndarray:
    """Read an image file as (H, W, 3) uint8, promoting grayscale to RGB."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except FileNotFoundError as exc:
        raise IoError(f"cannot read image {path}: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read image {path}: {exc}") from exc


def save_image(path: str, image: np.ndarray) -> None:
    img = np.asarray(image, dtype=np.uint8)
    try:
        Image.fromarray(img).save(path)
    except OSError as exc:
        raise IoError(f"cannot write image {path}: {exc}") from exc


def load_mask(path: str) -> np.ndarray:
    """Read a mask image; any nonzero pixel is foreground."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"))
    except FileNotFoundError as exc:
        raise IoError(f"cannot read mask {path}: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read mask {path}: {exc}") from exc
    return arr > 0


def save_mask(path: str, mask: np.ndarray) -> None:
    arr = np.where(as_mask(mask), np.uint8(255), np.uint8(0))
    try:
        Image.fromarray(arr, mode="L").save(path)
    except OSError as exc:
        raise IoError(f"cannot write mask {path}: {exc}") from exc
