"""Synthetic corpus generation and geometry ablations.

The generator turns real (or procedural) source masks into a controlled
corpus: one connected component is sampled, stretched so its tight
bounding box is exactly target x target, dropped at a random position on
a blank canvas, and rendered under several foreground/background texture
pairings. Ablation helpers rewrite masks to a fixed stroke thickness or
rescale the object to a target effective patch size, and a prompt
sampler derives point/box prompts from a mask.

All randomness flows through numpy Generators seeded from explicit
integers, so the same spec always produces the same corpus.
"""

from __future__ import annotations

import glob
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    DegenerateObject,
    EmptyList,
    EmptyMask,
    InsufficientPixels,
    InsufficientTextures,
    InvalidConfig,
    IoError,
)
from .imgcore import (
    BBox,
    as_mask,
    connected_components,
    dilate,
    load_image,
    make_element,
    resize_image,
    resize_mask_nn,
    skeletonize,
    tight_bbox,
)

# Point-prompt counts (n_positive, n_negative) per corpus style.
PROMPT_PROFILES: dict[str, tuple[int, int]] = {
    "ishape": (5, 5),
    "dis": (5, 10),
    "mose": (5, 10),
    "plittersdorf": (0, 2),
    "nst": (0, 2),
}


@dataclass(frozen=True)
class SynthSpec:
    """Layout and seeding for synthetic corpus generation."""

    canvas: int = 1024
    target_bbox: int = 512
    texture_pairs: int = 7
    keep_aspect: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.canvas < 1:
            raise InvalidConfig(f"canvas must be >= 1, got {self.canvas}")
        if not 1 <= self.target_bbox <= self.canvas:
            raise InvalidConfig(
                f"target_bbox must be in 1..{self.canvas}, got {self.target_bbox}"
            )
        if self.texture_pairs < 1:
            raise InvalidConfig("texture_pairs must be >= 1")
        if self.seed < 0:
            raise InvalidConfig(f"seed must be >= 0, got {self.seed}")


@dataclass
class TextureBank:
    """Named uint8 texture tiles, each (h, w, 3); tiled with wraparound."""

    names: list[str]
    tiles: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.names) != len(self.tiles):
            raise InvalidConfig("names and tiles must be parallel lists")
        if len(self.tiles) < 2:
            raise InsufficientTextures(
                f"need at least 2 textures, got {len(self.tiles)}"
            )
        self.tiles = [_as_rgb_tile(t) for t in self.tiles]


def _as_rgb_tile(tile: np.ndarray) -> np.ndarray:
    arr = np.asarray(tile, dtype=np.uint8)
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidConfig(f"texture tile has unusable shape {arr.shape}")
    return arr


def load_texture_bank(directory: str) -> TextureBank:
    """Load every png/jpg in a directory (sorted by name) as texture tiles."""
    if not os.path.isdir(directory):
        raise IoError(f"texture directory not found: {directory}")
    paths = sorted(
        p
        for pattern in ("*.png", "*.jpg", "*.jpeg")
        for p in glob.glob(os.path.join(directory, pattern))
    )
    if len(paths) < 2:
        raise InsufficientTextures(
            f"{directory} holds {len(paths)} usable textures; need >= 2"
        )
    names = [os.path.splitext(os.path.basename(p))[0] for p in paths]
    return TextureBank(names=names, tiles=[load_image(p) for p in paths])


def procedural_texture_bank(seed: int, count: int = 8, size: int = 64) -> TextureBank:
    """Deterministic bank of simple synthetic tiles (stripes, checkers, noise, blobs)."""
    if count < 2:
        raise InsufficientTextures("need at least 2 textures")
    rng = np.random.default_rng(seed)
    names = []
    tiles = []
    kinds = ["stripes", "checker", "noise", "blobs"]
    for i in range(count):
        kind = kinds[i % len(kinds)]
        tiles.append(_make_tile(kind, size, rng))
        names.append(f"{kind}{i:02d}")
    return TextureBank(names=names, tiles=tiles)


def _make_tile(kind: str, size: int, rng: np.random.Generator) -> np.ndarray:
    c0 = rng.integers(0, 256, size=3)
    c1 = rng.integers(0, 256, size=3)
    yy, xx = np.mgrid[0:size, 0:size]
    if kind == "stripes":
        theta = rng.uniform(0, math.pi)
        freq = rng.uniform(2, 6)
        phase = (yy * math.sin(theta) + xx * math.cos(theta)) * freq / size
        sel = np.sin(2 * math.pi * phase) > 0
    elif kind == "checker":
        block = int(rng.integers(4, 17))
        sel = ((yy // block) + (xx // block)) % 2 == 0
    elif kind == "blobs":
        noise = rng.normal(size=(size, size))
        sel = ndimage.gaussian_filter(noise, sigma=rng.uniform(2, 5)) > 0
    else:
        jitter = rng.integers(-40, 41, size=(size, size, 3))
        return np.clip(c0[None, None, :] + jitter, 0, 255).astype(np.uint8)
    tile = np.where(sel[:, :, None], c0[None, None, :], c1[None, None, :])
    return tile.astype(np.uint8)


def sample_component(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Pick one 8-connected foreground component uniformly at random."""
    comps = connected_components(mask, connectivity=8)
    if comps.count == 0:
        raise EmptyMask("mask has no components to sample")
    label = int(rng.integers(1, comps.count + 1))
    return comps.component(label)


def place_object(
    component: np.ndarray, spec: SynthSpec, rng: np.random.Generator
) -> np.ndarray:
    """Stretch a component so its tight bbox is target x target, place it randomly.

    Nearest-neighbor resampling of a sparse shape can leave empty rows at
    the new border, so after the first resize the object is re-cropped
    and resized once more; a single fix-up pass is enough to make the
    bounding box exact. With keep_aspect the longer side is matched
    instead and the box is only guaranteed to fit inside target x target.
    """
    crop = component[tight_bbox(component).slices]
    t = spec.target_bbox
    if spec.keep_aspect:
        scale = t / max(crop.shape)
        new_h = max(1, min(t, round(crop.shape[0] * scale)))
        new_w = max(1, min(t, round(crop.shape[1] * scale)))
    else:
        new_h = new_w = t
    obj = resize_mask_nn(crop, new_h, new_w)
    for _ in range(2):
        try:
            bb = tight_bbox(obj)
        except EmptyMask:
            raise DegenerateObject("component vanished while resizing") from None
        if (bb.height, bb.width) == obj.shape:
            break
        obj = resize_mask_nn(obj[bb.slices], new_h, new_w)
    if not spec.keep_aspect and obj.shape != (t, t):
        raise DegenerateObject("failed to normalize component to the target box")
    canvas = np.zeros((spec.canvas, spec.canvas), dtype=bool)
    top = int(rng.integers(0, spec.canvas - obj.shape[0] + 1))
    left = int(rng.integers(0, spec.canvas - obj.shape[1] + 1))
    canvas[top : top + obj.shape[0], left : left + obj.shape[1]] = obj
    return canvas


def texturize(mask: np.ndarray, fg_tile: np.ndarray, bg_tile: np.ndarray) -> np.ndarray:
    """Render a mask as an RGB image: fg texture inside, bg texture outside.

    Both tiles repeat with wraparound from the canvas origin.
    """
    m = as_mask(mask)
    h, w = m.shape
    fg = _tile_to(h, w, _as_rgb_tile(fg_tile))
    bg = _tile_to(h, w, _as_rgb_tile(bg_tile))
    return np.where(m[:, :, None], fg, bg)


def _tile_to(h: int, w: int, tile: np.ndarray) -> np.ndarray:
    th, tw = tile.shape[:2]
    return tile[np.arange(h)[:, None] % th, np.arange(w)[None, :] % tw]


@dataclass
class SynthItem:
    """One generated object: its placed mask and the textured renderings."""

    mask: np.ndarray
    images: list[np.ndarray] = field(default_factory=list)
    pairs: list[tuple[str, str]] = field(default_factory=list)


def generate_dataset(
    source_masks: list[np.ndarray], bank: TextureBank, spec: SynthSpec
) -> list[SynthItem]:
    """Normalized placements of one component per source mask, each rendered
    under spec.texture_pairs distinct foreground/background pairings.

    Deterministic given (source_masks, bank, spec): every object draws
    from its own generator seeded by (spec.seed, index).
    """
    if not source_masks:
        raise EmptyList("no source masks given")
    n = len(bank.tiles)
    if n * (n - 1) < spec.texture_pairs:
        raise InsufficientTextures(
            f"{n} textures admit {n * (n - 1)} ordered pairs; "
            f"need {spec.texture_pairs}"
        )
    items = []
    for index, source in enumerate(source_masks):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, index]))
        component = sample_component(source, rng)
        placed = place_object(component, spec, rng)
        item = SynthItem(mask=placed)
        pair_ids = rng.choice(n * (n - 1), size=spec.texture_pairs, replace=False)
        for pid in pair_ids:
            i = int(pid) // (n - 1)
            rem = int(pid) % (n - 1)
            j = rem if rem < i else rem + 1
            item.images.append(texturize(placed, bank.tiles[i], bank.tiles[j]))
            item.pairs.append((bank.names[i], bank.names[j]))
        items.append(item)
    return items


def thicken_skeleton(mask: np.ndarray, radius: int = 4) -> np.ndarray:
    """Rewrite a mask to constant stroke thickness: skeletonize, then dilate.

    With a disk of radius r a straight stroke comes out exactly 2r + 1
    pixels wide (9 px at the default radius).
    """
    if radius < 0:
        raise InvalidConfig(f"radius must be >= 0, got {radius}")
    m = as_mask(mask)
    if not m.any():
        raise EmptyMask("cannot thicken an empty mask")
    skel = skeletonize(m)
    if radius == 0:
        return skel
    return dilate(skel, make_element("disk", radius))


def zoom_to_scale(
    image: np.ndarray, mask: np.ndarray, patch: int
) -> tuple[np.ndarray, np.ndarray] | None:
    """Rescale image+mask so the object's longest bbox side is about `patch` px.

    The frame stays the same size: content is resampled (bilinear image,
    nearest-neighbor mask) and a canvas-sized window centered on the
    object is cut out, zero-padded where it reaches past the content.
    Returns None when the scaled object could not fit the frame.
    """
    if patch < 1:
        raise InvalidConfig(f"patch size must be >= 1, got {patch}")
    m = as_mask(mask)
    img = np.asarray(image)
    if img.shape[:2] != m.shape:
        raise InvalidConfig("image and mask sizes differ")
    bb = tight_bbox(m)
    h, w = m.shape
    longest = max(bb.height, bb.width)
    # Exact integer check: bb.height * patch / longest > h would clip the object.
    if bb.height * patch > h * longest or bb.width * patch > w * longest:
        return None
    scale = patch / longest
    new_h = max(1, round(h * scale))
    new_w = max(1, round(w * scale))
    img_s = resize_image(img, new_h, new_w)
    mask_s = resize_mask_nn(m, new_h, new_w)
    cy = (bb.top + bb.height / 2) * (new_h / h)
    cx = (bb.left + bb.width / 2) * (new_w / w)
    top = round(cy - h / 2)
    left = round(cx - w / 2)
    return _window(img_s, h, w, top, left), _window(mask_s, h, w, top, left)


def _window(src: np.ndarray, out_h: int, out_w: int, top: int, left: int) -> np.ndarray:
    out = np.zeros((out_h, out_w) + src.shape[2:], dtype=src.dtype)
    y0, y1 = max(0, top), min(src.shape[0], top + out_h)
    x0, x1 = max(0, left), min(src.shape[1], left + out_w)
    if y0 < y1 and x0 < x1:
        out[y0 - top : y1 - top, x0 - left : x1 - left] = src[y0:y1, x0:x1]
    return out


@dataclass(frozen=True)
class PromptSet:
    """Box and point prompts derived from a ground-truth mask."""

    bbox: BBox
    positives: tuple[tuple[int, int], ...]
    negatives: tuple[tuple[int, int], ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "bbox": [self.bbox.top, self.bbox.left, self.bbox.height, self.bbox.width],
                "positives": [list(p) for p in self.positives],
                "negatives": [list(p) for p in self.negatives],
            }
        )

    @staticmethod
    def from_json(text: str) -> "PromptSet":
        data = json.loads(text)
        t, l, h, w = data["bbox"]
        return PromptSet(
            bbox=BBox(top=t, left=l, height=h, width=w),
            positives=tuple((int(r), int(c)) for r, c in data["positives"]),
            negatives=tuple((int(r), int(c)) for r, c in data["negatives"]),
        )


def sample_prompts(
    mask: np.ndarray, n_pos: int, n_neg: int, rng: np.random.Generator
) -> PromptSet:
    """Tight box plus uniform point prompts: positives on the object,
    negatives on background inside the box."""
    if n_pos < 0 or n_neg < 0:
        raise InvalidConfig("prompt counts must be >= 0")
    m = as_mask(mask)
    bb = tight_bbox(m)
    fg = np.argwhere(m)
    window = m[bb.slices]
    bg = np.argwhere(~window) + np.array([bb.top, bb.left])
    if n_pos > len(fg):
        raise InsufficientPixels(f"{len(fg)} foreground pixels, need {n_pos}")
    if n_neg > len(bg):
        raise InsufficientPixels(f"{len(bg)} in-box background pixels, need {n_neg}")
    pos = fg[rng.choice(len(fg), size=n_pos, replace=False)] if n_pos else fg[:0]
    neg = bg[rng.choice(len(bg), size=n_neg, replace=False)] if n_neg else bg[:0]
    return PromptSet(
        bbox=bb,
        positives=tuple((int(r), int(c)) for r, c in pos),
        negatives=tuple((int(r), int(c)) for r, c in neg),
    )


def random_tree_skeleton(
    height: int,
    width: int,
    rng: np.random.Generator,
    max_depth: int = 5,
) -> np.ndarray:
    """Draw a random branching polyline tree, one pixel wide.

    Branches start from a random interior point, curve slightly, and
    split into 1-3 children with shrinking lengths. Endpoints are clamped
    a few pixels inside the border.
    """
    if height < 16 or width < 16:
        raise InvalidConfig("tree canvas must be at least 16x16")
    mask = np.zeros((height, width), dtype=bool)
    margin = 3
    y0 = rng.uniform(0.3, 0.7) * height
    x0 = rng.uniform(0.3, 0.7) * width
    length0 = 0.22 * min(height, width)
    stack = [(y0, x0, rng.uniform(0, 2 * math.pi), length0, max_depth)]
    while stack:
        y, x, angle, length, depth = stack.pop()
        cy, cx = y, x
        for _ in range(3):
            angle += rng.normal(0, 0.15)
            ny = cy + math.sin(angle) * length / 3
            nx = cx + math.cos(angle) * length / 3
            ny = min(max(ny, margin), height - 1 - margin)
            nx = min(max(nx, margin), width - 1 - margin)
            _draw_segment(mask, cy, cx, ny, nx)
            cy, cx = ny, nx
        if depth > 0:
            for _ in range(int(rng.integers(1, 4))):
                child_angle = angle + rng.uniform(0.35, 1.1) * rng.choice([-1.0, 1.0])
                child_length = length * rng.uniform(0.6, 0.85)
                if child_length >= 4:
                    stack.append((cy, cx, child_angle, child_length, depth - 1))
    return mask


def _draw_segment(mask: np.ndarray, y0: float, x0: float, y1: float, x1: float) -> None:
    h, w = mask.shape
    n = max(int(2 * math.hypot(y1 - y0, x1 - x0)) + 1, 2)
    t = np.linspace(0.0, 1.0, n)
    ys = np.clip(np.rint(y0 + (y1 - y0) * t).astype(np.intp), 0, h - 1)
    xs = np.clip(np.rint(x0 + (x1 - x0) * t).astype(np.intp), 0, w - 1)
    mask[ys, xs] = True


def random_tree_mask(
    height: int,
    width: int,
    rng: np.random.Generator,
    radius: int = 0,
    max_depth: int = 5,
) -> np.ndarray:
    """A random tree skeleton dilated to stroke width 2 * radius + 1."""
    skel = random_tree_skeleton(height, width, rng, max_depth=max_depth)
    if radius == 0:
        return skel
    return dilate(skel, make_element("disk", radius))
