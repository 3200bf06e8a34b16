"""Textural separability: can a linear probe tell object texture from its surround?

Pipeline: run the image through a small strided convolutional filter bank
(feature maps at reduced resolution), resize the mask down to the feature
grid, form a boundary band by dilating the mask and subtracting it, then
fit an L2-regularized logistic probe to separate object pixels from band
pixels. The held-out accuracy of that probe is the separability score:
near 1.0 when textures differ, near 0.5 when they match.

Filter banks are stored in a small binary container (magic "TXFB") so the
metric does not depend on any deep-learning runtime at evaluation time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .errors import (
    ChannelMismatch,
    DegenerateObject,
    DimensionMismatch,
    EmptyMask,
    FormatError,
    InvalidConfig,
    IoError,
    TooFewSamples,
    WindowTooLarge,
)
from .imgcore import as_mask, dilate, make_element, resize_mask_nn

TXFB_MAGIC = b"TXFB"
TXFB_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIII")


@dataclass
class ConvFilterBank:
    """A single strided conv layer plus its input normalization.

    weights has shape (num_filters, in_channels, kernel_h, kernel_w) in
    float32. input_mean / input_std normalize images already scaled to
    [0, 1]: x_norm = (x / 255 - mean[c]) / std[c].
    """

    weights: np.ndarray
    stride: int
    padding: int
    input_mean: np.ndarray
    input_std: np.ndarray

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float32)
        if self.weights.ndim != 4:
            raise InvalidConfig(f"weights must be 4-D, got shape {self.weights.shape}")
        if min(self.weights.shape) < 1:
            raise InvalidConfig(f"degenerate weights shape {self.weights.shape}")
        if self.stride < 1:
            raise InvalidConfig(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise InvalidConfig(f"padding must be >= 0, got {self.padding}")
        self.input_mean = np.asarray(self.input_mean, dtype=np.float32).reshape(-1)
        self.input_std = np.asarray(self.input_std, dtype=np.float32).reshape(-1)
        c = self.weights.shape[1]
        if self.input_mean.shape != (c,) or self.input_std.shape != (c,):
            raise InvalidConfig("normalization stats must have one entry per channel")
        if not np.all(self.input_std > 0):
            raise InvalidConfig("input_std entries must be positive")

    @property
    def num_filters(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_shape(self) -> tuple[int, int]:
        return self.weights.shape[2], self.weights.shape[3]


def random_filter_bank(
    seed: int,
    num_filters: int = 64,
    in_channels: int = 3,
    kernel_size: int = 7,
    stride: int = 2,
    padding: int = 3,
) -> ConvFilterBank:
    """Seeded Gaussian random bank with the canonical geometry defaults."""
    rng = np.random.default_rng(seed)
    weights = rng.normal(
        0.0, 0.1, size=(num_filters, in_channels, kernel_size, kernel_size)
    ).astype(np.float32)
    mean = np.full(in_channels, 0.5, dtype=np.float32)
    std = np.full(in_channels, 0.25, dtype=np.float32)
    return ConvFilterBank(
        weights=weights, stride=stride, padding=padding, input_mean=mean, input_std=std
    )


def save_filter_bank(path: str, bank: ConvFilterBank) -> None:
    """Write a bank to the TXFB binary container (little-endian)."""
    kh, kw = bank.kernel_shape
    header = _HEADER.pack(
        TXFB_MAGIC,
        TXFB_VERSION,
        bank.num_filters,
        bank.in_channels,
        kh,
        kw,
        bank.stride,
        bank.padding,
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(bank.input_mean.astype("<f4").tobytes())
            fh.write(bank.input_std.astype("<f4").tobytes())
            fh.write(np.ascontiguousarray(bank.weights, dtype="<f4").tobytes())
    except OSError as exc:
        raise IoError(f"cannot write filter bank {path}: {exc}") from exc


def load_filter_bank(path: str) -> ConvFilterBank:
    """Read a TXFB file, validating magic, version and exact payload size."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read filter bank {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, nf, c, kh, kw, stride, padding = _HEADER.unpack_from(data)
    if magic != TXFB_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != TXFB_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    n_stats = 2 * c
    n_weights = nf * c * kh * kw
    expected = _HEADER.size + 4 * (n_stats + n_weights)
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload is {len(data)} bytes, header implies {expected}"
        )
    floats = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    mean = floats[:c].copy()
    std = floats[c : 2 * c].copy()
    weights = floats[2 * c :].reshape(nf, c, kh, kw).copy()
    try:
        return ConvFilterBank(
            weights=weights,
            stride=stride,
            padding=padding,
            input_mean=mean,
            input_std=std,
        )
    except InvalidConfig as exc:
        raise FormatError(f"{path}: {exc}") from exc


def extract_features(image: np.ndarray, bank: ConvFilterBank) -> np.ndarray:
    """Convolve a uint8 image with the bank; returns float32 (F, H', W').

    H' = floor((H + 2*padding - kernel_h) / stride) + 1 and likewise for
    W'. Grayscale input is promoted by channel repetition when the bank
    expects more channels; any other channel mismatch is an error.
    Padding is applied after normalization, with zeros.
    """
    img = np.asarray(image)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3:
        raise DimensionMismatch(f"image must be 2-D or 3-D, got shape {img.shape}")
    if img.shape[2] != bank.in_channels:
        if img.shape[2] == 1:
            img = np.repeat(img, bank.in_channels, axis=2)
        else:
            raise ChannelMismatch(
                f"image has {img.shape[2]} channels, bank expects {bank.in_channels}"
            )
    kh, kw = bank.kernel_shape
    s = bank.stride
    p = bank.padding
    x = img.astype(np.float32) / np.float32(255.0)
    x = (x - bank.input_mean[None, None, :]) / bank.input_std[None, None, :]
    if p:
        x = np.pad(x, ((p, p), (p, p), (0, 0)))
    if kh > x.shape[0] or kw > x.shape[1]:
        raise WindowTooLarge(
            f"kernel {kh}x{kw} exceeds padded input {x.shape[0]}x{x.shape[1]}"
        )
    windows = sliding_window_view(x, (kh, kw), axis=(0, 1))[::s, ::s]
    out_h, out_w = windows.shape[:2]
    cols = windows.reshape(out_h * out_w, bank.in_channels * kh * kw)
    flat = cols @ bank.weights.reshape(bank.num_filters, -1).T
    return np.ascontiguousarray(flat.reshape(out_h, out_w, -1).transpose(2, 0, 1))


def boundary_band(mask: np.ndarray, radius: int = 5) -> np.ndarray:
    """Background ring around the mask: dilation minus the mask itself."""
    if radius < 1:
        raise InvalidConfig(f"band radius must be >= 1, got {radius}")
    m = as_mask(mask)
    return dilate(m, make_element("disk", radius)) & ~m


@dataclass(frozen=True)
class ProbeConfig:
    """Settings for the logistic separability probe."""

    clf_c: float = 2.0
    boundary_radius: int = 5
    test_fraction: float = 0.3
    max_samples_per_class: int = 20000
    max_iter: int = 500
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.clf_c > 0:
            raise InvalidConfig(f"clf_c must be > 0, got {self.clf_c}")
        if self.boundary_radius < 1:
            raise InvalidConfig(f"boundary_radius must be >= 1, got {self.boundary_radius}")
        if not 0.0 < self.test_fraction < 1.0:
            raise InvalidConfig(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.max_samples_per_class < 1:
            raise InvalidConfig("max_samples_per_class must be >= 1")
        if self.max_iter < 1:
            raise InvalidConfig("max_iter must be >= 1")
        if not self.tol > 0:
            raise InvalidConfig(f"tol must be > 0, got {self.tol}")
        if self.seed < 0:
            raise InvalidConfig(f"seed must be >= 0, got {self.seed}")


def collect_samples(
    features: np.ndarray,
    object_mask: np.ndarray,
    band_mask: np.ndarray,
    cfg: ProbeConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Class-balanced pixel samples from the feature grid.

    Returns (X, y) with y = 1 for object pixels and 0 for band pixels;
    both classes contribute min(|object|, |band|, cap) rows, subsampled
    uniformly without replacement when a class is larger than that.
    """
    nf, h, w = features.shape
    obj = as_mask(object_mask)
    band = as_mask(band_mask)
    if obj.shape != (h, w) or band.shape != (h, w):
        raise DimensionMismatch("masks must match the feature grid shape")
    obj_idx = np.flatnonzero(obj.ravel())
    band_idx = np.flatnonzero(band.ravel())
    if obj_idx.size == 0:
        raise DegenerateObject("no object pixels at feature resolution")
    if band_idx.size == 0:
        raise DegenerateObject("no boundary-band pixels at feature resolution")
    n = min(obj_idx.size, band_idx.size, cfg.max_samples_per_class)
    if obj_idx.size > n:
        obj_idx = rng.choice(obj_idx, size=n, replace=False)
    if band_idx.size > n:
        band_idx = rng.choice(band_idx, size=n, replace=False)
    flat = features.reshape(nf, -1)
    x = np.concatenate([flat[:, obj_idx].T, flat[:, band_idx].T]).astype(np.float64)
    y = np.concatenate([np.ones(len(obj_idx), dtype=np.int64), np.zeros(len(band_idx), dtype=np.int64)])
    return x, y


@dataclass(frozen=True)
class LinearProbe:
    """Linear decision rule in raw feature space: predict 1 iff x.w + b >= 0."""

    weights: np.ndarray
    bias: float

    def decision(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.weights + self.bias

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (self.decision(x) >= 0).astype(np.int64)


def logistic_loss_grad(
    params: np.ndarray, x: np.ndarray, ys: np.ndarray, lam: float
) -> tuple[float, np.ndarray]:
    """Mean logistic loss with L2 penalty on the weights (not the bias).

    params stacks (weights, bias); ys holds labels in {-1, +1}. Returns
    the loss and its analytic gradient, both in float64.
    """
    w = params[:-1]
    b = params[-1]
    margins = ys * (x @ w + b)
    loss = float(np.mean(np.logaddexp(0.0, -margins)) + 0.5 * lam * (w @ w))
    coef = -(ys * expit(-margins)) / len(ys)
    grad = np.concatenate([x.T @ coef + lam * w, [coef.sum()]])
    return loss, grad


def _newton_fit(x: np.ndarray, ys: np.ndarray, lam: float, max_iter: int, tol: float) -> np.ndarray:
    n, nf = x.shape
    params = np.zeros(nf + 1)
    eye = np.eye(nf)
    for _ in range(max_iter):
        loss, grad = logistic_loss_grad(params, x, ys, lam)
        if np.linalg.norm(grad) <= tol:
            break
        margins = ys * (x @ params[:-1] + params[-1])
        sig = expit(margins)
        sw = sig * (1.0 - sig) / n
        xs = x * sw[:, None]
        hess = np.empty((nf + 1, nf + 1))
        hess[:nf, :nf] = x.T @ xs + lam * eye
        cross = xs.sum(axis=0)
        hess[:nf, nf] = cross
        hess[nf, :nf] = cross
        hess[nf, nf] = sw.sum()
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = -grad
        t = 1.0
        improved = False
        for _ in range(60):
            cand = params + t * step
            new_loss, _ = logistic_loss_grad(cand, x, ys, lam)
            if new_loss < loss:
                params = cand
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    return params


def train_probe(
    x: np.ndarray, y: np.ndarray, cfg: ProbeConfig
) -> tuple[LinearProbe, float]:
    """Fit the logistic probe on a stratified split; returns (probe, accuracy).

    Features are standardized with training-set statistics before
    optimization and the learned model is folded back to raw feature
    space. The whole procedure is deterministic given (x, y, cfg.seed).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DimensionMismatch("x must be (n, f) with matching y of length n")
    rng = np.random.default_rng(cfg.seed)
    train_idx, test_idx = _stratified_split(y, cfg.test_fraction, rng)
    mu = x[train_idx].mean(axis=0)
    sd = x[train_idx].std(axis=0)
    sd = np.where(sd == 0, 1.0, sd)
    xt = (x[train_idx] - mu) / sd
    ys = np.where(y[train_idx] == 1, 1.0, -1.0)
    lam = 1.0 / (cfg.clf_c * len(train_idx))
    params = _newton_fit(xt, ys, lam, cfg.max_iter, cfg.tol)
    w, b = params[:-1], params[-1]
    xv = (x[test_idx] - mu) / sd
    pred = (xv @ w + b >= 0).astype(np.int64)
    accuracy = float(np.mean(pred == y[test_idx]))
    probe = LinearProbe(weights=w / sd, bias=float(b - (w * (mu / sd)).sum()))
    return probe, accuracy


def _stratified_split(
    y: np.ndarray, test_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    train_parts = []
    test_parts = []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < 2:
            raise TooFewSamples(
                f"class {cls} has {idx.size} samples; need at least 2"
            )
        perm = idx[rng.permutation(idx.size)]
        n_test = int(round(test_fraction * idx.size))
        n_test = min(max(n_test, 1), idx.size - 1)
        test_parts.append(perm[:n_test])
        train_parts.append(perm[n_test:])
    return np.concatenate(train_parts), np.concatenate(test_parts)


def separability_samples(
    image: np.ndarray,
    mask: np.ndarray,
    bank: ConvFilterBank,
    cfg: ProbeConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Feature extraction + sampling half of the separability pipeline.

    Useful on its own when several probe settings are evaluated against
    the same image, since the conv features dominate the cost.
    """
    m = as_mask(mask)
    img = np.asarray(image)
    if img.shape[:2] != m.shape:
        raise DimensionMismatch(
            f"mask shape {m.shape} does not match image {img.shape[:2]}"
        )
    if not m.any():
        raise EmptyMask("separability needs a nonempty mask")
    features = extract_features(img, bank)
    _, fh, fw = features.shape
    small = resize_mask_nn(m, fh, fw)
    band = boundary_band(small, cfg.boundary_radius)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    return collect_samples(features, small, band, cfg, rng)


def textural_separability(
    image: np.ndarray,
    mask: np.ndarray,
    bank: ConvFilterBank,
    cfg: ProbeConfig,
) -> float:
    """Held-out probe accuracy separating object texture from its surround.

    Deterministic given (image, mask, bank, cfg.seed): the sample
    subsetting and the train/test split both derive from cfg.seed.
    """
    x, y = separability_samples(image, mask, bank, cfg)
    _, accuracy = train_probe(x, y, cfg)
    return accuracy
