"""Weight-free arbitrary style transfer via pyramid-statistics matching.

An image is decomposed into a three-level band-pass pyramid plus a coarse
base.  Style is summarized per level and per channel as a (mean, std) pair:
24 scalars.  Transfer re-normalizes every coefficient plane from the content
statistics toward the style statistics, scaled by a strength factor alpha,
then collapses the pyramid back to an image.  Alpha 0 is the identity,
alpha 1 matches the style statistics exactly, alpha above 1 extrapolates
past them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ImageTooSmallError, ShapeMismatchError, StyleMismatchError
from .core import ImageBuffer

# Binomial smoothing kernel; separable, reflect-101 borders.
KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
DETAIL_LEVELS = 3
MIN_SIDE = 8
SIGMA_FLOOR = 1e-6
STAT_CONSISTENCY_TOL = 1e-6


def _smooth(planes: np.ndarray) -> np.ndarray:
    out = correlate1d(planes, KERNEL, axis=1, mode="mirror")
    return correlate1d(out, KERNEL, axis=2, mode="mirror")


def _downsample(planes: np.ndarray) -> np.ndarray:
    return _smooth(planes)[:, ::2, ::2]


def _upsample(planes: np.ndarray, height: int, width: int) -> np.ndarray:
    up = np.zeros((3, height, width), dtype=np.float64)
    up[:, ::2, ::2] = planes
    # Zero insertion loses half the mass in each axis; the doubled kernel
    # restores unit DC gain.
    out = correlate1d(up, 2.0 * KERNEL, axis=1, mode="mirror")
    return correlate1d(out, 2.0 * KERNEL, axis=2, mode="mirror")


@dataclass(frozen=True, eq=False)
class FeaturePyramid:
    """Band-pass decomposition: three signed detail levels plus a base.

    Detail level l holds what the smoothing chain removed between Gaussian
    levels l and l+1; the base is the coarsest Gaussian level.  Coefficients
    are unbounded (transfer may push them outside [0, 1]).
    """

    detail_levels: tuple[np.ndarray, ...]
    base: np.ndarray
    original_size: tuple[int, int]  # (width, height)

    def __post_init__(self):
        if len(self.detail_levels) != DETAIL_LEVELS:
            raise ShapeMismatchError(f"expected {DETAIL_LEVELS} detail levels, got {len(self.detail_levels)}")
        w, h = self.original_size
        for l, level in enumerate(self.detail_levels):
            if level.ndim != 3 or level.shape[0] != 3:
                raise ShapeMismatchError(f"detail level {l} must be (3, H, W), got {level.shape}")
            if level.shape[1] != h or level.shape[2] != w:
                raise ShapeMismatchError(
                    f"detail level {l} is {level.shape[2]}x{level.shape[1]}, expected {w}x{h}"
                )
            if not np.all(np.isfinite(level)):
                raise ValueError(f"detail level {l} contains non-finite coefficients")
            level.setflags(write=False)
            h = -(-h // 2)
            w = -(-w // 2)
        if self.base.shape != (3, h, w):
            raise ShapeMismatchError(f"base is {self.base.shape}, expected (3, {h}, {w})")
        if not np.all(np.isfinite(self.base)):
            raise ValueError("base contains non-finite coefficients")
        self.base.setflags(write=False)

    def levels(self) -> tuple[np.ndarray, ...]:
        """All four coefficient planes, details first, base last."""
        return self.detail_levels + (self.base,)


@dataclass(frozen=True, eq=False)
class StyleVector:
    """Per-level, per-channel (mean, std) statistics: a (4, 3, 2) array."""

    stats: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.stats, dtype=np.float64)
        if arr.shape != (DETAIL_LEVELS + 1, 3, 2):
            raise ShapeMismatchError(f"style stats must be shape (4, 3, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("style stats contain non-finite values")
        if np.any(arr[:, :, 1] < 0.0):
            raise ValueError("style stds must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "stats", arr)

    @property
    def means(self) -> np.ndarray:
        return self.stats[:, :, 0]

    @property
    def stds(self) -> np.ndarray:
        return self.stats[:, :, 1]

    def to_json(self) -> dict:
        return {
            "source_id": self.source_id,
            "levels": [[[float(mu), float(sigma)] for mu, sigma in level] for level in self.stats],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StyleVector":
        return cls(np.array(obj["levels"], dtype=np.float64), str(obj.get("source_id", "")))


def check_strength(alpha: float) -> float:
    """Validate a stylization strength factor: finite and non-negative."""
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0.0:
        raise ValueError(f"strength factor must be finite and >= 0, got {alpha}")
    return alpha


def encode_pyramid(img: ImageBuffer) -> FeaturePyramid:
    """Decompose into detail levels plus base (perfect reconstruction)."""
    if img.width < MIN_SIDE or img.height < MIN_SIDE:
        raise ImageTooSmallError(f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {img.width}x{img.height}")
    current = np.asarray(img.planes, dtype=np.float64)
    details = []
    for _ in range(DETAIL_LEVELS):
        coarser = _downsample(current)
        details.append(current - _upsample(coarser, current.shape[1], current.shape[2]))
        current = coarser
    return FeaturePyramid(tuple(details), current, (img.width, img.height))


def collapse_pyramid(pyr: FeaturePyramid) -> ImageBuffer:
    """Invert the decomposition; the final image is clamped to [0, 1]."""
    current = pyr.base
    for detail in reversed(pyr.detail_levels):
        current = _upsample(current, detail.shape[1], detail.shape[2]) + detail
    return ImageBuffer(np.clip(current, 0.0, 1.0))


def _pyramid_stats(pyr: FeaturePyramid) -> np.ndarray:
    stats = np.empty((DETAIL_LEVELS + 1, 3, 2), dtype=np.float64)
    for l, level in enumerate(pyr.levels()):
        flat = level.reshape(3, -1)
        stats[l, :, 0] = flat.mean(axis=1)
        stats[l, :, 1] = flat.std(axis=1)
    return stats


def extract_style(img: ImageBuffer, source_id: str = "") -> StyleVector:
    """Summarize an image's style as pyramid-level channel statistics."""
    return StyleVector(_pyramid_stats(encode_pyramid(img)), source_id)


def transfer_statistics(
    pyr: FeaturePyramid,
    content_style: StyleVector,
    target_style: StyleVector,
    alpha: float,
) -> FeaturePyramid:
    """Re-normalize every coefficient plane from content toward target stats.

    Effective stats interpolate linearly in alpha; the std is floored to keep
    the mapping defined on constant planes and under far extrapolation.  No
    clamping happens here, only at collapse.
    """
    alpha = check_strength(alpha)
    actual = _pyramid_stats(pyr)
    if np.max(np.abs(actual - content_style.stats)) > STAT_CONSISTENCY_TOL:
        raise StyleMismatchError("content style vector does not describe this pyramid")
    out_levels = []
    for l, level in enumerate(pyr.levels()):
        mu_c = content_style.means[l].reshape(3, 1, 1)
        sigma_c = content_style.stds[l].reshape(3, 1, 1)
        mu_s = target_style.means[l].reshape(3, 1, 1)
        sigma_s = target_style.stds[l].reshape(3, 1, 1)
        mu_eff = mu_c + alpha * (mu_s - mu_c)
        sigma_eff = np.maximum(sigma_c + alpha * (sigma_s - sigma_c), SIGMA_FLOOR)
        out_levels.append((level - mu_c) / np.maximum(sigma_c, SIGMA_FLOOR) * sigma_eff + mu_eff)
    return FeaturePyramid(tuple(out_levels[:DETAIL_LEVELS]), out_levels[DETAIL_LEVELS], pyr.original_size)


def apply_style(content: ImageBuffer, style: StyleVector, alpha: float) -> ImageBuffer:
    """Render the content image under the given style at strength alpha."""
    pyr = encode_pyramid(content)
    content_style = StyleVector(_pyramid_stats(pyr))
    return collapse_pyramid(transfer_statistics(pyr, content_style, style, alpha))
