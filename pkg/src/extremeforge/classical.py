"""Closed-form simulators for the five extreme conditions.

These are the traditional-algorithm baseline: low light, intense light,
sand dust, fog, and rain.  Every transform is a plain pixel formula, fully
parameterized, and seed-deterministic via the shared splitmix64 stream, so
two runs with the same seed are bit-identical regardless of platform or
thread count.  Geometry is never touched; annotations stay valid as-is.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.ndimage import shift as _ndshift

from .core import ConditionKind, ImageBuffer
from .errors import ParamOutOfRangeError, ParamsKindMismatchError
from .rng import SplitMix64


def _require(ok: bool, message: str) -> None:
    if not ok:
        raise ParamOutOfRangeError(message)


def _unit_triple(value, name: str) -> tuple[float, float, float]:
    triple = tuple(float(v) for v in value)
    _require(len(triple) == 3, f"{name} must have 3 components")
    _require(all(0.0 <= v <= 1.0 for v in triple), f"{name} components must lie in [0, 1]")
    return triple


@dataclass(frozen=True)
class LowLightParams:
    gamma: float = 2.2
    gain: float = 0.6

    def __post_init__(self):
        _require(math.isfinite(self.gamma) and self.gamma >= 1.0, f"gamma must be >= 1, got {self.gamma}")
        _require(0.0 < self.gain <= 1.0, f"gain must be in (0, 1], got {self.gain}")


@dataclass(frozen=True)
class IntenseLightParams:
    gamma: float = 0.45
    glare_strength: float = 0.5
    glare_radius: float = 0.4  # fraction of the image diagonal

    def __post_init__(self):
        _require(0.0 < self.gamma <= 1.0, f"gamma must be in (0, 1], got {self.gamma}")
        _require(
            math.isfinite(self.glare_strength) and self.glare_strength >= 0.0,
            f"glare_strength must be >= 0, got {self.glare_strength}",
        )
        _require(
            math.isfinite(self.glare_radius) and self.glare_radius > 0.0,
            f"glare_radius must be > 0, got {self.glare_radius}",
        )


@dataclass(frozen=True)
class SandDustParams:
    tint: tuple[float, float, float] = (0.76, 0.57, 0.34)
    blend_w: float = 0.45
    contrast_k: float = 0.7

    def __post_init__(self):
        object.__setattr__(self, "tint", _unit_triple(self.tint, "tint"))
        _require(0.0 <= self.blend_w <= 1.0, f"blend_w must be in [0, 1], got {self.blend_w}")
        _require(0.0 < self.contrast_k <= 1.0, f"contrast_k must be in (0, 1], got {self.contrast_k}")


@dataclass(frozen=True)
class FogParams:
    beta: float = 1.2
    airlight: tuple[float, float, float] = (0.9, 0.9, 0.92)
    horizon: float = 0.4  # row fraction: rows above it recede into fog

    def __post_init__(self):
        _require(math.isfinite(self.beta) and self.beta >= 0.0, f"beta must be >= 0, got {self.beta}")
        object.__setattr__(self, "airlight", _unit_triple(self.airlight, "airlight"))
        _require(0.0 < self.horizon <= 1.0, f"horizon must be in (0, 1], got {self.horizon}")


@dataclass(frozen=True)
class RainParams:
    n_streaks: int = 400
    angle_deg: float = 75.0
    angle_jitter_deg: float = 4.0
    length_px: int = 18
    intensity: float = 0.25
    post_blur: bool = True

    def __post_init__(self):
        _require(int(self.n_streaks) == self.n_streaks and self.n_streaks >= 0, "n_streaks must be a count")
        _require(math.isfinite(self.angle_deg), "angle_deg must be finite")
        _require(
            math.isfinite(self.angle_jitter_deg) and self.angle_jitter_deg >= 0.0,
            f"angle_jitter_deg must be >= 0, got {self.angle_jitter_deg}",
        )
        _require(int(self.length_px) == self.length_px and self.length_px >= 1, "length_px must be a positive count")
        _require(0.0 <= self.intensity <= 1.0, f"intensity must be in [0, 1], got {self.intensity}")


ConditionParams = LowLightParams | IntenseLightParams | SandDustParams | FogParams | RainParams

PARAMS_BY_KIND: dict[ConditionKind, type] = {
    ConditionKind.LOW_LIGHT: LowLightParams,
    ConditionKind.INTENSE_LIGHT: IntenseLightParams,
    ConditionKind.SAND_DUST: SandDustParams,
    ConditionKind.FOG: FogParams,
    ConditionKind.RAIN: RainParams,
}


def default_params(kind: ConditionKind) -> ConditionParams:
    return PARAMS_BY_KIND[kind]()


def params_to_json(params: ConditionParams) -> dict:
    obj = asdict(params)
    for key, value in obj.items():
        if isinstance(value, tuple):
            obj[key] = list(value)
    return obj


def params_from_json(kind: ConditionKind, obj: dict) -> ConditionParams:
    """Build params for a condition; omitted fields take their defaults."""
    cls = PARAMS_BY_KIND[kind]
    known = {f.name for f in fields(cls)}
    unknown = set(obj) - known
    if unknown:
        raise ParamOutOfRangeError(f"unknown {kind.value} parameter(s): {sorted(unknown)}")
    kwargs = {k: (tuple(v) if isinstance(v, list) else v) for k, v in obj.items()}
    return cls(**kwargs)


def _low_light(planes: np.ndarray, p: LowLightParams) -> np.ndarray:
    return p.gain * np.power(planes, p.gamma)


def _intense_light(planes: np.ndarray, p: IntenseLightParams, rng: SplitMix64) -> np.ndarray:
    _, h, w = planes.shape
    cx = rng.next_float() * w
    cy = rng.next_float() * (h / 2.0)  # glare source in the upper half
    ys, xs = np.mgrid[0:h, 0:w]
    d = np.hypot(xs - cx, ys - cy)
    r = p.glare_radius * math.hypot(w, h)
    glare = p.glare_strength * np.exp(-((d / r) ** 2))
    return np.power(planes, p.gamma) + glare[None, :, :]


def _sand_dust(planes: np.ndarray, p: SandDustParams) -> np.ndarray:
    tint = np.array(p.tint, dtype=np.float64).reshape(3, 1, 1)
    blended = tint * p.blend_w + planes * (1.0 - p.blend_w)
    mean = blended.mean(axis=(1, 2)).reshape(3, 1, 1)
    # k*J + (1-k)*mean == mean + k*(J - mean), arranged so k = 1 is bit-exact.
    return p.contrast_k * blended + (1.0 - p.contrast_k) * mean


def _fog(planes: np.ndarray, p: FogParams) -> np.ndarray:
    _, h, w = planes.shape
    horizon_row = p.horizon * h
    rows = np.arange(h, dtype=np.float64)
    depth = np.clip((horizon_row - rows) / horizon_row, 0.0, 1.0)
    t = np.exp(-p.beta * depth).reshape(1, h, 1)
    airlight = np.array(p.airlight, dtype=np.float64).reshape(3, 1, 1)
    return t * planes + (1.0 - t) * airlight


def _rain(planes: np.ndarray, p: RainParams, rng: SplitMix64) -> np.ndarray:
    _, h, w = planes.shape
    layer = np.zeros((h, w), dtype=np.float64)
    for _ in range(p.n_streaks):
        # Fixed draw order: x, y, angle jitter, length, intensity.
        x0 = rng.next_float() * w
        y0 = rng.next_float() * h
        angle = p.angle_deg + p.angle_jitter_deg * (2.0 * rng.next_float() - 1.0)
        length = p.length_px * (0.5 + rng.next_float())
        bright = p.intensity * (0.5 + rng.next_float() / 2.0)
        theta = math.radians(angle)
        dx, dy = math.cos(theta), math.sin(theta)
        steps = np.arange(max(int(round(length)), 1), dtype=np.float64)
        xs = x0 + steps * dx
        ys = y0 + steps * dy
        inside = (xs >= 0.0) & (xs < w - 1) & (ys >= 0.0) & (ys < h - 1)
        xs, ys = xs[inside], ys[inside]
        ix, iy = xs.astype(np.int64), ys.astype(np.int64)
        fx, fy = xs - ix, ys - iy
        # Bilinear splat of the streak brightness into the 4 neighbors.
        np.add.at(layer, (iy, ix), bright * (1 - fx) * (1 - fy))
        np.add.at(layer, (iy, ix + 1), bright * fx * (1 - fy))
        np.add.at(layer, (iy + 1, ix), bright * (1 - fx) * fy)
        np.add.at(layer, (iy + 1, ix + 1), bright * fx * fy)
    if p.post_blur and p.n_streaks > 0:
        theta = math.radians(p.angle_deg)
        d = (math.sin(theta), math.cos(theta))  # (row, col) offset
        ahead = _ndshift(layer, d, order=1, mode="constant", cval=0.0)
        behind = _ndshift(layer, (-d[0], -d[1]), order=1, mode="constant", cval=0.0)
        layer = (ahead + layer + behind) / 3.0
    return planes + layer[None, :, :]


def simulate(img: ImageBuffer, kind: ConditionKind, params: ConditionParams, seed: int) -> ImageBuffer:
    """Apply one condition simulator; output is clamped to [0, 1]."""
    expected = PARAMS_BY_KIND[kind]
    if type(params) is not expected:
        raise ParamsKindMismatchError(
            f"{kind.value} requires {expected.__name__}, got {type(params).__name__}"
        )
    rng = SplitMix64(seed)
    planes = np.asarray(img.planes, dtype=np.float64)
    if kind is ConditionKind.LOW_LIGHT:
        out = _low_light(planes, params)
    elif kind is ConditionKind.INTENSE_LIGHT:
        out = _intense_light(planes, params, rng)
    elif kind is ConditionKind.SAND_DUST:
        out = _sand_dust(planes, params)
    elif kind is ConditionKind.FOG:
        out = _fog(planes, params)
    else:
        out = _rain(planes, params, rng)
    return ImageBuffer(np.clip(out, 0.0, 1.0))
