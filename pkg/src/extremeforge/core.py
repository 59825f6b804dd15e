"""Domain types, image buffers, and annotation/detection file IO.

Images live in memory as planar float RGB in [0, 1]; quantization to 8-bit
happens only at file boundaries.  Labels follow the YOLO text convention
(``class cx cy w h`` per line, normalized center coordinates), detections
extend it with a confidence column (``class conf cx cy w h``).
"""

from __future__ import annotations

import io
import os
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    ClassOutOfRangeError,
    ConfidenceOutOfRangeError,
    CorruptHeaderError,
    DuplicateImageIdError,
    ParseError,
    ShapeMismatchError,
    UnsupportedFormatError,
)

# Slack allowed on box extents after corner clamping.
EDGE_TOL = 1e-6

IMAGE_SUFFIXES = (".png", ".ppm")


class ConditionKind(Enum):
    """The five simulated extreme conditions."""

    LOW_LIGHT = "low_light"
    INTENSE_LIGHT = "intense_light"
    SAND_DUST = "sand_dust"
    FOG = "fog"
    RAIN = "rain"

    @classmethod
    def from_slug(cls, slug: str) -> "ConditionKind":
        try:
            return cls(slug)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown condition {slug!r} (expected one of: {valid})") from None


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """Planar RGB image: three (height, width) float64 planes in [0, 1].

    The buffer takes ownership of the array and marks it read-only; every
    sample must be finite and within [0, 1].
    """

    planes: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.planes, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise ShapeMismatchError(f"expected planes of shape (3, H, W), got {arr.shape}")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ShapeMismatchError(f"image must be at least 1x1, got {arr.shape[2]}x{arr.shape[1]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite samples")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image samples must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "planes", arr)

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]

    @classmethod
    def from_interleaved(cls, arr: np.ndarray) -> "ImageBuffer":
        """Build from an (H, W, 3) array."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ShapeMismatchError(f"expected (H, W, 3) array, got {arr.shape}")
        return cls(np.ascontiguousarray(arr.transpose(2, 0, 1)))

    def to_interleaved(self) -> np.ndarray:
        """Return a writable (H, W, 3) copy."""
        return np.ascontiguousarray(self.planes.transpose(1, 2, 0))


@dataclass(frozen=True)
class BBox:
    """Ground-truth box: class id plus normalized center/size coordinates."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if self.class_id < 0:
            raise ValueError(f"class_id must be non-negative, got {self.class_id}")
        if not (self.w > 0.0 and self.h > 0.0):
            raise ValueError(f"box size must be positive, got w={self.w} h={self.h}")
        for edge in (self.cx - self.w / 2, self.cx + self.w / 2, self.cy - self.h / 2, self.cy + self.h / 2):
            if edge < -EDGE_TOL or edge > 1.0 + EDGE_TOL:
                raise ValueError(f"box extends outside the image: {self}")

    def corners(self) -> tuple[float, float, float, float]:
        """(x1, y1, x2, y2) corner form."""
        return (self.cx - self.w / 2, self.cy - self.h / 2, self.cx + self.w / 2, self.cy + self.h / 2)


@dataclass(frozen=True)
class Detection:
    """Detector output: a box plus a confidence score in [0, 1]."""

    box: BBox
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ConfidenceOutOfRangeError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class AnnotatedImage:
    """One dataset item: image id, backing file, ground-truth boxes."""

    image_id: str
    image_path: Path
    boxes: tuple[BBox, ...]

    def load(self) -> ImageBuffer:
        return load_image(self.image_path)


@dataclass(frozen=True)
class Dataset:
    """A scanned dataset: root directory, sorted items, class names."""

    root: Path
    items: tuple[AnnotatedImage, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        n = len(self.class_names)
        for item in self.items:
            for box in item.boxes:
                if box.class_id >= n:
                    raise ClassOutOfRangeError(
                        f"{item.image_id}: class id {box.class_id} >= {n} classes"
                    )

    def ids(self) -> list[str]:
        return [item.image_id for item in self.items]

    def find(self, image_id: str) -> AnnotatedImage | None:
        for item in self.items:
            if item.image_id == image_id:
                return item
        return None


def _quantize(planes: np.ndarray) -> np.ndarray:
    """float [0,1] -> u8 via floor(x*255 + 0.5)."""
    return np.floor(planes * 255.0 + 0.5).astype(np.uint8)


def _read_ppm(path: Path, data: bytes) -> ImageBuffer:
    # P6 grammar: magic, width, height, maxval as whitespace-separated tokens
    # ('#' comments run to end of line), one whitespace byte, then raw RGB.
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise CorruptHeaderError(f"{path}: truncated PPM header")
        return data[start:pos]

    if next_token() != b"P6":
        raise CorruptHeaderError(f"{path}: not a P6 PPM file")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError:
        raise CorruptHeaderError(f"{path}: malformed PPM dimensions") from None
    if width < 1 or height < 1:
        raise CorruptHeaderError(f"{path}: invalid PPM size {width}x{height}")
    if maxval != 255:
        raise CorruptHeaderError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # the single whitespace byte after maxval
    payload = data[pos : pos + width * height * 3]
    if len(payload) != width * height * 3:
        raise CorruptHeaderError(f"{path}: PPM pixel data truncated")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return ImageBuffer.from_interleaved(arr.astype(np.float64) / 255.0)


def load_image(path: str | Path) -> ImageBuffer:
    """Load an 8-bit PNG or binary PPM (P6) as a float image in [0, 1]."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in IMAGE_SUFFIXES:
        raise UnsupportedFormatError(f"{path}: unsupported image format {suffix!r}")
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    data = path.read_bytes()
    if suffix == ".ppm":
        return _read_ppm(path, data)
    try:
        with Image.open(io.BytesIO(data)) as img:
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptHeaderError(f"{path}: cannot decode PNG ({exc})") from exc
    return ImageBuffer.from_interleaved(arr.astype(np.float64) / 255.0)


def encode_png(img: ImageBuffer) -> bytes:
    """Quantize and encode to PNG bytes (the one encoder every output shares)."""
    u8 = _quantize(img.to_interleaved())
    buf = io.BytesIO()
    Image.fromarray(u8, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def encode_ppm(img: ImageBuffer) -> bytes:
    """Quantize and encode to the byte-exact P6 grammar."""
    u8 = _quantize(img.to_interleaved())
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + u8.tobytes()


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def save_image(img: ImageBuffer, path: str | Path, fmt: str | None = None) -> None:
    """Save as PNG or PPM; ``fmt`` defaults to the path suffix."""
    path = Path(path)
    fmt = fmt or path.suffix.lower().lstrip(".")
    if fmt == "png":
        data = encode_png(img)
    elif fmt == "ppm":
        data = encode_ppm(img)
    else:
        raise UnsupportedFormatError(f"{path}: unsupported output format {fmt!r}")
    atomic_write_bytes(path, data)


def _clamped_box(class_id: int, cx: float, cy: float, w: float, h: float, path: Path, line_no: int) -> BBox:
    # Clamp corner coordinates into [0,1]; a box that collapses to zero extent
    # was entirely outside the image and is rejected.
    x1 = min(max(cx - w / 2, 0.0), 1.0)
    x2 = min(max(cx + w / 2, 0.0), 1.0)
    y1 = min(max(cy - h / 2, 0.0), 1.0)
    y2 = min(max(cy + h / 2, 0.0), 1.0)
    if not (x2 > x1 and y2 > y1):
        raise ParseError(path, line_no, f"box has no extent inside the image: cx={cx} cy={cy} w={w} h={h}")
    return BBox(class_id, (x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1)


def _parse_label_line(tokens: list[str], n_fields: int, path: Path, line_no: int) -> tuple[int, list[float]]:
    if len(tokens) != n_fields:
        raise ParseError(path, line_no, f"expected {n_fields} fields, got {len(tokens)}")
    try:
        class_id = int(tokens[0])
    except ValueError:
        raise ParseError(path, line_no, f"bad class id {tokens[0]!r}") from None
    if class_id < 0:
        raise ParseError(path, line_no, f"negative class id {class_id}")
    try:
        values = [float(t) for t in tokens[1:]]
    except ValueError:
        raise ParseError(path, line_no, "bad decimal field") from None
    if not all(np.isfinite(values)):
        raise ParseError(path, line_no, "non-finite field")
    return class_id, values


def load_annotations(path: str | Path, n_classes: int) -> list[BBox]:
    """Parse a YOLO label file; a missing file means an image with no objects."""
    path = Path(path)
    if not path.exists():
        return []
    boxes: list[BBox] = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            class_id, (cx, cy, w, h) = _parse_label_line(tokens, 5, path, line_no)
            if class_id >= n_classes:
                raise ClassOutOfRangeError(f"{path}:{line_no}: class id {class_id} >= {n_classes} classes")
            boxes.append(_clamped_box(class_id, cx, cy, w, h, path, line_no))
    return boxes


def load_detections(path: str | Path, n_classes: int) -> list[Detection]:
    """Parse a detection file (``class conf cx cy w h`` per line)."""
    path = Path(path)
    if not path.exists():
        return []
    dets: list[Detection] = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            class_id, (conf, cx, cy, w, h) = _parse_label_line(tokens, 6, path, line_no)
            if class_id >= n_classes:
                raise ClassOutOfRangeError(f"{path}:{line_no}: class id {class_id} >= {n_classes} classes")
            if not (0.0 <= conf <= 1.0):
                raise ConfidenceOutOfRangeError(f"{path}:{line_no}: confidence {conf} outside [0, 1]")
            dets.append(Detection(_clamped_box(class_id, cx, cy, w, h, path, line_no), conf))
    return dets


def list_content_images(root: str | Path) -> list[Path]:
    """Image files under ``root/images``, sorted by id, ids checked unique."""
    root = Path(root)
    images_dir = root / "images"
    if not images_dir.is_dir():
        raise FileNotFoundError(f"no images directory under {root}")
    files = [p for p in images_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()]
    files.sort(key=lambda p: p.stem)
    seen: dict[str, Path] = {}
    for img_path in files:
        if img_path.stem in seen:
            raise DuplicateImageIdError(
                f"duplicate image id {img_path.stem!r}: {seen[img_path.stem]} and {img_path}"
            )
        seen[img_path.stem] = img_path
    return files


def dataset_scan(root: str | Path, class_names: list[str] | tuple[str, ...]) -> Dataset:
    """Scan ``root/images`` + ``root/labels`` into a Dataset, sorted by id."""
    root = Path(root)
    items: list[AnnotatedImage] = []
    for img_path in list_content_images(root):
        image_id = img_path.stem
        boxes = load_annotations(root / "labels" / f"{image_id}.txt", len(class_names))
        items.append(AnnotatedImage(image_id, img_path, tuple(boxes)))
    return Dataset(root, tuple(items), tuple(class_names))
