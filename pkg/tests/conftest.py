from __future__ import annotations

import numpy as np
import pytest

from extremeforge import BBox, Detection, ImageBuffer, save_image


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_image(rng, height, width) -> ImageBuffer:
    return ImageBuffer(rng.random((3, height, width)))


def random_box(rng, class_id=None, n_classes=3) -> BBox:
    cid = int(rng.integers(0, n_classes)) if class_id is None else class_id
    w = float(rng.uniform(0.05, 0.5))
    h = float(rng.uniform(0.05, 0.5))
    cx = float(rng.uniform(w / 2, 1 - w / 2))
    cy = float(rng.uniform(h / 2, 1 - h / 2))
    return BBox(cid, cx, cy, w, h)


def jittered_detection(rng, box: BBox, max_shift=0.15) -> Detection:
    dx = float(rng.uniform(-max_shift, max_shift)) * box.w
    dy = float(rng.uniform(-max_shift, max_shift)) * box.h
    cx = min(max(box.cx + dx, box.w / 2), 1 - box.w / 2)
    cy = min(max(box.cy + dy, box.h / 2), 1 - box.h / 2)
    return Detection(BBox(box.class_id, cx, cy, box.w, box.h), float(rng.uniform(0.05, 1.0)))


def write_label_file(path, boxes) -> None:
    lines = [f"{b.class_id} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}" for b in boxes]
    path.write_text("".join(line + "\n" for line in lines))


@pytest.fixture
def dataset_tree(tmp_path, rng):
    """Build root/{images,labels} with n seeded images; returns the root."""

    def build(n_images=3, size=(24, 32), n_classes=3, boxes_per_image=2, root_name="data"):
        root = tmp_path / root_name
        (root / "images").mkdir(parents=True)
        (root / "labels").mkdir()
        for i in range(n_images):
            save_image(random_image(rng, *size), root / "images" / f"img{i}.png")
            boxes = [random_box(rng, n_classes=n_classes) for _ in range(boxes_per_image)]
            write_label_file(root / "labels" / f"img{i}.txt", boxes)
        return root

    return build


@pytest.fixture
def styles_tree(tmp_path, rng):
    """Build a styles root with one subdirectory per requested condition."""

    def build(conditions=("fog", "rain"), per_condition=1, size=(16, 16), root_name="styles"):
        root = tmp_path / root_name
        for cond in conditions:
            (root / cond).mkdir(parents=True)
            for i in range(per_condition):
                save_image(random_image(rng, *size), root / cond / f"s{i}.png")
        return root

    return build
