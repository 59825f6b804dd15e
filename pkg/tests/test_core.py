from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from extremeforge import BBox, Dataset, Detection, ImageBuffer, dataset_scan, load_image, save_image
from extremeforge.core import (
    AnnotatedImage,
    atomic_write_bytes,
    encode_png,
    encode_ppm,
    load_annotations,
    load_detections,
)
from extremeforge.errors import (
    ClassOutOfRangeError,
    ConfidenceOutOfRangeError,
    CorruptHeaderError,
    DuplicateImageIdError,
    ParseError,
    ShapeMismatchError,
    UnsupportedFormatError,
)


class TestImageBuffer:
    def test_shape_and_range_enforced(self):
        with pytest.raises(ShapeMismatchError):
            ImageBuffer(np.zeros((1, 4, 4)))
        with pytest.raises(ValueError):
            ImageBuffer(np.full((3, 4, 4), 1.5))
        with pytest.raises(ValueError):
            ImageBuffer(np.full((3, 4, 4), np.nan))

    def test_read_only(self):
        img = ImageBuffer(np.zeros((3, 4, 4)))
        with pytest.raises(ValueError):
            img.planes[0, 0, 0] = 1.0

    def test_interleaved_round_trip(self, rng):
        arr = rng.random((5, 7, 3))
        img = ImageBuffer.from_interleaved(arr)
        assert img.width == 7 and img.height == 5
        np.testing.assert_array_equal(img.to_interleaved(), arr)


class TestImageFiles:
    def test_ppm_bytes_are_exact(self):
        img = ImageBuffer(np.zeros((3, 2, 3)))
        data = encode_ppm(img)
        assert data == b"P6\n3 2\n255\n" + bytes(18)

    def test_ppm_round_trip(self, tmp_path, rng):
        img = ImageBuffer(rng.random((3, 9, 13)))
        path = tmp_path / "x.ppm"
        save_image(img, path)
        back = load_image(path)
        # one quantization step, then exact
        u8 = np.floor(img.planes * 255.0 + 0.5)
        np.testing.assert_array_equal(back.planes, u8 / 255.0)

    def test_ppm_comments_and_whitespace(self, tmp_path):
        path = tmp_path / "c.ppm"
        path.write_bytes(b"P6 # comment\n# another\n 2\t1 # w h\n255\n" + bytes(6))
        img = load_image(path)
        assert (img.width, img.height) == (2, 1)

    def test_ppm_corrupt_header(self, tmp_path):
        for payload in (b"P5\n1 1\n255\n\0\0\0", b"P6\n0 1\n255\n", b"P6\n2 2\n65535\n", b"P6\n2 2\n255\n\0\0"):
            path = tmp_path / "bad.ppm"
            path.write_bytes(payload)
            with pytest.raises(CorruptHeaderError):
                load_image(path)

    def test_png_round_trip(self, tmp_path, rng):
        img = ImageBuffer(rng.random((3, 6, 5)))
        path = tmp_path / "x.png"
        save_image(img, path)
        back = load_image(path)
        np.testing.assert_array_equal(back.planes, np.floor(img.planes * 255.0 + 0.5) / 255.0)

    def test_png_and_ppm_quantize_identically(self, tmp_path, rng):
        img = ImageBuffer(rng.random((3, 4, 4)))
        save_image(img, tmp_path / "a.png")
        save_image(img, tmp_path / "a.ppm")
        np.testing.assert_array_equal(load_image(tmp_path / "a.png").planes, load_image(tmp_path / "a.ppm").planes)

    def test_unsupported_format(self, tmp_path):
        with pytest.raises(UnsupportedFormatError):
            load_image(tmp_path / "x.jpg")
        with pytest.raises(UnsupportedFormatError):
            save_image(ImageBuffer(np.zeros((3, 2, 2))), tmp_path / "x.bmp")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "absent.png")

    def test_corrupt_png(self, tmp_path):
        path = tmp_path / "x.png"
        path.write_bytes(b"\x89PNG\r\n\x1a\nnot really")
        with pytest.raises(CorruptHeaderError):
            load_image(path)

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        target = tmp_path / "out.bin"
        atomic_write_bytes(target, b"payload")
        assert target.read_bytes() == b"payload"
        assert [p.name for p in tmp_path.iterdir()] == ["out.bin"]


class TestBoxes:
    def test_bbox_validation(self):
        with pytest.raises(ValueError):
            BBox(-1, 0.5, 0.5, 0.1, 0.1)
        with pytest.raises(ValueError):
            BBox(0, 0.5, 0.5, 0.0, 0.1)
        with pytest.raises(ValueError):
            BBox(0, 0.95, 0.5, 0.2, 0.1)  # extends past x=1

    def test_corners(self):
        x1, y1, x2, y2 = BBox(0, 0.5, 0.5, 0.2, 0.4).corners()
        assert (x1, y1, x2, y2) == pytest.approx((0.4, 0.3, 0.6, 0.7))

    def test_detection_confidence_range(self):
        box = BBox(0, 0.5, 0.5, 0.1, 0.1)
        with pytest.raises(ConfidenceOutOfRangeError):
            Detection(box, 1.5)


class TestAnnotationFiles:
    def test_missing_label_file_means_empty(self, tmp_path):
        assert load_annotations(tmp_path / "none.txt", 3) == []
        assert load_detections(tmp_path / "none.txt", 3) == []

    def test_parse_basic(self, tmp_path):
        path = tmp_path / "a.txt"
        path.write_text("0 0.5 0.5 0.2 0.2\n\n2 0.25 0.25 0.1 0.1\n")
        boxes = load_annotations(path, 3)
        assert [b.class_id for b in boxes] == [0, 2]
        assert boxes[0].cx == 0.5

    def test_parse_errors_carry_line_numbers(self, tmp_path):
        path = tmp_path / "a.txt"
        path.write_text("0 0.5 0.5 0.2 0.2\n0 0.5 0.5 0.2\n")
        with pytest.raises(ParseError) as exc:
            load_annotations(path, 3)
        assert exc.value.line_no == 2
        assert "a.txt:2" in str(exc.value)

    def test_parse_bad_tokens(self, tmp_path):
        path = tmp_path / "a.txt"
        for line in ("x 0.5 0.5 0.2 0.2", "0 0.5 0.5 0.2 oops", "0 nan 0.5 0.2 0.2", "-1 0.5 0.5 0.2 0.2"):
            path.write_text(line + "\n")
            with pytest.raises(ParseError):
                load_annotations(path, 3)

    def test_class_out_of_range(self, tmp_path):
        path = tmp_path / "a.txt"
        path.write_text("3 0.5 0.5 0.2 0.2\n")
        with pytest.raises(ClassOutOfRangeError):
            load_annotations(path, 3)

    def test_corner_clamping(self, tmp_path):
        path = tmp_path / "a.txt"
        # box sticking out past the right edge gets its corners clamped
        path.write_text("0 0.95 0.5 0.2 0.2\n")
        (box,) = load_annotations(path, 1)
        x1, _, x2, _ = box.corners()
        assert x2 == pytest.approx(1.0)
        assert x1 == pytest.approx(0.85)

    def test_fully_outside_box_rejected(self, tmp_path):
        path = tmp_path / "a.txt"
        path.write_text("0 1.5 0.5 0.2 0.2\n")
        with pytest.raises(ParseError):
            load_annotations(path, 1)

    def test_detections_parse_confidence(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("1 0.75 0.5 0.5 0.2 0.2\n")
        (det,) = load_detections(path, 2)
        assert det.confidence == 0.75
        path.write_text("1 1.75 0.5 0.5 0.2 0.2\n")
        with pytest.raises(ConfidenceOutOfRangeError):
            load_detections(path, 2)

    @given(
        st.lists(
            st.tuples(
                st.integers(0, 2),
                st.floats(0.3, 0.7),
                st.floats(0.3, 0.7),
                st.floats(0.05, 0.5),
                st.floats(0.05, 0.5),
            ),
            max_size=8,
        )
    )
    def test_label_write_parse_round_trip(self, tmp_path_factory, rows):
        root = tmp_path_factory.mktemp("labels")
        path = root / "r.txt"
        text = "".join(f"{c} {cx:.9f} {cy:.9f} {w:.9f} {h:.9f}\n" for c, cx, cy, w, h in rows)
        path.write_text(text)
        boxes = load_annotations(path, 3)
        assert len(boxes) == len(rows)
        for box, (c, cx, cy, w, h) in zip(boxes, rows):
            assert box.class_id == c
            # values survive a 9-decimal round trip modulo edge clamping
            x1 = max(cx - w / 2, 0.0)
            x2 = min(cx + w / 2, 1.0)
            assert box.w == pytest.approx(x2 - x1, abs=1e-8)


class TestDatasetScan:
    def test_scan_sorted_and_boxed(self, dataset_tree):
        root = dataset_tree(n_images=4)
        ds = dataset_scan(root, ("a", "b", "c"))
        assert ds.ids() == ["img0", "img1", "img2", "img3"]
        assert all(len(item.boxes) == 2 for item in ds.items)

    def test_duplicate_ids_rejected(self, dataset_tree, rng):
        root = dataset_tree(n_images=2)
        img = ImageBuffer(rng.random((3, 8, 8)))
        save_image(img, root / "images" / "img0.ppm")  # same stem, other suffix
        with pytest.raises(DuplicateImageIdError):
            dataset_scan(root, ("a", "b", "c"))

    def test_class_count_enforced(self, dataset_tree):
        root = dataset_tree(n_images=1, n_classes=3)
        with pytest.raises(ClassOutOfRangeError):
            dataset_scan(root, ("only",))

    def test_missing_images_dir(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            dataset_scan(tmp_path / "nowhere", ("a",))

    def test_dataset_find(self, dataset_tree):
        ds = dataset_scan(dataset_tree(n_images=2), ("a", "b", "c"))
        assert ds.find("img1") is not None
        assert ds.find("imgX") is None

    def test_annotated_image_load(self, dataset_tree):
        ds = dataset_scan(dataset_tree(n_images=1, size=(10, 12)), ("a", "b", "c"))
        img = ds.items[0].load()
        assert (img.height, img.width) == (10, 12)
