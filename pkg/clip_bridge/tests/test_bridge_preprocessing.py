"""Image preprocessing geometry: loading, resizing, cropping, multi-crop."""

import numpy as np
import pytest
from PIL import Image

from clip_bridge import DataError
from clip_bridge.preprocessing import (
    MULTI_CROP_RESIZE,
    center_crop,
    five_crops,
    load_rgb,
    resize_short_side,
    standard_crop,
)


def gradient_image(width: int, height: int) -> Image.Image:
    arr = (np.arange(height * width * 3) % 251).astype(np.uint8)
    return Image.fromarray(arr.reshape(height, width, 3))


class TestLoadRgb:
    def test_grayscale_is_channel_replicated(self, tmp_path):
        gray = np.tile(np.arange(64, dtype=np.uint8), (48, 1))
        path = tmp_path / "gray.png"
        Image.fromarray(gray, "L").save(path)
        img = load_rgb(path)
        assert img.mode == "RGB"
        arr = np.asarray(img)
        for channel in range(3):
            np.testing.assert_array_equal(arr[:, :, channel], gray)

    def test_palette_image_converts(self, tmp_path):
        path = tmp_path / "palette.png"
        gradient_image(32, 32).convert("P", palette=Image.Palette.ADAPTIVE).save(path)
        assert load_rgb(path).mode == "RGB"

    def test_unreadable_file_names_path(self, tmp_path):
        path = tmp_path / "broken.png"
        path.write_bytes(b"this is not an image")
        with pytest.raises(DataError, match="cannot read image") as excinfo:
            load_rgb(path)
        assert str(path) in str(excinfo.value)

    def test_missing_file_names_path(self, tmp_path):
        with pytest.raises(DataError, match="cannot read image"):
            load_rgb(tmp_path / "nope.png")


class TestResizeShortSide:
    @pytest.mark.parametrize(
        "size,expected",
        [
            ((400, 300), (320, 240)),  # landscape
            ((300, 400), (240, 320)),  # portrait
            ((100, 100), (240, 240)),  # square, upscaled
            ((401, 300), (321, 240)),  # 320.8 rounds up
            ((240, 240), (240, 240)),  # already native
        ],
    )
    def test_geometry(self, size, expected):
        resized = resize_short_side(Image.new("RGB", size), 240)
        assert resized.size == expected


class TestCrops:
    def test_center_crop_box(self):
        img = gradient_image(10, 8)
        arr = np.asarray(img)
        cropped = np.asarray(center_crop(img, 4))
        np.testing.assert_array_equal(cropped, arr[2:6, 3:7])

    def test_standard_crop_shape_and_dtype(self):
        crop = standard_crop(gradient_image(401, 300), 240)
        assert crop.shape == (240, 240, 3)
        assert crop.dtype == np.uint8

    def test_standard_crop_of_uniform_image_is_uniform(self):
        crop = standard_crop(Image.new("RGB", (300, 260), (10, 200, 30)), 240)
        np.testing.assert_array_equal(crop, np.full((240, 240, 3), (10, 200, 30)))


class TestFiveCrops:
    def test_resize_constant(self):
        assert MULTI_CROP_RESIZE == 270

    def test_boxes_center_then_corners(self):
        # 270x400 keeps its size through the multi-crop resize, so every
        # crop must be a literal slice of the source array
        img = gradient_image(270, 400)
        arr = np.asarray(img)
        crops = five_crops(img, 240)
        assert len(crops) == 5
        expected_boxes = [(15, 80), (0, 0), (30, 0), (0, 160), (30, 160)]
        for crop, (left, top) in zip(crops, expected_boxes):
            assert crop.shape == (240, 240, 3)
            np.testing.assert_array_equal(
                crop, arr[top : top + 240, left : left + 240]
            )

    def test_uniform_image_crops_are_identical(self):
        crops = five_crops(Image.new("RGB", (300, 260), (7, 7, 200)), 240)
        for crop in crops[1:]:
            np.testing.assert_array_equal(crop, crops[0])

    def test_resolution_larger_than_resize_is_data_error(self):
        with pytest.raises(DataError, match="smaller than"):
            five_crops(Image.new("RGB", (300, 260)), 336)
