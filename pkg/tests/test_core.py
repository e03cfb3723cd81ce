"""Core types, compositing, and MSE against scalar-loop oracles."""

import math

import numpy as np
import pytest

from animatepainter.core import (
    RasterImage,
    Stroke,
    StrokeList,
    blank_canvas,
    composite_stroke,
    load_image,
    mse,
    save_png,
    strokelist_from_dict,
    strokelist_to_dict,
)
from animatepainter.errors import SchemaError

from oracles import composite_scalar_loop, mse_scalar_loop


def stroke(**kwargs):
    base = dict(
        cx=0.5, cy=0.5, length=0.2, thick=0.1, rotation=0.0,
        color=(1.0, 0.0, 0.0), opacity=1.0, index=0,
    )
    base.update(kwargs)
    return Stroke(**base)


class TestBlankCanvas:
    def test_white_2x2(self):
        img = blank_canvas(2, 2, (1.0, 1.0, 1.0))
        assert img.data.shape == (2, 2, 3)
        assert (img.data == 1.0).all()

    def test_black_single_pixel(self):
        img = blank_canvas(1, 1, (0.0, 0.0, 0.0))
        assert (img.data == 0.0).all()

    def test_constant_gray(self):
        img = blank_canvas(256, 256, (0.9, 0.9, 0.9))
        assert np.allclose(img.data, np.float32(0.9))
        assert (img.data == np.float32(0.9)).all()

    def test_zero_dimension_rejected(self):
        with pytest.raises(ValueError):
            blank_canvas(0, 4)
        with pytest.raises(ValueError):
            blank_canvas(4, 0)


class TestCompositeStroke:
    def test_zero_opacity_leaves_canvas_unchanged(self):
        canvas = blank_canvas(16, 16, (0.3, 0.3, 0.3))
        out = composite_stroke(canvas, stroke(opacity=0.0))
        assert (out.data == canvas.data).all()

    def test_full_canvas_stroke_paints_constant_color(self):
        canvas = blank_canvas(20, 12, (1.0, 1.0, 1.0))
        out = composite_stroke(
            canvas, stroke(length=1.0, thick=1.0, rotation=0.9, color=(1.0, 0.0, 0.0))
        )
        assert (out.data == np.array([1, 0, 0], dtype=np.float32)).all()

    @pytest.mark.parametrize("rotation", [0.0, 0.4, math.pi / 2, 2.1])
    def test_matches_per_pixel_rasterization_oracle(self, rotation):
        canvas = blank_canvas(24, 20, (1.0, 1.0, 1.0))
        s = stroke(
            cx=0.45, cy=0.55, length=0.18, thick=0.07, rotation=rotation,
            color=(0.2, 0.6, 0.9), opacity=0.8,
        )
        got = composite_stroke(canvas, s)
        want = composite_scalar_loop(np.array(canvas.data), s)
        assert np.allclose(got.data, want, atol=1e-6)
        # pixels the oracle left untouched must be bit-identical
        untouched = (want == canvas.data.astype(np.float64)).all(axis=2)
        assert (got.data[untouched] == canvas.data[untouched]).all()

    def test_covered_pixels_take_stroke_color_inside_core(self):
        canvas = blank_canvas(40, 40, (1.0, 1.0, 1.0))
        s = stroke(cx=0.5, cy=0.5, length=0.25, thick=0.12, color=(0.1, 0.2, 0.3))
        out = composite_stroke(canvas, s)
        center = out.data[20, 20]
        assert np.allclose(center, np.array([0.1, 0.2, 0.3], dtype=np.float32))

    def test_off_canvas_stroke_clips_silently(self):
        canvas = blank_canvas(16, 16, (0.5, 0.5, 0.5))
        out = composite_stroke(canvas, stroke(cx=0.0, cy=0.0, length=0.01, thick=0.005))
        assert out.data.shape == canvas.data.shape

    def test_deterministic(self):
        canvas = blank_canvas(32, 32, (0.9, 0.8, 0.7))
        s = stroke(rotation=1.234, opacity=0.6)
        a = composite_stroke(canvas, s)
        b = composite_stroke(canvas, s)
        assert (a.data == b.data).all()

    def test_disjoint_strokes_commute_bit_exact(self):
        canvas = blank_canvas(64, 64, (1.0, 1.0, 1.0))
        s1 = stroke(cx=0.15, cy=0.15, length=0.03, thick=0.015, color=(1, 0, 0))
        s2 = stroke(cx=0.85, cy=0.85, length=0.03, thick=0.015, color=(0, 0, 1), index=1)
        ab = composite_stroke(composite_stroke(canvas, s1), s2)
        ba = composite_stroke(composite_stroke(canvas, s2), s1)
        assert (ab.data == ba.data).all()

    def test_requires_rgb_canvas(self):
        gray = RasterImage(np.zeros((8, 8, 1), dtype=np.float32))
        with pytest.raises(ValueError):
            composite_stroke(gray, stroke())


class TestMse:
    def test_identity_is_zero(self, rng):
        img = RasterImage(rng.uniform(0, 1, (5, 7, 3)).astype(np.float32))
        assert mse(img, img) == 0.0

    def test_zeros_vs_ones_is_one(self):
        a = blank_canvas(3, 3, (0, 0, 0))
        b = blank_canvas(3, 3, (1, 1, 1))
        assert mse(a, b) == 1.0

    def test_matches_scalar_loop_oracle(self, rng):
        a = RasterImage(rng.uniform(0, 1, (4, 4, 3)).astype(np.float32))
        b = RasterImage(rng.uniform(0, 1, (4, 4, 3)).astype(np.float32))
        assert abs(mse(a, b) - mse_scalar_loop(a.data, b.data)) < 1e-12

    def test_symmetry_and_zero_iff_equal(self, rng):
        a = RasterImage(rng.uniform(0, 1, (6, 6, 3)).astype(np.float32))
        b = RasterImage(rng.uniform(0, 1, (6, 6, 3)).astype(np.float32))
        assert mse(a, b) == mse(b, a)
        assert mse(a, b) > 0.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            mse(blank_canvas(4, 4), blank_canvas(4, 5))


class TestStrokeValidation:
    def test_rotation_normalized_modulo_pi(self):
        s = stroke(rotation=3 * math.pi / 2)
        assert abs(s.rotation - math.pi / 2) < 1e-12
        s = stroke(rotation=-math.pi / 4)
        assert abs(s.rotation - 3 * math.pi / 4) < 1e-12

    def test_thick_greater_than_length_rejected(self):
        with pytest.raises(ValueError):
            stroke(length=0.1, thick=0.2)

    def test_center_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            stroke(cx=1.2)

    def test_opacity_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            stroke(opacity=1.5)

    def test_stroke_list_requires_contiguous_indices(self):
        s0 = stroke(index=0)
        s2 = stroke(index=2)
        with pytest.raises(ValueError):
            StrokeList(strokes=(s0, s2), canvas_width=10, canvas_height=10)


class TestStrokesJson:
    def test_round_trip(self):
        sl = StrokeList(
            strokes=(stroke(index=0), stroke(cx=0.25, index=1)),
            canvas_width=64, canvas_height=48, background=(0.9, 0.9, 0.95),
        )
        assert strokelist_from_dict(strokelist_to_dict(sl)) == sl

    def test_missing_index_rejected(self):
        doc = strokelist_to_dict(
            StrokeList(strokes=(stroke(),), canvas_width=8, canvas_height=8)
        )
        del doc["strokes"][0]["index"]
        with pytest.raises(SchemaError, match="index"):
            strokelist_from_dict(doc)

    def test_rotation_normalized_on_import(self):
        doc = strokelist_to_dict(
            StrokeList(strokes=(stroke(),), canvas_width=8, canvas_height=8)
        )
        doc["strokes"][0]["rot"] = 3 * math.pi / 2
        sl = strokelist_from_dict(doc)
        assert abs(sl.strokes[0].rotation - math.pi / 2) < 1e-12

    def test_out_of_range_field_rejected_with_stroke_position(self):
        doc = strokelist_to_dict(
            StrokeList(strokes=(stroke(), stroke(index=1)), canvas_width=8, canvas_height=8)
        )
        doc["strokes"][1]["opacity"] = 2.0
        with pytest.raises(SchemaError, match="stroke 1"):
            strokelist_from_dict(doc)


class TestImageIO:
    def test_png_round_trip_8bit(self, tmp_path, rng):
        img = RasterImage(
            (rng.integers(0, 256, (9, 11, 3)) / 255.0).astype(np.float32)
        )
        save_png(img, tmp_path / "x.png")
        back = load_image(tmp_path / "x.png")
        assert np.allclose(back.data, img.data, atol=1e-6)

    def test_missing_file_is_input_error(self, tmp_path):
        from animatepainter.errors import InputError

        with pytest.raises(InputError, match="missing.png"):
            load_image(tmp_path / "missing.png")

    def test_jpeg_read(self, tmp_path):
        from PIL import Image

        ramp = np.linspace(0, 255, 16, dtype=np.uint8)
        arr = np.stack(np.broadcast_arrays(ramp[None, :], ramp[:, None],
                                           np.full((16, 16), 128, np.uint8)), axis=2)
        Image.fromarray(arr).save(tmp_path / "x.jpg", quality=95)
        img = load_image(tmp_path / "x.jpg")
        assert img.channels == 3
        assert np.allclose(img.data, arr / 255.0, atol=0.1)  # lossy codec

    def test_rgba_png_read(self, tmp_path, rng):
        from PIL import Image

        arr = (rng.uniform(0, 1, (8, 8, 4)) * 255).astype(np.uint8)
        Image.fromarray(arr, mode="RGBA").save(tmp_path / "x.png")
        img = load_image(tmp_path / "x.png")
        assert img.channels == 4
