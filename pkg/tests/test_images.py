import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dceeval.images import (
    BoundingBox, Image2D, Phase, Volume, extract_slices, normalize_volume,
    parse_slice_filename, read_bboxes, read_png, read_volume_dir,
    resize_to_unit_aspect, stack_volume, subtraction_image, write_bboxes,
    write_png, write_volume_dir,
)
from conftest import make_image, random_image

volumes_st = hnp.arrays(
    dtype=np.float64,
    shape=hnp.array_shapes(min_dims=3, max_dims=3, min_side=1, max_side=6),
    elements=st.floats(-1e6, 1e6),
)


class TestImage2D:
    def test_rejects_wrong_dtype(self):
        with pytest.raises(ValueError, match="uint8"):
            Image2D(np.zeros((2, 2), dtype=np.float32), "c", Phase.PRE, 0)

    def test_rejects_negative_slice_index(self):
        with pytest.raises(ValueError, match="slice_index"):
            make_image(np.zeros((2, 2)), slice_index=-1)

    def test_pixels_are_immutable(self):
        img = make_image(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            img.pixels[0, 0] = 5

    def test_filename_convention(self):
        img = make_image(np.zeros((2, 2)), case_id="duke_042", phase=Phase.DCE_P2,
                         slice_index=7)
        assert img.filename() == "duke_042_DCE_P2_0007.png"
        assert parse_slice_filename(img.filename()) == ("duke_042", Phase.DCE_P2, 7)


class TestNormalizeVolume:
    def test_three_values(self):
        vol = normalize_volume(np.array([[[10.0, 35.0, 60.0]]]))
        # 35 -> 127.5, round-half-up
        assert vol.to_array().ravel().tolist() == [0, 128, 255]

    def test_constant_volume_is_all_zero(self):
        vol = normalize_volume(np.full((1, 1, 3), 7.0))
        assert vol.to_array().ravel().tolist() == [0, 0, 0]

    def test_full_range_input_unchanged(self):
        raw = np.array([[[0.0, 255.0], [255.0, 0.0]]])
        assert (normalize_volume(raw).to_array() == raw.astype(np.uint8)).all()

    def test_rejects_nan_naming_voxel(self):
        raw = np.zeros((2, 2, 2))
        raw[1, 0, 1] = np.nan
        with pytest.raises(ValueError, match=r"\(1, 0, 1\)"):
            normalize_volume(raw)

    @given(volumes_st)
    @settings(max_examples=60, deadline=None)
    def test_output_range_and_extremes(self, raw):
        arr = normalize_volume(raw).to_array()
        assert arr.min() >= 0 and arr.max() <= 255
        if raw.max() > raw.min():
            assert arr.min() == 0
            assert arr.max() == 255

    # integer-valued raws keep a*x+b exact in float64, so the min-max ratio
    # is bit-identical and invariance holds exactly
    int_volumes_st = hnp.arrays(
        dtype=np.float64,
        shape=hnp.array_shapes(min_dims=3, max_dims=3, min_side=1, max_side=6),
        elements=st.integers(-10 ** 6, 10 ** 6).map(float),
    )

    @given(int_volumes_st, st.integers(1, 1000), st.integers(-10 ** 6, 10 ** 6))
    @settings(max_examples=60, deadline=None)
    def test_positive_affine_invariance(self, raw, a, b):
        direct = normalize_volume(raw).to_array()
        transformed = normalize_volume(a * raw + b).to_array()
        assert (direct == transformed).all()


class TestResize:
    def test_constant_image_preserved(self):
        img = make_image(np.full((2, 2), 100))
        out = resize_to_unit_aspect(img, 5, 3)
        assert (out.pixels == 100).all()
        assert (out.width, out.height) == (5, 3)

    def test_identity_resize(self, rng):
        img = random_image(rng, 4, 6)
        out = resize_to_unit_aspect(img, 6, 4)
        assert (out.pixels == img.pixels).all()

    def test_1x2_to_1x3_half_pixel_centers(self):
        img = make_image([[0, 255]])
        out = resize_to_unit_aspect(img, 3, 1)
        assert out.pixels.ravel().tolist() == [0, 128, 255]

    def test_rejects_zero_target(self):
        with pytest.raises(ValueError, match=">= 1"):
            resize_to_unit_aspect(make_image(np.zeros((2, 2))), 0, 2)


class TestStackExtract:
    def _volume(self, rng, depth=3, h=4, w=5):
        return Volume(tuple(
            random_image(rng, h, w, slice_index=k) for k in range(depth)
        ))

    def test_round_trip_bit_exact(self, rng):
        vol = self._volume(rng)
        again = stack_volume(extract_slices(vol))
        assert (again.to_array() == vol.to_array()).all()
        assert again.case_id == vol.case_id and again.phase == vol.phase

    def test_single_slice(self, rng):
        vol = stack_volume([random_image(rng, 2, 2)])
        assert vol.depth == 1

    def test_extract_order(self, rng):
        vol = self._volume(rng, depth=3)
        assert [s.slice_index for s in extract_slices(vol)] == [0, 1, 2]

    def test_gap_in_indices_rejected(self, rng):
        slices = [random_image(rng, 2, 2, slice_index=0),
                  random_image(rng, 2, 2, slice_index=2)]
        with pytest.raises(ValueError, match="gap at index 1"):
            stack_volume(slices)

    def test_mismatched_dims_rejected(self, rng):
        slices = [random_image(rng, 2, 2, slice_index=0),
                  random_image(rng, 3, 2, slice_index=1)]
        with pytest.raises(ValueError, match="slice 1"):
            stack_volume(slices)

    @given(st.integers(1, 4), st.integers(1, 5), st.integers(1, 5), st.integers(0, 2 ** 31))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_property(self, depth, h, w, seed):
        rng = np.random.default_rng(seed)
        vol = Volume(tuple(random_image(rng, h, w, slice_index=k) for k in range(depth)))
        assert (stack_volume(extract_slices(vol)).to_array() == vol.to_array()).all()


class TestSubtraction:
    def test_identical_gives_zero(self, rng):
        img = random_image(rng, 3, 3)
        assert (subtraction_image(img, img).pixels == 0).all()

    def test_negative_clipped(self):
        out = subtraction_image(make_image([[200]]), make_image([[50]]))
        assert out.pixels.ravel().tolist() == [0]

    def test_positive_difference(self):
        out = subtraction_image(make_image([[50]]), make_image([[200]]))
        assert out.pixels.ravel().tolist() == [150]

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="mismatch"):
            subtraction_image(random_image(rng, 2, 2), random_image(rng, 2, 3))

    @given(st.integers(0, 2 ** 31), st.integers(1, 8), st.integers(1, 8))
    @settings(max_examples=50, deadline=None)
    def test_matches_scalar_loop(self, seed, h, w):
        rng = np.random.default_rng(seed)
        pre, post = random_image(rng, h, w), random_image(rng, h, w)
        out = subtraction_image(pre, post)
        for y in range(h):
            for x in range(w):
                want = max(int(post.pixels[y, x]) - int(pre.pixels[y, x]), 0)
                assert out.pixels[y, x] == want
        assert out.pixels.min() >= 0 and out.pixels.max() <= 255


class TestDiskFormats:
    def test_png_round_trip(self, rng, tmp_path):
        img = random_image(rng, 5, 7, case_id="c1", phase=Phase.DCE_P1, slice_index=3)
        path = write_png(img, tmp_path)
        back = read_png(path)
        assert (back.pixels == img.pixels).all()
        assert (back.case_id, back.phase, back.slice_index) == ("c1", Phase.DCE_P1, 3)

    def test_three_channel_identical_accepted(self, tmp_path):
        from PIL import Image as PILImage
        arr = np.full((4, 4, 3), 99, dtype=np.uint8)
        p = tmp_path / "c_PRE_0000.png"
        PILImage.fromarray(arr, "RGB").save(p)
        assert (read_png(p).pixels == 99).all()

    def test_three_channel_differing_rejected(self, tmp_path):
        from PIL import Image as PILImage
        arr = np.zeros((4, 4, 3), dtype=np.uint8)
        arr[..., 1] = 5
        p = tmp_path / "c_PRE_0000.png"
        PILImage.fromarray(arr, "RGB").save(p)
        with pytest.raises(ValueError, match="differing channels"):
            read_png(p)

    def test_volume_dir_round_trip(self, rng, tmp_path):
        vol = Volume(tuple(random_image(rng, 3, 4, slice_index=k) for k in range(3)))
        write_volume_dir(vol, tmp_path / "v")
        back = read_volume_dir(tmp_path / "v")
        assert (back.to_array() == vol.to_array()).all()

    def test_manifest_mismatch_rejected(self, rng, tmp_path):
        vol = Volume(tuple(random_image(rng, 3, 4, slice_index=k) for k in range(2)))
        write_volume_dir(vol, tmp_path / "v")
        manifest = (tmp_path / "v" / "manifest.json")
        manifest.write_text(manifest.read_text().replace('"slice_count": 2',
                                                         '"slice_count": 5'))
        with pytest.raises(ValueError, match="slice_count"):
            read_volume_dir(tmp_path / "v")

    def test_bbox_csv_round_trip(self, tmp_path):
        box = BoundingBox("c9", 1, 2, 5, 6, 0, 3)
        write_bboxes([box], tmp_path / "b.csv")
        assert read_bboxes(tmp_path / "b.csv") == {"c9": box}

    def test_bbox_invalid_coords(self):
        with pytest.raises(ValueError, match="x0 < x1"):
            BoundingBox("c", 5, 0, 5, 2, 0, 1)
