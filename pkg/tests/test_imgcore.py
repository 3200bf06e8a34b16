import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as npst

from segmetrics.errors import EmptyMask, InvalidConfig, IoError
from segmetrics.imgcore import (
    connected_components,
    dilate,
    load_image,
    load_mask,
    make_element,
    neighbor_counts,
    resize_image,
    resize_mask_nn,
    save_image,
    save_mask,
    skeletonize,
    tight_bbox,
)

from oracles import disk_offsets, neighbor_counts_loop, random_mask

small_masks = npst.arrays(
    bool, npst.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=24)
)


class TestMakeElement:
    def test_diamond_cell_counts(self):
        # |Diamond(r)| = 2r^2 + 2r + 1
        for r in range(0, 9):
            assert make_element("diamond", r).size == 2 * r * r + 2 * r + 1

    def test_diamond5_frozen(self):
        assert make_element("diamond", 5).size == 61

    def test_disk5_frozen(self):
        assert make_element("disk", 5).size == 81

    def test_disk_matches_reference_offsets(self):
        for r in range(0, 7):
            got = {tuple(o) for o in make_element("disk", r).offsets}
            assert got == set(disk_offsets(r))

    def test_contains_origin_and_symmetric(self):
        for shape in ("diamond", "disk"):
            for r in (0, 1, 3, 6):
                elem = make_element(shape, r)
                offs = {tuple(o) for o in elem.offsets}
                assert (0, 0) in offs
                assert all((-dy, -dx) in offs for dy, dx in offs)

    def test_footprint_shape(self):
        fp = make_element("diamond", 3).footprint()
        assert fp.shape == (7, 7)
        assert fp[3, 3]
        assert not fp[0, 0]

    def test_rejects_bad_args(self):
        with pytest.raises(InvalidConfig):
            make_element("diamond", -1)
        with pytest.raises(InvalidConfig):
            make_element("square", 2)


class TestNeighborCounts:
    def test_all_true_corner_frozen(self):
        # zero padding: the corner of an all-true 8x8 sees 3 cells at r=1
        m = np.ones((8, 8), dtype=bool)
        counts = neighbor_counts(m, make_element("diamond", 1))
        assert counts[0, 0] == 3
        assert counts[0, 4] == 4
        assert counts[4, 4] == 5

    def test_diamond_matches_pixel_loop(self, rng):
        from oracles import diamond_offsets

        for _ in range(25):
            h, w = rng.integers(1, 20, size=2)
            m = random_mask(rng, h, w)
            for r in (1, 2, 5, 9):
                fast = neighbor_counts(m, make_element("diamond", r))
                slow = neighbor_counts_loop(m, diamond_offsets(r))
                assert np.array_equal(fast, slow)

    def test_disk_matches_pixel_loop(self, rng):
        for _ in range(10):
            h, w = rng.integers(1, 16, size=2)
            m = random_mask(rng, h, w)
            fast = neighbor_counts(m, make_element("disk", 3))
            slow = neighbor_counts_loop(m, disk_offsets(3))
            assert np.array_equal(fast, slow)

    def test_radius_larger_than_image(self, rng):
        m = random_mask(rng, 5, 7)
        counts = neighbor_counts(m, make_element("diamond", 20))
        assert np.all(counts == m.sum())


class TestDilate:
    def test_matches_offset_union(self, rng):
        for _ in range(10):
            m = random_mask(rng, 12, 15, density=0.2)
            elem = make_element("disk", 2)
            got = dilate(m, elem)
            want = np.zeros_like(m)
            ys, xs = np.nonzero(m)
            for dy, dx in elem.offsets:
                yy = ys + dy
                xx = xs + dx
                ok = (yy >= 0) & (yy < 12) & (xx >= 0) & (xx < 15)
                want[yy[ok], xx[ok]] = True
            assert np.array_equal(got, want)

    def test_single_pixel_gives_footprint(self):
        m = np.zeros((11, 11), dtype=bool)
        m[5, 5] = True
        for shape, r in (("diamond", 3), ("disk", 4)):
            out = dilate(m, make_element(shape, r))
            assert int(out.sum()) == make_element(shape, r).size

    @given(small_masks)
    @settings(max_examples=40, deadline=None)
    def test_output_contains_input(self, m):
        assert not np.any(m & ~dilate(m, make_element("diamond", 2)))

    @given(small_masks, st.integers(0, 100))
    @settings(max_examples=40, deadline=None)
    def test_monotone_in_input(self, m2, seed):
        sub_rng = np.random.default_rng(seed)
        m1 = m2 & (sub_rng.random(m2.shape) < 0.5)
        elem = make_element("disk", 2)
        d1 = dilate(m1, elem)
        d2 = dilate(m2, elem)
        assert not np.any(d1 & ~d2)


class TestConnectedComponents:
    def test_two_blobs_and_diagonal(self):
        m = np.array(
            [
                [1, 1, 0, 0, 0],
                [1, 0, 0, 1, 1],
                [0, 0, 0, 1, 0],
                [0, 1, 0, 0, 0],
                [1, 0, 0, 0, 0],
            ],
            dtype=bool,
        )
        eight = connected_components(m, connectivity=8)
        four = connected_components(m, connectivity=4)
        # diagonal pair at rows 3-4 merges under 8-connectivity only
        assert eight.count == 3
        assert four.count == 4

    def test_raster_order_labels(self):
        m = np.zeros((4, 9), dtype=bool)
        m[3, 0] = True  # later in raster order
        m[0, 4] = True  # first foreground pixel
        m[1, 8] = True
        comps = connected_components(m)
        assert comps.labels[0, 4] == 1
        assert comps.labels[1, 8] == 2
        assert comps.labels[3, 0] == 3

    def test_empty(self):
        comps = connected_components(np.zeros((3, 3), dtype=bool))
        assert comps.count == 0
        assert not comps.labels.any()

    def test_component_extraction(self):
        m = np.zeros((5, 5), dtype=bool)
        m[0, 0] = True
        m[4, 4] = True
        comps = connected_components(m)
        assert comps.component(1).sum() == 1
        with pytest.raises(InvalidConfig):
            comps.component(3)

    def test_labels_partition_foreground(self, rng):
        m = random_mask(rng, 20, 20, density=0.4)
        comps = connected_components(m)
        assert np.array_equal(comps.labels > 0, m)


class TestTightBbox:
    def test_frozen(self):
        m = np.zeros((10, 12), dtype=bool)
        m[3, 2] = True
        m[7, 9] = True
        bb = tight_bbox(m)
        assert (bb.top, bb.left, bb.height, bb.width) == (3, 2, 5, 8)

    def test_empty_raises(self):
        with pytest.raises(EmptyMask):
            tight_bbox(np.zeros((4, 4), dtype=bool))

    def test_slices_cover_exactly(self, rng):
        m = random_mask(rng, 15, 11, density=0.1)
        if not m.any():
            m[7, 5] = True
        bb = tight_bbox(m)
        crop = m[bb.slices]
        assert crop.any()
        assert crop[0].any() and crop[-1].any()
        assert crop[:, 0].any() and crop[:, -1].any()


class TestSkeletonize:
    def test_bar_thins_to_single_row(self):
        m = np.zeros((21, 40), dtype=bool)
        m[6:15, 5:35] = True
        skel = skeletonize(m)
        # away from the ends the skeleton is one pixel per column
        cols = skel[:, 12:28].sum(axis=0)
        assert np.all(cols == 1)

    def test_single_pixel_survives(self):
        m = np.zeros((9, 9), dtype=bool)
        m[4, 4] = True
        assert np.array_equal(skeletonize(m), m)

    def test_subset_of_input(self, rng):
        from oracles import blob_mask

        m = blob_mask(rng, 40, 40)
        skel = skeletonize(m)
        assert not np.any(skel & ~m)


class TestResizeMask:
    def test_identity(self, rng):
        m = random_mask(rng, 13, 9)
        assert np.array_equal(resize_mask_nn(m, 13, 9), m)

    def test_upscale_2x_frozen(self):
        m = np.array([[1, 0], [0, 1]], dtype=bool)
        out = resize_mask_nn(m, 4, 4)
        want = np.array(
            [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]], dtype=bool
        )
        assert np.array_equal(out, want)

    def test_sampling_convention(self):
        # dst index i reads src floor((i + 0.5) * src / dst)
        m = np.zeros((1, 10), dtype=bool)
        m[0, 7] = True
        out = resize_mask_nn(m, 1, 3)
        # samples src cols floor(0.5*10/3)=1, floor(1.5*10/3)=5, floor(2.5*10/3)=8
        assert np.array_equal(out[0], [False, False, False])
        m[0, 8] = True
        assert np.array_equal(resize_mask_nn(m, 1, 3)[0], [False, False, True])

    def test_rejects_bad_target(self, rng):
        with pytest.raises(InvalidConfig):
            resize_mask_nn(random_mask(rng, 4, 4), 0, 5)


class TestResizeImage:
    def test_identity_exact(self, rng):
        img = rng.integers(0, 256, (9, 7, 3)).astype(np.uint8)
        assert np.array_equal(resize_image(img, 9, 7), img)

    def test_constant_stays_constant(self):
        img = np.full((5, 5), 131, dtype=np.uint8)
        out = resize_image(img, 16, 3)
        assert out.shape == (16, 3)
        assert np.all(out == 131)

    def test_two_pixel_ramp_frozen(self):
        img = np.array([[0], [255]], dtype=np.uint8)
        out = resize_image(img, 4, 1)
        # src coords -0.25, 0.25, 0.75, 1.25 clamp to [0,1]
        assert out[:, 0].tolist() == [0, 64, 191, 255]

    def test_monotone_ramp_stays_monotone(self):
        img = np.arange(0, 256, 16, dtype=np.uint8).reshape(1, -1)
        out = resize_image(img, 1, 37)
        assert np.all(np.diff(out[0].astype(int)) >= 0)

    def test_grayscale_and_color_agree_per_channel(self, rng):
        gray = rng.integers(0, 256, (8, 8)).astype(np.uint8)
        color = np.stack([gray] * 3, axis=2)
        out_g = resize_image(gray, 5, 11)
        out_c = resize_image(color, 5, 11)
        for ch in range(3):
            assert np.array_equal(out_c[:, :, ch], out_g)


class TestIo:
    def test_mask_round_trip(self, tmp_path, rng):
        m = random_mask(rng, 17, 23)
        path = str(tmp_path / "m.png")
        save_mask(path, m)
        assert np.array_equal(load_mask(path), m)

    def test_image_round_trip(self, tmp_path, rng):
        img = rng.integers(0, 256, (12, 8, 3)).astype(np.uint8)
        path = str(tmp_path / "i.png")
        save_image(path, img)
        assert np.array_equal(load_image(path), img)

    def test_grayscale_promoted(self, tmp_path):
        from PIL import Image

        path = str(tmp_path / "g.png")
        Image.fromarray(np.full((4, 4), 99, dtype=np.uint8), mode="L").save(path)
        img = load_image(path)
        assert img.shape == (4, 4, 3)
        assert np.all(img == 99)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load_mask(str(tmp_path / "nope.png"))
        with pytest.raises(IoError):
            load_image(str(tmp_path / "nope.png"))
