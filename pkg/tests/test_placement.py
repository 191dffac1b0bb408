import math

import numpy as np
import pytest

from ovdprobe.boxes import BBox
from ovdprobe.placement import (
    CropFrame,
    build_sample_sets,
    crop_frame_around,
    crop_tier,
    drivable_overlap,
    load_sample_plan,
    oval_mask,
    rect_mask,
    sample_plan,
    save_sample_plan,
)

from .oracles import ellipse_pixels


class TestOvalMask:
    def test_matches_brute_force_membership(self, rng):
        for _ in range(100):
            w = float(rng.uniform(2, 60))
            h = float(rng.uniform(2, 60))
            x0 = float(rng.uniform(0, 20))
            y0 = float(rng.uniform(0, 20))
            bbox = BBox(x0, y0, x0 + w, y0 + h)
            side = 90
            frame = CropFrame(rect=BBox(0, 0, side, side))
            raster = oval_mask(bbox, frame).raster
            got = {(x, y) for y, x in zip(*np.nonzero(raster))}
            assert got == ellipse_pixels(bbox, side, side)

    def test_area_within_two_percent(self, rng):
        for _ in range(100):
            w = float(rng.uniform(20, 300))
            h = float(rng.uniform(20, 300))
            bbox = BBox(5, 5, 5 + w, 5 + h)
            side = int(math.ceil(max(w, h))) + 12
            frame = CropFrame(rect=BBox(0, 0, side, side))
            count = int(oval_mask(bbox, frame).raster.sum())
            expected = math.pi / 4 * w * h
            assert abs(count - expected) <= 0.02 * expected

    def test_mask_is_in_frame_coordinates(self):
        bbox = BBox(100, 100, 140, 140)
        frame = CropFrame(rect=BBox(90, 90, 160, 160))
        raster = oval_mask(bbox, frame).raster
        assert raster.shape == (70, 70)
        # ellipse center in frame coordinates is at (30, 30)
        assert raster[30, 30]
        assert not raster[0, 0]

    def test_degenerate_bbox_rejected(self):
        frame = CropFrame(rect=BBox(0, 0, 64, 64))
        with pytest.raises(ValueError, match="too small"):
            oval_mask(BBox(10, 10, 11.5, 30), frame)

    def test_disjoint_frame_rejected(self):
        with pytest.raises(ValueError, match="intersect"):
            oval_mask(BBox(10, 10, 30, 30), CropFrame(rect=BBox(100, 100, 200, 200)))


class TestRectMask:
    def test_raster_covers_exactly_the_box_pixels(self):
        frame = CropFrame(rect=BBox(0, 0, 50, 50))
        raster = rect_mask(BBox(10, 12, 20, 30), frame).raster
        ys, xs = np.nonzero(raster)
        assert xs.min() == 10 and xs.max() == 19
        assert ys.min() == 12 and ys.max() == 29
        assert raster.sum() == 10 * 18


class TestCropTier:
    @pytest.mark.parametrize(
        "w,h,expected",
        [(300, 280, 512), (150, 140, 256), (60, 50, 128), (256, 256, 512),
         (255, 256, 256), (128, 128, 256), (127, 128, 128)],
    )
    def test_examples(self, w, h, expected):
        assert crop_tier(BBox(0, 0, w, h)) == expected

    def test_monotone_in_bbox_size(self, rng):
        for _ in range(1000):
            w = float(rng.uniform(1, 600))
            h = float(rng.uniform(1, 600))
            grow_w = w + float(rng.uniform(0, 300))
            grow_h = h + float(rng.uniform(0, 300))
            small = crop_tier(BBox(0, 0, w, h))
            large = crop_tier(BBox(0, 0, grow_w, grow_h))
            assert large >= small


class TestCropFrame:
    def test_centered_when_room(self):
        frame = crop_frame_around(BBox(980, 480, 1020, 520), 2048, 1024, side=512)
        assert frame.rect.as_list() == [744, 244, 1256, 756]

    def test_clamped_at_origin(self):
        frame = crop_frame_around(BBox(0, 0, 20, 20), 2048, 1024, side=512)
        assert frame.rect.as_list() == [0, 0, 512, 512]

    def test_clamped_at_far_edge(self):
        frame = crop_frame_around(BBox(2030, 1010, 2045, 1020), 2048, 1024, side=512)
        assert frame.rect.as_list() == [1536, 512, 2048, 1024]

    def test_image_smaller_than_side_rejected(self):
        with pytest.raises(ValueError, match="smaller"):
            crop_frame_around(BBox(10, 10, 20, 20), 400, 400, side=512)

    def test_frame_always_inside_image(self, rng):
        for _ in range(300):
            w_img = int(rng.integers(512, 3000))
            h_img = int(rng.integers(512, 3000))
            x0 = float(rng.uniform(0, w_img - 10))
            y0 = float(rng.uniform(0, h_img - 10))
            bbox = BBox(x0, y0, min(x0 + 50, w_img), min(y0 + 50, h_img))
            frame = crop_frame_around(bbox, w_img, h_img, side=512)
            r = frame.rect
            assert r.x_min >= 0 and r.y_min >= 0
            assert r.x_max <= w_img and r.y_max <= h_img
            assert r.width == 512 and r.height == 512


class TestDrivableOverlap:
    def test_full_overlap(self):
        mask = np.ones((100, 100), dtype=bool)
        assert drivable_overlap(BBox(10, 10, 30, 30), mask) == 1.0

    def test_no_overlap(self):
        mask = np.zeros((100, 100), dtype=bool)
        assert drivable_overlap(BBox(10, 10, 30, 30), mask) == 0.0

    def test_half_overlap(self):
        mask = np.zeros((100, 100), dtype=bool)
        mask[:, 50:] = True
        assert drivable_overlap(BBox(40, 10, 60, 30), mask) == pytest.approx(0.5)

    def test_bbox_partly_outside_mask_counts_missing_as_zero(self):
        mask = np.ones((50, 50), dtype=bool)
        # half the box hangs below the mask
        assert drivable_overlap(BBox(10, 40, 30, 60), mask) == pytest.approx(0.5)


class TestSampleSets:
    def build_mask(self, width=2048, height=1200, road=(550, 1150)):
        mask = np.zeros((height, width), dtype=bool)
        mask[road[0] : road[1], :] = True
        return mask

    def test_margin_is_half_open(self):
        mask = self.build_mask()
        road_only, border = build_sample_sets(mask, 2048, 1200, margin=512)
        allpts = np.concatenate([road_only, border])
        assert allpts[:, 0].min() >= 512
        assert allpts[:, 0].max() <= 2048 - 512 - 1
        assert allpts[:, 1].min() >= 550  # road starts below the margin line here
        assert allpts[:, 1].max() <= 1200 - 512 - 1

    def test_border_is_within_depth_of_non_road(self):
        mask = self.build_mask()
        road_only, border = build_sample_sets(mask, 2048, 1200, margin=512, border_depth=10)
        # nearest non-road row is 549; distance for row y is y - 549
        assert set(border[:, 1]) == set(range(550, 560))
        assert road_only[:, 1].min() == 560

    def test_sets_are_disjoint_and_road(self):
        mask = self.build_mask()
        road_only, border = build_sample_sets(mask, 2048, 1200, margin=512)
        as_set = lambda pts: {(int(x), int(y)) for x, y in pts}
        assert not (as_set(road_only) & as_set(border))
        for x, y in list(road_only[:50]) + list(border[:50]):
            assert mask[y, x]

    def test_all_road_mask_has_empty_border(self):
        mask = np.ones((1200, 2048), dtype=bool)
        road_only, border = build_sample_sets(mask, 2048, 1200, margin=512)
        assert len(border) == 0
        assert len(road_only) == (2048 - 1024) * (1200 - 1024)

    def test_no_candidates_is_an_error_naming_the_scene(self):
        mask = np.zeros((600, 600), dtype=bool)
        mask[10:20, 10:20] = True  # all road pixels are near the edge
        with pytest.raises(ValueError, match="sceneX"):
            build_sample_sets(mask, 600, 600, margin=512, scene_id="sceneX")

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            build_sample_sets(np.zeros((10, 10), dtype=bool), 20, 10)


class TestSamplePlan:
    def sets(self):
        mask = np.zeros((1200, 2048), dtype=bool)
        mask[550:1150, :] = True
        return build_sample_sets(mask, 2048, 1200, margin=512)

    def test_counts_and_tags(self):
        plan = sample_plan(self.sets(), "scene", n_road=100, n_border=30, seed=7)
        tags = [s.set_tag for s in plan.centers]
        assert len(plan.centers) == 130
        assert tags.count("road_only") == 100
        assert tags.count("border") == 30

    def test_sampling_without_replacement(self):
        plan = sample_plan(self.sets(), "scene", n_road=500, n_border=100, seed=7)
        centers = [s.center for s in plan.centers]
        assert len(set(centers)) == len(centers)

    def test_deterministic_under_seed(self):
        a = sample_plan(self.sets(), "scene", n_road=50, n_border=20, seed=3)
        b = sample_plan(self.sets(), "scene", n_road=50, n_border=20, seed=3)
        assert a == b
        c = sample_plan(self.sets(), "scene", n_road=50, n_border=20, seed=4)
        assert a != c

    def test_undersized_sets_error_reports_counts(self):
        road_only, border = self.sets()
        with pytest.raises(ValueError, match=str(len(border))):
            sample_plan((road_only, border), "scene", n_road=10, n_border=len(border) + 1)

    def test_save_load_round_trip_is_exact(self, tmp_path):
        plan = sample_plan(self.sets(), "scene", n_road=40, n_border=10, seed=11)
        path = tmp_path / "plan.json"
        save_sample_plan(plan, path)
        assert load_sample_plan(path) == plan
        # byte-identical re-save
        first = path.read_bytes()
        save_sample_plan(load_sample_plan(path), path)
        assert path.read_bytes() == first

    def test_bbox_around_center(self):
        plan = sample_plan(self.sets(), "scene", n_road=1, n_border=1, seed=0)
        s = plan.centers[0]
        x, y = s.center
        assert s.bbox.as_list() == [x - 50, y - 65, x + 50, y + 65]
