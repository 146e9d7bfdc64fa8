import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from touchprint.errors import (DiscardFrame, EmptyMask, SeparationFailed,
                               WrongFingerCount)
from touchprint.geometry import (FINGER_IDS_LEFT, FINGER_IDS_RIGHT, FingerCrop,
                                 HandSide, assign_finger_ids,
                                 coarse_rotation_angle, crop_fingertip,
                                 fine_rotation_angle, separate_fingers)
from touchprint.raster import rotate_image


def flush_bottom_mask():
    m = np.zeros((40, 30), dtype=bool)
    m[10:40, 8:22] = True  # runs into the bottom border
    return m


def four_bar_mask(h=100, w=100, bar_rows=(10, 90)):
    m = np.zeros((h, w), dtype=bool)
    cols = [(5, 15), (30, 40), (55, 65), (80, 90)]
    for x0, x1 in cols:
        m[bar_rows[0]:bar_rows[1], x0:x1] = True
    return m, cols


class TestCoarseRotation:
    def test_four_flush_sides(self):
        base = flush_bottom_mask()
        assert coarse_rotation_angle(base) == 0
        left = np.zeros((30, 40), dtype=bool)
        left[8:22, 0:30] = True
        assert coarse_rotation_angle(left) == 90
        top = np.zeros((40, 30), dtype=bool)
        top[0:30, 8:22] = True
        assert coarse_rotation_angle(top) == 180
        right = np.zeros((30, 40), dtype=bool)
        right[8:22, 10:40] = True
        assert coarse_rotation_angle(right) == 270

    def test_returned_angle_brings_contact_to_bottom(self):
        base = flush_bottom_mask()
        for k in range(4):
            rotated = rotate_image(base, 90 * k)
            a = coarse_rotation_angle(rotated)
            assert a in (0, 90, 180, 270)
            fixed = rotate_image(rotated, a)
            assert coarse_rotation_angle(fixed) == 0
            assert fixed[-1, :].sum() > 0

    def test_tie_prefers_bottom_then_left(self):
        m = np.zeros((20, 20), dtype=bool)
        m[19, 1:6] = True   # 5 px on the bottom border, clear of the corner
        m[14:19, 0] = True  # 5 px on the left border
        assert coarse_rotation_angle(m) == 0

    def test_empty_mask_raises(self):
        with pytest.raises(EmptyMask):
            coarse_rotation_angle(np.zeros((5, 5), dtype=bool))


class TestSeparateFingers:
    def test_disjoint_bars_need_no_trim(self, cfg):
        mask, cols = four_bar_mask()
        img = np.random.default_rng(0).integers(0, 256, mask.shape, dtype=np.uint8)
        crops = separate_fingers(img, mask, 4, cfg)
        assert len(crops) == 4
        assert [c.order_index for c in crops] == [0, 1, 2, 3]
        for crop, (x0, x1) in zip(crops, cols):
            assert crop.mask.shape == (80, 10)
            assert crop.mask.all()
            assert np.array_equal(crop.image, img[10:90, x0:x1])

    def test_palm_is_trimmed_away(self, cfg):
        mask, cols = four_bar_mask(bar_rows=(10, 60))
        mask[60:95, 2:95] = True  # palm joins all four bars
        img = np.zeros(mask.shape, dtype=np.uint8)
        crops = separate_fingers(img, mask, 4, cfg)
        assert len(crops) == 4
        # bars span rows 10..60 once the palm rows are gone
        for crop in crops:
            assert crop.mask.shape == (50, 10)

    def test_too_many_components_discards(self, cfg):
        mask, _ = four_bar_mask()
        mask[20:70, 94:99] = True  # a fifth blob above the dominance cut
        with pytest.raises(DiscardFrame):
            separate_fingers(np.zeros(mask.shape, np.uint8), mask, 4, cfg)

    def test_unsplittable_mask_fails(self, cfg):
        mask = np.ones((100, 100), dtype=bool)
        with pytest.raises(SeparationFailed):
            separate_fingers(np.zeros(mask.shape, np.uint8), mask, 4, cfg)

    def test_empty_mask_fails(self, cfg):
        mask = np.zeros((100, 100), dtype=bool)
        with pytest.raises(SeparationFailed):
            separate_fingers(np.zeros(mask.shape, np.uint8), mask, 4, cfg)

    def test_crops_ordered_left_to_right(self, cfg):
        # four bars with distinct widths identify their own positions
        mask = np.zeros((100, 100), dtype=bool)
        widths = (6, 9, 12, 15)
        x = 5
        for w in widths:
            mask[10:90, x:x + w] = True
            x += w + 10
        img = np.zeros(mask.shape, dtype=np.uint8)
        crops = separate_fingers(img, mask, 4, cfg)
        assert tuple(c.mask.shape[1] for c in crops) == widths


class TestFineRotation:
    def test_upright_rectangle_is_zero(self):
        m = np.zeros((60, 30), dtype=bool)
        m[10:50, 10:20] = True
        assert fine_rotation_angle(m) == pytest.approx(0.0, abs=1e-9)

    def test_horizontal_rectangle_is_quarter_turn(self):
        m = np.zeros((30, 60), dtype=bool)
        m[10:20, 10:50] = True
        assert abs(fine_rotation_angle(m)) == pytest.approx(90.0, abs=1e-9)

    def test_square_tie_is_zero(self):
        m = np.zeros((40, 40), dtype=bool)
        m[5:25, 5:25] = True
        assert fine_rotation_angle(m) == 0.0

    @pytest.mark.parametrize("theta", [-50.0, -30.0, -10.0, 15.0, 35.0, 55.0])
    def test_recovers_applied_tilt(self, theta):
        m = np.zeros((120, 60), dtype=bool)
        m[10:110, 20:40] = True
        tilted = rotate_image(m, theta)
        a = fine_rotation_angle(tilted)
        # undoing the measured angle leaves the long axis near vertical
        fixed = rotate_image(tilted, a)
        assert abs(fine_rotation_angle(fixed)) < 1.0

    def test_angle_always_in_half_open_interval(self):
        rng = np.random.default_rng(11)
        base = np.zeros((80, 40), dtype=bool)
        base[5:75, 12:28] = True
        for _ in range(20):
            theta = float(rng.uniform(0, 360))
            a = fine_rotation_angle(rotate_image(base, theta))
            assert -90.0 < a <= 90.0

    def test_empty_mask_raises(self):
        with pytest.raises(EmptyMask):
            fine_rotation_angle(np.zeros((5, 5), dtype=bool))


class TestCropFingertip:
    def crop(self, h, w):
        img = (np.arange(h)[:, None] % 256 * np.ones((1, w))).astype(np.uint8)
        return FingerCrop(image=img, mask=np.ones((h, w), bool), order_index=0)

    def test_tall_crop_keeps_top(self):
        out = crop_fingertip(self.crop(350, 100))
        assert out.mask.shape == (200, 100)
        assert out.image[0, 0] == 0  # original top row survives

    def test_short_crop_unchanged(self):
        src = self.crop(280, 150)
        out = crop_fingertip(src)
        assert out.mask.shape == (280, 150)
        assert np.array_equal(out.image, src.image)

    def test_exact_ratio_boundary(self):
        out = crop_fingertip(self.crop(200, 80))
        assert out.mask.shape == (160, 80)

    @given(st.integers(1, 60), st.integers(1, 60))
    @settings(max_examples=80, deadline=None)
    def test_height_never_exceeds_twice_width(self, h, w):
        out = crop_fingertip(self.crop(h, w))
        assert out.mask.shape[0] <= 2 * out.mask.shape[1]
        assert out.mask.shape[1] == w


class TestFingerIds:
    def crops(self, n):
        blank = FingerCrop(image=np.zeros((4, 4), np.uint8),
                           mask=np.ones((4, 4), bool), order_index=0)
        return [blank] * n

    def test_right_hand_index_to_little(self):
        assert assign_finger_ids(self.crops(4), HandSide.RIGHT) == [2, 3, 4, 5]

    def test_left_hand_little_to_index(self):
        assert assign_finger_ids(self.crops(4), HandSide.LEFT) == [10, 9, 8, 7]

    def test_wrong_count_raises(self):
        with pytest.raises(WrongFingerCount):
            assign_finger_ids(self.crops(3), HandSide.RIGHT)
        with pytest.raises(WrongFingerCount):
            assign_finger_ids(self.crops(5), HandSide.LEFT)

    def test_id_constants(self):
        assert FINGER_IDS_RIGHT == (2, 3, 4, 5)
        assert FINGER_IDS_LEFT == (10, 9, 8, 7)
