import hashlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from autodiff.tensor import RngState
from consts import RNG_KEY_DATA
from synth.exceptions import MaskError, MissingDatasetError, PoseDomainError
from synth.masks import HOLE_FRACTION_RANGE, composite_stage4, difference_mask, irregular_hole_mask
from synth.render import random_pose, render_skeleton, torso_mask
from synth.repository import SampleRepository
from synth.samples import (
    make_sample,
    make_stage1_sample,
    make_stage2_sample,
    sample_seeds,
)
from synth.schemas import PoseParams

SIZE = 32
seeds = st.integers(min_value=0, max_value=2**31)


def _stream(stage: int, seed: int) -> RngState:
    return RngState(seed, (RNG_KEY_DATA, stage))


def _bbox_area(image: np.ndarray) -> int:
    rows, cols = np.nonzero(image.max(axis=0))
    return int((rows.max() - rows.min() + 1) * (cols.max() - cols.min() + 1))


class TestSkeleton:
    def test_deterministic(self):
        pose = PoseParams(left_upper_arm=20.0, torso_angle=-5.0)
        np.testing.assert_array_equal(render_skeleton(pose, 64), render_skeleton(pose, 64))

    def test_range_and_layout(self):
        image = render_skeleton(PoseParams.canonical(), 64)
        assert image.shape == (3, 64, 64)
        assert image.min() >= 0.0 and image.max() <= 1.0
        assert image[:, 0, 0].sum() == 0.0

    def test_scale_shrinks_bounding_box(self):
        full = render_skeleton(PoseParams(scale=1.0), 64)
        half = render_skeleton(PoseParams(scale=0.5), 64)
        assert _bbox_area(half) < _bbox_area(full)

    @pytest.mark.parametrize(
        "pose",
        [PoseParams(torso_angle=11.0), PoseParams(left_forearm=-80.0), PoseParams(scale=1.2)],
    )
    def test_out_of_bounds_pose(self, pose):
        with pytest.raises(PoseDomainError):
            render_skeleton(pose, 64)

    def test_too_small_image(self):
        with pytest.raises(PoseDomainError):
            render_skeleton(PoseParams.canonical(), 8)


class TestStage1:
    def test_canonical_pose_is_identity(self):
        sample = make_stage1_sample(_stream(1, 7), SIZE, pose=PoseParams.canonical())
        np.testing.assert_array_equal(sample.target, sample.condition("garment"))

    @pytest.mark.parametrize("seed", range(20))
    def test_garment_overlaps_torso(self, seed):
        sample = make_sample(1, seed, 64)
        garment = sample.mask("garment") > 0
        rng = _stream(1, seed)
        torso = torso_mask(random_pose(rng), 64) > 0
        iou = (garment & torso).sum() / (garment | torso).sum()
        assert iou > 0.5

    def test_distinct_seeds_distinct_skeletons(self):
        digests = {
            hashlib.sha256(make_sample(1, seed, SIZE).condition("skeleton").tobytes()).hexdigest()
            for seed in range(30)
        }
        assert len(digests) == 30

    def test_deterministic_per_seed(self):
        first, second = make_sample(1, 11, SIZE), make_sample(1, 11, SIZE)
        assert first.conditions == second.conditions
        np.testing.assert_array_equal(first.target, second.target)


class TestStage2:
    @pytest.mark.parametrize("seed", range(10))
    def test_unaugmented_target_is_alpha_composite(self, seed):
        sample = make_stage2_sample(_stream(2, seed), SIZE, augment=False)
        mask = sample.mask("garment")[np.newaxis]
        expected = sample.condition("body") * (1.0 - mask) + sample.condition("garment") * mask
        np.testing.assert_allclose(sample.target, expected, atol=1e-7)

    @pytest.mark.parametrize("seed", range(10))
    def test_garment_fills_blanked_region(self, seed):
        sample = make_sample(2, seed, SIZE)
        inside = sample.mask("garment") > 0
        assert not sample.condition("body")[:, inside].any()
        assert (sample.target[:, inside].max(axis=0) > 0).all()

    @pytest.mark.parametrize("seed", range(10))
    def test_rotated_twin_has_same_target(self, seed):
        augmented = make_stage2_sample(_stream(2, seed), SIZE, augment=True)
        plain = make_stage2_sample(_stream(2, seed), SIZE, augment=False)
        np.testing.assert_array_equal(augmented.target, plain.target)

    def test_values_in_unit_range(self):
        sample = make_sample(2, 3, SIZE)
        for image in (*sample.conditions.images, sample.target):
            assert image.min() >= 0.0 and image.max() <= 1.0


class TestStage3:
    @settings(max_examples=30, deadline=None)
    @given(seed=seeds)
    def test_hole_fraction_and_clipping(self, seed):
        sample = make_sample(3, seed, SIZE)
        holes, silhouette = sample.mask("hole"), sample.mask("silhouette")
        low, high = HOLE_FRACTION_RANGE
        assert low <= holes.sum() / silhouette.sum() <= high
        assert not (holes * (1.0 - silhouette)).any()

    def test_conditions_zero_the_holes(self):
        sample = make_sample(3, 5, SIZE)
        holes = sample.mask("hole")
        np.testing.assert_array_equal(sample.condition("diffmask")[0], holes)
        stitched = sample.condition("stitched")
        assert not stitched[:, holes > 0].any()
        np.testing.assert_array_equal(stitched[:, holes == 0], sample.target[:, holes == 0])

    def test_empty_silhouette_rejected(self):
        with pytest.raises(MaskError):
            irregular_hole_mask(RngState(0), np.zeros((SIZE, SIZE)))


class TestDifferenceMask:
    def test_bright_output_gives_empty_mask(self):
        silhouette = np.ones((8, 8))
        assert not difference_mask(np.full((3, 8, 8), 0.8), silhouette).any()

    def test_zeroed_rectangle(self):
        silhouette = np.zeros((8, 8))
        silhouette[1:7, 1:7] = 1.0
        output = np.full((3, 8, 8), 0.5)
        output[:, 0:4, 0:4] = 0.0
        expected = np.zeros((8, 8))
        expected[1:4, 1:4] = 1.0
        np.testing.assert_array_equal(difference_mask(output, silhouette), expected)

    def test_tau_monotonic(self, np_rng):
        output = np_rng.uniform(0.0, 0.3, (3, 16, 16))
        silhouette = np.ones((16, 16))
        small, large = difference_mask(output, silhouette, 0.05), difference_mask(output, silhouette, 0.2)
        assert not (small * (1.0 - large)).any()

    def test_tau_outside_unit_interval(self):
        with pytest.raises(MaskError):
            difference_mask(np.zeros((3, 4, 4)), np.ones((4, 4)), 1.0)


class TestComposite:
    def _images(self, np_rng):
        return [np_rng.uniform(0.0, 1.0, (3, 8, 8)) for _ in range(3)]

    def test_empty_masks_give_stage2(self, np_rng):
        s2, s3, head = self._images(np_rng)
        empty = np.zeros((8, 8))
        np.testing.assert_array_equal(composite_stage4(s2, s3, empty, head, empty), s2)

    def test_full_fill_gives_stage3(self, np_rng):
        s2, s3, head = self._images(np_rng)
        out = composite_stage4(s2, s3, np.ones((8, 8)), head, np.zeros((8, 8)))
        np.testing.assert_array_equal(out, s3)

    def test_formula(self, np_rng):
        s2, s3, head = self._images(np_rng)
        fill = (np_rng.uniform(size=(8, 8)) > 0.5).astype(float)
        head_mask = (np_rng.uniform(size=(8, 8)) > 0.7).astype(float)
        expected = head_mask * head + (1 - head_mask) * (fill * s3 + (1 - fill) * s2)
        np.testing.assert_allclose(composite_stage4(s2, s3, fill, head, head_mask), expected)

    def test_non_binary_mask(self, np_rng):
        s2, s3, head = self._images(np_rng)
        with pytest.raises(MaskError):
            composite_stage4(s2, s3, np.full((8, 8), 0.5), head, np.zeros((8, 8)))


class TestSeeds:
    def test_contiguous_splits(self):
        splits = sample_seeds(10, 4, 2)
        assert list(splits["train"]) == [10, 11, 12, 13]
        assert list(splits["test"]) == [14, 15]


class TestSampleRepository:
    def test_round_trip(self, tmp_path):
        repository = SampleRepository(tmp_path)
        repository.reset()
        sample = make_sample(2, 4, SIZE)
        repository.add(sample, "test")

        loaded = repository.get(4)
        assert loaded.stage == 2 and loaded.conditions.order == sample.conditions.order
        for mine, theirs in zip(sample.conditions.images, loaded.conditions.images):
            np.testing.assert_allclose(mine, theirs, atol=0.5 / 255 + 1e-6)
        for role, mask in sample.masks.items():
            np.testing.assert_array_equal(loaded.masks[role], mask)
        np.testing.assert_allclose(loaded.extras["head"], sample.extras["head"], atol=0.5 / 255 + 1e-6)

    def test_find_filters(self, stage1_dataset_dir):
        assert len(stage1_dataset_dir.find(split="train", stage=1)) == 4
        assert len(stage1_dataset_dir.find(split="test")) == 2
        assert stage1_dataset_dir.find(stage=2) == []

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MissingDatasetError):
            SampleRepository(tmp_path / "nowhere").find()

    def test_reset_drops_earlier_export(self, stage1_dataset_dir):
        train_dir = stage1_dataset_dir.root / "train"
        assert any(train_dir.glob("1_3_*.png"))

        stage1_dataset_dir.reset()
        stage1_dataset_dir.add(make_sample(1, 40, SIZE), "train")

        assert {path.name.split("_")[1] for path in train_dir.glob("*.png")} == {"40"}
        assert not any((stage1_dataset_dir.root / "test").glob("*.png"))
        assert [sample.seed for sample in stage1_dataset_dir.find()] == [40]
