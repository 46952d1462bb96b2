import numpy as np
import pytest

from autodiff.tensor import RngState
from pipeline.exceptions import MissingInputError, PipelineMismatchError
from pipeline.pipeline import (
    inputs_from_sample,
    load_stage_generators,
    read_pipeline_inputs,
    run_pipeline,
    write_pipeline_outputs,
)
from pipeline.schemas import INPUT_FILES
from services.png.png import png_write
from synth.masks import composite_stage4
from synth.samples import make_sample
from training.checkpoint import checkpoint_save
from training.schemas import StageTask, TrainConfig
from training.trainer import build_training_state, capture_checkpoint, stage_specs


def _save_stage(run_config, stage: int, directory):
    config = run_config.model_copy(update={"stage": stage})
    generator_spec, discriminator_spec = stage_specs(StageTask.for_stage(stage), config)
    state = build_training_state(
        TrainConfig.from_run_config(config), generator_spec, discriminator_spec
    )
    checkpoint = capture_checkpoint(state, stage, config.model_dump(mode="json"))
    return checkpoint_save(directory / f"stage{stage}.pgan", checkpoint)


@pytest.fixture
def checkpoints(tiny_run_config, tmp_path):
    return [_save_stage(tiny_run_config, stage, tmp_path / "ckpt") for stage in (1, 2, 3)]


@pytest.fixture
def generators(checkpoints):
    return load_stage_generators(checkpoints)


@pytest.fixture
def sample():
    return make_sample(4, 0, 32)


class TestLoadStageGenerators:
    def test_loads_in_stage_order(self, generators):
        assert sorted(generators) == [1, 2, 3]
        assert generators[2].spec.condition_channels == 9
        assert generators[3].spec.condition_channels == 4

    def test_rejects_swapped_checkpoints(self, checkpoints):
        first, second, third = checkpoints
        with pytest.raises(PipelineMismatchError):
            load_stage_generators([second, first, third])

    def test_rejects_wrong_count(self, checkpoints):
        with pytest.raises(PipelineMismatchError):
            load_stage_generators(checkpoints[:2])


class TestRunPipeline:
    def test_outputs_in_unit_range(self, generators, sample):
        result = run_pipeline(generators, inputs_from_sample(sample))
        for name, image in result.images().items():
            assert image.shape[-2:] == (32, 32), name
            assert image.min() >= 0.0 and image.max() <= 1.0, name

    def test_final_follows_composite_algebra(self, generators, sample):
        inputs = inputs_from_sample(sample)
        result = run_pipeline(generators, inputs)
        expected = composite_stage4(
            result.stage2, result.stage3, result.diff_mask, inputs.head, inputs.head_mask
        )
        np.testing.assert_array_equal(result.final, expected)

        body_only = (result.diff_mask == 0) & (inputs.head_mask == 0)
        np.testing.assert_array_equal(result.final[:, body_only], result.stage2[:, body_only])

    def test_difference_mask_inside_silhouette(self, generators, sample):
        inputs = inputs_from_sample(sample)
        result = run_pipeline(generators, inputs)
        assert not (result.diff_mask * (1.0 - inputs.silhouette)).any()

    def test_silhouette_is_optional(self, generators, sample):
        result = run_pipeline(generators, inputs_from_sample(sample, with_silhouette=False))
        assert result.final.shape == (3, 32, 32)

    def test_rejects_size_mismatch(self, generators):
        with pytest.raises(PipelineMismatchError):
            run_pipeline(generators, inputs_from_sample(make_sample(4, 0, 64)))


class TestPipelineFiles:
    def _write_inputs(self, sample, directory):
        png_write(directory / INPUT_FILES["skeleton"], sample.condition("skeleton"))
        png_write(directory / INPUT_FILES["garment"], sample.condition("garment"))
        png_write(directory / INPUT_FILES["body"], sample.condition("body"))
        head = np.concatenate([sample.extras["head"], sample.masks["head"][np.newaxis]])
        png_write(directory / INPUT_FILES["head"], head)

    def test_reads_head_mask_from_alpha(self, sample, tmp_path):
        self._write_inputs(sample, tmp_path)
        inputs = read_pipeline_inputs(tmp_path)
        np.testing.assert_array_equal(inputs.head_mask, sample.masks["head"])
        assert inputs.silhouette is None
        assert inputs.skeleton.shape == (3, 32, 32)

    def test_missing_input(self, sample, tmp_path):
        self._write_inputs(sample, tmp_path)
        (tmp_path / INPUT_FILES["body"]).unlink()
        with pytest.raises(MissingInputError, match="body.png"):
            read_pipeline_inputs(tmp_path)

    def test_writes_every_stage(self, generators, sample, tmp_path):
        result = run_pipeline(generators, inputs_from_sample(sample))
        paths = write_pipeline_outputs(result, tmp_path / "out")
        assert [path.name for path in paths] == [
            "stage1.png",
            "stage2.png",
            "diffmask.png",
            "stage3.png",
            "stage2_head.png",
            "stage3_head.png",
            "final.png",
        ]
        assert all(path.is_file() for path in paths)
