import csv
import hashlib

import numpy as np
import pytest

from autodiff.exceptions import ContractError, ShapeMismatchError
from autodiff.node import Node, constant, parameter
from autodiff.ops import matmul, reshape
from autodiff.tensor import RngState
from consts import CHECKPOINT_MAGIC
from exceptions import ConfigValidationError
from layers.conv import conv2d_op
from layers.module import Module
from losses.schemas import LossConfig
from metrics.ssim import masked_ssim, ssim
from networks.generator import generator_forward
from networks.schemas import ConditionSet
from pipeline.pipeline import from_network
from settings import RunConfig
from synth.commands import generate_dataset
from synth.repository import SampleRepository
from synth.samples import make_sample
from synth.schemas import StageSample
from training.buffer import ImageBuffer
from training.checkpoint import checkpoint_load, checkpoint_save, decode_checkpoint, encode_checkpoint
from training.commands import run_training
from training.exceptions import CheckpointCorruptedError, CheckpointFormatError, TrainingAbortedError
from training.repository import CheckpointRepository
from training.schemas import StageTask, TrainConfig
from training.trainer import (
    TrainingState,
    build_training_state,
    capture_checkpoint,
    epoch_order,
    load_generator,
    stage_specs,
    train,
    train_step,
)

LR, BETA1, BETA2, EPS = 0.0002, 0.5, 0.999, 1e-8


class ToyGenerator(Module):
    """fake = w * condition, through a 1x1 convolution."""

    def __init__(self, weight: float):
        self.weight = parameter(np.full((1, 1, 1, 1), weight))

    def forward(self, conditions: ConditionSet) -> Node:
        stack = constant(conditions.stack().astype(np.float64))
        return conv2d_op(stack, self.weight, constant(np.zeros(1)))


class ToyDiscriminator(Module):
    """score = w * image, through a 1x1 matmul."""

    def __init__(self, weight: float):
        self.weight = parameter(np.full((1, 1), weight))

    def forward(self, image: Node) -> Node:
        return matmul(reshape(image, (1, 1)), self.weight)


def _toy_sample(condition: float, target: float) -> StageSample:
    return StageSample(
        stage=1,
        seed=0,
        conditions=ConditionSet.from_images([np.full((1, 1, 1), condition)], ("skeleton",)),
        target=np.full((1, 1, 1), target),
    )


def _adam_first_step(value: float, grad: float) -> float:
    m_hat = (1 - BETA1) * grad / (1 - BETA1)
    v_hat = (1 - BETA2) * grad * grad / (1 - BETA2)
    return value - LR * m_hat / (np.sqrt(v_hat) + EPS)


def _tiny_train_config(**updates) -> TrainConfig:
    return TrainConfig(image_size=32, seed=3, checkpoint_every=2, **updates)


def _tiny_state(config, tiny_generator_spec, tiny_discriminator_spec) -> TrainingState:
    return build_training_state(config, tiny_generator_spec, tiny_discriminator_spec)


def _digest(module: Module) -> str:
    digest = hashlib.sha256()
    for name, value in sorted(module.state_dict().items()):
        digest.update(name.encode())
        digest.update(np.ascontiguousarray(value).tobytes())
    return digest.hexdigest()


def _read_losses(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as stream:
        return list(csv.reader(stream))


class TestImageBuffer:
    def test_warm_up_returns_incoming(self):
        buffer = ImageBuffer(50, RngState(0))
        for index in range(50):
            incoming = np.full((1,), float(index))
            assert buffer.query(incoming) is incoming
        assert len(buffer) == 50

    def test_replay_fraction_and_capacity(self):
        buffer = ImageBuffer(50, RngState(1))
        replayed = 0
        for index in range(10_000):
            incoming = np.full((1,), float(index))
            returned = buffer.query(incoming)
            assert len(buffer) <= 50
            if index >= 50 and returned is not incoming:
                replayed += 1
        assert 0.45 <= replayed / 9_950 <= 0.55

    def test_replayed_image_is_replaced(self):
        buffer = ImageBuffer(1, RngState(2))
        buffer.query(np.zeros(1))
        for value in range(1, 40):
            returned = buffer.query(np.full(1, float(value)))
            if returned[0] != value:
                assert buffer.store[0][0] == value
                return
        pytest.fail("no replay in 39 queries")

    def test_rejects_zero_capacity(self):
        with pytest.raises(ContractError):
            ImageBuffer(0, RngState(0))


class TestTrainStep:
    def test_matches_hand_unrolled_adam(self):
        g, d = 0.8, 0.6
        x, y = 2 * 0.75 - 1, 2 * 0.25 - 1
        state = TrainingState(ToyGenerator(g), ToyDiscriminator(d), TrainConfig(), RngState(0))

        report = train_step(state, _toy_sample(0.75, 0.25), TrainConfig())

        fake = g * x
        d_loss = 0.5 * (d * y - 1) ** 2 + 0.5 * (d * fake) ** 2
        d_new = _adam_first_step(d, (d * y - 1) * y + d * fake * fake)
        g_gan = (d_new * g * x - 1) ** 2
        g_id = 10 * abs(g * x - y)
        g_grad = 2 * (d_new * g * x - 1) * d_new * x + 10 * np.sign(g * x - y) * x
        g_new = _adam_first_step(g, g_grad)

        assert report.step == 1
        assert report.d_loss == pytest.approx(d_loss, abs=1e-6)
        assert report.g_gan == pytest.approx(g_gan, abs=1e-6)
        assert report.g_id == pytest.approx(g_id, abs=1e-6)
        assert state.discriminator.weight.value[0, 0] == pytest.approx(d_new, abs=1e-6)
        assert state.generator.weight.value.item() == pytest.approx(g_new, abs=1e-6)

    def test_zero_generator_weights_freeze_generator(self, tiny_generator_spec, tiny_discriminator_spec):
        config = _tiny_train_config(loss=LossConfig(lambda3=0.0, lambda4=0.0))
        state = _tiny_state(config, tiny_generator_spec, tiny_discriminator_spec)
        before = state.generator.state_dict()
        train_step(state, make_sample(1, 0, 32), config)
        for name, value in state.generator.state_dict().items():
            np.testing.assert_array_equal(value, before[name])

    def test_zero_discriminator_weights_freeze_discriminator(
        self, tiny_generator_spec, tiny_discriminator_spec
    ):
        config = _tiny_train_config(loss=LossConfig(lambda1=0.0, lambda2=0.0))
        state = _tiny_state(config, tiny_generator_spec, tiny_discriminator_spec)
        before = state.discriminator.state_dict()
        generator_before = state.generator.state_dict()
        train_step(state, make_sample(1, 0, 32), config)
        for name, value in state.discriminator.state_dict().items():
            np.testing.assert_array_equal(value, before[name])
        assert any(
            not np.array_equal(value, generator_before[name])
            for name, value in state.generator.state_dict().items()
        )

    def test_each_half_step_moves_only_its_network(
        self, tiny_generator_spec, tiny_discriminator_spec, monkeypatch
    ):
        config = _tiny_train_config()
        state = _tiny_state(config, tiny_generator_spec, tiny_discriminator_spec)
        hashes: dict[str, tuple[tuple[str, str], tuple[str, str]]] = {}

        def recorded(label, optimizer, watched, moved):
            original = optimizer.step

            def step(grads):
                before = (_digest(watched), _digest(moved))
                original(grads)
                hashes[label] = (before, (_digest(watched), _digest(moved)))

            monkeypatch.setattr(optimizer, "step", step)

        recorded("d", state.discriminator_optimizer, state.generator, state.discriminator)
        recorded("g", state.generator_optimizer, state.discriminator, state.generator)
        train_step(state, make_sample(1, 0, 32), config)

        for label in ("d", "g"):
            (watched_before, moved_before), (watched_after, moved_after) = hashes[label]
            assert watched_before == watched_after
            assert moved_before != moved_after

    def test_non_finite_loss_aborts(self):
        state = TrainingState(ToyGenerator(np.inf), ToyDiscriminator(0.5), TrainConfig(), RngState(0))
        with pytest.raises(TrainingAbortedError) as raised:
            train_step(state, _toy_sample(0.75, 0.25), TrainConfig())
        assert raised.value.step == 1
        assert raised.value.loss_name == "d_loss"


class TestCheckpoint:
    @pytest.fixture
    def checkpoint(self, tiny_generator_spec, tiny_discriminator_spec):
        config = _tiny_train_config()
        state = _tiny_state(config, tiny_generator_spec, tiny_discriminator_spec)
        train_step(state, make_sample(1, 0, 32), config)
        return capture_checkpoint(state, 1, config.model_dump(mode="json"))

    def test_round_trip(self, checkpoint, tmp_path):
        loaded = checkpoint_load(checkpoint_save(tmp_path / "model.pgan", checkpoint))
        assert loaded.header == checkpoint.header
        assert loaded.tensors.keys() == checkpoint.tensors.keys()
        for name, value in checkpoint.tensors.items():
            np.testing.assert_array_equal(loaded.tensors[name], value)

        conditions = make_sample(1, 9, 32).network_conditions()
        np.testing.assert_array_equal(
            generator_forward(load_generator(loaded), conditions),
            generator_forward(load_generator(checkpoint), conditions),
        )

    def test_holds_optimiser_and_buffer(self, checkpoint):
        assert checkpoint.header.generator_adam_t == 1
        assert checkpoint.header.buffer_size == 1
        assert list(checkpoint.section("buffer")) == ["0000"]
        assert any(name.startswith("m/") for name in checkpoint.section("generator_adam"))

    def test_encoding_is_deterministic(self, checkpoint):
        assert encode_checkpoint(checkpoint) == encode_checkpoint(checkpoint)

    def test_wrong_magic(self, checkpoint):
        payload = encode_checkpoint(checkpoint)
        with pytest.raises(CheckpointFormatError):
            decode_checkpoint(b"XXXX" + payload[len(CHECKPOINT_MAGIC):])

    def test_wrong_version(self, checkpoint):
        payload = bytearray(encode_checkpoint(checkpoint))
        payload[len(CHECKPOINT_MAGIC)] ^= 0xFF
        with pytest.raises(CheckpointFormatError):
            decode_checkpoint(bytes(payload))

    @pytest.mark.parametrize("cut", [3, 200])
    def test_truncated(self, checkpoint, cut):
        payload = encode_checkpoint(checkpoint)
        with pytest.raises(CheckpointCorruptedError):
            decode_checkpoint(payload[:-cut])

    def test_trailing_bytes(self, checkpoint):
        with pytest.raises(CheckpointCorruptedError):
            decode_checkpoint(encode_checkpoint(checkpoint) + b"\x00")

    def test_repository_layout(self, checkpoint, tmp_path):
        repository = CheckpointRepository(tmp_path)
        path = repository.add(checkpoint)
        assert path.name == "step_00000001.pgan"
        assert repository.steps() == [1]
        assert repository.latest_path() == path
        assert repository.get(1).header.step == 1
        with pytest.raises(CheckpointFormatError):
            repository.get(5)


class TestTrain:
    def _train(self, dataset, out_dir, specs, resume=None, **updates):
        return train(
            StageTask.for_stage(1),
            dataset,
            _tiny_train_config(**updates),
            out_dir,
            *specs,
            resume=resume,
        )

    @pytest.fixture
    def specs(self, tiny_generator_spec, tiny_discriminator_spec):
        return tiny_generator_spec, tiny_discriminator_spec

    @pytest.fixture
    def dataset(self, stage1_dataset_dir) -> list[StageSample]:
        return stage1_dataset_dir.find(split="train", stage=1)

    def test_zero_epochs_keeps_initialisation(self, dataset, specs, tmp_path):
        final = checkpoint_load(self._train(dataset, tmp_path, specs, epochs=0))
        initial = _tiny_state(_tiny_train_config(epochs=0), *specs)
        assert final.header.step == 0
        for name, value in initial.generator.state_dict().items():
            np.testing.assert_array_equal(final.section("generator")[name], value)
        assert _read_losses(tmp_path / "losses.csv") == [["step", "d_loss", "g_gan", "g_id"]]

    def test_periodic_checkpoints_and_curve(self, dataset, specs, tmp_path):
        final = self._train(dataset, tmp_path, specs, epochs=1)
        assert final.name == "final.pgan"
        assert CheckpointRepository(tmp_path).steps() == [2, 4]
        rows = _read_losses(tmp_path / "losses.csv")
        assert [int(row[0]) for row in rows[1:]] == [1, 2, 3, 4]
        assert all(np.isfinite(float(value)) for row in rows[1:] for value in row[1:])

    def test_same_seed_same_curve(self, dataset, specs, tmp_path):
        self._train(dataset, tmp_path / "a", specs, epochs=1)
        self._train(dataset, tmp_path / "b", specs, epochs=1)
        assert (tmp_path / "a" / "losses.csv").read_bytes() == (tmp_path / "b" / "losses.csv").read_bytes()

    def test_resume_matches_uninterrupted_run(self, dataset, specs, tmp_path):
        straight = checkpoint_load(self._train(dataset, tmp_path / "straight", specs, epochs=2))
        halfway = self._train(dataset, tmp_path / "resumed", specs, epochs=1)
        resumed = checkpoint_load(self._train(dataset, tmp_path / "resumed", specs, resume=halfway, epochs=2))

        assert resumed.header.step == straight.header.step == 8
        assert _read_losses(tmp_path / "resumed" / "losses.csv") == _read_losses(
            tmp_path / "straight" / "losses.csv"
        )
        for name, value in straight.tensors.items():
            np.testing.assert_array_equal(resumed.tensors[name], value)

    def test_wrong_image_size(self, specs, tmp_path):
        with pytest.raises(ShapeMismatchError):
            self._train([make_sample(1, 0, 64)], tmp_path, specs)

    def test_epoch_order_is_a_seeded_permutation(self):
        order = epoch_order(3, 0, 10)
        assert sorted(order) == list(range(10))
        np.testing.assert_array_equal(order, epoch_order(3, 0, 10))
        assert not np.array_equal(order, epoch_order(3, 1, 10))


class TestRunTraining:
    def test_trains_from_exported_dataset(self, tiny_run_config, stage1_dataset_dir):
        final = run_training(tiny_run_config)
        assert checkpoint_load(final).header.config["stage"] == 1

    def test_stage_four_has_no_generator(self, tiny_run_config):
        with pytest.raises(ConfigValidationError):
            run_training(tiny_run_config.model_copy(update={"stage": 4}))


def _efficacy_config(tmp_path, stage: int, **updates) -> RunConfig:
    config = RunConfig(
        stage=stage,
        image_size=32,
        seed=0,
        epochs=1,
        base_width=8,
        disc_base_width=8,
        dense_width=64,
        checkpoint_every=500,
        n_train=2000,
        n_test=50,
        data_dir=tmp_path / "data",
        out_dir=tmp_path / "run",
    )
    return config.model_copy(update=updates)


def _generated(generator, sample: StageSample) -> np.ndarray:
    return from_network(generator_forward(generator, sample.network_conditions())[0])


@pytest.mark.slow
class TestEfficacy:
    def _train(self, config: RunConfig):
        """Trained and freshly initialised generators plus the exported test split."""
        generate_dataset(config.model_copy(update={"out_dir": config.data_dir}))
        trained = load_generator(checkpoint_load(run_training(config)))
        generator_spec, discriminator_spec = stage_specs(StageTask.for_stage(config.stage), config)
        untrained = build_training_state(
            TrainConfig.from_run_config(config), generator_spec, discriminator_spec
        ).generator
        test = SampleRepository(config.data_dir).find(split="test", stage=config.stage)
        return trained, untrained, test

    def test_identity_loss_falls_on_stage1(self, tmp_path):
        config = _efficacy_config(tmp_path, 1, epochs=40, n_train=50, n_test=1)
        self._train(config)
        rows = _read_losses(config.out_dir / "losses.csv")[1:]
        identity = [float(row[3]) for row in rows]
        assert len(identity) == 2000
        assert np.mean(identity[-100:]) < np.mean(identity[:100])

    def test_stage1_beats_untrained_and_copy_baselines(self, tmp_path):
        trained, untrained, test = self._train(_efficacy_config(tmp_path, 1))
        trained_score = np.mean([ssim(_generated(trained, sample), sample.target) for sample in test])
        untrained_score = np.mean([ssim(_generated(untrained, sample), sample.target) for sample in test])
        copy_score = np.mean([ssim(sample.condition("garment"), sample.target) for sample in test])
        assert trained_score >= untrained_score + 0.15
        assert trained_score > copy_score

    def test_stage3_fills_holes(self, tmp_path):
        trained, _, test = self._train(_efficacy_config(tmp_path, 3))
        filled = np.mean(
            [masked_ssim(_generated(trained, sample), sample.target, sample.masks["hole"]) for sample in test]
        )
        black = np.mean(
            [masked_ssim(sample.condition("stitched"), sample.target, sample.masks["hole"]) for sample in test]
        )
        assert filled >= black + 0.1
