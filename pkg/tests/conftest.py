import numpy as np
import pytest

from autodiff.tensor import RngState
from networks.schemas import DiscriminatorSpec, GeneratorSpec
from settings import RunConfig
from synth.repository import SampleRepository
from synth.samples import iter_samples, sample_seeds

TINY_SIZE = 32
TINY_BASE_WIDTH = 2
TINY_DENSE_WIDTH = 8


@pytest.fixture
def rng() -> RngState:
    return RngState(1234)


@pytest.fixture
def np_rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_generator_spec() -> GeneratorSpec:
    return GeneratorSpec.for_image_size(TINY_SIZE, 6, base_width=TINY_BASE_WIDTH)


@pytest.fixture
def tiny_discriminator_spec() -> DiscriminatorSpec:
    return DiscriminatorSpec.for_image_size(
        TINY_SIZE, base_width=TINY_BASE_WIDTH, dense_width=TINY_DENSE_WIDTH
    )


@pytest.fixture
def tiny_run_config(tmp_path) -> RunConfig:
    return RunConfig(
        stage=1,
        image_size=TINY_SIZE,
        seed=3,
        epochs=1,
        base_width=TINY_BASE_WIDTH,
        disc_base_width=TINY_BASE_WIDTH,
        dense_width=TINY_DENSE_WIDTH,
        checkpoint_every=2,
        n_train=4,
        n_test=2,
        data_dir=tmp_path / "data",
        out_dir=tmp_path / "run",
    )


@pytest.fixture
def stage1_dataset_dir(tiny_run_config) -> SampleRepository:
    repository = SampleRepository(tiny_run_config.data_dir)
    repository.reset()
    seeds = sample_seeds(tiny_run_config.seed, tiny_run_config.n_train, tiny_run_config.n_test)
    for split, split_seeds in seeds.items():
        for sample in iter_samples(1, split_seeds, TINY_SIZE):
            repository.add(sample, split)
    return repository
