import csv
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from base_repository import BaseRepository
from consts import (
    DATASET_SPLITS,
    MANIFEST_CSV_HEADER,
    MANIFEST_FILE,
    PIPELINE_INPUT_ROLES,
    STAGE_CONDITION_ROLES,
)
from networks.schemas import ConditionSet
from services.png.png import png_read, png_write
from synth.exceptions import MissingDatasetError
from synth.schemas import StageSample

logger = logging.getLogger(__name__)

MASK_SUFFIX = "-mask"
ROLE_SEPARATOR = ";"


def condition_roles(stage: int) -> tuple[str, ...]:
    return PIPELINE_INPUT_ROLES if stage == 4 else STAGE_CONDITION_ROLES[stage]


def sample_file_name(stage: int, seed: int, role: str) -> str:
    return f"{stage}_{seed}_{role}.png"


class SampleRepository(BaseRepository[StageSample]):
    """Exported dataset: ``<split>/<stage>_<seed>_<role>.png`` plus ``manifest.csv``."""

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_FILE

    def reset(self) -> None:
        """Start a fresh manifest and drop the PNGs of any earlier export."""
        self.root.mkdir(parents=True, exist_ok=True)
        for split in DATASET_SPLITS:
            stale = sorted((self.root / split).glob("*.png"))
            for path in stale:
                path.unlink()
            if stale:
                logger.info(f"Removed {len(stale)} PNGs from {self.root / split}")
        with open(self.manifest_path, "w", newline="", encoding="utf-8") as stream:
            csv.writer(stream, lineterminator="\n").writerow(MANIFEST_CSV_HEADER)

    def add(self, entity: StageSample, split: str = "train") -> Path:
        if not self.manifest_path.exists():
            self.reset()
        directory = self.root / split
        images: dict[str, np.ndarray] = {
            role: entity.condition(role) for role in entity.conditions.order
        }
        images["target"] = entity.target
        for role, mask in entity.masks.items():
            images[f"{role}{MASK_SUFFIX}"] = mask
        head = entity.extras.get("head")
        if head is not None:
            images["head"] = np.concatenate([head, entity.masks["head"][np.newaxis]], axis=0)

        for role, image in images.items():
            png_write(directory / sample_file_name(entity.stage, entity.seed, role), image)
        with open(self.manifest_path, "a", newline="", encoding="utf-8") as stream:
            csv.writer(stream, lineterminator="\n").writerow(
                [split, entity.stage, entity.seed, ROLE_SEPARATOR.join(images)]
            )
        return directory

    def manifest_rows(self) -> list[dict[str, str]]:
        if not self.manifest_path.is_file():
            raise MissingDatasetError(f"no {MANIFEST_FILE} in {self.root}")
        with open(self.manifest_path, newline="", encoding="utf-8") as stream:
            return list(csv.DictReader(stream))

    def get(self, entity_id: int) -> StageSample:
        for row in self.manifest_rows():
            if int(row["seed"]) == entity_id:
                return self._load(row)
        raise MissingDatasetError(f"sample with seed {entity_id} not in {self.root}")

    def find(self, split: Optional[str] = None, stage: Optional[int] = None) -> list[StageSample]:
        samples = [
            self._load(row)
            for row in self.manifest_rows()
            if (split is None or row["split"] == split)
            and (stage is None or int(row["stage"]) == stage)
        ]
        logger.debug(f"Loaded {len(samples)} samples from {self.root} ({split=}, {stage=})")
        return samples

    def _load(self, row: dict[str, str]) -> StageSample:
        stage, seed = int(row["stage"]), int(row["seed"])
        roles = row["roles"].split(ROLE_SEPARATOR)
        directory = self.root / row["split"]

        def read(role: str, mode: Optional[str]) -> np.ndarray:
            path = directory / sample_file_name(stage, seed, role)
            if not path.is_file():
                raise MissingDatasetError(f"{path} is listed in the manifest but missing")
            return png_read(path, mode)

        conditions = [
            read(role, "L" if role == "diffmask" else "RGB") for role in condition_roles(stage)
        ]
        masks = {
            role[: -len(MASK_SUFFIX)]: read(role, "L")[0]
            for role in roles
            if role.endswith(MASK_SUFFIX)
        }
        extras = {}
        if "head" in roles:
            extras["head"] = read("head", "RGBA")[:3]
        return StageSample(
            stage=stage,
            seed=seed,
            conditions=ConditionSet.from_images(conditions, condition_roles(stage)),
            target=read("target", "RGB"),
            masks=masks,
            extras=extras,
        )
