import re
from pathlib import Path
from typing import Optional

from base_repository import BaseRepository
from consts import CHECKPOINT_SUFFIX
from training.checkpoint import checkpoint_load, checkpoint_save
from training.exceptions import CheckpointFormatError
from training.schemas import Checkpoint

CHECKPOINT_DIR = "checkpoints"
FINAL_NAME = f"final{CHECKPOINT_SUFFIX}"
_STEP_PATTERN = re.compile(rf"^step_(\d{{8}}){re.escape(CHECKPOINT_SUFFIX)}$")


class CheckpointRepository(BaseRepository[Checkpoint]):
    """Periodic checkpoints ``step_XXXXXXXX.pgan`` under ``<out_dir>/checkpoints``."""

    def __init__(self, out_dir: Path):
        super().__init__(Path(out_dir) / CHECKPOINT_DIR)

    def path_for(self, step: int) -> Path:
        return self.root / f"step_{step:08d}{CHECKPOINT_SUFFIX}"

    @property
    def final_path(self) -> Path:
        return self.root / FINAL_NAME

    def steps(self) -> list[int]:
        if not self.root.is_dir():
            return []
        return sorted(
            int(match.group(1))
            for match in (_STEP_PATTERN.match(path.name) for path in self.root.iterdir())
            if match
        )

    def get(self, entity_id: int) -> Checkpoint:
        path = self.path_for(entity_id)
        if not path.is_file():
            raise CheckpointFormatError(f"no checkpoint for step {entity_id} in {self.root}")
        return checkpoint_load(path)

    def add(self, entity: Checkpoint) -> Path:
        return checkpoint_save(self.path_for(entity.header.step), entity)

    def add_final(self, entity: Checkpoint) -> Path:
        return checkpoint_save(self.final_path, entity)

    def find(self, min_step: int = 0, max_step: Optional[int] = None) -> list[Checkpoint]:
        return [
            self.get(step)
            for step in self.steps()
            if step >= min_step and (max_step is None or step <= max_step)
        ]

    def latest_path(self) -> Optional[Path]:
        steps = self.steps()
        return self.path_for(steps[-1]) if steps else None
