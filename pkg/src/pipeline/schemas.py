from typing import Optional

import numpy as np

from base_schema import ArraySchema

INPUT_FILES = {
    "skeleton": "skeleton.png",
    "garment": "garment.png",
    "body": "body.png",
    "head": "head.png",
}
SILHOUETTE_FILE = "silhouette.png"


class PipelineInputs(ArraySchema):
    """Raw pipeline inputs in [0, 1]; images are 3 x H x W, masks H x W."""

    skeleton: np.ndarray
    garment: np.ndarray
    body: np.ndarray
    head: np.ndarray
    head_mask: np.ndarray
    silhouette: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.skeleton.shape[-1]


class PipelineResult(ArraySchema):
    stage1: np.ndarray
    stage2: np.ndarray
    diff_mask: np.ndarray
    stage3: np.ndarray
    final: np.ndarray
    stage2_head: np.ndarray
    stage3_head: np.ndarray

    def images(self) -> dict[str, np.ndarray]:
        """Output file name -> image, in writing order."""
        return {
            "stage1.png": self.stage1,
            "stage2.png": self.stage2,
            "diffmask.png": self.diff_mask,
            "stage3.png": self.stage3,
            "stage2_head.png": self.stage2_head,
            "stage3_head.png": self.stage3_head,
            "final.png": self.final,
        }
