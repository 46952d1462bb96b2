"""Mask construction and mask-driven compositing."""
import math
from typing import Optional

import numpy as np

from autodiff.tensor import TRAIN_DTYPE, RngState, Tensor
from synth.exceptions import MaskError

HOLE_FRACTION_RANGE = (0.02, 0.15)
MAX_HOLE_BLOBS = 4
# Steps without a new pixel before a walk jumps to an unfilled pixel.
STALL_LIMIT = 50

_NEIGHBOURS = np.array(
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
)


def _as_plane(mask: Tensor, name: str) -> Tensor:
    plane = mask[0] if mask.ndim == 3 and mask.shape[0] == 1 else mask
    if plane.ndim != 2:
        raise MaskError(f"{name} must be H x W or 1 x H x W, got {list(mask.shape)}")
    if not np.isin(plane, (0.0, 1.0)).all():
        raise MaskError(f"{name} is not binary")
    return plane


def hole_quota(area: int, fraction: float) -> int:
    """Hole pixel count for a silhouette of ``area`` pixels, clamped to the fraction range."""
    low, high = HOLE_FRACTION_RANGE
    lower = math.ceil(low * area)
    upper = max(lower, math.floor(high * area))
    return min(area, max(lower, min(upper, round(fraction * area))))


def irregular_hole_mask(rng: RngState, silhouette: Tensor, brush_radius: Optional[int] = None) -> Tensor:
    """Union of 1-4 random-walk blobs inside ``silhouette``.

    The total hole area is drawn uniformly from 2-15% of the silhouette
    and met exactly; every pixel is clipped to the silhouette.

    Raises:
        MaskError: If the silhouette is empty or not binary.
    """
    plane = _as_plane(silhouette, "silhouette")
    inside = plane > 0.5
    area = int(inside.sum())
    if area == 0:
        raise MaskError("silhouette is empty")
    size = plane.shape[0]
    radius = brush_radius if brush_radius is not None else max(1, size // 32)
    offsets = [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if dy * dy + dx * dx <= radius * radius
    ]

    quota = hole_quota(area, float(rng.uniform(*HOLE_FRACTION_RANGE)))
    blobs = int(rng.integers(1, MAX_HOLE_BLOBS + 1))
    shares = [quota // blobs + (1 if index < quota % blobs else 0) for index in range(blobs)]

    holes = np.zeros_like(inside)
    filled = 0

    def random_free_pixel() -> tuple[int, int]:
        candidates = np.argwhere(inside & ~holes)
        return tuple(candidates[int(rng.integers(0, len(candidates)))])

    for share in shares:
        target = filled + share
        if share == 0:
            continue
        y, x = random_free_pixel()
        stalled = 0
        while filled < target:
            before = filled
            for dy, dx in offsets:
                py, px = y + dy, x + dx
                if filled >= target:
                    break
                if 0 <= py < size and 0 <= px < size and inside[py, px] and not holes[py, px]:
                    holes[py, px] = True
                    filled += 1
            stalled = 0 if filled > before else stalled + 1
            if stalled >= STALL_LIMIT:
                y, x = random_free_pixel()
                stalled = 0
                continue
            moves = [
                (y + dy, x + dx)
                for dy, dx in _NEIGHBOURS
                if 0 <= y + dy < size and 0 <= x + dx < size and inside[y + dy, x + dx]
            ]
            if moves:
                y, x = moves[int(rng.integers(0, len(moves)))]
            else:
                y, x = random_free_pixel()
    return holes.astype(TRAIN_DTYPE)


def difference_mask(stage2_output: Tensor, body_silhouette: Tensor, tau: float = 0.06) -> Tensor:
    """Silhouette pixels left dark by the stitching stage.

    Args:
        stage2_output: 3 x H x W image in [0, 1].
        body_silhouette: Binary H x W mask.
        tau: Intensity threshold in (0, 1).

    Returns:
        Tensor: Binary H x W mask.
    """
    if not 0.0 < tau < 1.0:
        raise MaskError(f"tau must lie in (0, 1), got {tau}")
    plane = _as_plane(body_silhouette, "silhouette")
    if stage2_output.ndim != 3 or stage2_output.shape[1:] != plane.shape:
        raise MaskError(
            f"output {list(stage2_output.shape)} does not match silhouette {list(plane.shape)}"
        )
    dark = stage2_output.max(axis=0) < tau
    return (dark & (plane > 0.5)).astype(TRAIN_DTYPE)


def composite_stage4(
    stage2_img: Tensor,
    stage3_img: Tensor,
    diff_mask: Tensor,
    head_img: Tensor,
    head_mask: Tensor,
) -> Tensor:
    """Fill the difference region from Stage 3, then paste the head.

    ``out = h * head + (1 - h) * (m * stage3 + (1 - m) * stage2)``
    """
    if stage2_img.shape != stage3_img.shape or stage2_img.shape != head_img.shape:
        raise MaskError(
            f"image shapes disagree: {list(stage2_img.shape)}, "
            f"{list(stage3_img.shape)}, {list(head_img.shape)}"
        )
    fill = _as_plane(diff_mask, "difference mask")
    head = _as_plane(head_mask, "head mask")
    if fill.shape != stage2_img.shape[-2:] or head.shape != stage2_img.shape[-2:]:
        raise MaskError(f"mask size does not match image {list(stage2_img.shape)}")
    body = fill * stage3_img + (1.0 - fill) * stage2_img
    return (head * head_img + (1.0 - head) * body).astype(stage2_img.dtype)


def nonblack(image: Tensor) -> Tensor:
    return (image.max(axis=0) > 0).astype(TRAIN_DTYPE)
