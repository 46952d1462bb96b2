"""Procedural stick-figure world: skeletons, bodies, garments and heads.

Geometry lives in unit image coordinates (x to the right, y down, the
figure centred at 0.5 + offset); rasterisation goes through Pillow.
Skeletons are anti-aliased by drawing at ``SUPERSAMPLE`` times the size
and block-averaging; masks are drawn at native size and stay binary.
"""
import math

import numpy as np
from PIL import Image, ImageDraw

from autodiff.tensor import TRAIN_DTYPE, RngState, Tensor
from synth.exceptions import PoseDomainError
from synth.schemas import (
    ARM_ANGLE_LIMIT,
    OFFSET_LIMIT,
    RGB,
    SCALE_RANGE,
    TORSO_ANGLE_LIMIT,
    GarmentParams,
    PoseParams,
)

SUPERSAMPLE = 4
MIN_IMAGE_SIZE = 16

TORSO_HALF_LENGTH = 0.15
SHOULDER_HALF_WIDTH = 0.09
TORSO_TOP_HALF_WIDTH = 0.10
TORSO_BOTTOM_HALF_WIDTH = 0.08
UPPER_ARM_LENGTH = 0.11
FOREARM_LENGTH = 0.09
ARM_HALF_WIDTH = 0.03
SLEEVE_HALF_WIDTH = 0.035
HIP_HALF_WIDTH = 0.05
LEG_LENGTH = 0.2
LEG_HALF_WIDTH = 0.035
HEAD_LIFT = 0.08
HEAD_RADIUS = 0.065

SKIN: RGB = (224, 172, 105)
TROUSERS: RGB = (40, 40, 90)
HAIR: RGB = (60, 40, 20)
GARMENT_PALETTE: tuple[RGB, ...] = (
    (230, 30, 45),
    (30, 160, 230),
    (250, 200, 20),
    (40, 200, 90),
    (240, 120, 20),
    (170, 60, 220),
    (250, 250, 250),
    (20, 220, 200),
)
STRIPE_PERIODS = (2, 3, 4)

BONE_COLORS: dict[str, RGB] = {
    "spine": (255, 0, 0),
    "left_shoulder": (255, 128, 0),
    "right_shoulder": (255, 255, 0),
    "left_upper_arm": (0, 255, 0),
    "left_forearm": (0, 255, 255),
    "right_upper_arm": (0, 0, 255),
    "right_forearm": (255, 0, 255),
    "left_hip": (128, 255, 0),
    "right_hip": (0, 128, 255),
    "left_leg": (255, 0, 128),
    "right_leg": (128, 0, 255),
    "neck": (255, 255, 255),
}

Point = np.ndarray


def _rotation(degrees: float) -> np.ndarray:
    angle = math.radians(degrees)
    return np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])


def _arm_direction(side: int, degrees: float) -> np.ndarray:
    angle = math.radians(degrees)
    return np.array([side * math.cos(angle), math.sin(angle)])


def check_pose(pose: PoseParams) -> None:
    problems = pose.violations()
    if problems:
        raise PoseDomainError(", ".join(problems))


def skeleton_joints(pose: PoseParams) -> dict[str, Point]:
    """Joint positions in unit image coordinates."""
    check_pose(pose)
    rotate = _rotation(pose.torso_angle)
    centre = np.array([0.5 + pose.offset_x, 0.5 + pose.offset_y])

    def body(x: float, y: float) -> Point:
        return centre + rotate @ np.array([x, y]) * pose.scale

    joints = {
        "neck": body(0.0, -TORSO_HALF_LENGTH),
        "pelvis": body(0.0, TORSO_HALF_LENGTH),
        "head": body(0.0, -TORSO_HALF_LENGTH - HEAD_LIFT),
    }
    for side, name in ((-1, "left"), (1, "right")):
        upper = getattr(pose, f"{name}_upper_arm")
        fore = getattr(pose, f"{name}_forearm")
        shoulder = body(side * SHOULDER_HALF_WIDTH, -TORSO_HALF_LENGTH)
        elbow = shoulder + rotate @ _arm_direction(side, upper) * UPPER_ARM_LENGTH * pose.scale
        wrist = elbow + rotate @ _arm_direction(side, upper + fore) * FOREARM_LENGTH * pose.scale
        hip = body(side * HIP_HALF_WIDTH, TORSO_HALF_LENGTH)
        joints[f"{name}_shoulder"] = shoulder
        joints[f"{name}_elbow"] = elbow
        joints[f"{name}_wrist"] = wrist
        joints[f"{name}_hip"] = hip
        joints[f"{name}_ankle"] = body(side * HIP_HALF_WIDTH, TORSO_HALF_LENGTH + LEG_LENGTH)
    return joints


def _bones(joints: dict[str, Point]) -> dict[str, tuple[Point, Point]]:
    return {
        "spine": (joints["neck"], joints["pelvis"]),
        "neck": (joints["neck"], joints["head"]),
        "left_shoulder": (joints["neck"], joints["left_shoulder"]),
        "right_shoulder": (joints["neck"], joints["right_shoulder"]),
        "left_upper_arm": (joints["left_shoulder"], joints["left_elbow"]),
        "left_forearm": (joints["left_elbow"], joints["left_wrist"]),
        "right_upper_arm": (joints["right_shoulder"], joints["right_elbow"]),
        "right_forearm": (joints["right_elbow"], joints["right_wrist"]),
        "left_hip": (joints["pelvis"], joints["left_hip"]),
        "right_hip": (joints["pelvis"], joints["right_hip"]),
        "left_leg": (joints["left_hip"], joints["left_ankle"]),
        "right_leg": (joints["right_hip"], joints["right_ankle"]),
    }


def _limb_quad(start: Point, end: Point, half_width: float) -> list[Point]:
    direction = end - start
    length = float(np.hypot(*direction))
    normal = np.array([-direction[1], direction[0]]) / max(length, 1e-12) * half_width
    return [start + normal, end + normal, end - normal, start - normal]


def _pixels(points: list[Point], size: int) -> list[tuple[float, float]]:
    return [(float(x) * size, float(y) * size) for x, y in points]


def _check_size(size: int) -> None:
    if size < MIN_IMAGE_SIZE:
        raise PoseDomainError(f"image size {size} is below {MIN_IMAGE_SIZE}")


def _fill_mask(polygons: list[list[Point]], size: int) -> Tensor:
    canvas = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(canvas)
    for polygon in polygons:
        draw.polygon(_pixels(polygon, size), fill=1)
    return np.asarray(canvas, dtype=TRAIN_DTYPE)


def _paint(mask: Tensor, color: RGB) -> Tensor:
    rgb = np.asarray(color, dtype=TRAIN_DTYPE)[:, np.newaxis, np.newaxis] / 255.0
    return (rgb * mask[np.newaxis]).astype(TRAIN_DTYPE)


def render_skeleton(pose: PoseParams, size: int) -> Tensor:
    """Render the colour-coded skeleton on a black 3 x size x size image.

    Raises:
        PoseDomainError: If ``pose`` is outside the documented bounds.
    """
    _check_size(size)
    joints = skeleton_joints(pose)
    big = size * SUPERSAMPLE
    canvas = Image.new("RGB", (big, big), (0, 0, 0))
    draw = ImageDraw.Draw(canvas)
    line_width = SUPERSAMPLE * max(1, size // 32)
    for name, (start, end) in _bones(joints).items():
        draw.line(_pixels([start, end], big), fill=BONE_COLORS[name], width=line_width)
    pixels = np.asarray(canvas, dtype=np.float64) / 255.0
    blocks = pixels.reshape(size, SUPERSAMPLE, size, SUPERSAMPLE, 3).mean(axis=(1, 3))
    return blocks.transpose(2, 0, 1).astype(TRAIN_DTYPE)


def _torso_polygon(pose: PoseParams, joints: dict[str, Point]) -> list[Point]:
    rotate = _rotation(pose.torso_angle)

    def across(anchor: Point, half_width: float, side: int) -> Point:
        return anchor + rotate @ np.array([side * half_width, 0.0]) * pose.scale

    return [
        across(joints["neck"], TORSO_TOP_HALF_WIDTH, -1),
        across(joints["neck"], TORSO_TOP_HALF_WIDTH, 1),
        across(joints["pelvis"], TORSO_BOTTOM_HALF_WIDTH, 1),
        across(joints["pelvis"], TORSO_BOTTOM_HALF_WIDTH, -1),
    ]


def torso_mask(pose: PoseParams, size: int) -> Tensor:
    _check_size(size)
    joints = skeleton_joints(pose)
    return _fill_mask([_torso_polygon(pose, joints)], size)


def garment_mask(pose: PoseParams, garment: GarmentParams, size: int) -> Tensor:
    """Binary garment silhouette: torso quad plus one sleeve quad per arm."""
    _check_size(size)
    joints = skeleton_joints(pose)
    polygons = [_torso_polygon(pose, joints)]
    for name in ("left", "right"):
        shoulder = joints[f"{name}_shoulder"]
        elbow = joints[f"{name}_elbow"]
        cuff = shoulder + (elbow - shoulder) * garment.sleeve_fraction
        polygons.append(_limb_quad(shoulder, cuff, SLEEVE_HALF_WIDTH * pose.scale))
    return _fill_mask(polygons, size)


def render_garment(pose: PoseParams, garment: GarmentParams, size: int) -> tuple[Tensor, Tensor]:
    """Return the textured garment image and its mask.

    Stripes run along image rows, so the texture does not move with the pose.
    """
    mask = garment_mask(pose, garment, size)
    image = _paint(mask, garment.color)
    if garment.texture == "stripes":
        period = garment.stripe_period * max(1, size // 32)
        rows = (np.arange(size) // period) % 2 == 1
        stripe = np.zeros_like(mask)
        stripe[rows] = mask[rows]
        image = image * (1.0 - stripe[np.newaxis]) + _paint(stripe, garment.stripe_color)
    return image.astype(TRAIN_DTYPE), mask


def render_body(pose: PoseParams, size: int) -> tuple[Tensor, Tensor]:
    """Return the headless body image and its silhouette."""
    _check_size(size)
    joints = skeleton_joints(pose)
    skin_polygons = [_torso_polygon(pose, joints)]
    for name in ("left", "right"):
        skin_polygons.append(
            _limb_quad(joints[f"{name}_shoulder"], joints[f"{name}_elbow"], ARM_HALF_WIDTH * pose.scale)
        )
        skin_polygons.append(
            _limb_quad(joints[f"{name}_elbow"], joints[f"{name}_wrist"], ARM_HALF_WIDTH * pose.scale)
        )
    leg_polygons = [
        _limb_quad(joints[f"{name}_hip"], joints[f"{name}_ankle"], LEG_HALF_WIDTH * pose.scale)
        for name in ("left", "right")
    ]
    skin = _fill_mask(skin_polygons, size)
    legs = _fill_mask(leg_polygons, size) * (1.0 - skin)
    image = _paint(skin, SKIN) + _paint(legs, TROUSERS)
    return image.astype(TRAIN_DTYPE), np.maximum(skin, legs)


def render_head(pose: PoseParams, size: int) -> tuple[Tensor, Tensor]:
    """Return the head image (skin disc with a hair cap) and its mask."""
    _check_size(size)
    joints = skeleton_joints(pose)
    centre = joints["head"] * size
    radius = HEAD_RADIUS * pose.scale * size
    canvas = Image.new("L", (size, size), 0)
    ImageDraw.Draw(canvas).ellipse(
        [centre[0] - radius, centre[1] - radius, centre[0] + radius, centre[1] + radius], fill=1
    )
    mask = np.asarray(canvas, dtype=TRAIN_DTYPE)
    hair = mask * (np.arange(size)[:, np.newaxis] + 0.5 < centre[1])
    image = _paint(mask - hair, SKIN) + _paint(hair, HAIR)
    return image.astype(TRAIN_DTYPE), mask


def random_pose(rng: RngState) -> PoseParams:
    return PoseParams(
        torso_angle=float(rng.uniform(-TORSO_ANGLE_LIMIT, TORSO_ANGLE_LIMIT)),
        left_upper_arm=float(rng.uniform(-ARM_ANGLE_LIMIT, ARM_ANGLE_LIMIT)),
        left_forearm=float(rng.uniform(-ARM_ANGLE_LIMIT, ARM_ANGLE_LIMIT)),
        right_upper_arm=float(rng.uniform(-ARM_ANGLE_LIMIT, ARM_ANGLE_LIMIT)),
        right_forearm=float(rng.uniform(-ARM_ANGLE_LIMIT, ARM_ANGLE_LIMIT)),
        scale=float(rng.uniform(*SCALE_RANGE)),
        offset_x=float(rng.uniform(-OFFSET_LIMIT, OFFSET_LIMIT)),
        offset_y=float(rng.uniform(-OFFSET_LIMIT, OFFSET_LIMIT)),
    )


def random_garment(rng: RngState) -> GarmentParams:
    color_index = int(rng.integers(0, len(GARMENT_PALETTE)))
    stripe_index = (color_index + int(rng.integers(1, len(GARMENT_PALETTE)))) % len(GARMENT_PALETTE)
    return GarmentParams(
        color=GARMENT_PALETTE[color_index],
        texture=rng.choice(("flat", "stripes")),
        stripe_color=GARMENT_PALETTE[stripe_index],
        stripe_period=rng.choice(STRIPE_PERIODS),
        sleeve_fraction=float(rng.uniform(0.3, 1.0)),
    )
