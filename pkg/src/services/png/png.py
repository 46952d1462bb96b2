"""8-bit PNG codec over Pillow.

Arrays are C x H x W floats in [0, 1] with C in {1, 3, 4}. Encoder
settings are fixed and no metadata chunks are written, so equal arrays
always encode to equal bytes.
"""
import logging
import struct
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from autodiff.tensor import TRAIN_DTYPE, Tensor
from exceptions import StorageError
from services.png.exceptions import PngDecodeError, UnsupportedPngError

logger = logging.getLogger(__name__)

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
COMPRESS_LEVEL = 6

Mode = Literal["L", "RGB", "RGBA"]
_MODES_BY_CHANNELS: dict[int, Mode] = {1: "L", 3: "RGB", 4: "RGBA"}


def _bit_depth(path: Path) -> int:
    with open(path, "rb") as stream:
        header = stream.read(26)
    if len(header) < 26 or header[:8] != PNG_SIGNATURE or header[12:16] != b"IHDR":
        raise PngDecodeError(f"{path} is not a PNG file")
    return struct.unpack(">B", header[24:25])[0]


class PngService:
    def __init__(self, compress_level: int = COMPRESS_LEVEL):
        self._compress_level = compress_level

    def read(self, path: Path, mode: Optional[Mode] = None) -> Tensor:
        """Read a PNG into a C x H x W array.

        Args:
            path: PNG file.
            mode: Requested channel layout; ``None`` keeps the file's own.

        Returns:
            Tensor: Values in [0, 1].

        Raises:
            PngDecodeError: If the file is missing or malformed.
            UnsupportedPngError: If the file is not 8 bits per channel.
        """
        path = Path(path)
        try:
            depth = _bit_depth(path)
        except OSError as error:
            raise PngDecodeError(f"cannot open {path}: {error}") from error
        if depth != 8:
            raise UnsupportedPngError(f"{path} has {depth}-bit samples, only 8-bit is read")

        try:
            with Image.open(path) as image:
                image.load()
                if image.mode in ("P", "LA"):
                    image = image.convert("RGBA" if "transparency" in image.info or image.mode == "LA" else "RGB")
                if image.mode not in ("L", "RGB", "RGBA"):
                    raise UnsupportedPngError(f"{path} has unsupported mode {image.mode}")
                if mode is not None and mode != image.mode:
                    if image.mode == "RGBA" and mode != "RGBA":
                        logger.warning(f"Dropping the alpha channel of {path}")
                    image = image.convert(mode)
                pixels = np.asarray(image, dtype=TRAIN_DTYPE) / 255.0
        except (UnidentifiedImageError, SyntaxError, ValueError) as error:
            raise PngDecodeError(f"{path}: {error}") from error
        except OSError as error:
            raise PngDecodeError(f"{path}: {error}") from error

        if pixels.ndim == 2:
            return pixels[np.newaxis].astype(TRAIN_DTYPE)
        return pixels.transpose(2, 0, 1).astype(TRAIN_DTYPE)

    def write(self, path: Path, tensor: Tensor) -> Path:
        """Quantise ``tensor`` to 8 bits and write it as PNG.

        Args:
            path: Destination file; parent directories are created.
            tensor: C x H x W (or H x W) values, clipped to [0, 1].

        Returns:
            Path: ``path``.

        Raises:
            UnsupportedPngError: If the channel count is not 1, 3 or 4.
            StorageError: If the file cannot be written.
        """
        path = Path(path)
        array = np.asarray(tensor)
        if array.ndim == 2:
            array = array[np.newaxis]
        if array.ndim != 3 or array.shape[0] not in _MODES_BY_CHANNELS:
            raise UnsupportedPngError(f"cannot encode an array of shape {list(array.shape)}")
        pixels = np.round(np.clip(array, 0.0, 1.0) * 255.0).astype(np.uint8)
        if pixels.shape[0] == 1:
            image = Image.fromarray(pixels[0])
        else:
            image = Image.fromarray(np.ascontiguousarray(pixels.transpose(1, 2, 0)))
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            image.save(path, format="PNG", optimize=False, compress_level=self._compress_level)
        except OSError as error:
            raise StorageError(f"cannot write {path}: {error}") from error
        return path


png_service = PngService()


def png_read(path: Path, mode: Optional[Mode] = None) -> Tensor:
    return png_service.read(path, mode)


def png_write(path: Path, tensor: Tensor) -> Path:
    return png_service.write(path, tensor)
