import logging
from pathlib import Path
from typing import List, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from exceptions import ArtifactIOError, DimensionError, UnsupportedFormatError
from models.schemas import ImagePlane

logger = logging.getLogger(__name__)

SUPPORTED_SUFFIXES = {".png", ".ppm", ".pgm", ".pnm"}
SUPPORTED_FORMATS = {"PNG", "PPM"}  # Pillow reports PGM/PNM files as PPM


def _check_suffix(path: Path) -> None:
    if path.suffix.lower() not in SUPPORTED_SUFFIXES:
        raise UnsupportedFormatError(path)


def load_image(path: Union[str, Path]) -> List[ImagePlane]:
    """Read an 8- or 16-bit image into per-channel planes with intensities in [0, 1].

    Gray images give a single ``gray`` plane, everything else is converted to
    RGB and split. Alpha channels are dropped.
    """
    path = Path(path)
    _check_suffix(path)
    try:
        with Image.open(path) as image:
            if image.format not in SUPPORTED_FORMATS:
                raise UnsupportedFormatError(path)
            image.load()
            if image.mode in ("I;16", "I;16B", "I"):
                data = np.asarray(image, dtype=float) / 65535.0
                names = ["gray"]
            elif image.mode in ("L", "1"):
                data = np.asarray(image.convert("L"), dtype=float) / 255.0
                names = ["gray"]
            else:
                data = np.asarray(image.convert("RGB"), dtype=float) / 255.0
                names = ["R", "G", "B"]
    except UnidentifiedImageError as e:
        raise UnsupportedFormatError(path) from e
    except OSError as e:
        raise ArtifactIOError(path, f"cannot read image: {e}") from e

    height, width = data.shape[:2]
    if data.ndim == 2:
        data = data[:, :, np.newaxis]
    planes = [
        ImagePlane(width=width, height=height, channel=name, pixels=np.clip(data[:, :, c], 0.0, 1.0))
        for c, name in enumerate(names)
    ]
    logger.info(f"Loaded {path} ({width}x{height}, channels={names})")
    return planes


def save_image(planes: List[ImagePlane], path: Union[str, Path]) -> Path:
    """Write planes back as 8-bit gray or RGB, quantizing [0, 1] intensities."""
    path = Path(path)
    _check_suffix(path)
    if not planes:
        raise DimensionError("no planes to save")

    stacked = np.stack([np.clip(plane.pixels, 0.0, 1.0) for plane in planes], axis=-1)
    data = np.rint(stacked * 255.0).astype(np.uint8)
    if len(planes) == 1:
        image = Image.fromarray(data[:, :, 0], mode="L")
    elif len(planes) == 3:
        image = Image.fromarray(data, mode="RGB")
    else:
        raise DimensionError(f"cannot save {len(planes)} channels, expected 1 or 3")

    try:
        image.save(path)
    except OSError as e:
        raise ArtifactIOError(path, f"cannot write image: {e}") from e
    logger.info(f"Saved image to {path}")
    return path
