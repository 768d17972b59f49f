"""Rendering of event frames as images: ON events red, OFF events green, on white."""
import os
from typing import Tuple
from typing import Union

import numpy as np

from colibri_py.event_core import EventFrame


BACKGROUND: Tuple[int, int, int] = (255, 255, 255)
ON_COLOR: Tuple[int, int, int] = (255, 0, 0)
OFF_COLOR: Tuple[int, int, int] = (0, 255, 0)


def render_frame(frame: EventFrame) -> np.ndarray:
    """
    Render an event frame.

    Args:
        frame: the frame to render

    Returns:
        a uint8 array of shape (height, width, 3)

    """
    image = np.empty(frame.geometry.shape + (3,), dtype=np.uint8)
    image[...] = BACKGROUND
    image[frame.on_bits] = ON_COLOR
    image[frame.off_bits] = OFF_COLOR
    return image


def ppm_bytes(image: np.ndarray) -> bytes:
    """Return an RGB image encoded as a binary P6 pixmap."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError('image must have shape (height, width, 3), got {}.'.format(image.shape))
    height, width, _ = image.shape
    return b'P6\n%d %d\n255\n' % (width, height) + image.tobytes()


def write_ppm(path: Union[str, os.PathLike], image: np.ndarray) -> None:
    """Write an RGB image as a binary P6 pixmap."""
    with open(path, 'wb') as stream:
        stream.write(ppm_bytes(image))


# explicitly define the outward facing API of this module
__all__ = [render_frame.__name__, ppm_bytes.__name__, write_ppm.__name__]
