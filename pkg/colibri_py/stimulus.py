"""Brightness stimuli for the sensor: synthetic generators and PGM sequences."""
import os
import logging
from typing import Optional
from dataclasses import dataclass

import numpy as np

from colibri_py._pgm import PGM
from colibri_py.event_core import DVS132S
from colibri_py.event_core import SensorGeometry


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BrightnessField:
    """A sample-indexed sequence of non-negative luminance arrays."""

    frames: np.ndarray
    geometry: SensorGeometry = DVS132S

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64, copy=True)
        if frames.ndim != 3 or frames.shape[1:] != self.geometry.shape:
            msg = 'brightness field has shape {}, expected (n, {}, {}).'
            raise ValueError(msg.format(frames.shape, *self.geometry.shape))
        if np.any(frames < 0) or not np.all(np.isfinite(frames)):
            raise ValueError('brightness values must be finite and non-negative.')
        frames.flags.writeable = False
        object.__setattr__(self, 'frames', frames)

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __getitem__(self, index: int) -> np.ndarray:
        return self.frames[index]

    def scaled(self, factor: float) -> 'BrightnessField':
        """Return the field with every luminance multiplied by factor."""
        if not factor > 0:
            raise ValueError('scale factor must be positive, got {}.'.format(factor))
        return BrightnessField(self.frames * factor, self.geometry)


def _coverage(lo: np.ndarray, hi: np.ndarray, start: float, stop: float) -> np.ndarray:
    """Return the overlap of pixel spans [lo, hi) with [start, stop)."""
    return np.clip(np.minimum(hi, stop) - np.maximum(lo, start), 0.0, 1.0)


def _jitter(frames: np.ndarray, jitter_log: float, seed: Optional[int]) -> np.ndarray:
    """Apply seeded per-pixel multiplicative log-brightness noise."""
    if jitter_log <= 0:
        return frames
    rng = np.random.default_rng(seed)
    return frames * np.exp(rng.normal(0.0, jitter_log, size=frames.shape))


def moving_bar(
    samples: int,
    velocity_px_per_sample: float = 1.0,
    contrast: float = 0.5,
    background: float = 0.5,
    bar_width_px: float = 8.0,
    jitter_log: float = 0.0,
    seed: Optional[int] = None,
    geometry: SensorGeometry = DVS132S,
) -> BrightnessField:
    """
    Return a vertical bar sweeping horizontally across the array.

    Args:
        samples: the number of sample instants
        velocity_px_per_sample: the horizontal speed, negative moves left
        contrast: the bar luminance is background * (1 + contrast)
        background: the luminance around the bar
        bar_width_px: the width of the bar
        jitter_log: the standard deviation of the per-pixel log noise
        seed: the seed of the noise generator
        geometry: the pixel array

    Returns:
        the brightness field, edges anti-aliased by pixel coverage

    """
    if samples <= 0:
        raise ValueError('samples must be positive, got {}.'.format(samples))
    if contrast < -1:
        raise ValueError('contrast must be at least -1, got {}.'.format(contrast))
    if background < 0:
        raise ValueError('background must be non-negative, got {}.'.format(background))
    columns = np.arange(geometry.width, dtype=np.float64)
    # start just outside the array on the side the bar enters from
    start = -bar_width_px if velocity_px_per_sample >= 0 else float(geometry.width)
    frames = np.empty((samples,) + geometry.shape)
    for index in range(samples):
        left = start + velocity_px_per_sample * index
        cover = _coverage(columns, columns + 1, left, left + bar_width_px)
        frames[index] = background * (1 + contrast * cover)[np.newaxis, :]
    logger.info('moving bar: %d samples at %.3f px/sample', samples, velocity_px_per_sample)
    return BrightnessField(_jitter(frames, jitter_log, seed), geometry)


def moving_disk(
    samples: int,
    velocity_px_per_sample: float = 1.0,
    contrast: float = 0.5,
    background: float = 0.5,
    radius_px: float = 10.0,
    jitter_log: float = 0.0,
    seed: Optional[int] = None,
    geometry: SensorGeometry = DVS132S,
) -> BrightnessField:
    """Return a disk moving horizontally through the center row of the array."""
    if samples <= 0:
        raise ValueError('samples must be positive, got {}.'.format(samples))
    if contrast < -1:
        raise ValueError('contrast must be at least -1, got {}.'.format(contrast))
    if radius_px <= 0:
        raise ValueError('radius_px must be positive, got {}.'.format(radius_px))
    ys, xs = np.mgrid[0:geometry.height, 0:geometry.width].astype(np.float64) + 0.5
    cy = geometry.height / 2
    start = -radius_px if velocity_px_per_sample >= 0 else geometry.width + radius_px
    frames = np.empty((samples,) + geometry.shape)
    for index in range(samples):
        cx = start + velocity_px_per_sample * index
        distance = np.hypot(xs - cx, ys - cy)
        cover = np.clip(radius_px + 0.5 - distance, 0.0, 1.0)
        frames[index] = background * (1 + contrast * cover)
    logger.info('moving disk: %d samples at %.3f px/sample', samples, velocity_px_per_sample)
    return BrightnessField(_jitter(frames, jitter_log, seed), geometry)


def from_pgm_dir(path: str, geometry: SensorGeometry = DVS132S) -> BrightnessField:
    """
    Load every .pgm image of a directory, in lexicographic order, as one sample each.

    Args:
        path: the directory holding P5 images of the array's size
        geometry: the pixel array

    Returns:
        the brightness field with luminance normalized to [0, 1]

    """
    if not os.path.isdir(path):
        raise ValueError('stimulus path points to non-existent directory: {}.'.format(path))
    names = sorted(name for name in os.listdir(path) if name.lower().endswith('.pgm'))
    if not names:
        raise ValueError('stimulus directory holds no .pgm images: {}.'.format(path))
    frames = []
    for name in names:
        image = PGM.from_path(os.path.join(path, name))
        if (image.height, image.width) != geometry.shape:
            msg = '{} is {}x{}, expected {}x{}.'
            raise ValueError(msg.format(name, image.width, image.height, geometry.width, geometry.height))
        frames.append(image.luminance)
    logger.info('loaded %d images from %s', len(frames), path)
    return BrightnessField(np.stack(frames), geometry)


# explicitly define the outward facing API of this module
__all__ = [
    BrightnessField.__name__,
    moving_bar.__name__,
    moving_disk.__name__,
    from_pgm_dir.__name__,
]
