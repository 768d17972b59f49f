"""Spike preprocessing: binning event frames into SNN timesteps."""
import logging
from typing import Sequence

import numpy as np

from colibri_py.event_core import EventFrame
from colibri_py.snn_engine import SpikeTensor


logger = logging.getLogger(__name__)


def bin_frames(frames: Sequence[EventFrame], frames_per_step: int = 1) -> SpikeTensor:
    """
    Merge consecutive event frames into the timesteps of a spike tensor.

    Args:
        frames: the frames in sample order, all of one geometry
        frames_per_step: the frames merged into each timestep

    Returns:
        a (2, height, width) tensor, channel 0 ON and channel 1 OFF, where a
        pixel spikes in a timestep if any frame of its bin holds the polarity

    """
    if frames_per_step < 1:
        raise ValueError('frames_per_step must be at least 1, got {}.'.format(frames_per_step))
    if not frames:
        raise ValueError('cannot bin an empty frame sequence.')
    geometry = frames[0].geometry
    if any(frame.geometry != geometry for frame in frames):
        raise ValueError('frames of different geometries cannot be binned together.')
    steps = -(-len(frames) // frames_per_step)
    if len(frames) % frames_per_step:
        logger.warning('%d frames do not fill the last bin of %d', len(frames), frames_per_step)
    spikes = []
    for step in range(steps):
        window = frames[step * frames_per_step:(step + 1) * frames_per_step]
        planes = np.zeros((2,) + geometry.shape, dtype=bool)
        for frame in window:
            planes[0] |= frame.on_bits
            planes[1] |= frame.off_bits
        spikes.append(np.argwhere(planes))
    return SpikeTensor((2,) + geometry.shape, steps, tuple(spikes))


# explicitly define the outward facing API of this module
__all__ = [bin_frames.__name__]
