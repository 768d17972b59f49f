"""Rendering a stored frame of a run trace to a PPM image."""
import os
import logging
from typing import Optional

from colibri_py._trace import read_frames
from colibri_py._render import render_frame
from colibri_py._render import write_ppm


logger = logging.getLogger(__name__)


def render_trace(trace: str, index: int, out: Optional[str] = None) -> str:
    """
    Render frame index of a run trace.

    Args:
        trace: the run directory or its frames.bin.lz4
        index: the position of the frame in the run
        out: the image to write, by default frame_<index>.ppm next to the trace

    Returns:
        the path of the written image

    """
    frames = read_frames(trace)
    if not 0 <= index < len(frames):
        raise IndexError('frame index {} outside [0, {}).'.format(index, len(frames)))
    if out is None:
        directory = trace if os.path.isdir(trace) else os.path.dirname(trace)
        out = os.path.join(directory, 'frame_{}.ppm'.format(index))
    write_ppm(out, render_frame(frames[index]))
    logger.info('rendered frame %d to %s', index, out)
    return out


# explicitly define the outward facing API of this module
__all__ = [render_trace.__name__]
