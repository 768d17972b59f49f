"""Events, event frames, and the geometry of the DVS132S pixel array.

Notes:
    - a frame holds one ON bitmap and one OFF bitmap indexed [y, x]
    - a quad is the 2x2 pixel block read out by one SAER word
    - quad byte layout: 4 x [ON, OFF] pairs, row-major in the quad, MSB first
"""
import os
import io
import enum
from typing import List
from typing import Tuple
from typing import Union
from typing import Iterable
from typing import Iterator
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SensorGeometry:
    """The pixel and quad dimensions of an event sensor."""

    width: int = 132
    height: int = 104
    quad_cols: int = 66
    quad_rows: int = 52

    def __post_init__(self):
        if self.width != 2 * self.quad_cols:
            raise ValueError('width must be twice quad_cols.')
        if self.height != 2 * self.quad_rows:
            raise ValueError('height must be twice quad_rows.')
        if self.quad_cols <= 0 or self.quad_rows <= 0:
            raise ValueError('quad dimensions must be positive.')

    @property
    def pixels(self) -> int:
        """Return the number of pixels (the most events a frame can hold)."""
        return self.width * self.height

    @property
    def quads(self) -> int:
        """Return the number of quads (the SAER words in one frame)."""
        return self.quad_cols * self.quad_rows

    @property
    def shape(self) -> Tuple[int, int]:
        """Return the (height, width) shape of a bitmap."""
        return self.height, self.width


# the 132x104 array of the DVS132S
DVS132S = SensorGeometry()


class Polarity(enum.IntEnum):
    """The direction of a brightness change."""

    OFF = 0
    ON = 1


@dataclass(frozen=True)
class Event:
    """A single polarity change at one pixel."""

    t_us: int
    x: int
    y: int
    polarity: Polarity

    def __post_init__(self):
        if self.t_us < 0:
            raise ValueError('event timestamp must be non-negative, got {}.'.format(self.t_us))
        if self.x < 0 or self.y < 0:
            raise ValueError('event address must be non-negative, got ({}, {}).'.format(self.x, self.y))
        object.__setattr__(self, 'polarity', Polarity(self.polarity))

    def check_geometry(self, geometry: SensorGeometry = DVS132S) -> None:
        """Raise a ValueError if the event lies outside the given array."""
        if self.x >= geometry.width or self.y >= geometry.height:
            msg = 'event ({}, {}) outside {}x{} array.'
            raise ValueError(msg.format(self.x, self.y, geometry.width, geometry.height))


def _frozen_bitmap(bits: np.ndarray, shape: Tuple[int, int], name: str) -> np.ndarray:
    """Return a read-only boolean copy of a bitmap after checking its shape."""
    bits = np.array(bits, dtype=bool, copy=True)
    if bits.shape != shape:
        raise ValueError('{} has shape {}, expected {}.'.format(name, bits.shape, shape))
    bits.flags.writeable = False
    return bits


@dataclass(frozen=True, eq=False)
class EventFrame:
    """A snapshot of the pending ON/OFF bits of every pixel at one sample."""

    sample_index: int
    on_bits: np.ndarray
    off_bits: np.ndarray
    geometry: SensorGeometry = DVS132S

    def __post_init__(self):
        if self.sample_index < 0:
            raise ValueError('sample_index must be non-negative.')
        on_bits = _frozen_bitmap(self.on_bits, self.geometry.shape, 'on_bits')
        off_bits = _frozen_bitmap(self.off_bits, self.geometry.shape, 'off_bits')
        if np.any(on_bits & off_bits):
            raise ValueError('a pixel cannot hold both ON and OFF in one frame.')
        object.__setattr__(self, 'on_bits', on_bits)
        object.__setattr__(self, 'off_bits', off_bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventFrame):
            return NotImplemented
        return (
            self.sample_index == other.sample_index and
            self.geometry == other.geometry and
            np.array_equal(self.on_bits, other.on_bits) and
            np.array_equal(self.off_bits, other.off_bits)
        )

    __hash__ = None

    @classmethod
    def empty(cls, sample_index: int = 0, geometry: SensorGeometry = DVS132S) -> 'EventFrame':
        """Return a frame without any events."""
        bits = np.zeros(geometry.shape, dtype=bool)
        return cls(sample_index, bits, bits, geometry)

    @classmethod
    def from_events(cls,
        events: Iterable[Event],
        sample_index: int = 0,
        geometry: SensorGeometry = DVS132S,
    ) -> 'EventFrame':
        """
        Build a frame from a collection of events.

        Args:
            events: the events to set, timestamps are ignored
            sample_index: the sample instant of the frame
            geometry: the pixel array the events belong to

        Returns:
            a new frame with one bit set per event

        """
        on_bits = np.zeros(geometry.shape, dtype=bool)
        off_bits = np.zeros(geometry.shape, dtype=bool)
        for event in events:
            event.check_geometry(geometry)
            if event.polarity == Polarity.ON:
                on_bits[event.y, event.x] = True
            else:
                off_bits[event.y, event.x] = True
        return cls(sample_index, on_bits, off_bits, geometry)

    def to_events(self, t_us: int) -> List[Event]:
        """Return the events of the frame stamped with t_us, ON before OFF, row-major."""
        events = []
        for polarity, bits in ((Polarity.ON, self.on_bits), (Polarity.OFF, self.off_bits)):
            ys, xs = np.nonzero(bits)
            events.extend(Event(t_us, int(x), int(y), polarity) for y, x in zip(ys, xs))
        return events

    @property
    def polarity_planes(self) -> np.ndarray:
        """Return the frame as a uint8 array of shape (2, height, width), ON first."""
        return np.stack([self.on_bits, self.off_bits]).astype(np.uint8)


def event_count(frame: EventFrame) -> int:
    """Return the number of set ON and OFF bits in a frame."""
    return int(np.count_nonzero(frame.on_bits)) + int(np.count_nonzero(frame.off_bits))


def _quad_view(bits: np.ndarray, geometry: SensorGeometry) -> np.ndarray:
    """Return bits reshaped to [quad_row, dy, quad_col, dx]."""
    return bits.reshape(geometry.quad_rows, 2, geometry.quad_cols, 2).astype(np.uint8)


def quad_bytes(frame: EventFrame) -> np.ndarray:
    """
    Pack every quad of a frame into its event byte.

    Args:
        frame: the frame to pack

    Returns:
        a uint8 array of shape (quad_rows, quad_cols)

    """
    on = _quad_view(frame.on_bits, frame.geometry)
    off = _quad_view(frame.off_bits, frame.geometry)
    packed = np.zeros((frame.geometry.quad_rows, frame.geometry.quad_cols), dtype=np.uint8)
    for dy in range(2):
        for dx in range(2):
            pixel = 2 * dy + dx
            packed |= on[:, dy, :, dx] << (7 - 2 * pixel)
            packed |= off[:, dy, :, dx] << (6 - 2 * pixel)
    return packed


def frame_from_quad_bytes(
    packed: np.ndarray,
    sample_index: int = 0,
    geometry: SensorGeometry = DVS132S,
) -> EventFrame:
    """
    Unpack an array of quad event bytes into a frame.

    Args:
        packed: uint8 array of shape (quad_rows, quad_cols)
        sample_index: the sample instant of the frame
        geometry: the pixel array the bytes describe

    Returns:
        the frame whose quad_bytes equal packed

    """
    packed = np.asarray(packed, dtype=np.uint8)
    if packed.shape != (geometry.quad_rows, geometry.quad_cols):
        raise ValueError('quad byte array has shape {}.'.format(packed.shape))
    on = np.zeros((geometry.quad_rows, 2, geometry.quad_cols, 2), dtype=bool)
    off = np.zeros_like(on)
    for dy in range(2):
        for dx in range(2):
            pixel = 2 * dy + dx
            on[:, dy, :, dx] = (packed >> (7 - 2 * pixel)) & 1
            off[:, dy, :, dx] = (packed >> (6 - 2 * pixel)) & 1
    return EventFrame(sample_index, on.reshape(geometry.shape), off.reshape(geometry.shape), geometry)


def quad_events(frame: EventFrame, qx: int, qy: int) -> int:
    """
    Return the event byte of the quad at quad column qx and quad row qy.

    Args:
        frame: the frame to read
        qx: the quad column, covering pixel columns 2qx and 2qx+1
        qy: the quad row, covering pixel rows 2qy and 2qy+1

    Returns:
        the 8-bit packing of the block, pixel (2qx, 2qy) in the top two bits

    """
    geometry = frame.geometry
    if not 0 <= qx < geometry.quad_cols or not 0 <= qy < geometry.quad_rows:
        msg = 'quad ({}, {}) outside {}x{} quad grid.'
        raise ValueError(msg.format(qx, qy, geometry.quad_cols, geometry.quad_rows))
    byte = 0
    for pixel, (dy, dx) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        y, x = 2 * qy + dy, 2 * qx + dx
        byte |= int(frame.on_bits[y, x]) << (7 - 2 * pixel)
        byte |= int(frame.off_bits[y, x]) << (6 - 2 * pixel)
    return byte


#
# MARK: Text fixtures
#


def write_events(target: Union[str, os.PathLike, io.TextIOBase], events: Iterable[Event]) -> None:
    """
    Write events one per line as `t_us,x,y,p` with p = 1 for ON, 0 for OFF.

    Args:
        target: a path or an open text stream
        events: the events to write

    Returns:
        None

    """
    lines = ''.join('{},{},{},{}\n'.format(e.t_us, e.x, e.y, int(e.polarity)) for e in events)
    if isinstance(target, io.TextIOBase):
        target.write(lines)
        return
    with open(target, 'w', newline='\n') as stream:
        stream.write(lines)


def _parse_events(lines: Iterable[str], source: str) -> Iterator[Event]:
    """Parse `t_us,x,y,p` lines, skipping blanks and `#` comments."""
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        fields = line.split(',')
        if len(fields) != 4:
            raise ValueError('{}:{}: expected 4 fields, got {}.'.format(source, number, len(fields)))
        try:
            t_us, x, y, p = (int(field) for field in fields)
        except ValueError:
            raise ValueError('{}:{}: non-integer field in {!r}.'.format(source, number, line))
        if p not in (0, 1):
            raise ValueError('{}:{}: polarity must be 0 or 1, got {}.'.format(source, number, p))
        yield Event(t_us, x, y, Polarity(p))


def read_events(source: Union[str, os.PathLike, io.TextIOBase]) -> List[Event]:
    """
    Read events written by write_events.

    Args:
        source: a path or an open text stream

    Returns:
        the events in file order

    """
    if isinstance(source, io.TextIOBase):
        return list(_parse_events(source, '<stream>'))
    if not os.path.exists(source):
        raise ValueError('event file points to non-existent file: {}.'.format(source))
    with open(source) as stream:
        return list(_parse_events(stream, str(source)))


# explicitly define the outward facing API of this module
__all__ = [
    SensorGeometry.__name__,
    'DVS132S',
    Polarity.__name__,
    Event.__name__,
    EventFrame.__name__,
    event_count.__name__,
    quad_bytes.__name__,
    frame_from_quad_bytes.__name__,
    quad_events.__name__,
    write_events.__name__,
    read_events.__name__,
]
