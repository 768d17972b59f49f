"""The synchronous AER readout of event frames and the interfaces it competes with.

Notes:
    - one word per quad, scanned row-major: word k covers quad (k % 66, k // 66)
    - the address byte carries the quad column only; the row is implied by
      the position of the word in the scan
"""
import enum
from typing import Union
from typing import Iterable
from typing import Optional
from dataclasses import dataclass

import numpy as np

from colibri_py.event_core import DVS132S
from colibri_py.event_core import EventFrame
from colibri_py.event_core import SensorGeometry
from colibri_py.event_core import quad_bytes
from colibri_py.event_core import frame_from_quad_bytes


class MalformedStreamError(ValueError):
    """A SAER stream with the wrong length or an out-of-sequence address."""

    def __init__(self, index: int, reason: str):
        super().__init__('malformed SAER stream at word {}: {}'.format(index, reason))
        self.index = index


@dataclass(frozen=True)
class SaerWord:
    """One clock of the readout: a quad column address and the quad's event byte."""

    addr_byte: int
    event_byte: int

    def __post_init__(self):
        if not 0 <= self.addr_byte < 256 or not 0 <= self.event_byte < 256:
            raise ValueError('SAER word fields must be bytes, got ({}, {}).'.format(self.addr_byte, self.event_byte))


@dataclass(frozen=True, eq=False)
class SaerStream:
    """The sequence of words read out for one frame, as a (n, 2) uint8 array."""

    words: np.ndarray

    def __post_init__(self):
        words = np.array(self.words, dtype=np.uint8, copy=True).reshape(-1, 2)
        words.flags.writeable = False
        object.__setattr__(self, 'words', words)

    def __len__(self) -> int:
        return self.words.shape[0]

    def __getitem__(self, index: int) -> SaerWord:
        addr_byte, event_byte = self.words[index]
        return SaerWord(int(addr_byte), int(event_byte))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SaerStream):
            return NotImplemented
        return np.array_equal(self.words, other.words)

    __hash__ = None

    @classmethod
    def from_words(cls, words: Iterable[SaerWord]) -> 'SaerStream':
        """Build a stream from individual words."""
        pairs = [(word.addr_byte, word.event_byte) for word in words]
        return cls(np.array(pairs, dtype=np.uint8).reshape(-1, 2))

    @property
    def addr_bytes(self) -> np.ndarray:
        return self.words[:, 0]

    @property
    def event_bytes(self) -> np.ndarray:
        return self.words[:, 1]

    def check(self, geometry: SensorGeometry = DVS132S) -> None:
        """Raise a MalformedStreamError unless the stream is one complete scan."""
        expected = np.arange(len(self)) % geometry.quad_cols
        mismatch = np.flatnonzero(self.addr_bytes != expected)
        if mismatch.size:
            index = int(mismatch[0])
            msg = 'address {} where {} expected'.format(int(self.addr_bytes[index]), int(expected[index]))
            raise MalformedStreamError(index, msg)
        if len(self) != geometry.quads:
            msg = 'stream holds {} words, a frame needs {}'.format(len(self), geometry.quads)
            raise MalformedStreamError(min(len(self), geometry.quads), msg)


def encode(frame: EventFrame) -> SaerStream:
    """
    Read out a frame as a full SAER scan.

    Args:
        frame: the frame to read out

    Returns:
        one word per quad regardless of how many events the frame holds

    """
    geometry = frame.geometry
    addr = np.tile(np.arange(geometry.quad_cols, dtype=np.uint8), geometry.quad_rows)
    return SaerStream(np.column_stack([addr, quad_bytes(frame).ravel()]))


def decode(stream: SaerStream, sample_index: int, geometry: SensorGeometry = DVS132S) -> EventFrame:
    """
    Rebuild the frame carried by a SAER scan.

    Args:
        stream: a complete scan
        sample_index: the sample instant to stamp on the frame, which the scan does not carry
        geometry: the pixel array that produced the scan

    Returns:
        the frame such that encode(frame) == stream

    """
    stream.check(geometry)
    packed = stream.event_bytes.reshape(geometry.quad_rows, geometry.quad_cols)
    return frame_from_quad_bytes(packed, sample_index, geometry)


def stream_to_bytes(stream: SaerStream) -> bytes:
    """Return the stream as addr_byte, event_byte pairs without any header."""
    return stream.words.tobytes()


def stream_from_bytes(raw: bytes) -> SaerStream:
    """Parse the byte format written by stream_to_bytes."""
    if len(raw) % 2:
        raise MalformedStreamError(len(raw) // 2, 'odd byte count {}'.format(len(raw)))
    return SaerStream(np.frombuffer(raw, dtype=np.uint8).reshape(-1, 2))


#
# MARK: Timing
#


@dataclass(frozen=True)
class ClockConfig:
    """The clock driving the readout scan."""

    system_clock_hz: float = 50e6
    cycles_per_word: int = 1

    def __post_init__(self):
        if not self.system_clock_hz > 0:
            raise ValueError('system_clock_hz must be positive, got {}.'.format(self.system_clock_hz))
        if self.cycles_per_word <= 0:
            raise ValueError('cycles_per_word must be positive, got {}.'.format(self.cycles_per_word))


def saer_frame_time_us(clk: ClockConfig, geometry: SensorGeometry = DVS132S) -> float:
    """Return the time to scan one frame, auxiliary clocks excluded."""
    return geometry.quads * clk.cycles_per_word * 1e6 / clk.system_clock_hz


def readout_bound_efps(clk: ClockConfig, geometry: SensorGeometry = DVS132S) -> float:
    """Return the highest frame rate the scan can sustain back to back."""
    return 1e6 / saer_frame_time_us(clk, geometry)


# USB 2.0 at 480 Mbit/s with one 32-bit word per event
USB_EVENT_TIME_US = 0.067


def usb_frame_time_us(n_events: int, geometry: SensorGeometry = DVS132S) -> float:
    """Return the time to move a frame of n_events events over USB."""
    if not 0 <= n_events <= geometry.pixels:
        raise ValueError('n_events must lie in [0, {}], got {}.'.format(geometry.pixels, n_events))
    return n_events * USB_EVENT_TIME_US


#
# MARK: Interfaces
#


class Interface(enum.Enum):
    """The ways a host can fetch event frames from the camera."""

    SAER_COLIBRI = 'saer_colibri'
    SAER_FPGA = 'saer_fpga'
    USB = 'usb'


@dataclass(frozen=True)
class InterfaceParams:
    """Parameters of the interface comparison; fully populated frames are assumed."""

    sample_rate_hz: float = 7200.0
    clock: ClockConfig = ClockConfig()
    # host-side fetch power, camera excluded
    saer_power_mw: float = 10.656
    fpga_efps: int = 874
    fpga_power_mw: float = 17.6


def _interface(interface: Union[Interface, str]) -> Interface:
    """Return the interface named by a tag."""
    try:
        return Interface(interface)
    except ValueError:
        tags = ', '.join(repr(tag.value) for tag in Interface)
        raise ValueError('unknown interface {!r}, valid interfaces are: {}.'.format(interface, tags))


def interface_throughput_efps(
    interface: Union[Interface, str],
    params: InterfaceParams = InterfaceParams(),
    geometry: SensorGeometry = DVS132S,
) -> int:
    """
    Return the event-frames per second an interface delivers with full frames.

    Args:
        interface: the interface or its tag
        params: the interface parameters
        geometry: the pixel array

    Returns:
        whole event-frames per second

    """
    interface = _interface(interface)
    if interface == Interface.SAER_COLIBRI:
        return int(min(params.sample_rate_hz, readout_bound_efps(params.clock, geometry)))
    if interface == Interface.USB:
        return int(1e6 / usb_frame_time_us(geometry.pixels, geometry))
    return params.fpga_efps


def interface_power_mw(
    interface: Union[Interface, str],
    params: InterfaceParams = InterfaceParams(),
) -> Optional[float]:
    """Return the host power while fetching, None for the watt-class USB hosts."""
    interface = _interface(interface)
    if interface == Interface.SAER_COLIBRI:
        return params.saer_power_mw
    if interface == Interface.SAER_FPGA:
        return params.fpga_power_mw
    return None


def fetch_time_s(
    interface: Union[Interface, str],
    n_frames: int,
    params: InterfaceParams = InterfaceParams(),
    geometry: SensorGeometry = DVS132S,
) -> float:
    """Return the time an interface needs to fetch n_frames full frames."""
    if n_frames < 0:
        raise ValueError('n_frames must be non-negative, got {}.'.format(n_frames))
    return n_frames / interface_throughput_efps(interface, params, geometry)


# explicitly define the outward facing API of this module
__all__ = [
    MalformedStreamError.__name__,
    SaerWord.__name__,
    SaerStream.__name__,
    ClockConfig.__name__,
    Interface.__name__,
    InterfaceParams.__name__,
    encode.__name__,
    decode.__name__,
    stream_to_bytes.__name__,
    stream_from_bytes.__name__,
    saer_frame_time_us.__name__,
    readout_bound_efps.__name__,
    usb_frame_time_us.__name__,
    interface_throughput_efps.__name__,
    interface_power_mw.__name__,
    fetch_time_s.__name__,
]
