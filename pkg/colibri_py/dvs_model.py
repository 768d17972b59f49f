"""A model of the DVS132S pixel array, its readout filters, and its power."""
import logging
from typing import Deque
from typing import Sequence
from typing import Optional
from collections import deque
from dataclasses import dataclass

import numpy as np

from colibri_py.event_core import DVS132S
from colibri_py.event_core import EventFrame
from colibri_py.event_core import SensorGeometry
from colibri_py.event_core import event_count


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DvsConfig:
    """The bias and readout configuration of the sensor."""

    # log-brightness thresholds in natural-log units
    theta_on: float = 0.2
    theta_off: float = 0.2
    # event-frame sample rate requested by the host
    sample_rate_hz: float = 7200.0
    # pre-readout noise and flicker suppression
    suppression_enabled: bool = False
    flicker_window: int = 4
    # luminance floor guarding log(0)
    epsilon_lum: float = 1e-3

    def __post_init__(self):
        if not self.theta_on > 0:
            raise ValueError('theta_on must be positive, got {}.'.format(self.theta_on))
        if not self.theta_off > 0:
            raise ValueError('theta_off must be positive, got {}.'.format(self.theta_off))
        if not self.sample_rate_hz > 0:
            raise ValueError('sample_rate_hz must be positive, got {}.'.format(self.sample_rate_hz))
        if self.flicker_window < 2:
            raise ValueError('flicker_window must span at least 2 frames, got {}.'.format(self.flicker_window))
        if not self.epsilon_lum > 0:
            raise ValueError('epsilon_lum must be positive, got {}.'.format(self.epsilon_lum))


def log_brightness(brightness: np.ndarray, cfg: DvsConfig) -> np.ndarray:
    """Return the natural log of the brightness clamped to epsilon_lum."""
    brightness = np.asarray(brightness, dtype=np.float64)
    if np.any(brightness < 0):
        raise ValueError('brightness values must be non-negative.')
    return np.log(np.maximum(brightness, cfg.epsilon_lum))


def initial_state(brightness: np.ndarray, cfg: DvsConfig) -> np.ndarray:
    """Return a pixel memory array that has memorized the given brightness."""
    return log_brightness(brightness, cfg)


def pending_event_crossings(old_log: float, new_log: float, theta_on: float, theta_off: float) -> int:
    """
    Return the signed number of threshold crossings between two log-brightnesses.

    Args:
        old_log: the memorized log-brightness
        new_log: the current log-brightness
        theta_on: the ON threshold
        theta_off: the OFF threshold

    Returns:
        a positive count of ON crossings or a negative count of OFF crossings

    """
    if not theta_on > 0 or not theta_off > 0:
        raise ValueError('thresholds must be positive.')
    if new_log >= old_log:
        return int(np.floor((new_log - old_log) / theta_on))
    return -int(np.floor((old_log - new_log) / theta_off))


def sample(
    state: np.ndarray,
    cfg: DvsConfig,
    brightness: np.ndarray,
    sample_index: int,
    geometry: SensorGeometry = DVS132S,
) -> EventFrame:
    """
    Capture one event frame and update the pixel memory in place.

    Args:
        state: float array (height, width) of memorized log-brightness
        cfg: the sensor configuration
        brightness: array (height, width) of luminance at this instant
        sample_index: the index of this sample instant
        geometry: the pixel array

    Returns:
        the frame with at most one polarity bit per pixel

    """
    if state.shape != geometry.shape:
        raise ValueError('pixel state has shape {}, expected {}.'.format(state.shape, geometry.shape))
    if np.shape(brightness) != geometry.shape:
        msg = 'brightness has shape {}, expected {}.'
        raise ValueError(msg.format(np.shape(brightness), geometry.shape))
    delta = log_brightness(brightness, cfg) - state
    on_bits = delta >= cfg.theta_on
    off_bits = delta <= -cfg.theta_off
    # every full crossing is absorbed even though the frame holds one bit
    state[on_bits] += cfg.theta_on * np.floor(delta[on_bits] / cfg.theta_on)
    state[off_bits] -= cfg.theta_off * np.floor(-delta[off_bits] / cfg.theta_off)
    return EventFrame(sample_index, on_bits, off_bits, geometry)


def _active_neighbors(active: np.ndarray) -> np.ndarray:
    """Return the number of active 8-neighbors of every pixel."""
    padded = np.pad(active.astype(np.uint8), 1)
    height, width = active.shape
    count = np.zeros(active.shape, dtype=np.uint8)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            if dy == 1 and dx == 1:
                continue
            count += padded[dy:dy + height, dx:dx + width]
    return count


def _flickering(frame: EventFrame, history: Sequence[EventFrame]) -> np.ndarray:
    """Return pixels whose polarity alternated in every frame of the window."""
    frames = list(history) + [frame]
    # +1 for ON, -1 for OFF, 0 for no event
    signs = [f.on_bits.astype(np.int8) - f.off_bits.astype(np.int8) for f in frames]
    mask = signs[0] != 0
    for previous, current in zip(signs, signs[1:]):
        mask &= (current != 0) & (current == -previous)
    return mask


def suppress(frame: EventFrame, history: Sequence[EventFrame], cfg: DvsConfig) -> EventFrame:
    """
    Filter isolated and flickering events out of a frame.

    Args:
        frame: the frame to filter
        history: the previous raw frames, oldest first, at most flicker_window
        cfg: the sensor configuration

    Returns:
        a new frame holding a subset of the events of frame

    """
    if not cfg.suppression_enabled:
        return frame
    if len(history) > cfg.flicker_window:
        msg = 'history holds {} frames, more than flicker_window {}.'
        raise ValueError(msg.format(len(history), cfg.flicker_window))
    active = frame.on_bits | frame.off_bits
    keep = active & (_active_neighbors(active) > 0)
    # a partial window never flags flicker
    if len(history) == cfg.flicker_window:
        keep &= ~_flickering(frame, history)
    return EventFrame(frame.sample_index, frame.on_bits & keep, frame.off_bits & keep, frame.geometry)


#
# MARK: Power
#


def saturating_rate_meps(sample_rate_hz: float = 7200.0, geometry: SensorGeometry = DVS132S) -> float:
    """Return the event rate of full frames at the given sample rate in Meps."""
    return geometry.pixels * sample_rate_hz / 1e6


@dataclass(frozen=True)
class DvsPowerModel:
    """The analog/digital power split of the sensor."""

    analog_mw: float = 0.36
    digital_mw_max: float = 0.06
    # reaches digital_mw_max at full frames sampled at 7.2 kHz
    digital_mw_per_meps: float = 0.06 / saturating_rate_meps()

    def __post_init__(self):
        if self.analog_mw < 0 or self.digital_mw_max < 0 or self.digital_mw_per_meps < 0:
            raise ValueError('power model coefficients must be non-negative.')

    @property
    def max_mw(self) -> float:
        """Return the power with a saturated digital load."""
        return self.analog_mw + self.digital_mw_max


def sensor_power_mw(model: DvsPowerModel, event_rate_meps: float) -> float:
    """
    Return the camera power at a given event rate.

    Args:
        model: the power model
        event_rate_meps: the event rate in million events per second

    Returns:
        the analog power plus the capped digital power in mW

    """
    if event_rate_meps < 0:
        raise ValueError('event rate must be non-negative, got {}.'.format(event_rate_meps))
    return model.analog_mw + min(model.digital_mw_max, model.digital_mw_per_meps * event_rate_meps)


#
# MARK: Sensor
#


class DvsSensor:
    """A stateful DVS132S: pixel memory, flicker history, and event statistics."""

    def __init__(self, config: DvsConfig = DvsConfig(), geometry: SensorGeometry = DVS132S):
        """
        Initialize a new sensor.

        Args:
            config: the bias and readout configuration
            geometry: the pixel array

        Returns:
            None

        """
        self.config = config
        self.geometry = geometry
        self._state: Optional[np.ndarray] = None
        self._history: Deque[EventFrame] = deque(maxlen=config.flicker_window)
        self._sample_index = 0
        self._events = 0

    @property
    def state(self) -> np.ndarray:
        """Return the memorized log-brightness of every pixel."""
        if self._state is None:
            raise ValueError('sensor has no pixel memory, call `reset`')
        return self._state

    @property
    def sample_index(self) -> int:
        """Return the index of the next sample instant."""
        return self._sample_index

    def reset(self, brightness: np.ndarray) -> EventFrame:
        """Memorize brightness in every pixel and return the empty first frame."""
        self._state = initial_state(brightness, self.config)
        if self._state.shape != self.geometry.shape:
            raise ValueError('brightness has shape {}, expected {}.'.format(self._state.shape, self.geometry.shape))
        self._history.clear()
        self._sample_index = 1
        self._events = 0
        return EventFrame.empty(0, self.geometry)

    def sample(self, brightness: np.ndarray) -> EventFrame:
        """Capture the next frame, applying suppression when enabled."""
        raw = sample(self.state, self.config, brightness, self._sample_index, self.geometry)
        frame = suppress(raw, tuple(self._history), self.config)
        self._history.append(raw)
        self._sample_index += 1
        self._events += event_count(frame)
        logger.debug('sample %d: %d events', frame.sample_index, event_count(frame))
        return frame

    @property
    def event_rate_meps(self) -> float:
        """Return the mean event rate of the frames sampled since reset."""
        if self._sample_index <= 1:
            return 0.0
        return self._events / (self._sample_index - 1) * self.config.sample_rate_hz / 1e6

    def power_mw(self, model: DvsPowerModel = DvsPowerModel()) -> float:
        """Return the camera power at the mean event rate since reset."""
        return sensor_power_mw(model, self.event_rate_meps)


# explicitly define the outward facing API of this module
__all__ = [
    DvsConfig.__name__,
    DvsPowerModel.__name__,
    DvsSensor.__name__,
    log_brightness.__name__,
    initial_state.__name__,
    pending_event_crossings.__name__,
    sample.__name__,
    suppress.__name__,
    saturating_rate_meps.__name__,
    sensor_power_mw.__name__,
]
