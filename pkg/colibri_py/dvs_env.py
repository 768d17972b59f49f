"""A gymnasium environment that samples a DVS132S looking at a brightness stimulus."""
import logging
from typing import Any
from typing import Dict
from typing import Tuple
from typing import Union
from typing import ClassVar
from typing import Optional
from typing import NamedTuple
from dataclasses import replace

import numpy as np
import gymnasium as gym
from gymnasium.spaces import Box

from colibri_py.event_core import DVS132S
from colibri_py.event_core import EventFrame
from colibri_py.event_core import event_count
from colibri_py.dvs_model import DvsConfig
from colibri_py.dvs_model import DvsSensor
from colibri_py.stimulus import BrightnessField
from colibri_py.pipeline_budget import PwmConfig
from colibri_py.pipeline_budget import PwmWaveform
from colibri_py.pipeline_budget import pwm_waveform
from colibri_py._render import render_frame


logger = logging.getLogger(__name__)


# one PWM channel per motor of the quadrotor
MOTORS = 4


class StepResult(NamedTuple):
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    info: Dict[str, Any]


class DvsEnv(gym.Env[np.ndarray, np.ndarray]):
    """An event camera environment: each step samples one event frame."""

    # relevant meta-data about the environment
    metadata: ClassVar[Dict[str, Any]] = {
        'render_modes': ['rgb_array'],
        'render_fps': 30,
    }

    # ON and OFF planes of the current event frame
    observation_space: ClassVar[Box] = Box(
        low=0,
        high=1,
        shape=(2,) + DVS132S.shape,
        dtype=np.uint8,
    )

    # the duty cycle of every motor channel
    action_space: ClassVar[Box] = Box(low=0.0, high=1.0, shape=(MOTORS,), dtype=np.float32)

    def __init__(
        self,
        stimulus: BrightnessField,
        config: DvsConfig = DvsConfig(),
        pwm: PwmConfig = PwmConfig(),
        render_mode: Optional[str] = None,
    ):
        """
        Initialize a new sensor environment.

        Args:
            stimulus: the brightness the sensor looks at, one sample per step
            config: the sensor configuration
            pwm: the PWM channel template, its duty is set by each action
            render_mode: None or 'rgb_array'

        Returns:
            None

        """
        if stimulus.geometry != DVS132S:
            raise ValueError('stimulus geometry {} is not the DVS132S array.'.format(stimulus.geometry))
        if len(stimulus) < 2:
            raise ValueError('stimulus needs at least 2 samples, got {}.'.format(len(stimulus)))
        if render_mode is not None and render_mode not in self.metadata['render_modes']:
            msg = 'valid render modes are: {}'
            raise ValueError(msg.format(', '.join(repr(m) for m in self.metadata['render_modes'])))
        self.stimulus = stimulus
        self.pwm = pwm
        self.render_mode = render_mode
        self._sensor: Optional[DvsSensor] = DvsSensor(config, DVS132S)
        self._frame: Optional[EventFrame] = None
        self._done = True

    @property
    def sensor(self) -> DvsSensor:
        """Return the simulated camera."""
        if self._sensor is None:
            raise ValueError('env has already been closed.')
        return self._sensor

    def _get_info(self, pwm: Tuple[PwmWaveform, ...]) -> Dict[str, Any]:
        """Return the info of the current frame."""
        return {
            'sample_index': self._frame.sample_index,
            'event_count': event_count(self._frame),
            'frame': self._frame,
            'pwm': pwm,
        }

    def _waveforms(self, action: np.ndarray) -> Tuple[PwmWaveform, ...]:
        """Return the PWM waveform of every motor channel."""
        return tuple(pwm_waveform(replace(self.pwm, duty=float(duty))) for duty in action)

    def reset(
        self,
        *,
        seed: Union[int, None] = None,
        options: Union[Dict[str, Any], None] = None,
    ) -> Tuple[np.ndarray, Dict[str, Any]]:
        """
        Prime the pixel memory from the first stimulus sample.

        Args:
            seed (int): an optional random number seed for the next episode
            options (any): unused

        Returns:
            the empty first frame and its info

        """
        super().reset(seed=seed)
        self._frame = self.sensor.reset(self.stimulus[0])
        self._done = False
        logger.debug('reset on a %d sample stimulus', len(self.stimulus))
        idle = self._waveforms(np.zeros(MOTORS, dtype=np.float32))
        return self._frame.polarity_planes, self._get_info(idle)

    def step(self, action: np.ndarray) -> StepResult:
        """
        Sample the next event frame and emit the commanded PWM duties.

        Args:
            action: the duty cycle of every motor channel in [0, 1]

        Returns:
            a tuple of:
            - observation (np.ndarray): the ON/OFF planes of the new frame
            - reward (float): always 0.0
            - terminated (bool): whether the stimulus has been consumed
            - truncated (bool): always False
            - info (dict): sample_index, event_count, frame and pwm

        """
        if self._done:
            raise ValueError('cannot step in a done environment! call `reset`')
        action = np.asarray(action, dtype=np.float32)
        if action.shape != self.action_space.shape or np.any(action < 0) or np.any(action > 1):
            raise ValueError('action must be {} duty cycles in [0, 1], got {}.'.format(MOTORS, action))
        index = self.sensor.sample_index
        self._frame = self.sensor.sample(self.stimulus[index])
        self._done = self.sensor.sample_index >= len(self.stimulus)
        return StepResult(
            observation=self._frame.polarity_planes,
            reward=0.0,
            terminated=self._done,
            truncated=False,
            info=self._get_info(self._waveforms(action)),
        )

    def close(self):
        """Close the environment."""
        if self._sensor is None:
            raise ValueError('env has already been closed.')
        self._sensor = None

    def render(self) -> Optional[np.ndarray]:
        """Return the current frame rendered ON red and OFF green on white."""
        if self.render_mode is None:
            return None
        if self._frame is None:
            raise ValueError('nothing to render, call `reset`')
        return render_frame(self._frame)

    def get_action_meanings(self):
        """Return a list of actions meanings."""
        return ['duty motor {}'.format(motor) for motor in range(MOTORS)]


# explicitly define the outward facing API of this module
__all__ = [DvsEnv.__name__, StepResult.__name__]
