"""An environment wrapper to convert motor duty vectors to a discrete command space."""
from typing import Any
from typing import Dict
from typing import List
from typing import Tuple
from typing import ClassVar
from typing import Optional
from typing import Sequence

import numpy as np
import gymnasium as gym
from gymnasium import Env
from gymnasium import Wrapper


class PwmSpace(Wrapper):
    """Map discrete commands, such as the class decided by the SNN, to motor duties."""

    # duty cycles of (front left, front right, rear left, rear right)
    _command_map: ClassVar[Dict[str, Tuple[float, float, float, float]]] = {
        'hover':   (0.50, 0.50, 0.50, 0.50),
        'left':    (0.45, 0.55, 0.45, 0.55),
        'right':   (0.55, 0.45, 0.55, 0.45),
        'forward': (0.45, 0.45, 0.55, 0.55),
        'NOOP':    (0.00, 0.00, 0.00, 0.00),
    }

    @classmethod
    def commands(cls) -> List[str]:
        """Return the commands that can be used as actions."""
        return list(cls._command_map.keys())

    @classmethod
    def duties(cls, command: str) -> np.ndarray:
        """Return the duty vector of a command."""
        if command not in cls._command_map:
            msg = 'unknown command {!r}, valid commands are: {}'
            raise ValueError(msg.format(command, ', '.join(cls.commands())))
        return np.array(cls._command_map[command], dtype=np.float32)

    def __init__(self, env: Env, actions: Sequence[str]):
        """
        Initialize a new duty vector to discrete action space wrapper.

        Args:
            env: the environment to wrap
            actions: an ordered list of command names. The index of each
                command is its discrete coded value

        Returns:
            None

        """
        super().__init__(env)
        unknown = [action for action in actions if action not in self._command_map]
        if unknown:
            msg = 'unknown command(s) {}, valid commands are: {}'
            raise ValueError(msg.format(', '.join(unknown), ', '.join(self.commands())))
        self.action_space = gym.spaces.Discrete(len(actions))
        self._action_map = {
            index: np.array(self._command_map[action], dtype=np.float32)
            for index, action in enumerate(actions)
        }
        self._action_meanings = dict(enumerate(actions))

    def step(self, action: int) -> Tuple[np.ndarray, float, bool, bool, Dict[str, Any]]:
        """
        Take a step using the given command.

        Args:
            action (int): the discrete command to perform

        Returns:
            a tuple of:
            - (numpy.ndarray) the event frame sampled during the step
            - (float) the reward achieved by taking the action
            - (bool) a flag denoting whether the stimulus has ended
            - (bool) a flag denoting truncation
            - (dict) a dictionary of extra information

        """
        if action not in self._action_map:
            raise ValueError('command index must lie in [0, {}), got {}.'.format(len(self._action_map), action))
        return self.env.step(self._action_map[int(action)])

    def reset(
        self,
        *,
        seed: Optional[int] = None,
        options: Optional[Dict[str, Any]] = None,
    ) -> Tuple[np.ndarray, Dict[str, Any]]:
        """Reset the environment and return the initial observation."""
        return self.env.reset(seed=seed, options=options)

    def get_action_meanings(self) -> List[str]:
        """Return a list of actions meanings."""
        return [self._action_meanings[action] for action in sorted(self._action_meanings)]


# explicitly define the outward facing API of this module
__all__ = [PwmSpace.__name__]
