"""Test cases for the sensor environment and the discrete command wrapper."""
from threading import Thread
from multiprocessing import Process
from unittest import TestCase

import numpy as np

from colibri_py.dvs_env import DvsEnv
from colibri_py.dvs_env import MOTORS
from colibri_py.dvs_model import DvsConfig
from colibri_py.event_core import EventFrame
from colibri_py.stimulus import moving_bar
from colibri_py.wrappers import PwmSpace


def create_env(samples=5, render_mode=None):
    """Return an environment looking at a fast bar."""
    stimulus = moving_bar(samples, velocity_px_per_sample=4.0, contrast=0.6)
    return DvsEnv(stimulus, DvsConfig(), render_mode=render_mode)


def play(steps=4):
    """Create an environment and step it through its stimulus."""
    env = create_env()
    env.reset()
    for _ in range(steps):
        env.step(np.full(MOTORS, 0.5, dtype=np.float32))
    env.close()


class ShouldRejectInvalidStimuli(TestCase):
    def test_too_short(self):
        self.assertRaises(ValueError, DvsEnv, moving_bar(1))

    def test_render_mode(self):
        self.assertRaises(ValueError, create_env, render_mode='human')


class ShouldHaveDvsSpaces(TestCase):
    def test(self):
        env = create_env()
        self.assertEqual((2, 104, 132), env.observation_space.shape)
        self.assertEqual(np.uint8, env.observation_space.dtype)
        self.assertEqual((MOTORS,), env.action_space.shape)
        self.assertEqual(MOTORS, len(env.get_action_meanings()))
        env.close()


class ShouldResetToAnEmptyFrame(TestCase):
    def test(self):
        env = create_env()
        observation, info = env.reset(seed=3)
        self.assertEqual((2, 104, 132), observation.shape)
        self.assertFalse(observation.any())
        self.assertEqual(0, info['sample_index'])
        self.assertEqual(0, info['event_count'])
        self.assertEqual(EventFrame.empty(), info['frame'])
        self.assertEqual(MOTORS, len(info['pwm']))
        self.assertTrue(all(waveform.high_cycles == 0 for waveform in info['pwm']))
        env.close()


class ShouldStepThroughTheStimulus(TestCase):
    def test(self):
        env = create_env(samples=5)
        env.reset()
        action = np.array([0.25, 0.5, 0.75, 1.0], dtype=np.float32)
        terminated = False
        indices = []
        while not terminated:
            observation, reward, terminated, truncated, info = env.step(action)
            indices.append(info['sample_index'])
            self.assertEqual(0.0, reward)
            self.assertFalse(truncated)
            self.assertEqual(int(observation.sum()), info['event_count'])
            np.testing.assert_array_equal(info['frame'].polarity_planes, observation)
            self.assertEqual(
                [31250, 62500, 93750, 125000],
                [waveform.high_cycles for waveform in info['pwm']],
            )
        self.assertEqual([1, 2, 3, 4], indices)
        self.assertRaises(ValueError, env.step, action)
        env.close()

    def test_moving_bar_emits_events(self):
        env = create_env(samples=5)
        env.reset()
        counts = [env.step(np.zeros(MOTORS)).info['event_count'] for _ in range(4)]
        self.assertGreater(sum(counts), 0)
        env.close()

    def test_invalid_action(self):
        env = create_env()
        env.reset()
        self.assertRaises(ValueError, env.step, np.zeros(3))
        self.assertRaises(ValueError, env.step, np.full(MOTORS, 1.5))
        self.assertRaises(ValueError, env.step, np.full(MOTORS, -0.1))
        env.close()

    def test_step_before_reset(self):
        env = create_env()
        self.assertRaises(ValueError, env.step, np.zeros(MOTORS))
        env.close()


class ShouldRenderFrames(TestCase):
    def test_rgb_array(self):
        env = create_env(render_mode='rgb_array')
        env.reset()
        env.step(np.zeros(MOTORS))
        image = env.render()
        self.assertEqual((104, 132, 3), image.shape)
        self.assertEqual(np.uint8, image.dtype)
        env.close()

    def test_no_mode(self):
        env = create_env()
        env.reset()
        self.assertIsNone(env.render())
        env.close()


class ShouldCloseOnce(TestCase):
    def test(self):
        env = create_env()
        env.close()
        self.assertRaises(ValueError, env.close)
        self.assertRaises(ValueError, lambda: env.sensor)


class ShouldCreateMultipleEnvironments(TestCase):
    def test_threads(self):
        threads = [Thread(target=play) for _ in range(4)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()

    def test_processes(self):
        processes = [Process(target=play) for _ in range(4)]
        for process in processes:
            process.start()
        for process in processes:
            process.join()
            self.assertEqual(0, process.exitcode)


class ShouldMapCommandsToDuties(TestCase):
    def test_commands(self):
        self.assertEqual(['hover', 'left', 'right', 'forward', 'NOOP'], PwmSpace.commands())
        np.testing.assert_allclose([0.5] * 4, PwmSpace.duties('hover'))
        self.assertRaises(ValueError, PwmSpace.duties, 'backflip')

    def test_unknown_command(self):
        env = create_env()
        self.assertRaises(ValueError, PwmSpace, env, ['hover', 'backflip'])
        env.close()

    def test_step(self):
        env = PwmSpace(create_env(), ['left', 'NOOP'])
        self.assertEqual(2, env.action_space.n)
        self.assertEqual(['left', 'NOOP'], env.get_action_meanings())
        env.reset()
        info = env.step(0)[4]
        self.assertEqual(
            [56250, 68750, 56250, 68750],
            [waveform.high_cycles for waveform in info['pwm']],
        )
        info = env.step(1)[4]
        self.assertTrue(all(waveform.high_cycles == 0 for waveform in info['pwm']))
        self.assertRaises(ValueError, env.step, 2)
        env.close()
