"""Test cases for the closed-loop latency, power, and energy budget."""
import io
import os
import tempfile
from unittest import TestCase
from dataclasses import replace

from colibri_py.saer_codec import ClockConfig
from colibri_py.pipeline_budget import INFERENCE
from colibri_py.pipeline_budget import PREPROCESSING
from colibri_py.pipeline_budget import SENSING
from colibri_py.pipeline_budget import PipelineBudget
from colibri_py.pipeline_budget import PwmConfig
from colibri_py.pipeline_budget import StageBudget
from colibri_py.pipeline_budget import StageRole
from colibri_py.pipeline_budget import budget_rows
from colibri_py.pipeline_budget import closed_loop_energy_mj
from colibri_py.pipeline_budget import closed_loop_latency_ms
from colibri_py.pipeline_budget import closed_loop_power_mw
from colibri_py.pipeline_budget import default_budget
from colibri_py.pipeline_budget import frame_stage
from colibri_py.pipeline_budget import pwm_latency_us
from colibri_py.pipeline_budget import pwm_waveform
from colibri_py.pipeline_budget import sensing_power_mw
from colibri_py.pipeline_budget import stage_energy_mj
from colibri_py.pipeline_budget import window_frames
from colibri_py.pipeline_budget import write_budget_csv


def write_budget_csv_lines(budget, clk=None):
    """Return the lines write_budget_csv emits for a budget."""
    stream = io.StringIO()
    write_budget_csv(stream, budget, clk)
    return stream.getvalue().splitlines()


def within(expected, actual, tolerance=0.005):
    """Return whether actual lies within a relative tolerance of expected."""
    return abs(actual - expected) <= tolerance * abs(expected)


class ShouldRejectInvalidStages(TestCase):
    def test(self):
        self.assertRaises(ValueError, StageBudget, 'a', -1.0, 1.0)
        self.assertRaises(ValueError, StageBudget, 'a', 1.0, -1.0)
        self.assertRaises(ValueError, PwmConfig, duty=1.5)
        self.assertRaises(ValueError, PwmConfig, clock_hz=0)


class ShouldComputeStageEnergy(TestCase):
    def test(self):
        self.assertAlmostEqual(3.3228, stage_energy_mj(StageBudget('s', 300.0, 11.076)))
        self.assertAlmostEqual(1.408, stage_energy_mj(StageBudget('i', 32.0, 44.0)))
        self.assertEqual(0.0, stage_energy_mj(StageBudget('z', 0.0, 44.0)))


class ShouldReproduceTheClosedLoopBudget(TestCase):
    def setUp(self):
        self.budget = default_budget()

    def test_stages(self):
        names = [stage.name for stage in self.budget.stages]
        self.assertEqual([SENSING, PREPROCESSING, INFERENCE, 'PWM'], names)

    def test_latency(self):
        self.assertAlmostEqual(163.00004, closed_loop_latency_ms(self.budget))
        self.assertTrue(within(163, closed_loop_latency_ms(self.budget)))

    def test_power(self):
        self.assertAlmostEqual(11.076, sensing_power_mw())
        self.assertAlmostEqual(46.976, closed_loop_power_mw(self.budget))
        self.assertEqual(46.98, round(closed_loop_power_mw(self.budget), 2))

    def test_energy(self):
        self.assertTrue(within(9.224, closed_loop_energy_mj(self.budget)))
        self.assertAlmostEqual(3.3228, stage_energy_mj(self.budget.stage(SENSING)))
        self.assertEqual(4.5, round(stage_energy_mj(self.budget.stage(PREPROCESSING)), 1))

    def test_energy_is_additive(self):
        total = sum(stage_energy_mj(stage) for stage in self.budget.stages)
        self.assertEqual(total, closed_loop_energy_mj(self.budget))

    def test_single_frame(self):
        frame = frame_stage(ClockConfig())
        self.assertAlmostEqual(0.06864, frame.latency_ms)
        self.assertEqual(0.069, round(frame.latency_ms, 3))
        self.assertTrue(within(0.00076, stage_energy_mj(frame)))


class ShouldExcludeParallelStagesFromLatency(TestCase):
    def test_all_parallel(self):
        budget = default_budget()
        stages = tuple(replace(stage, parallel_with_compute=True) for stage in budget.stages)
        self.assertEqual(0, closed_loop_latency_ms(replace(budget, stages=stages)))

    def test_flag_flip(self):
        budget = default_budget()
        flipped = budget.with_stage(INFERENCE, parallel_with_compute=True)
        delta = closed_loop_latency_ms(budget) - closed_loop_latency_ms(flipped)
        self.assertAlmostEqual(32.0, delta)

    def test_halved_preprocessing(self):
        budget = default_budget(preprocessing_ms=65.5)
        self.assertAlmostEqual(97.5, closed_loop_latency_ms(budget), places=3)


class ShouldComposePlatformPower(TestCase):
    def test_without_pwm(self):
        budget = default_budget(pwm=PwmConfig(power_mw=0.0))
        self.assertAlmostEqual(46.676, closed_loop_power_mw(budget))

    def test_linear_energy(self):
        budget = default_budget()
        doubled = replace(budget, stages=tuple(replace(s, power_mw=2 * s.power_mw) for s in budget.stages))
        self.assertAlmostEqual(2 * closed_loop_energy_mj(budget), closed_loop_energy_mj(doubled))

    def test_empty(self):
        self.assertEqual(0, closed_loop_energy_mj(PipelineBudget()))
        self.assertEqual(0, closed_loop_latency_ms(PipelineBudget()))

    def test_roles(self):
        budget = PipelineBudget((StageBudget('s', 1.0, 2.0, True, StageRole.SENSING),), avg_compute_power_mw=3.0)
        self.assertEqual(5.0, closed_loop_power_mw(budget))


class ShouldModelPwm(TestCase):
    def test_latency(self):
        self.assertAlmostEqual(0.04, pwm_latency_us(PwmConfig()))
        self.assertAlmostEqual(2.0, pwm_latency_us(PwmConfig(clock_hz=1e6, frequency_hz=400)))
        self.assertEqual(pwm_latency_us(PwmConfig(duty=0.1)), pwm_latency_us(PwmConfig(duty=0.9)))
        self.assertLess(pwm_latency_us(PwmConfig()), 1.0)

    def test_waveform(self):
        waveform = pwm_waveform(PwmConfig(duty=0.25))
        self.assertEqual(125000, waveform.period_cycles)
        self.assertEqual(31250, waveform.high_cycles)
        self.assertEqual(0.25, waveform.high_fraction)
        self.assertEqual(0, pwm_waveform(PwmConfig(duty=0.0)).high_cycles)
        self.assertEqual(125000, pwm_waveform(PwmConfig(duty=1.0)).high_cycles)


class ShouldCountWindowFrames(TestCase):
    def test(self):
        budget = default_budget()
        self.assertEqual(2160, window_frames(budget, 7200))
        self.assertEqual(4350, window_frames(budget, 14500))
        self.assertEqual(0, window_frames(default_budget(window_ms=0), 7200))
        self.assertEqual(4350, budget.frames_per_window)
        self.assertRaises(ValueError, window_frames, budget, 0)


class ShouldWriteTheBudgetTable(TestCase):
    def test(self):
        stream = io.StringIO()
        write_budget_csv(stream, default_budget())
        lines = stream.getvalue().splitlines()
        self.assertEqual('module,latency_ms,power_mw,energy_mj', lines[0])
        self.assertEqual(6, len(lines))
        self.assertTrue(lines[-1].startswith('Total,'))
        self.assertEqual(len(budget_rows(default_budget())), len(lines) - 1)

    def test_single_frame_row(self):
        stream = io.StringIO()
        write_budget_csv(stream, default_budget(), ClockConfig(system_clock_hz=100e6))
        lines = stream.getvalue().splitlines()
        self.assertEqual(7, len(lines))
        module, latency, power, _ = lines[1].split(',')
        self.assertEqual('Single event-frame', module)
        self.assertAlmostEqual(0.03432, float(latency))
        self.assertAlmostEqual(sensing_power_mw(), float(power))
        self.assertEqual(write_budget_csv_lines(default_budget())[1:], lines[2:])

    def test_path(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'budget.csv')
            write_budget_csv(path, default_budget(), ClockConfig())
            with open(path, newline='') as stream:
                text = stream.read()
        self.assertEqual('\n'.join(write_budget_csv_lines(default_budget(), ClockConfig())) + '\n', text)
