"""Scenario files: the stimulus, sensor, network, and budget of one simulation run.

Notes:
    - YAML with explicit units in key names
    - paths resolve relative to the scenario file
    - unknown keys are rejected
"""
import os
import logging
from typing import Any
from typing import Dict
from typing import Tuple
from typing import Optional
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace

import yaml

from colibri_py.dvs_model import DvsConfig
from colibri_py.saer_codec import ClockConfig
from colibri_py.saer_codec import InterfaceParams
from colibri_py.saer_codec import readout_bound_efps
from colibri_py.snn_engine import SnnNetwork
from colibri_py.snn_engine import load_network
from colibri_py.snn_engine import reference_network
from colibri_py.stimulus import BrightnessField
from colibri_py.stimulus import from_pgm_dir
from colibri_py.stimulus import moving_bar
from colibri_py.stimulus import moving_disk
from colibri_py.pipeline_budget import PwmConfig
from colibri_py.pipeline_budget import PipelineBudget
from colibri_py.pipeline_budget import default_budget
from colibri_py.pipeline_budget import window_frames
from colibri_py.wrappers import PwmSpace


logger = logging.getLogger(__name__)


# the largest seed a scenario may carry
MAX_SEED = 2**64 - 1


class ScenarioError(ValueError):
    """An invalid scenario file, naming the offending field."""

    def __init__(self, field_name: str, reason: str):
        super().__init__('{}: {}'.format(field_name, reason))
        self.field = field_name


# the generators a synthetic stimulus can name and the options they accept
_GENERATORS = {
    'moving_bar': (moving_bar, {
        'samples', 'velocity_px_per_sample', 'contrast', 'background', 'bar_width_px', 'jitter_log',
    }),
    'moving_disk': (moving_disk, {
        'samples', 'velocity_px_per_sample', 'contrast', 'background', 'radius_px', 'jitter_log',
    }),
}


@dataclass(frozen=True)
class StimulusSpec:
    """A synthetic generator with its options, or a directory of PGM images."""

    kind: str
    options: Dict[str, Any] = field(default_factory=dict)
    path: Optional[str] = None

    def build(self, seed: int) -> BrightnessField:
        """Return the brightness field, drawing any noise from seed."""
        if self.kind == 'pgm_dir':
            return from_pgm_dir(self.path)
        generator, _ = _GENERATORS[self.kind]
        return generator(seed=seed, **self.options)


@dataclass(frozen=True)
class Scenario:
    """Everything one run needs; the seed determines any stochastic stimulus."""

    name: str
    seed: int
    stimulus: StimulusSpec
    dvs: DvsConfig
    clock: ClockConfig
    network: SnnNetwork
    frames_per_step: int = 1
    steps: Optional[int] = None
    budget: PipelineBudget = field(default_factory=default_budget)
    pwm: PwmConfig = PwmConfig()
    commands: Tuple[str, ...] = ('hover', 'left', 'right', 'forward')

    def with_seed(self, seed: int) -> 'Scenario':
        """Return the scenario with its seed replaced."""
        return replace(self, seed=_seed(seed))

    def build_stimulus(self) -> BrightnessField:
        """Return the brightness field of the scenario."""
        return self.stimulus.build(self.seed)


def _seed(value: Any) -> int:
    """Return value as a 64-bit unsigned seed."""
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= MAX_SEED:
        raise ScenarioError('seed', 'must be an integer in [0, 2**64), got {!r}'.format(value))
    return value


def _section(document: Dict[str, Any], name: str, known: set) -> Dict[str, Any]:
    """Return a mapping section of the document after rejecting unknown keys."""
    section = document.get(name) or {}
    if not isinstance(section, dict):
        raise ScenarioError(name, 'must be a mapping')
    unknown = set(section) - known
    if unknown:
        raise ScenarioError('{}.{}'.format(name, sorted(unknown)[0]), 'unknown key')
    return section


def _build(name: str, factory, options: Dict[str, Any]):
    """Construct a config value, naming the section on failure."""
    try:
        return factory(**options)
    except (TypeError, ValueError) as error:
        raise ScenarioError(name, str(error))


def _stimulus(document: Dict[str, Any], directory: str) -> StimulusSpec:
    """Parse the stimulus section."""
    if 'stimulus' not in document:
        raise ScenarioError('stimulus', 'missing')
    section = dict(document['stimulus'] or {})
    kind = section.pop('kind', None)
    if kind == 'pgm_dir':
        unknown = set(section) - {'path'}
        if unknown:
            raise ScenarioError('stimulus.{}'.format(sorted(unknown)[0]), 'unknown key')
        if 'path' not in section:
            raise ScenarioError('stimulus.path', 'missing')
        path = os.path.join(directory, section['path'])
        if not os.path.isdir(path):
            raise ScenarioError('stimulus.path', 'points to non-existent directory: {}'.format(path))
        return StimulusSpec(kind, path=path)
    if kind not in _GENERATORS:
        valid = ', '.join(sorted(_GENERATORS) + ['pgm_dir'])
        raise ScenarioError('stimulus.kind', 'must be one of {}, got {!r}'.format(valid, kind))
    unknown = set(section) - _GENERATORS[kind][1]
    if unknown:
        raise ScenarioError('stimulus.{}'.format(sorted(unknown)[0]), 'unknown key')
    if 'samples' not in section:
        raise ScenarioError('stimulus.samples', 'missing')
    return StimulusSpec(kind, options=section)


def _network(document: Dict[str, Any], directory: str) -> SnnNetwork:
    """Load the network the scenario names, or the reference network."""
    if document.get('network') is None:
        return reference_network()
    path = os.path.join(directory, document['network'])
    if not os.path.exists(path):
        raise ScenarioError('network', 'points to non-existent file: {}'.format(path))
    try:
        return load_network(path)
    except ValueError as error:
        raise ScenarioError('network', str(error))


def _budget(document: Dict[str, Any], pwm: PwmConfig, dvs: DvsConfig, clock: ClockConfig) -> PipelineBudget:
    """Parse the budget overrides and check that the readout keeps up with the sensor."""
    readout_efps = readout_bound_efps(clock)
    if readout_efps < dvs.sample_rate_hz:
        msg = 'scans at most {:.0f} frames/s, below the sample rate of {} Hz'
        raise ScenarioError('clock', msg.format(readout_efps, dvs.sample_rate_hz))
    options = _section(document, 'budget', {
        'window_ms', 'frames_per_window', 'preprocessing_ms', 'preprocessing_mw',
        'inference_ms', 'inference_mw', 'avg_compute_power_mw', 'saer_power_mw',
    })
    options = dict(options)
    interface = dict(sample_rate_hz=dvs.sample_rate_hz, clock=clock)
    if 'saer_power_mw' in options:
        interface['saer_power_mw'] = options.pop('saer_power_mw')
    interface = _build('budget.saer_power_mw', InterfaceParams, interface)
    budget = _build('budget', default_budget, dict(options, pwm=pwm, interface=interface))
    capacity = window_frames(budget, readout_efps)
    if budget.frames_per_window > capacity:
        msg = '{} frames do not fit a {} ms window scanned at most {} times'
        raise ScenarioError('budget.frames_per_window', msg.format(budget.frames_per_window, budget.window_ms, capacity))
    return budget


def load_scenario(path: str, seed: Optional[int] = None) -> Scenario:
    """
    Load a scenario file and every file it references.

    Args:
        path: the YAML scenario file
        seed: a seed overriding the one in the file

    Returns:
        the validated scenario

    """
    if not os.path.exists(path):
        raise ValueError('scenario points to non-existent file: {}.'.format(path))
    with open(path) as stream:
        try:
            document = yaml.safe_load(stream) or {}
        except yaml.YAMLError as error:
            raise ScenarioError('<document>', 'not valid YAML: {}'.format(error))
    if not isinstance(document, dict):
        raise ScenarioError('<document>', 'must be a mapping')
    known = {'name', 'seed', 'stimulus', 'dvs', 'clock', 'network', 'snn', 'budget', 'pwm', 'commands'}
    unknown = set(document) - known
    if unknown:
        raise ScenarioError(sorted(unknown)[0], 'unknown key')
    directory = os.path.dirname(os.path.abspath(path))
    dvs = _build('dvs', DvsConfig, _section(document, 'dvs', {
        'theta_on', 'theta_off', 'sample_rate_hz', 'suppression_enabled', 'flicker_window', 'epsilon_lum',
    }))
    clock = _build('clock', ClockConfig, _section(document, 'clock', {'system_clock_hz', 'cycles_per_word'}))
    pwm = _build('pwm', PwmConfig, _section(document, 'pwm', {'clock_hz', 'duty', 'power_mw', 'frequency_hz'}))
    snn = _section(document, 'snn', {'frames_per_step', 'steps'})
    frames_per_step = snn.get('frames_per_step', 1)
    if not isinstance(frames_per_step, int) or frames_per_step < 1:
        raise ScenarioError('snn.frames_per_step', 'must be a positive integer, got {!r}'.format(frames_per_step))
    steps = snn.get('steps')
    if steps is not None and (not isinstance(steps, int) or steps < 0):
        raise ScenarioError('snn.steps', 'must be a non-negative integer, got {!r}'.format(steps))
    commands = tuple(document.get('commands') or Scenario.commands)
    for command in commands:
        if command not in PwmSpace.commands():
            raise ScenarioError('commands', 'unknown command {!r}'.format(command))
    network = _network(document, directory)
    if len(commands) != network.output_shape[0]:
        msg = '{} commands for {} output neurons'
        raise ScenarioError('commands', msg.format(len(commands), network.output_shape[0]))
    scenario = Scenario(
        name=str(document.get('name') or os.path.splitext(os.path.basename(path))[0]),
        seed=_seed(document.get('seed', 0)),
        stimulus=_stimulus(document, directory),
        dvs=dvs,
        clock=clock,
        network=network,
        frames_per_step=frames_per_step,
        steps=steps,
        budget=_budget(document, pwm, dvs, clock),
        pwm=pwm,
        commands=commands,
    )
    if seed is not None:
        scenario = scenario.with_seed(seed)
    logger.info('loaded scenario %r (seed %d)', scenario.name, scenario.seed)
    return scenario


# explicitly define the outward facing API of this module
__all__ = [
    ScenarioError.__name__,
    StimulusSpec.__name__,
    Scenario.__name__,
    load_scenario.__name__,
]
