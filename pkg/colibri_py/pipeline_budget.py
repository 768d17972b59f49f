"""Closed-loop latency, power, and energy of the sensing-to-actuation pipeline.

Notes:
    - sensing runs in parallel with compute: its energy counts, its latency does not
    - the platform power is a measured compute average plus the sensing and
      PWM powers, not a sum over stage powers
"""
import io
import os
import enum
from typing import List
from typing import Tuple
from typing import Union
from typing import Optional
from typing import NamedTuple
from dataclasses import dataclass
from dataclasses import replace

from colibri_py.dvs_model import DvsPowerModel
from colibri_py.dvs_model import saturating_rate_meps
from colibri_py.dvs_model import sensor_power_mw
from colibri_py.saer_codec import ClockConfig
from colibri_py.saer_codec import InterfaceParams
from colibri_py.saer_codec import saer_frame_time_us
from colibri_py._csv import write_csv


class StageRole(enum.Enum):
    """What a stage contributes to the platform power composition."""

    SENSING = 'sensing'
    PREPROCESSING = 'preprocessing'
    INFERENCE = 'inference'
    ACTUATION = 'actuation'


@dataclass(frozen=True)
class StageBudget:
    """One row of the closed-loop budget."""

    name: str
    latency_ms: float
    power_mw: float
    parallel_with_compute: bool = False
    role: StageRole = StageRole.INFERENCE

    def __post_init__(self):
        if self.latency_ms < 0:
            raise ValueError('stage {!r} latency_ms must be non-negative, got {}.'.format(self.name, self.latency_ms))
        if self.power_mw < 0:
            raise ValueError('stage {!r} power_mw must be non-negative, got {}.'.format(self.name, self.power_mw))
        object.__setattr__(self, 'role', StageRole(self.role))


@dataclass(frozen=True)
class PipelineBudget:
    """The ordered stages of one sensing window."""

    stages: Tuple[StageBudget, ...] = ()
    window_ms: float = 300.0
    frames_per_window: int = 4350
    # measured average platform power during inference, sensing excluded
    avg_compute_power_mw: float = 35.6

    def __post_init__(self):
        object.__setattr__(self, 'stages', tuple(self.stages))
        if self.window_ms < 0:
            raise ValueError('window_ms must be non-negative, got {}.'.format(self.window_ms))
        if self.frames_per_window < 0:
            raise ValueError('frames_per_window must be non-negative, got {}.'.format(self.frames_per_window))
        if self.avg_compute_power_mw < 0:
            raise ValueError('avg_compute_power_mw must be non-negative, got {}.'.format(self.avg_compute_power_mw))

    def stage(self, name: str) -> StageBudget:
        """Return the stage with the given name."""
        for stage in self.stages:
            if stage.name == name:
                return stage
        raise ValueError('budget has no stage named {!r}.'.format(name))

    def with_stage(self, name: str, **changes) -> 'PipelineBudget':
        """Return a copy with the fields of one stage replaced."""
        self.stage(name)
        stages = tuple(replace(s, **changes) if s.name == name else s for s in self.stages)
        return replace(self, stages=stages)


@dataclass(frozen=True)
class PwmConfig:
    """One PWM motor channel driven by the MCU timer."""

    clock_hz: float = 50e6
    duty: float = 0.5
    power_mw: float = 0.3
    frequency_hz: float = 400.0

    def __post_init__(self):
        if not self.clock_hz > 0:
            raise ValueError('clock_hz must be positive, got {}.'.format(self.clock_hz))
        if not 0 <= self.duty <= 1:
            raise ValueError('duty must lie in [0, 1], got {}.'.format(self.duty))
        if self.power_mw < 0:
            raise ValueError('power_mw must be non-negative, got {}.'.format(self.power_mw))
        if not 0 < self.frequency_hz <= self.clock_hz:
            raise ValueError('frequency_hz must lie in (0, clock_hz], got {}.'.format(self.frequency_hz))


class PwmWaveform(NamedTuple):
    """The timer settings emitting a PWM signal."""

    period_cycles: int
    high_cycles: int

    @property
    def high_fraction(self) -> float:
        return self.high_cycles / self.period_cycles


#
# MARK: Composition
#


def stage_energy_mj(stage: StageBudget) -> float:
    """Return the energy of a stage over its latency."""
    return stage.power_mw * stage.latency_ms / 1000


def closed_loop_latency_ms(budget: PipelineBudget) -> float:
    """Return the summed latency of the stages not overlapped with compute."""
    return sum(stage.latency_ms for stage in budget.stages if not stage.parallel_with_compute)


def closed_loop_energy_mj(budget: PipelineBudget) -> float:
    """Return the summed energy of every stage, parallel ones included."""
    return sum(stage_energy_mj(stage) for stage in budget.stages)


def closed_loop_power_mw(budget: PipelineBudget) -> float:
    """
    Return the platform power while the loop runs.

    Args:
        budget: the pipeline budget

    Returns:
        the average compute power plus the power of the sensing and
        actuation stages

    """
    extra = sum(
        stage.power_mw for stage in budget.stages
        if stage.role in (StageRole.SENSING, StageRole.ACTUATION)
    )
    return budget.avg_compute_power_mw + extra


def pwm_latency_us(cfg: PwmConfig) -> float:
    """Return the time to latch a command and write the duty register: two clock periods."""
    return 2e6 / cfg.clock_hz


def pwm_waveform(cfg: PwmConfig) -> PwmWaveform:
    """Return the timer period and compare value of a PWM channel."""
    period = int(round(cfg.clock_hz / cfg.frequency_hz))
    return PwmWaveform(period, int(round(cfg.duty * period)))


def window_frames(budget: PipelineBudget, sample_rate_hz: float) -> int:
    """Return the event frames sampled in one window at the given rate, rounded down."""
    if not sample_rate_hz > 0:
        raise ValueError('sample_rate_hz must be positive, got {}.'.format(sample_rate_hz))
    return int(budget.window_ms * sample_rate_hz // 1000)


#
# MARK: Defaults
#


# stage names of the default budget
SENSING = 'DVS and SAER'
PREPROCESSING = 'Preprocessing (Cluster)'
INFERENCE = 'Inference (SNE)'
ACTUATION = 'PWM'


def sensing_power_mw(
    power_model: DvsPowerModel = DvsPowerModel(),
    interface: InterfaceParams = InterfaceParams(),
) -> float:
    """Return the camera power at saturation plus the SAER fetch power."""
    rate = saturating_rate_meps(interface.sample_rate_hz)
    return sensor_power_mw(power_model, rate) + interface.saer_power_mw


def frame_stage(clk: ClockConfig = ClockConfig(), power_mw: Optional[float] = None) -> StageBudget:
    """Return the readout of a single event frame as a budget row."""
    if power_mw is None:
        power_mw = sensing_power_mw()
    return StageBudget('Single event-frame', saer_frame_time_us(clk) / 1000, power_mw, True, StageRole.SENSING)


def default_budget(
    window_ms: float = 300.0,
    frames_per_window: int = 4350,
    preprocessing_ms: float = 131.0,
    preprocessing_mw: float = 34.0,
    inference_ms: float = 32.0,
    inference_mw: float = 44.0,
    avg_compute_power_mw: float = 35.6,
    pwm: PwmConfig = PwmConfig(),
    power_model: DvsPowerModel = DvsPowerModel(),
    interface: InterfaceParams = InterfaceParams(),
) -> PipelineBudget:
    """
    Return the closed-loop budget of one sensing window.

    Args:
        window_ms: the sensing window that accumulates events for one inference
        frames_per_window: the event frames read out in one window
        preprocessing_ms: the cluster preprocessing latency
        preprocessing_mw: the cluster preprocessing power
        inference_ms: the SNE inference latency
        inference_mw: the SNE inference power
        avg_compute_power_mw: the measured platform average during inference
        pwm: the PWM channel
        power_model: the camera power model
        interface: the readout interface parameters

    Returns:
        the sensing, preprocessing, inference, and PWM stages

    """
    stages = (
        StageBudget(SENSING, window_ms, sensing_power_mw(power_model, interface), True, StageRole.SENSING),
        StageBudget(PREPROCESSING, preprocessing_ms, preprocessing_mw, False, StageRole.PREPROCESSING),
        StageBudget(INFERENCE, inference_ms, inference_mw, False, StageRole.INFERENCE),
        StageBudget(ACTUATION, pwm_latency_us(pwm) / 1000, pwm.power_mw, False, StageRole.ACTUATION),
    )
    return PipelineBudget(stages, window_ms, frames_per_window, avg_compute_power_mw)


#
# MARK: Tables
#


BUDGET_COLUMNS = ('module', 'latency_ms', 'power_mw', 'energy_mj')


def budget_rows(budget: PipelineBudget, clk: Optional[ClockConfig] = None) -> List[Tuple[str, float, float, float]]:
    """
    Return the rows of the budget table.

    Args:
        budget: the pipeline budget
        clk: the readout clock, None to leave out the single frame row

    Returns:
        one (module, latency_ms, power_mw, energy_mj) row per stage and a
        Total row, preceded by the readout of one event frame when clk is given

    """
    stages = list(budget.stages)
    if clk is not None:
        sensing = [s.power_mw for s in budget.stages if s.role == StageRole.SENSING]
        stages.insert(0, frame_stage(clk, sensing[0] if sensing else None))
    rows = [(s.name, s.latency_ms, s.power_mw, stage_energy_mj(s)) for s in stages]
    rows.append((
        'Total',
        closed_loop_latency_ms(budget),
        closed_loop_power_mw(budget),
        closed_loop_energy_mj(budget),
    ))
    return rows


def write_budget_csv(
    target: Union[str, os.PathLike, io.TextIOBase],
    budget: PipelineBudget,
    clk: Optional[ClockConfig] = None,
) -> None:
    """Write the budget table as CSV to a path or an open text stream."""
    write_csv(target, BUDGET_COLUMNS, budget_rows(budget, clk))


# explicitly define the outward facing API of this module
__all__ = [
    StageRole.__name__,
    StageBudget.__name__,
    PipelineBudget.__name__,
    PwmConfig.__name__,
    PwmWaveform.__name__,
    stage_energy_mj.__name__,
    closed_loop_latency_ms.__name__,
    closed_loop_energy_mj.__name__,
    closed_loop_power_mw.__name__,
    pwm_latency_us.__name__,
    pwm_waveform.__name__,
    window_frames.__name__,
    sensing_power_mw.__name__,
    frame_stage.__name__,
    default_budget.__name__,
    budget_rows.__name__,
    write_budget_csv.__name__,
]
