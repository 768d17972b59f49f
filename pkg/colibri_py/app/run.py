"""Running a scenario end to end: sensor, readout, preprocessing, SNN, budget."""
import time
import logging
from dataclasses import replace

import numpy as np
from tqdm import tqdm

from colibri_py.dvs_env import DvsEnv
from colibri_py.event_core import event_count
from colibri_py.saer_codec import encode
from colibri_py.snn_engine import simulate_network
from colibri_py.preprocess import bin_frames
from colibri_py.pipeline_budget import budget_rows
from colibri_py.pipeline_budget import pwm_waveform
from colibri_py.wrappers import PwmSpace
from colibri_py.scenario import Scenario
from colibri_py._trace import FrameRecord
from colibri_py._trace import RunTrace
from colibri_py._trace import saer_digest
from colibri_py._trace import write_trace


logger = logging.getLogger(__name__)


def _sense(env: PwmSpace, scenario: Scenario, quiet: bool) -> list:
    """Step the environment through the whole stimulus and return its frames."""
    _, info = env.reset(seed=scenario.seed)
    frames = [info['frame']]
    progress = tqdm(
        total=len(env.unwrapped.stimulus) - 1,
        desc=scenario.name,
        unit='frame',
        disable=quiet,
    )
    try:
        done = False
        while not done:
            # hold the first command until the network decides
            _, _, terminated, truncated, info = env.step(0)
            done = terminated or truncated
            frames.append(info['frame'])
            progress.update()
            progress.set_postfix(events=info['event_count'])
    finally:
        progress.close()
        env.close()
    return frames


def run_scenario(scenario: Scenario, out_dir: str, quiet: bool = False) -> RunTrace:
    """
    Execute a scenario and write its trace.

    Args:
        scenario: the loaded scenario
        out_dir: the directory receiving the trace files
        quiet: whether to hide the progress bar

    Returns:
        the deterministic results of the run

    """
    start = time.perf_counter()
    stimulus = scenario.build_stimulus()
    env = PwmSpace(DvsEnv(stimulus, scenario.dvs, scenario.pwm), scenario.commands)
    frames = _sense(env, scenario, quiet)
    logger.info('sampled %d frames', len(frames))

    streams = [encode(frame) for frame in frames]
    records = tuple(
        FrameRecord(
            sample_index=frame.sample_index,
            event_count=event_count(frame),
            on_count=int(np.count_nonzero(frame.on_bits)),
            off_count=int(np.count_nonzero(frame.off_bits)),
            saer_digest=saer_digest(stream),
        )
        for frame, stream in zip(frames, streams)
    )

    spikes = bin_frames(frames, scenario.frames_per_step)
    steps = spikes.steps if scenario.steps is None else scenario.steps
    result = simulate_network(scenario.network, spikes, steps)
    counts = tuple(int(count) for count in result.class_counts)
    names = [layer.config.name or 'layer{}'.format(i) for i, layer in enumerate(scenario.network.layers)]
    layer_spikes = tuple((name, output.count()) for name, output in zip(names, result.layer_outputs))

    # ties and silence resolve to the lowest class
    decision = int(np.argmax(result.class_counts))
    command = scenario.commands[decision]
    waveforms = [pwm_waveform(replace(scenario.pwm, duty=float(duty))) for duty in PwmSpace.duties(command)]
    logger.info('decided %r from class counts %s', command, counts)
    logger.debug('pwm waveforms: %s', waveforms)

    trace = RunTrace(
        scenario=scenario.name,
        seed=scenario.seed,
        steps=steps,
        frames=records,
        layer_spikes=layer_spikes,
        class_counts=counts,
        budget=tuple(budget_rows(scenario.budget, scenario.clock)),
        decision=command,
        pwm_high_cycles=tuple(w.high_cycles for w in waveforms),
    )
    write_trace(out_dir, trace, streams, time.perf_counter() - start)
    return trace


# explicitly define the outward facing API of this module
__all__ = [run_scenario.__name__]
