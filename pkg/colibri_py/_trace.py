"""Writing and reading the files of a simulation run.

Notes:
    - every file except meta.json is a deterministic function of the scenario
    - frames.bin.lz4 holds the SAER streams of all frames back to back,
      compressed as one lz4 block
"""
import os
import json
import time
import hashlib
import logging
from typing import Any
from typing import Dict
from typing import List
from typing import Tuple
from typing import Sequence
from dataclasses import dataclass
from dataclasses import asdict

import lz4.block as lz4

from colibri_py.event_core import DVS132S
from colibri_py.event_core import EventFrame
from colibri_py.event_core import SensorGeometry
from colibri_py.saer_codec import SaerStream
from colibri_py.saer_codec import MalformedStreamError
from colibri_py.saer_codec import decode
from colibri_py.saer_codec import stream_to_bytes
from colibri_py.saer_codec import stream_from_bytes
from colibri_py.pipeline_budget import BUDGET_COLUMNS
from colibri_py._csv import write_csv


logger = logging.getLogger(__name__)


FRAMES_CSV = 'frames.csv'
LAYERS_CSV = 'layers.csv'
CLASSES_CSV = 'classes.csv'
BUDGET_CSV = 'budget.csv'
TRACE_JSONL = 'trace.jsonl'
FRAMES_BIN = 'frames.bin.lz4'
META_JSON = 'meta.json'

# the files compared between runs of one scenario
PAYLOAD = (FRAMES_CSV, LAYERS_CSV, CLASSES_CSV, BUDGET_CSV, TRACE_JSONL, FRAMES_BIN)


def saer_digest(stream: SaerStream) -> str:
    """Return a stable 64-bit hash of a SAER stream as 16 hex digits."""
    return hashlib.blake2b(stream_to_bytes(stream), digest_size=8).hexdigest()


@dataclass(frozen=True)
class FrameRecord:
    """The statistics of one event frame."""

    sample_index: int
    event_count: int
    on_count: int
    off_count: int
    saer_digest: str


@dataclass(frozen=True)
class RunTrace:
    """The deterministic results of one run."""

    scenario: str
    seed: int
    steps: int
    frames: Tuple[FrameRecord, ...]
    layer_spikes: Tuple[Tuple[str, int], ...]
    class_counts: Tuple[int, ...]
    budget: Tuple[Tuple[str, float, float, float], ...]
    # the command chosen from the class counts and its PWM compare values
    decision: str = ''
    pwm_high_cycles: Tuple[int, ...] = ()

    def records(self) -> List[Dict[str, Any]]:
        """Return the trace as the JSON-lines records of trace.jsonl."""
        records = [{'record': 'run', 'scenario': self.scenario, 'seed': self.seed, 'steps': self.steps}]
        records.extend(dict(record='frame', **asdict(frame)) for frame in self.frames)
        records.extend({'record': 'layer', 'name': name, 'spikes': spikes} for name, spikes in self.layer_spikes)
        records.extend({'record': 'class', 'index': i, 'count': count} for i, count in enumerate(self.class_counts))
        records.extend(
            {'record': 'budget', 'module': m, 'latency_ms': lat, 'power_mw': pw, 'energy_mj': en}
            for m, lat, pw, en in self.budget
        )
        records.append({'record': 'decision', 'command': self.decision, 'pwm_high_cycles': list(self.pwm_high_cycles)})
        return records


def write_trace(directory: str, trace: RunTrace, streams: Sequence[SaerStream], wall_time_s: float) -> List[str]:
    """
    Write the files of a run into a directory.

    Args:
        directory: the output directory, created if missing
        trace: the deterministic results
        streams: the SAER stream of every frame in sample order
        wall_time_s: the measured duration of the run

    Returns:
        the paths of the written files

    """
    os.makedirs(directory, exist_ok=True)
    paths = {name: os.path.join(directory, name) for name in PAYLOAD + (META_JSON,)}
    frame_rows = [
        (f.sample_index, f.event_count, f.on_count, f.off_count, f.saer_digest)
        for f in trace.frames
    ]
    write_csv(paths[FRAMES_CSV], ('sample_index', 'event_count', 'on_count', 'off_count', 'saer_digest'), frame_rows)
    write_csv(paths[LAYERS_CSV], ('layer', 'spikes'), trace.layer_spikes)
    write_csv(paths[CLASSES_CSV], ('class', 'count'), list(enumerate(trace.class_counts)))
    write_csv(paths[BUDGET_CSV], BUDGET_COLUMNS, trace.budget)
    with open(paths[TRACE_JSONL], 'w', newline='\n') as stream:
        for record in trace.records():
            stream.write(json.dumps(record, sort_keys=True) + '\n')
    with open(paths[FRAMES_BIN], 'wb') as stream:
        stream.write(lz4.compress(b''.join(stream_to_bytes(s) for s in streams), store_size=True))
    meta = {
        'written_at': time.strftime('%Y-%m-%dT%H:%M:%S%z'),
        'wall_time_s': wall_time_s,
        'payload_digest': payload_digest(directory),
    }
    with open(paths[META_JSON], 'w') as stream:
        json.dump(meta, stream, indent=2, sort_keys=True)
    logger.info('wrote trace of %d frames to %s', len(trace.frames), directory)
    return [paths[name] for name in PAYLOAD + (META_JSON,)]


def payload_digest(directory: str) -> str:
    """Return a hash over the deterministic files of a run directory."""
    digest = hashlib.blake2b(digest_size=8)
    for name in PAYLOAD:
        with open(os.path.join(directory, name), 'rb') as stream:
            digest.update(name.encode())
            digest.update(stream.read())
    return digest.hexdigest()


def read_records(directory: str) -> List[Dict[str, Any]]:
    """Return the records of the trace.jsonl of a run directory."""
    path = os.path.join(directory, TRACE_JSONL)
    if not os.path.exists(path):
        raise ValueError('trace points to non-existent file: {}.'.format(path))
    with open(path) as stream:
        return [json.loads(line) for line in stream if line.strip()]


def read_frames(directory: str, geometry: SensorGeometry = DVS132S) -> List[EventFrame]:
    """
    Decode the frames stored by a run.

    Args:
        directory: the run directory, or a path to its frames.bin.lz4
        geometry: the pixel array of the run

    Returns:
        the frames in sample order

    """
    path = directory if os.path.isfile(directory) else os.path.join(directory, FRAMES_BIN)
    if not os.path.exists(path):
        raise ValueError('trace points to non-existent file: {}.'.format(path))
    with open(path, 'rb') as stream:
        try:
            raw = lz4.decompress(stream.read())
        except lz4.LZ4BlockError as error:
            raise ValueError('{} is not an lz4 block: {}'.format(path, error))
    size = 2 * geometry.quads
    if len(raw) % size:
        raise MalformedStreamError(len(raw) // 2, 'stored frames are not whole scans')
    return [
        decode(stream_from_bytes(raw[offset:offset + size]), index, geometry)
        for index, offset in enumerate(range(0, len(raw), size))
    ]


# explicitly define the outward facing API of this module
__all__ = [
    FrameRecord.__name__,
    RunTrace.__name__,
    saer_digest.__name__,
    write_trace.__name__,
    payload_digest.__name__,
    read_records.__name__,
    read_frames.__name__,
]
