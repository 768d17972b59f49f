"""A functional model of the Sparse Neural Engine (SNE): a layer-by-layer spiking CNN.

Notes:
    - membranes are 16-bit signed, weights 8-bit signed, leak is an
      arithmetic right shift applied every timestep
    - a FULLY_CONNECTED layer is evaluated as a convolution whose kernel
      covers its whole input
    - inference has no randomness; tiling never changes a result
"""
import os
import enum
import logging
from typing import Any
from typing import Callable
from typing import Dict
from typing import List
from typing import Tuple
from typing import Optional
from typing import Sequence
from typing import NamedTuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field

import numpy as np
import yaml
from numpy.lib.stride_tricks import sliding_window_view


logger = logging.getLogger(__name__)


# the range of the 16-bit membrane registers
MEMBRANE_MIN = -2**15
MEMBRANE_MAX = 2**15 - 1


class LayerKind(enum.Enum):
    """The layer types SNE executes."""

    CONV = 'conv'
    FULLY_CONNECTED = 'fc'


class InfeasibleBudgetError(ValueError):
    """A memory budget too small to hold even the smallest tile."""


@dataclass(frozen=True)
class SnnLayerConfig:
    """The per-layer hyperparameters loaded into the engine before execution."""

    kind: LayerKind
    in_channels: int
    out_channels: int
    in_height: int
    in_width: int
    kernel: Tuple[int, int] = (1, 1)
    stride: int = 1
    padding: int = 0
    # the potential neurons are reset to after firing
    base_potential: int = 0
    threshold: int = 64
    # (per-spike increment, per-step decay) of the effective threshold
    threshold_adapt: Tuple[int, int] = (0, 0)
    # the minimum number of silent steps between two spikes of a neuron
    refractory_steps: int = 0
    # the right shift applied to every membrane each timestep
    timestep_shift: int = 0
    name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'kind', LayerKind(self.kind))
        if self.kind == LayerKind.FULLY_CONNECTED:
            object.__setattr__(self, 'kernel', (self.in_height, self.in_width))
            object.__setattr__(self, 'stride', 1)
            object.__setattr__(self, 'padding', 0)
        object.__setattr__(self, 'kernel', tuple(int(k) for k in self.kernel))
        object.__setattr__(self, 'threshold_adapt', tuple(int(a) for a in self.threshold_adapt))
        if min(self.in_channels, self.out_channels, self.in_height, self.in_width) <= 0:
            raise ValueError('layer {!r} dimensions must be positive.'.format(self.name))
        if len(self.kernel) != 2 or min(self.kernel) <= 0:
            raise ValueError('layer {!r} kernel must be two positive sizes.'.format(self.name))
        if self.stride <= 0 or self.padding < 0:
            raise ValueError('layer {!r} needs a positive stride and non-negative padding.'.format(self.name))
        if self.out_height <= 0 or self.out_width <= 0:
            raise ValueError('layer {!r} kernel does not fit its input.'.format(self.name))
        if not MEMBRANE_MIN <= self.base_potential < self.threshold <= MEMBRANE_MAX:
            raise ValueError('layer {!r} threshold must exceed base_potential within 16 bits.'.format(self.name))
        if self.threshold <= 0:
            raise ValueError('layer {!r} threshold must be positive.'.format(self.name))
        if len(self.threshold_adapt) != 2 or min(self.threshold_adapt) < 0:
            raise ValueError('layer {!r} threshold_adapt must be two non-negative steps.'.format(self.name))
        if self.refractory_steps < 0:
            raise ValueError('layer {!r} refractory_steps must be non-negative.'.format(self.name))
        if self.timestep_shift < 0:
            raise ValueError('layer {!r} timestep_shift must be non-negative.'.format(self.name))

    @property
    def adapt_increment(self) -> int:
        return self.threshold_adapt[0]

    @property
    def adapt_decay(self) -> int:
        return self.threshold_adapt[1]

    @property
    def out_height(self) -> int:
        return (self.in_height + 2 * self.padding - self.kernel[0]) // self.stride + 1

    @property
    def out_width(self) -> int:
        return (self.in_width + 2 * self.padding - self.kernel[1]) // self.stride + 1

    @property
    def input_shape(self) -> Tuple[int, int, int]:
        return self.in_channels, self.in_height, self.in_width

    @property
    def output_shape(self) -> Tuple[int, int, int]:
        return self.out_channels, self.out_height, self.out_width

    @property
    def weight_shape(self) -> Tuple[int, int, int, int]:
        return (self.out_channels, self.in_channels) + self.kernel

    @property
    def kernel_footprint(self) -> int:
        """Return the weight entries one output channel keeps in kernel memory."""
        return self.in_channels * self.kernel[0] * self.kernel[1]


@dataclass(frozen=True, eq=False)
class SnnLayer:
    """A layer configuration and its int8 weights in (out, in, kh, kw) order."""

    config: SnnLayerConfig
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights)
        if weights.shape != self.config.weight_shape:
            msg = 'layer {!r} weights have shape {}, expected {}.'
            raise ValueError(msg.format(self.config.name, weights.shape, self.config.weight_shape))
        if weights.size and (weights.min() < -128 or weights.max() > 127):
            raise ValueError('layer {!r} weights must be 8-bit signed.'.format(self.config.name))
        weights = weights.astype(np.int8)
        weights.flags.writeable = False
        object.__setattr__(self, 'weights', weights)


#
# MARK: Spikes
#


def _canonical(coordinates: np.ndarray) -> np.ndarray:
    """Return spike coordinates as a sorted (n, 3) int64 array."""
    coordinates = np.asarray(coordinates, dtype=np.int64).reshape(-1, 3)
    order = np.lexsort((coordinates[:, 2], coordinates[:, 1], coordinates[:, 0]))
    coordinates = coordinates[order]
    coordinates.flags.writeable = False
    return coordinates


@dataclass(frozen=True, eq=False)
class SpikeTensor:
    """Per-timestep sets of (channel, y, x) spike coordinates."""

    shape: Tuple[int, int, int]
    steps: int
    spikes: Tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, 'shape', tuple(int(s) for s in self.shape))
        if len(self.shape) != 3 or min(self.shape) <= 0:
            raise ValueError('spike tensor shape must be three positive sizes, got {}.'.format(self.shape))
        if self.steps < 0:
            raise ValueError('steps must be non-negative, got {}.'.format(self.steps))
        spikes = tuple(_canonical(step) for step in self.spikes) if self.spikes else ()
        if not spikes:
            spikes = tuple(_canonical(np.empty((0, 3))) for _ in range(self.steps))
        if len(spikes) != self.steps:
            raise ValueError('spike tensor holds {} timesteps, expected {}.'.format(len(spikes), self.steps))
        limits = np.array(self.shape)
        for t, step in enumerate(spikes):
            if step.size and (step.min() < 0 or np.any(step.max(axis=0) >= limits)):
                raise ValueError('spike outside {} at timestep {}.'.format(self.shape, t))
            if len(step) > 1 and np.any(np.all(step[1:] == step[:-1], axis=1)):
                raise ValueError('duplicate spike coordinate at timestep {}.'.format(t))
        object.__setattr__(self, 'spikes', spikes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpikeTensor):
            return NotImplemented
        return (
            self.shape == other.shape and
            self.steps == other.steps and
            all(np.array_equal(a, b) for a, b in zip(self.spikes, other.spikes))
        )

    __hash__ = None

    @classmethod
    def empty(cls, shape: Tuple[int, int, int], steps: int) -> 'SpikeTensor':
        """Return a tensor without spikes."""
        return cls(shape, steps)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> 'SpikeTensor':
        """Build a tensor from a (steps, channels, height, width) array of 0/1."""
        dense = np.asarray(dense)
        if dense.ndim != 4:
            raise ValueError('dense spikes must have 4 dimensions, got {}.'.format(dense.ndim))
        spikes = tuple(np.argwhere(step) for step in dense)
        return cls(dense.shape[1:], dense.shape[0], spikes)

    def dense_step(self, t: int) -> np.ndarray:
        """Return timestep t as a (channels, height, width) int64 array of 0/1."""
        dense = np.zeros(self.shape, dtype=np.int64)
        step = self.spikes[t]
        dense[step[:, 0], step[:, 1], step[:, 2]] = 1
        return dense

    def to_dense(self) -> np.ndarray:
        """Return the tensor as a (steps, channels, height, width) uint8 array."""
        dense = np.zeros((self.steps,) + self.shape, dtype=np.uint8)
        for t, step in enumerate(self.spikes):
            dense[t, step[:, 0], step[:, 1], step[:, 2]] = 1
        return dense

    def count(self) -> int:
        """Return the total number of spikes."""
        return sum(len(step) for step in self.spikes)

    def totals(self) -> np.ndarray:
        """Return the number of spikes of every coordinate over all timesteps."""
        totals = np.zeros(self.shape, dtype=np.int64)
        for step in self.spikes:
            np.add.at(totals, (step[:, 0], step[:, 1], step[:, 2]), 1)
        return totals


#
# MARK: Neurons
#


@dataclass(frozen=True)
class NeuronState:
    """The registers of one neuron."""

    membrane: int
    eff_threshold: int
    refractory_remaining: int = 0

    @classmethod
    def initial(cls, cfg: SnnLayerConfig) -> 'NeuronState':
        """Return a neuron at rest."""
        return cls(cfg.base_potential, cfg.threshold, 0)


class _Registers:
    """The neuron registers of a whole layer as int64 arrays."""

    def __init__(self, cfg: SnnLayerConfig, shape: Tuple[int, ...]):
        self.membrane = np.full(shape, cfg.base_potential, dtype=np.int64)
        self.eff_threshold = np.full(shape, cfg.threshold, dtype=np.int64)
        self.refractory = np.zeros(shape, dtype=np.int64)

    def window(self, index: Tuple[slice, ...]) -> '_Registers':
        """Return a view of the registers of a sub-block of neurons."""
        view = _Registers.__new__(_Registers)
        view.membrane = self.membrane[index]
        view.eff_threshold = self.eff_threshold[index]
        view.refractory = self.refractory[index]
        return view


def _step(registers: _Registers, cfg: SnnLayerConfig, drive: np.ndarray) -> np.ndarray:
    """Advance every neuron of registers by one timestep in place and return the spikes."""
    np.maximum(registers.eff_threshold - cfg.adapt_decay, cfg.threshold, out=registers.eff_threshold)
    resting = registers.refractory > 0
    registers.refractory[resting] -= 1
    integrated = np.clip((registers.membrane >> cfg.timestep_shift) + drive, MEMBRANE_MIN, MEMBRANE_MAX)
    # input that arrives during the refractory period is discarded
    np.copyto(registers.membrane, integrated, where=~resting)
    spiked = ~resting & (registers.membrane >= registers.eff_threshold)
    registers.membrane[spiked] = cfg.base_potential
    registers.refractory[spiked] = cfg.refractory_steps
    registers.eff_threshold[spiked] = np.minimum(registers.eff_threshold[spiked] + cfg.adapt_increment, MEMBRANE_MAX)
    return spiked


class LayerState(NamedTuple):
    """Read-only copies of a layer's registers after one timestep."""

    step: int
    membrane: np.ndarray
    eff_threshold: np.ndarray
    refractory_remaining: np.ndarray
    spiked: np.ndarray


# called once per timestep with the state of every neuron of the layer
StateMonitor = Callable[[LayerState], None]


def _snapshot(registers: _Registers, step: int, spiked: np.ndarray) -> LayerState:
    """Return a frozen copy of the registers."""
    arrays = [registers.membrane.copy(), registers.eff_threshold.copy(), registers.refractory.copy(), spiked.copy()]
    for array in arrays:
        array.flags.writeable = False
    return LayerState(step, *arrays)


def step_neuron(state: NeuronState, cfg: SnnLayerConfig, weighted_input: int) -> Tuple[NeuronState, bool]:
    """
    Advance one neuron by one timestep.

    Args:
        state: the neuron before the step
        cfg: the layer hyperparameters
        weighted_input: the sum of weights of the spikes reaching the neuron

    Returns:
        a tuple of:
        - (NeuronState) the neuron after the step
        - (bool) whether the neuron fired

    """
    registers = _Registers(cfg, (1,))
    registers.membrane[0] = state.membrane
    registers.eff_threshold[0] = state.eff_threshold
    registers.refractory[0] = state.refractory_remaining
    spiked = _step(registers, cfg, np.array([weighted_input], dtype=np.int64))
    after = NeuronState(
        membrane=int(registers.membrane[0]),
        eff_threshold=int(registers.eff_threshold[0]),
        refractory_remaining=int(registers.refractory[0]),
    )
    return after, bool(spiked[0])


#
# MARK: Layers
#


def _windows(spikes: np.ndarray, cfg: SnnLayerConfig) -> np.ndarray:
    """Return the receptive fields of every output position as (C, OH, OW, kh, kw)."""
    if cfg.padding:
        pad = cfg.padding
        spikes = np.pad(spikes, ((0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(spikes, cfg.kernel, axis=(1, 2))
    return windows[:, ::cfg.stride, ::cfg.stride][:, :cfg.out_height, :cfg.out_width]


def _drive(windows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Return the weighted input of every output neuron, (O, OH, OW)."""
    return np.tensordot(weights.astype(np.int64), windows, axes=([1, 2, 3], [0, 3, 4]))


def _check_input(layer: SnnLayer, spikes: SpikeTensor, steps: int) -> None:
    """Raise a ValueError if the input does not fit the layer."""
    if spikes.shape != layer.config.input_shape:
        msg = 'layer {!r} expects input {}, got {}.'
        raise ValueError(msg.format(layer.config.name, layer.config.input_shape, spikes.shape))
    if steps < 0:
        raise ValueError('steps must be non-negative, got {}.'.format(steps))


def run_layer(
    layer: SnnLayer,
    spikes: SpikeTensor,
    steps: int,
    monitor: Optional[StateMonitor] = None,
) -> SpikeTensor:
    """
    Execute one layer over a spike stream.

    Args:
        layer: the configured layer and its weights
        spikes: the input stream, timesteps past its end carry no spikes
        steps: the number of timesteps to execute
        monitor: an optional callback receiving the layer state after every step

    Returns:
        the spikes emitted by the layer's neurons

    """
    _check_input(layer, spikes, steps)
    cfg = layer.config
    registers = _Registers(cfg, cfg.output_shape)
    output = []
    for t in range(steps):
        if t < spikes.steps and len(spikes.spikes[t]):
            drive = _drive(_windows(spikes.dense_step(t), cfg), layer.weights)
        else:
            drive = np.zeros(cfg.output_shape, dtype=np.int64)
        spiked = _step(registers, cfg, drive)
        if monitor is not None:
            monitor(_snapshot(registers, t, spiked))
        output.append(np.argwhere(spiked))
    return SpikeTensor(cfg.output_shape, steps, tuple(output))


#
# MARK: Tiling
#


@dataclass(frozen=True)
class Tile:
    """A block of output neurons: [start, stop) ranges of channels, rows, columns."""

    channels: Tuple[int, int]
    rows: Tuple[int, int]
    cols: Tuple[int, int]

    @property
    def index(self) -> Tuple[slice, slice, slice]:
        return slice(*self.channels), slice(*self.rows), slice(*self.cols)

    @property
    def neurons(self) -> int:
        return (
            (self.channels[1] - self.channels[0]) *
            (self.rows[1] - self.rows[0]) *
            (self.cols[1] - self.cols[0])
        )

    def kernel_footprint(self, cfg: SnnLayerConfig) -> int:
        """Return the weight entries the tile keeps in kernel memory."""
        return (self.channels[1] - self.channels[0]) * cfg.kernel_footprint


@dataclass(frozen=True)
class TilePlan:
    """A partition of a layer's output neurons into tiles that fit the engine."""

    tiles: Tuple[Tile, ...]
    kernel_memory_budget: int
    neuron_memory_budget: Optional[int] = None

    def validate(self, cfg: SnnLayerConfig) -> None:
        """Raise a ValueError unless the tiles partition the output within budget."""
        cover = np.zeros(cfg.output_shape, dtype=np.int64)
        for tile in self.tiles:
            if tile.kernel_footprint(cfg) > self.kernel_memory_budget:
                raise ValueError('tile {} exceeds the kernel memory budget.'.format(tile))
            if self.neuron_memory_budget is not None and tile.neurons > self.neuron_memory_budget:
                raise ValueError('tile {} exceeds the neuron memory budget.'.format(tile))
            cover[tile.index] += 1
        if not np.all(cover == 1):
            raise ValueError('tiles do not cover layer {!r} exactly once.'.format(cfg.name))


def _bands(stop: int, size: int) -> List[Tuple[int, int]]:
    """Return [start, stop) bands of at most size covering [0, stop)."""
    return [(start, min(start + size, stop)) for start in range(0, stop, size)]


def plan_tiles(
    cfg: SnnLayerConfig,
    kernel_memory_budget: int,
    neuron_memory_budget: Optional[int] = None,
) -> TilePlan:
    """
    Split a layer into tiles that fit the engine's memories.

    Args:
        cfg: the layer to split
        kernel_memory_budget: the weight entries the kernel memory holds
        neuron_memory_budget: the output neurons a tile may keep resident,
            None for no limit

    Returns:
        tiles ordered channel-major then row-major

    """
    if kernel_memory_budget < cfg.kernel_footprint:
        msg = 'kernel memory budget {} below the {} weights of one output channel of {!r}.'
        raise InfeasibleBudgetError(msg.format(kernel_memory_budget, cfg.kernel_footprint, cfg.name))
    if neuron_memory_budget is not None and neuron_memory_budget < 1:
        raise InfeasibleBudgetError('neuron memory budget must hold at least one neuron.')
    per_tile = min(cfg.out_channels, kernel_memory_budget // cfg.kernel_footprint)
    if neuron_memory_budget is not None:
        per_tile = min(per_tile, neuron_memory_budget)
    height, width = cfg.out_height, cfg.out_width
    tiles = []
    for channels in _bands(cfg.out_channels, per_tile):
        depth = channels[1] - channels[0]
        if neuron_memory_budget is None or depth * height * width <= neuron_memory_budget:
            tiles.append(Tile(channels, (0, height), (0, width)))
        elif depth * width <= neuron_memory_budget:
            rows_per_tile = neuron_memory_budget // (depth * width)
            tiles.extend(Tile(channels, rows, (0, width)) for rows in _bands(height, rows_per_tile))
        else:
            cols_per_tile = neuron_memory_budget // depth
            for row in range(height):
                tiles.extend(Tile(channels, (row, row + 1), cols) for cols in _bands(width, cols_per_tile))
    logger.debug('layer %r: %d tiles', cfg.name, len(tiles))
    return TilePlan(tuple(tiles), kernel_memory_budget, neuron_memory_budget)


def run_layer_tiled(
    layer: SnnLayer,
    spikes: SpikeTensor,
    steps: int,
    plan: TilePlan,
    max_workers: Optional[int] = None,
    monitor: Optional[StateMonitor] = None,
) -> SpikeTensor:
    """
    Execute one layer tile by tile.

    Args:
        layer: the configured layer and its weights
        spikes: the input stream
        steps: the number of timesteps to execute
        plan: a valid tile plan of the layer
        max_workers: threads computing tile drives, None to run inline
        monitor: an optional callback receiving the merged layer state after every step

    Returns:
        the same spikes as run_layer

    """
    _check_input(layer, spikes, steps)
    cfg = layer.config
    plan.validate(cfg)
    registers = _Registers(cfg, cfg.output_shape)
    views = [registers.window(tile.index) for tile in plan.tiles]
    offsets = [np.array([t.channels[0], t.rows[0], t.cols[0]]) for t in plan.tiles]
    pool = ThreadPoolExecutor(max_workers) if max_workers else None

    def tile_drive(tile: Tile, windows: Optional[np.ndarray]) -> np.ndarray:
        if windows is None:
            return np.zeros(registers.membrane[tile.index].shape, dtype=np.int64)
        fields = windows[:, slice(*tile.rows), slice(*tile.cols)]
        return _drive(fields, layer.weights[slice(*tile.channels)])

    try:
        output = []
        for t in range(steps):
            windows = None
            if t < spikes.steps and len(spikes.spikes[t]):
                windows = _windows(spikes.dense_step(t), cfg)
            if pool is None:
                drives = [tile_drive(tile, windows) for tile in plan.tiles]
            else:
                drives = list(pool.map(tile_drive, plan.tiles, [windows] * len(plan.tiles)))
            # merge in tile order
            fired = [np.argwhere(_step(view, cfg, drive)) + offset for view, drive, offset in zip(views, drives, offsets)]
            fired = np.concatenate(fired) if fired else np.empty((0, 3), dtype=np.int64)
            if monitor is not None:
                spiked = np.zeros(cfg.output_shape, dtype=bool)
                spiked[tuple(fired.T)] = True
                monitor(_snapshot(registers, t, spiked))
            output.append(fired)
    finally:
        if pool is not None:
            pool.shutdown()
    return SpikeTensor(cfg.output_shape, steps, tuple(output))


#
# MARK: Networks
#


# polarity planes of the DVS132S: ON, OFF
DVS_INPUT_SHAPE = (2, 104, 132)


@dataclass(frozen=True, eq=False)
class SnnNetwork:
    """An ordered stack of layers whose shapes chain from the input."""

    layers: Tuple[SnnLayer, ...]
    input_shape: Tuple[int, int, int] = DVS_INPUT_SHAPE
    kernel_memory_budget: Optional[int] = None
    neuron_memory_budget: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'layers', tuple(self.layers))
        object.__setattr__(self, 'input_shape', tuple(self.input_shape))
        if not self.layers:
            raise ValueError('a network needs at least one layer.')
        shape = self.input_shape
        for layer in self.layers:
            if layer.config.input_shape != shape:
                msg = 'layer {!r} expects input {}, previous stage produces {}.'
                raise ValueError(msg.format(layer.config.name, layer.config.input_shape, shape))
            shape = layer.config.output_shape

    @property
    def output_shape(self) -> Tuple[int, int, int]:
        return self.layers[-1].config.output_shape

    @property
    def kinds(self) -> Tuple[LayerKind, ...]:
        return tuple(layer.config.kind for layer in self.layers)


class NetworkResult(NamedTuple):
    """The output streams of every layer and the final per-neuron spike counts."""

    layer_outputs: Tuple[SpikeTensor, ...]
    class_counts: np.ndarray


def _debug_monitor(name: str) -> StateMonitor:
    """Return a monitor logging the spikes and peak membrane of every step."""
    def monitor(state: LayerState) -> None:
        logger.debug(
            'layer %r step %d: %d spikes, peak membrane %d',
            name, state.step, int(state.spiked.sum()), int(state.membrane.max(initial=MEMBRANE_MIN)),
        )
    return monitor


def simulate_network(net: SnnNetwork, spikes: SpikeTensor, steps: int) -> NetworkResult:
    """
    Execute every layer in order, each consuming the previous layer's stream.

    Args:
        net: the network
        spikes: the input stream of shape net.input_shape
        steps: the number of timesteps to execute every layer for

    Returns:
        the per-layer streams and the final layer's spike count per neuron

    """
    if spikes.shape != net.input_shape:
        raise ValueError('network expects input {}, got {}.'.format(net.input_shape, spikes.shape))
    outputs = []
    stream = spikes
    for layer in net.layers:
        monitor = _debug_monitor(layer.config.name) if logger.isEnabledFor(logging.DEBUG) else None
        if net.kernel_memory_budget is None:
            stream = run_layer(layer, stream, steps, monitor=monitor)
        else:
            plan = plan_tiles(layer.config, net.kernel_memory_budget, net.neuron_memory_budget)
            stream = run_layer_tiled(layer, stream, steps, plan, monitor=monitor)
        logger.info('layer %r: %d spikes', layer.config.name, stream.count())
        outputs.append(stream)
    return NetworkResult(tuple(outputs), stream.totals().ravel())


def run_network(net: SnnNetwork, spikes: SpikeTensor, steps: int) -> np.ndarray:
    """Return the final layer's spike count per output neuron over all steps."""
    return simulate_network(net, spikes, steps).class_counts


#
# MARK: Weights and network files
#


def seeded_weights(shape: Tuple[int, ...], seed: int) -> np.ndarray:
    """Return reproducible int8 weights skewed towards excitation."""
    return np.random.default_rng(seed).integers(-16, 48, size=shape, dtype=np.int8)


def _layer_config(entry: Dict[str, Any], shape: Tuple[int, int, int], source: str) -> SnnLayerConfig:
    """Build a layer configuration from one `layers` entry of a network file."""
    known = {
        'name', 'kind', 'out_channels', 'kernel', 'stride', 'padding', 'base_potential',
        'threshold', 'threshold_adapt', 'refractory_steps', 'timestep_shift',
        'weights', 'weights_seed',
    }
    name = entry.get('name', '')
    unknown = set(entry) - known
    if unknown:
        raise ValueError('{}: layer {!r} contains unknown key(s): {}.'.format(source, name, ', '.join(sorted(unknown))))
    for key in ('kind', 'out_channels'):
        if key not in entry:
            raise ValueError('{}: layer {!r} is missing `{}`.'.format(source, name, key))
    options = {key: entry[key] for key in known - {'weights', 'weights_seed', 'name', 'kind'} if key in entry}
    try:
        kind = LayerKind(entry['kind'])
    except ValueError:
        raise ValueError('{}: layer {!r} has unknown kind {!r}.'.format(source, name, entry['kind']))
    return SnnLayerConfig(
        kind=kind,
        in_channels=shape[0],
        in_height=shape[1],
        in_width=shape[2],
        name=name,
        **options,
    )


def _layer_weights(entry: Dict[str, Any], cfg: SnnLayerConfig, directory: str, source: str) -> np.ndarray:
    """Load or generate the weights named by a `layers` entry."""
    if ('weights' in entry) == ('weights_seed' in entry):
        raise ValueError('{}: layer {!r} needs exactly one of `weights` or `weights_seed`.'.format(source, cfg.name))
    if 'weights_seed' in entry:
        return seeded_weights(cfg.weight_shape, int(entry['weights_seed']))
    path = os.path.join(directory, entry['weights'])
    if not os.path.exists(path):
        raise ValueError('weights points to non-existent file: {}.'.format(path))
    blob = np.fromfile(path, dtype=np.int8)
    if blob.size != int(np.prod(cfg.weight_shape)):
        msg = '{} holds {} weights, layer {!r} needs {}.'
        raise ValueError(msg.format(path, blob.size, cfg.name, int(np.prod(cfg.weight_shape))))
    return blob.reshape(cfg.weight_shape)


def load_network(path: str) -> SnnNetwork:
    """
    Load a network description file and the weights it references.

    Args:
        path: the YAML network description; weight paths are relative to it

    Returns:
        the network

    """
    if not os.path.exists(path):
        raise ValueError('network points to non-existent file: {}.'.format(path))
    with open(path) as stream:
        document = yaml.safe_load(stream) or {}
    if not isinstance(document, dict):
        raise ValueError('{}: network description must be a mapping.'.format(path))
    unknown = set(document) - {'input', 'layers', 'kernel_memory_budget', 'neuron_memory_budget'}
    if unknown:
        raise ValueError('{}: network contains unknown key(s): {}.'.format(path, ', '.join(sorted(unknown))))
    if not document.get('layers'):
        raise ValueError('{}: network does not contain `layers`.'.format(path))
    geometry = document.get('input', {})
    shape = (
        int(geometry.get('channels', DVS_INPUT_SHAPE[0])),
        int(geometry.get('height', DVS_INPUT_SHAPE[1])),
        int(geometry.get('width', DVS_INPUT_SHAPE[2])),
    )
    directory = os.path.dirname(os.path.abspath(path))
    layers = []
    current = shape
    for entry in document['layers']:
        cfg = _layer_config(entry, current, path)
        layers.append(SnnLayer(cfg, _layer_weights(entry, cfg, directory, path)))
        current = cfg.output_shape
    logger.info('loaded network %s with %d layers', path, len(layers))
    return SnnNetwork(
        layers=tuple(layers),
        input_shape=shape,
        kernel_memory_budget=document.get('kernel_memory_budget'),
        neuron_memory_budget=document.get('neuron_memory_budget'),
    )


def save_network(net: SnnNetwork, path: str) -> None:
    """
    Write a network description file with one flat int8 weight blob per layer.

    Args:
        net: the network to write
        path: the YAML file to create; blobs are written next to it

    Returns:
        None

    """
    directory = os.path.dirname(os.path.abspath(path))
    entries = []
    for index, layer in enumerate(net.layers):
        cfg = layer.config
        name = cfg.name or 'layer{}'.format(index)
        blob = '{}.bin'.format(name)
        layer.weights.astype(np.int8).tofile(os.path.join(directory, blob))
        entry = {
            'name': name,
            'kind': cfg.kind.value,
            'out_channels': cfg.out_channels,
            'base_potential': cfg.base_potential,
            'threshold': cfg.threshold,
            'threshold_adapt': list(cfg.threshold_adapt),
            'refractory_steps': cfg.refractory_steps,
            'timestep_shift': cfg.timestep_shift,
            'weights': blob,
        }
        if cfg.kind == LayerKind.CONV:
            entry.update(kernel=list(cfg.kernel), stride=cfg.stride, padding=cfg.padding)
        entries.append(entry)
    document = {
        'input': dict(zip(('channels', 'height', 'width'), net.input_shape)),
        'kernel_memory_budget': net.kernel_memory_budget,
        'neuron_memory_budget': net.neuron_memory_budget,
        'layers': entries,
    }
    with open(path, 'w') as stream:
        yaml.safe_dump(document, stream, sort_keys=False)


def reference_network(seed: int = 0, kernel_memory_budget: Optional[int] = None) -> SnnNetwork:
    """
    Return the two-convolution, two-fully-connected reference network.

    Args:
        seed: layer i draws its weights from seeded_weights(shape, seed + i + 1)
        kernel_memory_budget: the kernel memory of the engine, None to run untiled

    Returns:
        conv 2->8 3x3/2, conv 8->16 3x3/2, fc -> 64, fc -> 4

    """
    topology: Sequence[Dict[str, Any]] = (
        dict(name='conv1', kind=LayerKind.CONV, out_channels=8, kernel=(3, 3), stride=2, padding=1,
             threshold=64, threshold_adapt=(4, 1), refractory_steps=1, timestep_shift=1),
        dict(name='conv2', kind=LayerKind.CONV, out_channels=16, kernel=(3, 3), stride=2, padding=1,
             threshold=96, threshold_adapt=(4, 1), refractory_steps=1, timestep_shift=1),
        dict(name='fc1', kind=LayerKind.FULLY_CONNECTED, out_channels=64,
             threshold=512, threshold_adapt=(8, 1), refractory_steps=1, timestep_shift=1),
        dict(name='fc2', kind=LayerKind.FULLY_CONNECTED, out_channels=4,
             threshold=128, threshold_adapt=(0, 0), refractory_steps=0, timestep_shift=1),
    )
    layers = []
    shape = DVS_INPUT_SHAPE
    for index, options in enumerate(topology):
        cfg = SnnLayerConfig(in_channels=shape[0], in_height=shape[1], in_width=shape[2], **options)
        layers.append(SnnLayer(cfg, seeded_weights(cfg.weight_shape, seed + index + 1)))
        shape = cfg.output_shape
    return SnnNetwork(tuple(layers), DVS_INPUT_SHAPE, kernel_memory_budget)


# explicitly define the outward facing API of this module
__all__ = [
    LayerKind.__name__,
    InfeasibleBudgetError.__name__,
    SnnLayerConfig.__name__,
    SnnLayer.__name__,
    SpikeTensor.__name__,
    NeuronState.__name__,
    LayerState.__name__,
    Tile.__name__,
    TilePlan.__name__,
    SnnNetwork.__name__,
    NetworkResult.__name__,
    step_neuron.__name__,
    run_layer.__name__,
    plan_tiles.__name__,
    run_layer_tiled.__name__,
    simulate_network.__name__,
    run_network.__name__,
    seeded_weights.__name__,
    load_network.__name__,
    save_network.__name__,
    reference_network.__name__,
]
