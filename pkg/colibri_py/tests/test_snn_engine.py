"""Test cases for the spiking network engine."""
import os
import tempfile
from unittest import TestCase

import numpy as np
from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from colibri_py.snn_engine import InfeasibleBudgetError
from colibri_py.snn_engine import MEMBRANE_MAX
from colibri_py.snn_engine import MEMBRANE_MIN
from colibri_py.snn_engine import LayerKind
from colibri_py.snn_engine import NeuronState
from colibri_py.snn_engine import SnnLayer
from colibri_py.snn_engine import SnnLayerConfig
from colibri_py.snn_engine import SnnNetwork
from colibri_py.snn_engine import SpikeTensor
from colibri_py.snn_engine import Tile
from colibri_py.snn_engine import TilePlan
from colibri_py.snn_engine import load_network
from colibri_py.snn_engine import plan_tiles
from colibri_py.snn_engine import reference_network
from colibri_py.snn_engine import run_layer
from colibri_py.snn_engine import run_layer_tiled
from colibri_py.snn_engine import run_network
from colibri_py.snn_engine import save_network
from colibri_py.snn_engine import simulate_network
from colibri_py.snn_engine import step_neuron
from colibri_py.tests.fixture_path import fixture_path


def neuron_config(**overrides):
    """Return a single-neuron 1x1 layer configuration."""
    options = dict(
        kind=LayerKind.CONV, in_channels=1, out_channels=1, in_height=1, in_width=1,
        threshold=10, base_potential=0,
    )
    options.update(overrides)
    return SnnLayerConfig(**options)


def random_layer(rng, **overrides):
    """Return a random small layer with int8 weights."""
    kind = LayerKind.CONV if rng.random() < 0.75 else LayerKind.FULLY_CONNECTED
    kernel = int(rng.integers(1, 4))
    options = dict(
        kind=kind,
        in_channels=int(rng.integers(1, 5)),
        out_channels=int(rng.integers(1, 17)),
        in_height=int(rng.integers(3, 17)),
        in_width=int(rng.integers(3, 17)),
        kernel=(kernel, kernel),
        stride=int(rng.integers(1, 3)),
        padding=int(rng.integers(0, 2)),
        base_potential=int(rng.integers(-4, 4)),
        threshold=int(rng.integers(8, 40)),
        threshold_adapt=(int(rng.integers(0, 5)), int(rng.integers(0, 3))),
        refractory_steps=int(rng.integers(0, 3)),
        timestep_shift=int(rng.integers(0, 3)),
    )
    options.update(overrides)
    cfg = SnnLayerConfig(**options)
    return SnnLayer(cfg, rng.integers(-20, 40, size=cfg.weight_shape))


def random_input(rng, shape, steps, density=0.3):
    """Return a random spike tensor."""
    return SpikeTensor.from_dense(rng.random((steps,) + tuple(shape)) < density)


class ShouldValidateLayerConfig(TestCase):
    def test_threshold_above_base(self):
        self.assertRaises(ValueError, neuron_config, threshold=5, base_potential=5)

    def test_non_negative_counts(self):
        self.assertRaises(ValueError, neuron_config, refractory_steps=-1)
        self.assertRaises(ValueError, neuron_config, timestep_shift=-1)
        self.assertRaises(ValueError, neuron_config, threshold_adapt=(-1, 0))

    def test_kernel_fits(self):
        self.assertRaises(ValueError, neuron_config, kernel=(2, 2))

    def test_output_shape(self):
        cfg = SnnLayerConfig(LayerKind.CONV, 2, 8, 104, 132, (3, 3), stride=2, padding=1)
        self.assertEqual((8, 52, 66), cfg.output_shape)

    def test_fully_connected_covers_input(self):
        cfg = SnnLayerConfig(LayerKind.FULLY_CONNECTED, 16, 64, 26, 33, kernel=(3, 3), stride=2)
        self.assertEqual((26, 33), cfg.kernel)
        self.assertEqual((64, 1, 1), cfg.output_shape)
        self.assertEqual(13728, cfg.kernel_footprint)

    def test_weight_shape(self):
        cfg = neuron_config()
        self.assertRaises(ValueError, SnnLayer, cfg, np.zeros((1, 1, 2, 2)))
        self.assertRaises(ValueError, SnnLayer, cfg, np.full((1, 1, 1, 1), 200))


class ShouldStepNeurons(TestCase):
    def test_zero_input(self):
        cfg = neuron_config(timestep_shift=1)
        state = NeuronState.initial(cfg)
        for _ in range(20):
            state, spiked = step_neuron(state, cfg, 0)
            self.assertFalse(spiked)
            self.assertEqual(cfg.base_potential, state.membrane)

    def test_refractory_trace(self):
        cfg = neuron_config(refractory_steps=2)
        state = NeuronState.initial(cfg)
        spikes = []
        for _ in range(4):
            state, spiked = step_neuron(state, cfg, 50)
            spikes.append(spiked)
            if spiked:
                self.assertEqual(cfg.base_potential, state.membrane)
        self.assertEqual([True, False, False, True], spikes)

    def test_refractory_discards_input(self):
        cfg = neuron_config(refractory_steps=1, threshold=10)
        state, _ = step_neuron(NeuronState.initial(cfg), cfg, 10)
        state, spiked = step_neuron(state, cfg, 9)
        self.assertFalse(spiked)
        self.assertEqual(0, state.membrane)
        self.assertEqual(0, state.refractory_remaining)

    def test_shift_halves(self):
        cfg = neuron_config(timestep_shift=1, threshold=1000)
        state = NeuronState(membrane=100, eff_threshold=1000)
        membranes = []
        for _ in range(4):
            state, _ = step_neuron(state, cfg, 0)
            membranes.append(state.membrane)
        self.assertEqual([50, 25, 12, 6], membranes)

    def test_shift_floors_negative(self):
        cfg = neuron_config(timestep_shift=1)
        state, _ = step_neuron(NeuronState(-5, 10), cfg, 0)
        self.assertEqual(-3, state.membrane)

    def test_threshold_adaptation(self):
        cfg = neuron_config(threshold=10, threshold_adapt=(6, 2))
        state, spiked = step_neuron(NeuronState.initial(cfg), cfg, 10)
        self.assertTrue(spiked)
        self.assertEqual(16, state.eff_threshold)
        state, _ = step_neuron(state, cfg, 0)
        self.assertEqual(14, state.eff_threshold)
        for _ in range(5):
            state, _ = step_neuron(state, cfg, 0)
        self.assertEqual(10, state.eff_threshold)

    def test_membrane_saturates(self):
        cfg = neuron_config(threshold=2**15 - 1)
        state, spiked = step_neuron(NeuronState.initial(cfg), cfg, 10**6)
        self.assertTrue(spiked)
        state, _ = step_neuron(NeuronState(0, 2**15 - 1), neuron_config(threshold=100), -10**6)
        self.assertEqual(-2**15, state.membrane)


class ShouldHoldSpikeTensors(TestCase):
    def test_rejects_out_of_range(self):
        self.assertRaises(ValueError, SpikeTensor, (1, 2, 2), 1, (np.array([[0, 2, 0]]),))

    def test_rejects_duplicates(self):
        self.assertRaises(ValueError, SpikeTensor, (1, 2, 2), 1, (np.array([[0, 1, 1], [0, 1, 1]]),))

    def test_rejects_wrong_step_count(self):
        self.assertRaises(ValueError, SpikeTensor, (1, 2, 2), 2, (np.array([[0, 1, 1]]),))

    def test_dense_roundtrip(self):
        rng = np.random.default_rng(1)
        dense = (rng.random((3, 2, 4, 5)) < 0.4).astype(np.uint8)
        tensor = SpikeTensor.from_dense(dense)
        np.testing.assert_array_equal(dense, tensor.to_dense())
        self.assertEqual(int(dense.sum()), tensor.count())
        np.testing.assert_array_equal(dense.sum(axis=0), tensor.totals())

    def test_order_is_canonical(self):
        a = SpikeTensor((2, 2, 2), 1, (np.array([[1, 0, 0], [0, 1, 1]]),))
        b = SpikeTensor((2, 2, 2), 1, (np.array([[0, 1, 1], [1, 0, 0]]),))
        self.assertEqual(a, b)


class ShouldRunLayers(TestCase):
    def test_empty_input(self):
        rng = np.random.default_rng(0)
        layer = random_layer(rng)
        empty = SpikeTensor.empty(layer.config.input_shape, 5)
        self.assertEqual(0, run_layer(layer, empty, 5).count())

    def test_single_synapse(self):
        cfg = SnnLayerConfig(LayerKind.CONV, 1, 1, 4, 4, (1, 1), threshold=12, base_potential=-3)
        layer = SnnLayer(cfg, np.full((1, 1, 1, 1), 15))
        spikes = SpikeTensor((1, 4, 4), 3, (np.empty((0, 3)), np.array([[0, 2, 1]]), np.empty((0, 3))))
        output = run_layer(layer, spikes, 3)
        self.assertEqual(spikes, output)

    def test_zero_weights(self):
        cfg = SnnLayerConfig(LayerKind.FULLY_CONNECTED, 2, 4, 6, 6)
        layer = SnnLayer(cfg, np.zeros(cfg.weight_shape))
        spikes = SpikeTensor.from_dense(np.ones((4, 2, 6, 6)))
        self.assertEqual(0, run_layer(layer, spikes, 4).count())

    def test_geometry_mismatch(self):
        layer = SnnLayer(neuron_config(), np.ones((1, 1, 1, 1)))
        self.assertRaises(ValueError, run_layer, layer, SpikeTensor.empty((1, 2, 2), 1), 1)

    def test_receptive_field_sum(self):
        cfg = SnnLayerConfig(LayerKind.CONV, 1, 1, 3, 3, (3, 3), threshold=6)
        layer = SnnLayer(cfg, np.arange(9).reshape(1, 1, 3, 3))
        # weights 2 and 4 reach the single output neuron
        spikes = SpikeTensor((1, 3, 3), 1, (np.array([[0, 0, 2], [0, 1, 1]]),))
        self.assertEqual(1, run_layer(layer, spikes, 1).count())
        spikes = SpikeTensor((1, 3, 3), 1, (np.array([[0, 0, 2], [0, 0, 1]]),))
        self.assertEqual(0, run_layer(layer, spikes, 1).count())

    def test_steps_beyond_input(self):
        layer = SnnLayer(neuron_config(threshold=10), np.full((1, 1, 1, 1), 10))
        spikes = SpikeTensor.from_dense(np.ones((2, 1, 1, 1)))
        output = run_layer(layer, spikes, 5)
        self.assertEqual(5, output.steps)
        self.assertEqual(2, output.count())


@st.composite
def neuron_configs(draw):
    """Draw a single-neuron configuration over the whole hyperparameter range."""
    threshold = draw(st.integers(1, 400))
    return neuron_config(
        threshold=threshold,
        base_potential=draw(st.integers(-400, threshold - 1)),
        threshold_adapt=(draw(st.integers(0, 50)), draw(st.integers(0, 10))),
        refractory_steps=draw(st.integers(0, 4)),
        timestep_shift=draw(st.integers(0, 4)),
    )


class RegisterChecks:
    """Assertions on the neuron registers of a layer after a timestep."""

    def assert_registers(self, cfg, state):
        spiked = state.spiked
        # a spike resets the membrane to the base potential
        self.assertTrue(np.all(state.membrane[spiked] == cfg.base_potential))
        self.assertTrue(np.all(state.refractory_remaining[spiked] == cfg.refractory_steps))
        # the effective threshold never decays below the configured one
        self.assertTrue(np.all(state.eff_threshold >= cfg.threshold))
        self.assertTrue(np.all(state.eff_threshold <= MEMBRANE_MAX))
        self.assertTrue(np.all((state.membrane >= MEMBRANE_MIN) & (state.membrane <= MEMBRANE_MAX)))
        self.assertTrue(np.all((state.refractory_remaining >= 0) & (state.refractory_remaining <= cfg.refractory_steps)))


class ShouldHonorNeuronInvariants(RegisterChecks, TestCase):
    @settings(max_examples=200, deadline=None)
    @given(
        neuron_configs(),
        st.integers(MEMBRANE_MIN, MEMBRANE_MAX),
        st.integers(0, 500),
        st.lists(st.integers(-2**17, 2**17), min_size=1, max_size=30),
    )
    def test_single_neuron(self, cfg, membrane, threshold_excess, inputs):
        eff_threshold = min(cfg.threshold + threshold_excess, MEMBRANE_MAX)
        state = NeuronState(membrane, eff_threshold, 0)
        for weighted_input in inputs:
            state, spiked = step_neuron(state, cfg, weighted_input)
            if spiked:
                self.assertEqual(cfg.base_potential, state.membrane)
                self.assertEqual(cfg.refractory_steps, state.refractory_remaining)
            self.assertGreaterEqual(state.eff_threshold, cfg.threshold)
            self.assertLessEqual(state.eff_threshold, MEMBRANE_MAX)

    def test_layer_registers(self):
        rng = np.random.default_rng(15)
        for _ in range(60):
            layer = random_layer(rng)
            cfg = layer.config
            steps = int(rng.integers(1, 10))
            spikes = random_input(rng, cfg.input_shape, steps, rng.random())
            states = []
            output = run_layer(layer, spikes, steps, monitor=states.append)
            self.assertEqual([state.step for state in states], list(range(steps)))
            for t, state in enumerate(states):
                self.assert_registers(cfg, state)
                np.testing.assert_array_equal(output.dense_step(t).astype(bool), state.spiked)

    def test_tiled_registers(self):
        rng = np.random.default_rng(16)
        for _ in range(60):
            layer = random_layer(rng)
            cfg = layer.config
            steps = int(rng.integers(1, 10))
            spikes = random_input(rng, cfg.input_shape, steps, rng.random())
            budget = int(cfg.kernel_footprint * rng.integers(1, cfg.out_channels + 1))
            neurons = None if rng.random() < 0.5 else int(rng.integers(1, 40))
            plan = plan_tiles(cfg, budget, neurons)
            untiled, tiled = [], []
            run_layer(layer, spikes, steps, monitor=untiled.append)
            run_layer_tiled(layer, spikes, steps, plan, monitor=tiled.append)
            self.assertEqual(steps, len(tiled))
            for expected, state in zip(untiled, tiled):
                self.assert_registers(cfg, state)
                for name in ('membrane', 'eff_threshold', 'refractory_remaining', 'spiked'):
                    np.testing.assert_array_equal(getattr(expected, name), getattr(state, name))

    def test_monitor_states_are_read_only(self):
        layer = random_layer(np.random.default_rng(3))
        states = []
        run_layer(layer, SpikeTensor.empty(layer.config.input_shape, 1), 1, monitor=states.append)
        self.assertRaises(ValueError, states[0].membrane.fill, 0)

    def test_refractory_gap(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            layer = random_layer(rng)
            cfg = layer.config
            steps = 8
            output = run_layer(layer, random_input(rng, cfg.input_shape, steps, 0.5), steps)
            dense = output.to_dense()
            last = np.full(cfg.output_shape, -10**6)
            for t in range(steps):
                fired = dense[t].astype(bool)
                # no neuron fires again within its refractory period
                self.assertTrue(np.all(t - last[fired] >= cfg.refractory_steps + 1))
                last[fired] = t


class ShouldMatchUntiledExecution(TestCase):
    def test_random_layers(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            layer = random_layer(rng)
            cfg = layer.config
            steps = int(rng.integers(1, 6))
            spikes = random_input(rng, cfg.input_shape, steps, rng.random())
            budget = int(cfg.kernel_footprint * rng.integers(1, cfg.out_channels + 1))
            neurons = None if rng.random() < 0.5 else int(rng.integers(1, 40))
            plan = plan_tiles(cfg, budget, neurons)
            plan.validate(cfg)
            expected = run_layer(layer, spikes, steps)
            self.assertEqual(expected, run_layer_tiled(layer, spikes, steps, plan))

    def test_thread_pool(self):
        rng = np.random.default_rng(7)
        layer = random_layer(rng, kind=LayerKind.CONV, out_channels=12, in_height=16, in_width=16)
        spikes = random_input(rng, layer.config.input_shape, 6)
        plan = plan_tiles(layer.config, layer.config.kernel_footprint * 3, 20)
        self.assertEqual(
            run_layer(layer, spikes, 6),
            run_layer_tiled(layer, spikes, 6, plan, max_workers=4),
        )

    def test_single_tile_plan(self):
        rng = np.random.default_rng(9)
        layer = random_layer(rng)
        spikes = random_input(rng, layer.config.input_shape, 4)
        plan = plan_tiles(layer.config, 10**6)
        self.assertEqual(1, len(plan.tiles))
        self.assertEqual(run_layer(layer, spikes, 4), run_layer_tiled(layer, spikes, 4, plan))

    def test_empty_input(self):
        rng = np.random.default_rng(10)
        layer = random_layer(rng)
        plan = plan_tiles(layer.config, layer.config.kernel_footprint)
        empty = SpikeTensor.empty(layer.config.input_shape, 3)
        self.assertEqual(0, run_layer_tiled(layer, empty, 3, plan).count())


class ShouldPlanTiles(TestCase):
    def setUp(self):
        self.cfg = SnnLayerConfig(LayerKind.CONV, 4, 16, 8, 8, (3, 3), padding=1)

    def test_fits(self):
        plan = plan_tiles(self.cfg, 16 * 36)
        self.assertEqual((Tile((0, 16), (0, 8), (0, 8)),), plan.tiles)

    def test_channel_split(self):
        plan = plan_tiles(self.cfg, 4 * 36)
        self.assertEqual(4, len(plan.tiles))
        self.assertEqual([(0, 4), (4, 8), (8, 12), (12, 16)], [tile.channels for tile in plan.tiles])

    def test_infeasible(self):
        self.assertRaises(InfeasibleBudgetError, plan_tiles, self.cfg, 35)
        self.assertRaises(InfeasibleBudgetError, plan_tiles, self.cfg, 36, 0)

    def test_spatial_split(self):
        plan = plan_tiles(self.cfg, 16 * 36, neuron_memory_budget=40)
        plan.validate(self.cfg)
        self.assertTrue(all(tile.neurons <= 40 for tile in plan.tiles))
        # channel-major, then row-major
        keys = [(tile.channels[0], tile.rows[0], tile.cols[0]) for tile in plan.tiles]
        self.assertEqual(sorted(keys), keys)

    def test_invalid_plans(self):
        half = TilePlan((Tile((0, 8), (0, 8), (0, 8)),), 10**6)
        self.assertRaises(ValueError, half.validate, self.cfg)
        overlap = TilePlan((Tile((0, 16), (0, 8), (0, 8)), Tile((0, 1), (0, 1), (0, 1))), 10**6)
        self.assertRaises(ValueError, overlap.validate, self.cfg)
        small = TilePlan((Tile((0, 16), (0, 8), (0, 8)),), 36)
        self.assertRaises(ValueError, small.validate, self.cfg)


class ShouldNeverLoseSpikesToExtraDrive(TestCase):
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test(self, seed):
        rng = np.random.default_rng(seed)
        layer = random_layer(rng, timestep_shift=0, threshold_adapt=(0, 0))
        layer = SnnLayer(layer.config, np.abs(layer.weights.astype(np.int64)).clip(0, 127))
        cfg = layer.config
        dense = rng.random((6,) + cfg.input_shape) < 0.2
        extra = dense | (rng.random(dense.shape) < 0.2)
        fewer = run_layer(layer, SpikeTensor.from_dense(dense), 6).totals()
        more = run_layer(layer, SpikeTensor.from_dense(extra), 6).totals()
        self.assertTrue(np.all(more >= fewer))


class ShouldRunTheReferenceNetwork(TestCase):
    def test_topology(self):
        net = reference_network()
        kinds = (LayerKind.CONV, LayerKind.CONV, LayerKind.FULLY_CONNECTED, LayerKind.FULLY_CONNECTED)
        self.assertEqual(kinds, net.kinds)
        self.assertEqual((2, 104, 132), net.input_shape)
        self.assertEqual([(8, 52, 66), (16, 26, 33), (64, 1, 1), (4, 1, 1)],
                         [layer.config.output_shape for layer in net.layers])

    def test_empty_input(self):
        net = reference_network()
        counts = run_network(net, SpikeTensor.empty(net.input_shape, 3), 3)
        np.testing.assert_array_equal(np.zeros(4), counts)

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        spikes = random_input(rng, (2, 104, 132), 3, 0.05)
        first = simulate_network(reference_network(seed=5), spikes, 3)
        second = simulate_network(reference_network(seed=5), spikes, 3)
        np.testing.assert_array_equal(first.class_counts, second.class_counts)
        self.assertEqual(first.layer_outputs, second.layer_outputs)

    def test_tiled_network(self):
        rng = np.random.default_rng(4)
        spikes = random_input(rng, (2, 104, 132), 2, 0.1)
        untiled = simulate_network(reference_network(seed=1), spikes, 2)
        tiled = simulate_network(reference_network(seed=1, kernel_memory_budget=20000), spikes, 2)
        self.assertEqual(untiled.layer_outputs, tiled.layer_outputs)

    def test_rejects_wrong_input(self):
        net = reference_network()
        self.assertRaises(ValueError, run_network, net, SpikeTensor.empty((2, 10, 10), 1), 1)


class ShouldPassSpikesThroughIdentityLayers(TestCase):
    def test(self):
        cfg = SnnLayerConfig(LayerKind.CONV, 2, 2, 6, 6, (1, 1), threshold=20)
        weights = np.zeros(cfg.weight_shape)
        weights[0, 0] = weights[1, 1] = 20
        head = SnnLayer(cfg, weights)
        tail_cfg = SnnLayerConfig(LayerKind.FULLY_CONNECTED, 2, 3, 6, 6, threshold=100)
        tail = SnnLayer(tail_cfg, np.ones(tail_cfg.weight_shape))
        net = SnnNetwork((head, tail), (2, 6, 6))
        spikes = random_input(np.random.default_rng(2), (2, 6, 6), 4)
        result = simulate_network(net, spikes, 4)
        self.assertEqual(spikes.count(), result.layer_outputs[0].count())

    def test_rejects_broken_chain(self):
        cfg = SnnLayerConfig(LayerKind.CONV, 2, 2, 6, 6, (1, 1))
        layer = SnnLayer(cfg, np.zeros(cfg.weight_shape))
        self.assertRaises(ValueError, SnnNetwork, (layer,), (3, 6, 6))


class ShouldLoadNetworkFiles(TestCase):
    def test_bundled_reference(self):
        loaded = load_network(fixture_path('reference_network.yaml'))
        expected = reference_network(seed=0)
        self.assertEqual(65536, loaded.kernel_memory_budget)
        for a, b in zip(loaded.layers, expected.layers):
            self.assertEqual(a.config, b.config)
            np.testing.assert_array_equal(a.weights, b.weights)

    def test_save_then_load(self):
        net = reference_network(seed=9)
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'net.yaml')
            save_network(net, path)
            self.assertTrue(os.path.exists(os.path.join(directory, 'conv1.bin')))
            loaded = load_network(path)
        for a, b in zip(loaded.layers, net.layers):
            self.assertEqual(a.config, b.config)
            np.testing.assert_array_equal(a.weights, b.weights)

    def test_missing_weights(self):
        net = reference_network()
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'net.yaml')
            save_network(net, path)
            missing = os.path.join(directory, 'fc1.bin')
            os.remove(missing)
            with self.assertRaises(ValueError) as context:
                load_network(path)
        self.assertIn(missing, str(context.exception))

    def test_unknown_key(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'net.yaml')
            with open(path, 'w') as stream:
                stream.write('layers:\n  - {name: a, kind: fc, out_channels: 2, weights_seed: 1, leak: 3}\n')
            self.assertRaises(ValueError, load_network, path)

    def test_missing_file(self):
        self.assertRaises(ValueError, load_network, 'not_a_network.yaml')
