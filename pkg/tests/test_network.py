"""Alignment units, forward/collapse faithfulness, gradients, training."""

import numpy as np
import pytest

from famnov.datasets import DatasetTable
from famnov.errors import ConfigurationError, DimensionError
from famnov.network import (
    BcosLayer,
    BcosNetwork,
    TrainConfig,
    bcos_unit,
    collapse,
    effective_weight,
    features,
    forward,
    gradients,
    logistic_loss,
    train,
)


def random_net(rng, n_layers=None, max_dim=16, b_choices=(1.25, 1.5, 2.0)):
    n_layers = n_layers or int(rng.integers(2, 5))
    dims = [int(rng.integers(4, max_dim + 1)) for _ in range(n_layers)] + [2]
    b = float(rng.choice(b_choices))
    return BcosNetwork.random(dims, b, seed=int(rng.integers(0, 2**63)))


class TestBcosUnit:
    def test_perfect_alignment(self):
        assert bcos_unit([1, 0], [2, 0], 1.5) == pytest.approx(2.0)

    def test_orthogonal(self):
        assert bcos_unit([0, 1], [1, 0], 1.5) == 0.0
        assert bcos_unit([0, 1], [1, 0], 3.0) == 0.0

    def test_hand_evaluation(self):
        # |x|=sqrt(2), |w|=1, cos=1/sqrt(2), B=2: sqrt(2) * 1/2 = 0.70710678
        assert bcos_unit([1, 1], [1, 0], 2.0) == pytest.approx(0.70710678, abs=1e-8)

    def test_anti_alignment_is_negative(self):
        assert bcos_unit([1, 0], [-2, 0], 1.5) == pytest.approx(-2.0)

    def test_zero_norm_floor(self):
        assert bcos_unit([0, 0], [1, 1], 1.5) == 0.0
        assert bcos_unit([1, 1], [0, 0], 1.5) == 0.0

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            bcos_unit([1, 0, 0], [1, 0], 1.5)

    def test_exponent_validation(self):
        with pytest.raises(ConfigurationError):
            bcos_unit([1, 0], [1, 0], 1.0)


class TestEffectiveWeight:
    def test_aligned_leaves_weight_unchanged(self):
        np.testing.assert_allclose(effective_weight([1, 0], [2, 0], 1.5), [2, 0])

    def test_orthogonal_vanishes(self):
        np.testing.assert_array_equal(effective_weight([0, 1], [1, 0], 1.5), [0, 0])

    def test_dot_identity(self):
        """dot(effective_weight(x, w, B), x) == bcos_unit(x, w, B)."""
        rng = np.random.default_rng(42)
        for _ in range(300):
            n = int(rng.integers(2, 8))
            x, w = rng.normal(size=n), rng.normal(size=n)
            b = float(rng.uniform(1.01, 3.0))
            got = float(effective_weight(x, w, b) @ x)
            want = bcos_unit(x, w, b)
            assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


class TestForward:
    def test_zero_input_gives_zero_logits(self):
        net = BcosNetwork.random([4, 6, 2], seed=3)
        logits, _ = forward(net, np.zeros(4))
        np.testing.assert_array_equal(logits, [0.0, 0.0])

    def test_positive_homogeneity(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            net = random_net(rng)
            x = rng.normal(size=net.input_dim)
            base, _ = forward(net, x)
            for alpha in (0.5, 2.0, 10.0):
                scaled, _ = forward(net, alpha * x)
                np.testing.assert_allclose(scaled, alpha * base, rtol=1e-9, atol=1e-12)

    def test_final_layer_matches_bcos_unit(self):
        """Each head logit equals bcos_unit of the head row on the traced input."""
        rng = np.random.default_rng(6)
        net = random_net(rng)
        x = rng.normal(size=net.input_dim)
        logits, trace = forward(net, x)
        head = net.layers[-1]
        for node in (0, 1):
            want = bcos_unit(trace.inputs[-1], head.weights[node], head.b_exponent)
            assert logits[node] == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_trace_replay_reproduces_outputs(self):
        rng = np.random.default_rng(7)
        net = random_net(rng)
        x = rng.normal(size=net.input_dim)
        logits, trace = forward(net, x)
        assert len(trace.inputs) == len(trace.outputs) == len(trace.cosines) == net.num_layers
        for l in range(net.num_layers - 1):
            np.testing.assert_array_equal(trace.outputs[l], trace.inputs[l + 1])
        np.testing.assert_array_equal(trace.outputs[-1], logits)

    def test_dimension_error(self):
        net = BcosNetwork.random([4, 6, 2], seed=0)
        with pytest.raises(DimensionError):
            forward(net, np.ones(5))


class TestCollapse:
    def test_last_layer_is_effective_weight(self):
        rng = np.random.default_rng(8)
        net = random_net(rng)
        x = rng.normal(size=net.input_dim)
        _, trace = forward(net, x)
        head = net.layers[-1]
        for node in (0, 1):
            want = effective_weight(trace.inputs[-1], head.weights[node], head.b_exponent)
            np.testing.assert_allclose(collapse(net, trace, net.num_layers - 1, node), want)

    def test_faithfulness_every_layer_and_node(self):
        """dot(collapse(net, trace, l, j), inputs[l]) reproduces logits[j]."""
        rng = np.random.default_rng(9)
        for _ in range(50):
            net = random_net(rng)
            x = rng.normal(size=net.input_dim)
            logits, trace = forward(net, x)
            for l in range(net.num_layers):
                for node in (0, 1):
                    theta = collapse(net, trace, l, node)
                    got = float(theta @ trace.inputs[l])
                    assert abs(got - logits[node]) <= 1e-9 * max(1.0, abs(logits[node]))

    def test_direction_invariance(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            net = random_net(rng)
            x = rng.normal(size=net.input_dim)
            _, trace = forward(net, x)
            base = collapse(net, trace, 0, 0)
            for alpha in (0.5, 2.0, 10.0):
                _, scaled_trace = forward(net, alpha * x)
                np.testing.assert_allclose(
                    collapse(net, scaled_trace, 0, 0), base, rtol=1e-9, atol=1e-12
                )

    def test_orthogonal_net_collapses_to_zero(self):
        net = BcosNetwork(
            [
                BcosLayer(np.array([[0.0, 1.0], [0.0, 2.0]]), 1.5),
                BcosLayer(np.eye(2), 1.5),
            ]
        )
        x = np.array([3.0, 0.0])  # orthogonal to every first-layer row
        _, trace = forward(net, x)
        np.testing.assert_array_equal(collapse(net, trace, 0, 0), [0.0, 0.0])

    def test_index_errors(self):
        net = BcosNetwork.random([3, 4, 2], seed=1)
        _, trace = forward(net, np.ones(3))
        with pytest.raises(IndexError):
            collapse(net, trace, 2, 0)
        with pytest.raises(IndexError):
            collapse(net, trace, -1, 0)
        with pytest.raises(IndexError):
            collapse(net, trace, 0, 2)


class TestGradients:
    def test_orthogonal_input_contributes_zero(self):
        net = BcosNetwork(
            [
                BcosLayer(np.array([[0.0, 1.0], [1.0, 1.0]]), 1.5),
                BcosLayer(np.array([[1.0, 0.5], [0.5, 1.0]]), 1.5),
            ]
        )
        x = np.array([1.0, 0.0])  # orthogonal to first row of layer 0
        grads, _ = gradients(net, x, 0)
        # the orthogonal unit sits exactly on the cusp; its derivative is 0
        np.testing.assert_array_equal(grads[0][0], [0.0, 0.0])

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(12)
        h = 1e-5
        for _ in range(10):
            net = random_net(rng, max_dim=6)
            x = rng.normal(size=net.input_dim)
            label = int(rng.integers(0, 2))
            grads, _ = gradients(net, x, label)
            _, trace = forward(net, x)
            for li, layer in enumerate(net.layers):
                w = layer.weights
                for u in range(w.shape[0]):
                    if abs(trace.cosines[li][u]) < 1e-6:
                        continue
                    for j in range(w.shape[1]):
                        orig = w[u, j]
                        w[u, j] = orig + h
                        up = logistic_loss(forward(net, x)[0], label)
                        w[u, j] = orig - h
                        down = logistic_loss(forward(net, x)[0], label)
                        w[u, j] = orig
                        fd = (up - down) / (2 * h)
                        denom = max(abs(fd), abs(grads[li][u, j]), 1e-8)
                        assert abs(fd - grads[li][u, j]) / denom <= 1e-4

    def test_full_batch_descent_decreases_loss(self):
        """Plain gradient steps on a separable 1-D toy shrink the loss monotonically."""
        rng = np.random.default_rng(13)
        net = BcosNetwork.random([2, 3, 2], seed=99)
        # 1-D toy embedded in 2-D so norms stay informative
        xs = np.array([[1.0, 0.2], [2.0, 0.1], [-1.0, 0.3], [-2.0, 0.2]])
        ys = [0, 0, 1, 1]
        losses = []
        for _ in range(40):
            total = [np.zeros_like(l.weights) for l in net.layers]
            loss_sum = 0.0
            for x, y in zip(xs, ys):
                grads, loss = gradients(net, x, y)
                loss_sum += loss
                for acc, g in zip(total, grads):
                    acc += g
            losses.append(loss_sum / len(xs))
            for layer, acc in zip(net.layers, total):
                layer.weights -= 0.05 * acc / len(xs)
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_label_validation(self):
        net = BcosNetwork.random([2, 3, 2], seed=0)
        with pytest.raises(ConfigurationError):
            gradients(net, np.ones(2), 2)


def _toy_tables(rng, n=40):
    normals = rng.normal(size=(n, 2)) * 0.3 + np.array([2.0, 2.0])
    outliers = rng.normal(size=(n, 2)) * 0.3 + np.array([-2.0, 2.0])
    return (
        DatasetTable(normals, split="train_normal"),
        DatasetTable(outliers, split="outlier"),
    )


class TestTrain:
    def test_separable_toy_reaches_accuracy(self):
        rng = np.random.default_rng(14)
        normals, outliers = _toy_tables(rng)
        net = BcosNetwork.random([2, 4, 2], seed=5)
        cfg = TrainConfig(learning_rate=0.1, epochs=200, batch_size=16, seed=3)
        trained = train(net, normals, outliers, cfg)
        hits = 0
        for table, label in ((normals, 0), (outliers, 1)):
            for row in table.samples:
                logits, _ = forward(trained, row)
                hits += int(np.argmax(logits)) == label
        assert hits / (len(normals) + len(outliers)) >= 0.95

    def test_zero_epochs_is_identity(self):
        rng = np.random.default_rng(15)
        normals, outliers = _toy_tables(rng, n=5)
        net = BcosNetwork.random([2, 4, 2], seed=5)
        trained = train(net, normals, outliers, TrainConfig(epochs=0, seed=3))
        for before, after in zip(net.layers, trained.layers):
            np.testing.assert_array_equal(before.weights, after.weights)

    def test_same_seed_bit_identical(self):
        rng = np.random.default_rng(16)
        normals, outliers = _toy_tables(rng, n=10)
        net = BcosNetwork.random([2, 4, 2], seed=5)
        cfg = TrainConfig(learning_rate=0.05, epochs=10, batch_size=4, seed=11)
        a = train(net, normals, outliers, cfg)
        b = train(net, normals, outliers, cfg)
        for la, lb in zip(a.layers, b.layers):
            np.testing.assert_array_equal(la.weights, lb.weights)

    def test_input_network_unchanged(self):
        rng = np.random.default_rng(17)
        normals, outliers = _toy_tables(rng, n=10)
        net = BcosNetwork.random([2, 4, 2], seed=5)
        snapshot = [layer.weights.copy() for layer in net.layers]
        train(net, normals, outliers, TrainConfig(epochs=3, seed=1))
        for before, layer in zip(snapshot, net.layers):
            np.testing.assert_array_equal(before, layer.weights)

    def test_empty_split_rejected(self):
        rng = np.random.default_rng(18)
        normals, _ = _toy_tables(rng, n=5)
        empty = DatasetTable(np.zeros((0, 2)), split="outlier")
        net = BcosNetwork.random([2, 4, 2], seed=5)
        with pytest.raises(ConfigurationError):
            train(net, normals, empty, TrainConfig())


class TestFeatures:
    def test_layer_zero_echoes_input(self):
        net = BcosNetwork.random([3, 4, 2], seed=2)
        x = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(features(net, x, 0), x)

    def test_deterministic(self):
        net = BcosNetwork.random([3, 4, 2], seed=2)
        x = np.array([0.3, 0.7, -1.1])
        np.testing.assert_array_equal(features(net, x, 1), features(net, x, 1))

    def test_matches_trace(self):
        net = BcosNetwork.random([3, 4, 2], seed=2)
        x = np.array([0.3, 0.7, -1.1])
        _, trace = forward(net, x)
        np.testing.assert_array_equal(features(net, x, 1), trace.inputs[1])

    def test_default_is_penultimate(self):
        net = BcosNetwork.random([3, 4, 2], seed=2)
        x = np.array([0.3, 0.7, -1.1])
        np.testing.assert_array_equal(features(net, x), features(net, x, 1))

    def test_index_error(self):
        net = BcosNetwork.random([3, 4, 2], seed=2)
        with pytest.raises(IndexError):
            features(net, np.ones(3), 2)


class TestNetworkConstruction:
    def test_init_bounds_and_determinism(self):
        net = BcosNetwork.random([9, 5, 2], seed=77)
        again = BcosNetwork.random([9, 5, 2], seed=77)
        for layer, other in zip(net.layers, again.layers):
            np.testing.assert_array_equal(layer.weights, other.weights)
            bound = 1.0 / np.sqrt(layer.in_dim)
            assert np.abs(layer.weights).max() <= bound

    def test_needs_two_layers(self):
        with pytest.raises(ConfigurationError):
            BcosNetwork.random([4, 2], seed=0)

    def test_head_must_be_two_nodes(self):
        with pytest.raises(ConfigurationError):
            BcosNetwork([BcosLayer(np.ones((3, 4))), BcosLayer(np.ones((3, 3)))])

    def test_chain_compatibility(self):
        with pytest.raises(DimensionError):
            BcosNetwork([BcosLayer(np.ones((3, 4))), BcosLayer(np.ones((2, 5)))])

    def test_per_layer_exponents(self):
        net = BcosNetwork.random([4, 3, 2], b_exponent=[3.0, 1.5], seed=1)
        assert [layer.b_exponent for layer in net.layers] == [3.0, 1.5]

    def test_exponent_must_exceed_one(self):
        with pytest.raises(ConfigurationError):
            BcosLayer(np.ones((2, 2)), b_exponent=1.0)
