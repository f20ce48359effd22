"""Bias-free alignment networks with exact per-input linear collapse.

Every layer unit computes ``|x| * |w| * |cos(angle(x, w))|^B * sign(cos)``,
so the only nonlinearity is the input-dependent alignment factor and the
whole network, for a fixed input, IS a linear map.  :func:`collapse` returns
one row of that map and satisfies the faithfulness identity

    dot(collapse(net, trace, l, node), trace.inputs[l]) == logits[node]

to floating-point accuracy, for every layer l and output node.  Everything
downstream (novelty scoring, heatmaps) relies on that identity, which is why
layers carry no bias term: any bias would break it.

Networks are immutable once built; training returns a new network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import DatasetTable
from .errors import ConfigurationError, DimensionError
from .linalg import NORM_EPS, as_matrix, as_vector
from .rng import Rng

__all__ = [
    "BcosLayer",
    "BcosNetwork",
    "ActivationTrace",
    "TrainConfig",
    "bcos_unit",
    "effective_weight",
    "forward",
    "collapse",
    "logistic_loss",
    "gradients",
    "train",
    "features",
]


@dataclass
class BcosLayer:
    """One bias-free alignment layer: ``weights`` (out_dim x in_dim), exponent B > 1."""

    weights: np.ndarray
    b_exponent: float = 1.5

    def __post_init__(self):
        self.weights = as_matrix(self.weights)
        if not self.b_exponent > 1.0:
            raise ConfigurationError(f"B must be > 1, got {self.b_exponent}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


class BcosNetwork:
    """Stack of alignment layers ending in a 2-node head.

    Node 0 of the head is the normal class, node 1 the outlier class.
    """

    HEAD_DIM = 2

    def __init__(self, layers: list[BcosLayer]):
        if len(layers) < 2:
            raise ConfigurationError(f"need at least 2 layers, got {len(layers)}")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise DimensionError(
                    f"layer output {prev.out_dim} feeds layer input {nxt.in_dim}"
                )
        if layers[-1].out_dim != self.HEAD_DIM:
            raise ConfigurationError(
                f"final layer must have {self.HEAD_DIM} nodes, got {layers[-1].out_dim}"
            )
        self.layers = list(layers)

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def layer_dims(self) -> list[int]:
        return [self.layers[0].in_dim] + [layer.out_dim for layer in self.layers]

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @classmethod
    def random(
        cls, layer_dims: list[int], b_exponent: float | list[float] = 1.5, seed: int = 0
    ) -> "BcosNetwork":
        """Fresh network with weights uniform in [-1/sqrt(in_dim), +1/sqrt(in_dim)].

        Weights are drawn from ``Rng(seed)`` layer by layer in row-major
        order, so identical arguments always produce identical networks.
        """
        if len(layer_dims) < 3:
            raise ConfigurationError(f"need at least 2 layers, got dims {layer_dims}")
        n_layers = len(layer_dims) - 1
        if isinstance(b_exponent, (int, float)):
            exponents = [float(b_exponent)] * n_layers
        else:
            exponents = [float(b) for b in b_exponent]
            if len(exponents) != n_layers:
                raise ConfigurationError(
                    f"{len(exponents)} exponents for {n_layers} layers"
                )
        rng = Rng(seed)
        layers = []
        for in_dim, out_dim, b in zip(layer_dims, layer_dims[1:], exponents):
            scale = 1.0 / np.sqrt(in_dim)
            w = (rng.uniforms(out_dim * in_dim) * 2.0 - 1.0) * scale
            layers.append(BcosLayer(w.reshape(out_dim, in_dim), b))
        return cls(layers)

    def copy(self) -> "BcosNetwork":
        return BcosNetwork(
            [BcosLayer(layer.weights.copy(), layer.b_exponent) for layer in self.layers]
        )


@dataclass
class ActivationTrace:
    """Per-layer record of one forward pass.

    ``inputs[l]`` is the vector entering layer l (``inputs[0]`` is the raw
    input), ``cosines[l]`` the per-unit alignment cosines, ``outputs[l]``
    the layer outputs; ``outputs[-1]`` is the logits.
    """

    inputs: list[np.ndarray]
    cosines: list[np.ndarray]
    outputs: list[np.ndarray]


@dataclass
class TrainConfig:
    """Mini-batch gradient descent settings; the loss is fixed two-class logistic."""

    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch size must be >= 1, got {self.batch_size}")


def bcos_unit(x, w, b: float) -> float:
    """Single-unit response ``|x| * |w| * |cos|^B * sign(cos)``.

    Returns 0.0 whenever either norm is below the shared floor.
    """
    x, w = as_vector(x), as_vector(w)
    if x.shape != w.shape:
        raise DimensionError(f"length mismatch: {x.shape[0]} vs {w.shape[0]}")
    if not b > 1.0:
        raise ConfigurationError(f"B must be > 1, got {b}")
    nx = float(np.linalg.norm(x))
    nw = float(np.linalg.norm(w))
    if nx < NORM_EPS or nw < NORM_EPS:
        return 0.0
    c = float(x @ w) / (nx * nw)
    return nx * nw * abs(c) ** b * np.sign(c)


def effective_weight(x, w, b: float) -> np.ndarray:
    """``w`` scaled by ``|cos|^(B-1)`` so that ``dot(result, x) == bcos_unit(x, w, b)``."""
    x, w = as_vector(x), as_vector(w)
    if x.shape != w.shape:
        raise DimensionError(f"length mismatch: {x.shape[0]} vs {w.shape[0]}")
    if not b > 1.0:
        raise ConfigurationError(f"B must be > 1, got {b}")
    nx = float(np.linalg.norm(x))
    nw = float(np.linalg.norm(w))
    if nx < NORM_EPS or nw < NORM_EPS:
        return np.zeros_like(w)
    c = float(x @ w) / (nx * nw)
    return w * abs(c) ** (b - 1.0)


def _layer_forward(layer: BcosLayer, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outputs and per-unit cosines of one layer for input ``a``."""
    na = np.linalg.norm(a)
    nw = np.linalg.norm(layer.weights, axis=1)
    if na < NORM_EPS:
        z = np.zeros(layer.out_dim)
        return z, z.copy()
    dots = layer.weights @ a
    live = nw >= NORM_EPS
    cos = np.zeros(layer.out_dim)
    np.divide(dots, na * nw, out=cos, where=live)
    out = dots * np.abs(cos) ** (layer.b_exponent - 1.0)
    out[~live] = 0.0
    return out, cos


def forward(net: BcosNetwork, x) -> tuple[np.ndarray, ActivationTrace]:
    """Run the network, returning logits and the full activation trace."""
    a = as_vector(x)
    if a.shape[0] != net.input_dim:
        raise DimensionError(f"input has {a.shape[0]} elements, network expects {net.input_dim}")
    inputs, cosines, outputs = [], [], []
    for layer in net.layers:
        inputs.append(a)
        out, cos = _layer_forward(layer, a)
        cosines.append(cos)
        outputs.append(out)
        a = out
    return outputs[-1], ActivationTrace(inputs, cosines, outputs)


def _effective_matrix(layer: BcosLayer, cos: np.ndarray) -> np.ndarray:
    return layer.weights * (np.abs(cos) ** (layer.b_exponent - 1.0))[:, None]


def collapse(net: BcosNetwork, trace: ActivationTrace, from_layer: int, to_node: int) -> np.ndarray:
    """Exact input-space summary of layers ``from_layer``.. end for one node.

    The result is the ``to_node`` row of the product of per-layer effective
    weight matrices built from the traced alignments;
    ``dot(result, trace.inputs[from_layer])`` reproduces the traced logit.
    """
    if not 0 <= from_layer < net.num_layers:
        raise IndexError(f"from_layer {from_layer} out of range [0, {net.num_layers})")
    if to_node not in (0, 1):
        raise IndexError(f"to_node must be 0 or 1, got {to_node}")
    row = _effective_matrix(net.layers[-1], trace.cosines[-1])[to_node]
    for l in range(net.num_layers - 2, from_layer - 1, -1):
        row = row @ _effective_matrix(net.layers[l], trace.cosines[l])
    return row


def _softplus(a: np.ndarray) -> np.ndarray:
    return np.log1p(np.exp(-np.abs(a))) + np.maximum(a, 0.0)


def logistic_loss(logits, label: int) -> float:
    """Per-node logistic loss: the true node is pushed above 0, the other below.

    Driving each node's raw output positive on its own class (rather than
    only the difference, as a softmax would) is what keeps collapsed
    explanations aligned with class samples, so the per-node form is used.
    """
    logits = as_vector(logits)
    if logits.shape[0] != 2:
        raise DimensionError(f"expected 2 logits, got {logits.shape[0]}")
    if label not in (0, 1):
        raise ConfigurationError(f"label must be 0 or 1, got {label}")
    target = np.zeros(2)
    target[label] = 1.0
    return float(np.sum(_softplus(logits) - target * logits))


def _loss_grad(logits: np.ndarray, label: int) -> np.ndarray:
    # sigmoid(z) - target, per node
    p = 1.0 / (1.0 + np.exp(-logits))
    p[label] -= 1.0
    return p


def gradients(net: BcosNetwork, x, label: int) -> tuple[list[np.ndarray], float]:
    """Analytic per-layer weight gradients of the logistic loss at ``x``.

    The unit response is differentiable everywhere except where the
    alignment cosine vanishes; there (and wherever a norm is below the
    floor) the local derivative is defined as 0, a bounded subgradient
    choice.  Returns ``(per-layer gradient arrays, loss value)``.
    """
    logits, trace = forward(net, x)
    if label not in (0, 1):
        raise ConfigurationError(f"label must be 0 or 1, got {label}")
    loss = logistic_loss(logits, label)
    delta = _loss_grad(logits, label)
    grads: list[np.ndarray] = [np.zeros(0)] * net.num_layers
    for l in range(net.num_layers - 1, -1, -1):
        layer = net.layers[l]
        a = trace.inputs[l]
        cos = trace.cosines[l]
        b = layer.b_exponent
        na = float(np.linalg.norm(a))
        nw = np.linalg.norm(layer.weights, axis=1)
        if na < NORM_EPS:
            grads[l] = np.zeros_like(layer.weights)
            delta = np.zeros(layer.in_dim)
            continue
        live = nw >= NORM_EPS
        scale = np.abs(cos) ** (b - 1.0)
        g = delta * scale  # per-unit upstream pull times alignment factor
        # d out_u / d w_u = B*s_u*a - (B-1)*s_u*c_u*(|a|/|w_u|)*w_u
        ratio = np.zeros_like(nw)
        np.divide(na, nw, out=ratio, where=live)
        grads[l] = b * np.outer(g, a) - ((b - 1.0) * g * cos * ratio)[:, None] * layer.weights
        grads[l][~live] = 0.0
        # d out_u / d a = B*s_u*w_u - (B-1)*s_u*c_u*(|w_u|/|a|)*a
        gl = np.where(live, g, 0.0)
        delta = b * (gl @ layer.weights) - ((b - 1.0) / na) * float(
            (gl * cos * nw).sum()
        ) * a
    return grads, loss


def train(
    net: BcosNetwork,
    normals: DatasetTable,
    outliers: DatasetTable,
    cfg: TrainConfig,
) -> BcosNetwork:
    """Mini-batch gradient descent on normals (label 0) vs outliers (label 1).

    Deterministic given the initial network, the data order, and the config
    seed; the input network is left untouched and a trained copy returned.
    """
    if len(normals) == 0 or len(outliers) == 0:
        raise ConfigurationError("both the normal and outlier split must be non-empty")
    if normals.dim != net.input_dim or outliers.dim != net.input_dim:
        raise DimensionError(
            f"network expects {net.input_dim}-dim inputs, "
            f"got {normals.dim} (normals) and {outliers.dim} (outliers)"
        )
    X = np.vstack([normals.samples, outliers.samples])
    y = np.concatenate([np.zeros(len(normals), dtype=int), np.ones(len(outliers), dtype=int)])
    model = net.copy()
    rng = Rng(cfg.seed)
    n = X.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            total = [np.zeros_like(layer.weights) for layer in model.layers]
            for idx in batch:
                grads, _ = gradients(model, X[idx], int(y[idx]))
                for acc, g in zip(total, grads):
                    acc += g
            step = cfg.learning_rate / len(batch)
            for layer, acc in zip(model.layers, total):
                layer.weights -= step * acc
    return model


def features(net: BcosNetwork, x, layer: int | None = None) -> np.ndarray:
    """Representation entering layer ``layer``; layer 0 echoes the raw input.

    The default is the penultimate representation (the input of the head
    layer), the usual feature space for familiarity scoring.
    """
    if layer is None:
        layer = net.num_layers - 1
    if not 0 <= layer < net.num_layers:
        raise IndexError(f"layer {layer} out of range [0, {net.num_layers})")
    _, trace = forward(net, x)
    return trace.inputs[layer]
