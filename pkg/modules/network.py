"""
Layered ReLU networks with traced evaluation.

A layer holds weights of shape (inputs, outputs) and a bias vector; evaluation computes
o_{l+1} = relu(o_l @ W + b) for activated layers and the affine map otherwise. Batches of inputs
are rows. Named neuron groups record (layer, start, stop) ranges, with the gate groups E1, E2, E3
living in the last hidden layer.
"""
from dataclasses import dataclass, field
import json

import numpy as np

from modules.exceptions import InvalidParameterError, MissingMetadataError

GATE_GROUPS = ('E1', 'E2', 'E3')


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    biases: np.ndarray
    activated: bool = True

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        biases = np.array(self.biases, dtype=np.float64).reshape(-1)
        if weights.ndim != 2 or weights.shape[1] != biases.shape[0]:
            raise InvalidParameterError(f"weights {weights.shape} do not match biases {biases.shape}")
        weights.setflags(write=False)
        biases.setflags(write=False)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'biases', biases)

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]

    @property
    def width(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class NeuronGroup:
    layer: int
    start: int
    stop: int

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop)

    def __len__(self) -> int:
        return self.stop - self.start


class ReluNetwork:
    """
    Immutable ReLU network

    Parameters:
        layers (list[Layer]): layers in evaluation order, dimensions chaining
        groups (dict[str, NeuronGroup]): named neuron ranges
        info (dict): free-form build facts (n, k, c, mode) carried through serialization
    """
    def __init__(self, layers: list[Layer], groups: dict | None = None, info: dict | None = None):
        if not layers:
            raise InvalidParameterError("a network needs at least one layer")
        for previous, current in zip(layers, layers[1:]):
            if previous.width != current.fan_in:
                raise InvalidParameterError(
                    f"layer widths do not chain: {previous.width} feeds a layer expecting {current.fan_in}")
        self.layers = tuple(layers)
        self.groups = {name: NeuronGroup(*g) if not isinstance(g, NeuronGroup) else g
                       for name, g in (groups or {}).items()}
        for name, group in self.groups.items():
            if not (0 <= group.layer < len(self.layers) and 0 <= group.start <= group.stop <= self.layers[group.layer].width):
                raise InvalidParameterError(f"group {name} out of range")
        self.info = dict(info or {})

    @property
    def input_dim(self) -> int:
        return self.layers[0].fan_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].width

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def hidden_widths(self) -> list[int]:
        return [layer.width for layer in self.layers[:-1]]

    @property
    def parameter_count(self) -> int:
        return sum(layer.weights.size + layer.biases.size for layer in self.layers)

    @property
    def max_magnitude(self) -> float:
        return max(max(np.abs(layer.weights).max(initial=0.0), np.abs(layer.biases).max(initial=0.0))
                   for layer in self.layers)

    @property
    def output_bias(self) -> float:
        """
        The output-neuron bias b
        """
        return float(self.layers[-1].biases[0])

    def group(self, name: str) -> NeuronGroup:
        try:
            return self.groups[name]
        except KeyError:
            raise MissingMetadataError(f"network has no neuron group {name!r}") from None

    def output_weights(self, name: str) -> np.ndarray:
        """
        Weights from a last-hidden-layer group into the output neuron
        """
        group = self.group(name)
        if group.layer != self.depth - 2:
            raise MissingMetadataError(f"group {name!r} does not feed the output layer")
        return self.layers[-1].weights[group.slice, 0]

    def with_layers(self, layers: list[Layer]) -> 'ReluNetwork':
        """
        Same groups and info on new layers of identical shapes
        """
        if [l.weights.shape for l in layers] != [l.weights.shape for l in self.layers]:
            raise InvalidParameterError("replacement layers must keep every shape")
        return ReluNetwork(layers, self.groups, self.info)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReluNetwork):
            return NotImplemented
        return (self.depth == other.depth
                and all(np.array_equal(a.weights, b.weights) and np.array_equal(a.biases, b.biases)
                        and a.activated == b.activated for a, b in zip(self.layers, other.layers))
                and self.groups == other.groups)

    def __repr__(self) -> str:
        widths = [self.input_dim] + [layer.width for layer in self.layers]
        return f'<ReluNetwork widths={widths}>'

    def to_json(self) -> str:
        """
        Serialize to {input_dim, layers: [{w, b, activated}], groups, info}; floats keep their repr so reloading is exact
        """
        payload = {
            'input_dim': self.input_dim,
            'layers': [{'w': layer.weights.tolist(), 'b': layer.biases.tolist(), 'activated': layer.activated}
                       for layer in self.layers],
            'groups': {name: [g.layer, g.start, g.stop] for name, g in self.groups.items()},
            'info': self.info,
        }
        return json.dumps(payload, separators=(',', ':'))

    @classmethod
    def from_json(cls, text: str) -> 'ReluNetwork':
        payload = json.loads(text)
        layers = []
        fan_in = payload['input_dim']
        for entry in payload['layers']:
            weights = np.array(entry['w'], dtype=np.float64).reshape(fan_in, len(entry['b']))
            layers.append(Layer(weights, entry['b'], entry['activated']))
            fan_in = len(entry['b'])
        groups = {name: NeuronGroup(*bounds) for name, bounds in payload.get('groups', {}).items()}
        return cls(layers, groups, payload.get('info'))


@dataclass
class EvalTrace:
    """
    Per-layer neuron inputs (after bias, before activation) and the network output

    For a single input vector the arrays are one-dimensional; for a batch they carry a leading row axis.
    """
    pre_activations: list[np.ndarray]
    outputs: np.ndarray
    batched: bool = field(default=False)

    @property
    def output(self):
        """
        The output as a float (single input) or a vector (batch), for single-output networks
        """
        if self.outputs.shape[-1] != 1:
            return self.outputs
        values = self.outputs[..., 0]
        return values if self.batched else float(values)

    def group_inputs(self, net: ReluNetwork, name: str) -> np.ndarray:
        group = net.group(name)
        return self.pre_activations[group.layer][..., group.slice]


def forward_eval(net: ReluNetwork, inputs) -> EvalTrace:
    """
    Exact float64 forward pass recording every neuron input

    Parameters:
        net (ReluNetwork): network to evaluate
        inputs (array-like): one vector of length input_dim or an (N, input_dim) batch

    Returns:
        EvalTrace: the neuron inputs per layer and the output
    """
    values = np.asarray(inputs, dtype=np.float64)
    if values.ndim not in (1, 2) or values.shape[-1] != net.input_dim:
        raise InvalidParameterError(f"expected inputs of length {net.input_dim}, got shape {values.shape}")
    batched = values.ndim == 2
    current = np.atleast_2d(values)

    pre_activations = []
    for layer in net.layers:
        pre = current @ layer.weights + layer.biases
        pre_activations.append(pre)
        current = np.maximum(pre, 0.0) if layer.activated else pre

    if not batched:
        pre_activations = [pre[0] for pre in pre_activations]
        current = current[0]
    return EvalTrace(pre_activations, current, batched)


def eval_n3_branch(net: ReluNetwork, inputs):
    """
    Evaluate the network with the E1 and E2 neurons and their weights removed

    Only the first hidden layer and the E3 gates feed the result, so the value does not depend on
    the secret compiled into E1. Depth-2 networks have no E3 group and give [b]_+.

    Returns:
        float | np.ndarray: [b + sum over E3 of w_j relu(input_j)]_+, per input row
    """
    for name in ('E1', 'E2'):
        net.group(name)
    values = np.asarray(inputs, dtype=np.float64)
    batched = values.ndim == 2
    current = np.atleast_2d(values)
    output_layer = net.layers[-1]

    if 'E3' not in net.groups:
        result = np.full(current.shape[0], output_layer.biases[0])
    else:
        gate = net.group('E3')
        for layer in net.layers[:gate.layer]:
            pre = current @ layer.weights + layer.biases
            current = np.maximum(pre, 0.0) if layer.activated else pre
        gate_layer = net.layers[gate.layer]
        gate_pre = current @ gate_layer.weights[:, gate.slice] + gate_layer.biases[gate.slice]
        gate_out = np.maximum(gate_pre, 0.0) if gate_layer.activated else gate_pre
        result = gate_out @ output_layer.weights[gate.slice, 0] + output_layer.biases[0]

    if output_layer.activated:
        result = np.maximum(result, 0.0)
    return result if batched else float(result[0])


def pad_hidden_layers(net: ReluNetwork, width: int) -> ReluNetwork:
    """
    Widen every hidden layer to `width` with dead neurons (incoming 0, outgoing 0, bias -1)

    The computed function is unchanged. With width equal to the input dimension every hidden weight
    matrix becomes square.
    """
    layers = [Layer(l.weights.copy(), l.biases.copy(), l.activated) for l in net.layers]
    for index in range(len(layers) - 1):
        layer = layers[index]
        extra = width - layer.width
        if extra < 0:
            raise InvalidParameterError(f"hidden layer {index} already has {layer.width} > {width} neurons")
        if extra == 0:
            continue
        if not layer.activated:
            raise InvalidParameterError("only activated hidden layers can take dead neurons")
        layers[index] = Layer(
            np.hstack([layer.weights, np.zeros((layer.fan_in, extra))]),
            np.concatenate([layer.biases, np.full(extra, -1.0)]),
            layer.activated,
        )
        following = layers[index + 1]
        layers[index + 1] = Layer(
            np.vstack([following.weights, np.zeros((extra, following.width))]),
            following.biases,
            following.activated,
        )
    return ReluNetwork(layers, net.groups, {**net.info, 'padded_width': width})
