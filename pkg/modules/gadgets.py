"""
Exact-weight gadgets and the two target networks.

Depth 3 (Gaussian inputs of dimension n^2, only the first kn coordinates are read):
    layer 1  threshold hinges [t - c]_+, [t - c - 1/n^2]_+ per coordinate, then the four interval
             hinges per coordinate
    layer 2  E1 (DNF terms on the thresholded bits), E2 (encoding validity), E3 (interval detector)
    layer 3  [1 - sum of all gates]_+
The readouts of the threshold ramp and of the interval trapezoid fold into the layer-2 weights,
so no neuron passes a coordinate through unchanged.

Depth 2 (binary inputs with small noise): E1 and E2 read the raw first kn coordinates, followed by
the same output neuron.

Passing x=None builds the secret-free skeleton: E1 keeps its shape (one neuron per satisfying
assignment of P) with all incoming weights and biases zero.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import logging
import math

import numpy as np
from scipy import special

from modules.dnf import DnfFormula, compile_predicate_dnf
from modules.encoding import BitVector
from modules.exceptions import BoundViolationError, InvalidParameterError
from modules.network import Layer, NeuronGroup, ReluNetwork
from modules.prg import Predicate

log = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def normal_threshold(n: int) -> float:
    """
    c = Phi^{-1}(1/n)
    """
    if n < 2:
        raise InvalidParameterError(f"the threshold Phi^-1(1/n) needs n >= 2, got n={n}")
    return float(special.ndtri(1.0 / n))


@dataclass(frozen=True)
class HingeFragment:
    """
    A hidden ReLU layer plus an affine readout: value(t) = relu(t @ W + b) @ R + r
    """
    hidden: Layer
    readout: np.ndarray
    readout_bias: np.ndarray

    def evaluate(self, inputs) -> np.ndarray:
        hidden = np.maximum(np.asarray(inputs, dtype=np.float64) @ self.hidden.weights + self.hidden.biases, 0.0)
        return hidden @ self.readout + self.readout_bias

    @property
    def max_magnitude(self) -> float:
        return float(max(np.abs(self.hidden.weights).max(), np.abs(self.hidden.biases).max(),
                         np.abs(self.readout).max(), np.abs(self.readout_bias).max(initial=0.0)))


def _hinge_fragment(kn: int, offsets: list[float], coefficients: list[float], c: float,
                    scale: float, constant: float) -> HingeFragment:
    # per coordinate i: scale * sum_h coefficients[h] * [t_i - (c + offsets[h])]_+ + constant
    hinges = len(offsets)
    weights = np.zeros((kn, hinges * kn))
    for h in range(hinges):
        weights[np.arange(kn), h * kn + np.arange(kn)] = 1.0
    biases = np.concatenate([np.full(kn, -(c + offset)) for offset in offsets])
    readout = np.zeros((hinges * kn, kn))
    for h, coefficient in enumerate(coefficients):
        readout[h * kn + np.arange(kn), np.arange(kn)] = scale * coefficient
    return HingeFragment(Layer(weights, biases, True), readout, np.full(kn, float(constant)))


def build_threshold_layer(n: int, k: int, c: float) -> HingeFragment:
    """
    N_Psi: f(t) = n^2 ([t - c]_+ - [t - (c + 1/n^2)]_+) per coordinate, 2kn hidden neurons

    f is 0 for t <= c, 1 for t >= c + 1/n^2 and linear in between.
    """
    if n < 1:
        raise InvalidParameterError(f"need n >= 1, got n={n}")
    width = 1.0 / n ** 2
    return _hinge_fragment(k * n, [0.0, width], [1.0, -1.0], c, float(n ** 2), 0.0)


def build_interval_detector(n: int, k: int, c: float) -> HingeFragment:
    """
    Per-coordinate trapezoid: 2 on [c, c + 1/n^2], -1 outside (c - 1/n^2, c + 2/n^2), linear ramps between

    Built as 3n^2 ([t-(c-1/n^2)]_+ - [t-c]_+ - [t-(c+1/n^2)]_+ + [t-(c+2/n^2)]_+) - 1 with 4kn hidden neurons.
    """
    width = 1.0 / n ** 2
    return _hinge_fragment(k * n, [-width, 0.0, width, 2 * width], [1.0, -1.0, -1.0, 1.0], c,
                           3.0 * n ** 2, -1.0)


def build_dnf_affine_layer(psi: DnfFormula, kn: int) -> Layer:
    """
    One affine output per term I_j: 3 * sum_{l in I_j} z_l - 3|I_j| + 2

    On binary z the output is 2 when the term holds and at most -1 otherwise.
    """
    if psi.width != kn:
        raise InvalidParameterError(f"formula over {psi.width} positions used on {kn} inputs")
    matrix = psi.term_matrix().astype(np.float64)
    return Layer(3.0 * matrix.T, -3.0 * matrix.sum(axis=1) + 2.0, activated=False)


def build_validity_layer(n: int, k: int) -> Layer:
    """
    2k + n affine checks on z in {0,1}^{kn}, in this order:
        k  per-slice "two or more zeros"   3n - 4 - sum_j 3 z_{i,j}
        k  per-slice "no zero"             sum_j 3 z_{i,j} - 3n + 2
        n  per-index "zero in two slices"  3k - 4 - sum_i 3 z_{i,j}
    Every output is at most -1 on a hyperedge encoding, and some output is at least 2 otherwise.
    """
    kn = k * n
    weights = np.zeros((kn, 2 * k + n))
    biases = np.zeros(2 * k + n)
    for i in range(k):
        positions = i * n + np.arange(n)
        weights[positions, i] = -3.0
        biases[i] = 3.0 * n - 4.0
        weights[positions, k + i] = 3.0
        biases[k + i] = -3.0 * n + 2.0
    for j in range(n):
        weights[np.arange(k) * n + j, 2 * k + j] = -3.0
        biases[2 * k + j] = 3.0 * k - 4.0
    return Layer(weights, biases, activated=False)


def _dnf_layer(P: Predicate, x: BitVector | None, n: int) -> Layer:
    kn = P.k * n
    if x is None:
        terms = int(sum(P.table))
        return Layer(np.zeros((kn, terms)), np.zeros(terms), activated=False)
    return build_dnf_affine_layer(compile_predicate_dnf(P, x, n), kn)


def _check_inputs(P: Predicate, x: BitVector | None, n: int) -> None:
    if P.k > n:
        raise InvalidParameterError(f"need k <= n so that kn <= n^2, got k={P.k}, n={n}")
    if x is not None and len(x) != n:
        raise InvalidParameterError(f"secret length {len(x)} does not match n={n}")


def _output_layer(width: int) -> Layer:
    return Layer(-np.ones((width, 1)), np.ones(1), activated=True)


def _enforce_bound(net: ReluNetwork, n: int) -> None:
    magnitude = net.max_magnitude
    if magnitude > n ** 3:
        raise BoundViolationError(n, magnitude)


def assemble_depth3_target(P: Predicate, x: BitVector | None, n: int, enforce_bound: bool = True) -> ReluNetwork:
    """
    The depth-3 target on inputs of dimension n^2

    On a clean input (valid encoding, no coordinate near c) with P_x(z^S) = 0 every gate input is at
    most -1 and the output is 1; with P_x(z^S) = 1 some E1 gate reaches 2 and the output is 0.

    Parameters:
        P (Predicate): local predicate of arity k
        x (BitVector | None): secret, or None for the secret-free skeleton
        n (int): seed length; inputs have dimension n^2
        enforce_bound (bool): raise when a magnitude exceeds n^3

    Returns:
        ReluNetwork: groups threshold_hinges, interval_hinges (layer 0), E1, E2, E3 (layer 1), output (layer 2)

    Raises:
        BoundViolationError: max magnitude 3n^2 exceeds n^3, which happens for n < 3
    """
    _check_inputs(P, x, n)
    k = P.k
    kn = k * n
    c = normal_threshold(n)

    threshold = build_threshold_layer(n, k, c)
    interval = build_interval_detector(n, k, c)
    dnf = _dnf_layer(P, x, n)
    validity = build_validity_layer(n, k)

    threshold_width = threshold.hidden.width
    interval_width = interval.hidden.width
    first_width = threshold_width + interval_width

    first_weights = np.zeros((n * n, first_width))
    first_weights[:kn, :threshold_width] = threshold.hidden.weights
    first_weights[:kn, threshold_width:] = interval.hidden.weights
    first_biases = np.concatenate([threshold.hidden.biases, interval.hidden.biases])

    terms, checks = dnf.width, validity.width
    second_width = terms + checks + kn
    second_weights = np.zeros((first_width, second_width))
    second_weights[:threshold_width, :terms] = threshold.readout @ dnf.weights
    second_weights[:threshold_width, terms:terms + checks] = threshold.readout @ validity.weights
    second_weights[threshold_width:, terms + checks:] = interval.readout
    second_biases = np.concatenate([
        threshold.readout_bias @ dnf.weights + dnf.biases,
        threshold.readout_bias @ validity.weights + validity.biases,
        interval.readout_bias,
    ])

    layers = [
        Layer(first_weights, first_biases, True),
        Layer(second_weights, second_biases, True),
        _output_layer(second_width),
    ]
    groups = {
        'threshold_hinges': NeuronGroup(0, 0, threshold_width),
        'interval_hinges': NeuronGroup(0, threshold_width, first_width),
        'E1': NeuronGroup(1, 0, terms),
        'E2': NeuronGroup(1, terms, terms + checks),
        'E3': NeuronGroup(1, terms + checks, second_width),
        'output': NeuronGroup(2, 0, 1),
    }
    info = {'mode': 'theorem1', 'n': n, 'k': k, 'c': c, 'predicate': P.to_string(), 'secret': x is not None}
    net = ReluNetwork(layers, groups, info)
    if enforce_bound:
        _enforce_bound(net, n)
    return net


def assemble_depth2_target(P: Predicate, x: BitVector | None, n: int, enforce_bound: bool = True) -> ReluNetwork:
    """
    The depth-2 target: E1 and E2 read the first kn raw coordinates, output [1 - sum of gates]_+

    Returns:
        ReluNetwork: groups E1, E2 (layer 0) and output (layer 1)
    """
    _check_inputs(P, x, n)
    kn = P.k * n
    dnf = _dnf_layer(P, x, n)
    validity = build_validity_layer(n, P.k)

    terms, checks = dnf.width, validity.width
    weights = np.zeros((n * n, terms + checks))
    weights[:kn, :terms] = dnf.weights
    weights[:kn, terms:] = validity.weights
    biases = np.concatenate([dnf.biases, validity.biases])

    layers = [Layer(weights, biases, True), _output_layer(terms + checks)]
    groups = {
        'E1': NeuronGroup(0, 0, terms),
        'E2': NeuronGroup(0, terms, terms + checks),
        'output': NeuronGroup(1, 0, 1),
    }
    info = {'mode': 'theorem2', 'n': n, 'k': P.k, 'predicate': P.to_string(), 'secret': x is not None}
    net = ReluNetwork(layers, groups, info)
    if enforce_bound:
        _enforce_bound(net, n)
    return net


def assemble_target(mode: str, P: Predicate, x: BitVector | None, n: int, enforce_bound: bool = True) -> ReluNetwork:
    if mode == 'theorem1':
        return assemble_depth3_target(P, x, n, enforce_bound)
    if mode == 'theorem2':
        return assemble_depth2_target(P, x, n, enforce_bound)
    raise InvalidParameterError(f"unknown mode {mode!r}")


@dataclass
class RegimeReport:
    """
    Asymptotic size and magnitude claims evaluated at the configured n
    """
    n: int
    k: int
    flags: dict[str, bool] = field(default_factory=dict)
    values: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.flags.values())

    def failing(self) -> list[str]:
        return [name for name, holds in self.flags.items() if not holds]


def regime_report(net: ReluNetwork, n: int, k: int) -> RegimeReport:
    """
    Compare actual neuron counts and magnitude against n^2, n log n, log n, 2n and n^3

    Natural log throughout. Failing flags are logged at WARNING.
    """
    report = RegimeReport(n, k)
    log_n = math.log(n)

    report.values['max_hidden_width'] = max(net.hidden_widths)
    report.flags['hidden_width_le_n2'] = max(net.hidden_widths) <= n ** 2

    report.values['max_magnitude'] = net.max_magnitude
    report.flags['magnitude_le_n3'] = net.max_magnitude <= n ** 3

    terms = len(net.group('E1'))
    report.values['E1_size'] = terms
    report.flags['E1_size_le_log_n'] = terms <= log_n
    report.flags['two_pow_k_le_log_n'] = 2 ** k <= log_n

    report.values['E2_size'] = len(net.group('E2'))
    report.flags['E2_size_le_2n'] = len(net.group('E2')) <= 2 * n

    if 'threshold_hinges' in net.groups:
        hinges = len(net.group('threshold_hinges'))
        report.values['threshold_hinges'] = hinges
        report.flags['threshold_hinges_le_n_log_n'] = hinges <= n * log_n

    for name in report.failing():
        log.warning("regime flag %s fails at n=%d, k=%d", name, n, k)
    return report
