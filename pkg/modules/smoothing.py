"""
Parameter vectors, noise magnitudes and Gaussian perturbation of parameters and inputs.

Lipschitz budget
----------------
For a neuron input u = w . o + b at layer l, with every parameter moved by at most 1 and the input
bounded by R in each coordinate, write B for the largest parameter magnitude, d_l for the fan-in,
X_l for a bound on any output of layer l and L_l for a bound on the sensitivity of any layer-l
neuron input to the parameters. Then

    X_0 = R,                L_0 = 0
    L_l = d_l (B + 1) L_{l-1} + d_l X_{l-1} + 1
    X_l = d_l (B + 1) X_{l-1} + (B + 1)

The three terms of L_l are the moved weights acting on moved inputs, the weights themselves (each
sees an input of size at most X_{l-1}) and the bias. ReLU is 1-Lipschitz so it never enlarges a bound.
The budget is the largest L_l over all layers.
"""
from dataclasses import dataclass, asdict
import logging
import math

import numpy as np

from modules.exceptions import InvalidParameterError
from modules.network import Layer, ReluNetwork, forward_eval

log = logging.getLogger(__name__)

SAFETY_FACTOR = 4.0
OMEGA_INFLATION = 0.1


@dataclass(frozen=True)
class ParamVector:
    """
    theta flattened: every weight matrix in layer order, then every bias vector in layer order
    """
    values: np.ndarray
    layout: tuple[tuple[int, int], ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        expected = sum(a * b + b for a, b in self.layout)
        if values.size != expected:
            raise InvalidParameterError(f"layout holds {expected} parameters, got {values.size}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return self.values.size

    def __add__(self, other) -> 'ParamVector':
        other_values = other.values if isinstance(other, ParamVector) else np.asarray(other)
        return ParamVector(self.values + other_values, self.layout)


@dataclass(frozen=True)
class SmoothingConfig:
    tau: float
    omega: float
    q: float
    r: int
    q_input: float = 1.0

    def __post_init__(self):
        if self.tau < 0 or self.omega < 0:
            raise InvalidParameterError("noise magnitudes must be non-negative")
        if self.q < 1:
            raise InvalidParameterError(f"the Lipschitz budget q must be at least 1, got {self.q}")

    def to_dict(self) -> dict:
        return asdict(self)


def flatten(net: ReluNetwork) -> ParamVector:
    layout = tuple(layer.weights.shape for layer in net.layers)
    values = np.concatenate([layer.weights.ravel() for layer in net.layers]
                            + [layer.biases for layer in net.layers])
    return ParamVector(values, layout)


def unflatten(params: ParamVector, template: ReluNetwork) -> ReluNetwork:
    """
    Rebuild a network shaped like the template from a parameter vector
    """
    if params.layout != tuple(layer.weights.shape for layer in template.layers):
        raise InvalidParameterError("parameter layout does not match the template network")
    offset = 0
    weights = []
    for fan_in, width in params.layout:
        weights.append(params.values[offset:offset + fan_in * width].reshape(fan_in, width))
        offset += fan_in * width
    layers = []
    for (fan_in, width), matrix, layer in zip(params.layout, weights, template.layers):
        layers.append(Layer(matrix, params.values[offset:offset + width], layer.activated))
        offset += width
    return template.with_layers(layers)


def lipschitz_budget(net: ReluNetwork, input_radius: float) -> float:
    """
    Upper bound on the parameter-Lipschitz constant of every neuron input, see the module docs

    Parameters:
        net (ReluNetwork): network at the unperturbed parameters
        input_radius (float): bound R on the input norm

    Returns:
        float: the budget L, at least 1
    """
    if input_radius <= 0:
        raise InvalidParameterError(f"input radius must be positive, got {input_radius}")
    B = net.max_magnitude
    bound, sensitivity = float(input_radius), 0.0
    budget = 0.0
    for layer in net.layers:
        d = layer.fan_in
        sensitivity = d * (B + 1) * sensitivity + d * bound + 1
        bound = d * (B + 1) * bound + (B + 1)
        budget = max(budget, sensitivity)
    return budget


def select_q(net: ReluNetwork, input_radius: float, safety: float = SAFETY_FACTOR) -> float:
    return safety * lipschitz_budget(net, input_radius)


def select_tau(q: float, r: int, n: int) -> float:
    """
    tau = 1 / (q sqrt(2 r n)), which keeps Pr[||xi|| > 1/q] below exp(-n/2)
    """
    if q < 1 or r < 1:
        raise InvalidParameterError(f"need q >= 1 and r >= 1, got q={q}, r={r}")
    return 1.0 / (q * math.sqrt(2.0 * r * n))


def input_lipschitz(net: ReluNetwork, inflation: float = OMEGA_INFLATION) -> float:
    """
    Product over layers of the largest incoming l1 norm, with every magnitude raised by `inflation`
    """
    product = 1.0
    for layer in net.layers:
        product *= float((np.abs(layer.weights) + inflation).sum(axis=0).max())
    return product


def select_omega(net: ReluNetwork, n: int) -> tuple[float, float]:
    """
    Input noise magnitude for the smoothed-input setting

    Returns:
        tuple[float, float]: (omega, q_input) with q_input = 4 * input Lipschitz bound
            and omega = 1 / (q_input sqrt(2 d n)), d the input dimension
    """
    q_input = SAFETY_FACTOR * input_lipschitz(net)
    return 1.0 / (q_input * math.sqrt(2.0 * net.input_dim * n)), q_input


def perturb_params(theta: ParamVector, tau: float, rng: np.random.Generator) -> ParamVector:
    """
    theta + xi with xi ~ N(0, tau^2 I)
    """
    if tau < 0:
        raise InvalidParameterError(f"tau must be non-negative, got {tau}")
    return theta + tau * rng.standard_normal(len(theta))


def perturb_network(net: ReluNetwork, tau: float, rng: np.random.Generator) -> tuple[ReluNetwork, np.ndarray]:
    """
    Perturb every parameter of a network; returns the perturbed network and the noise xi
    """
    theta = flatten(net)
    perturbed = perturb_params(theta, tau, rng)
    return unflatten(perturbed, net), perturbed.values - theta.values


def apply_noise(net: ReluNetwork, xi: np.ndarray) -> ReluNetwork:
    """
    theta(net) + xi for a noise vector drawn earlier on a network of the same layout
    """
    return unflatten(flatten(net) + xi, net)


def perturb_input(z, omega: float, rng: np.random.Generator) -> np.ndarray:
    """
    z + zeta with zeta ~ N(0, omega^2 I), row-wise for batches
    """
    if omega < 0:
        raise InvalidParameterError(f"omega must be non-negative, got {omega}")
    values = np.asarray(z, dtype=np.float64)
    return values + omega * rng.standard_normal(values.shape)


def max_preactivation_drift(net: ReluNetwork, perturbed: ReluNetwork, inputs) -> float:
    """
    Largest change of any neuron input over the given inputs
    """
    before = forward_eval(net, inputs).pre_activations
    after = forward_eval(perturbed, inputs).pre_activations
    return max(float(np.abs(a - b).max()) for a, b in zip(after, before))


@dataclass(frozen=True)
class MinSingularReport:
    empirical_freq: float
    bound: float
    raw_bound: float
    freq_above: float
    trials: int
    d: int
    tau: float
    t: float

    def to_dict(self) -> dict:
        return asdict(self)


def min_singular_bound(d: int, tau: float, t: float) -> float:
    """
    Unclipped 2.35 t sqrt(d) / tau
    """
    return 2.35 * t * math.sqrt(d) / tau


def min_singular_check(W, tau: float, t: float, trials: int, rng: np.random.Generator,
                       chunk: int = 256) -> MinSingularReport:
    """
    Estimate Pr[sigma_min(W + P) <= t] for P with iid N(0, tau^2) entries

    Parameters:
        W (array-like): square d x d matrix
        tau (float): noise magnitude, positive
        t (float): threshold, non-negative
        trials (int): number of draws of P
        rng (np.random.Generator): caller-owned stream
        chunk (int): draws per batched SVD

    Returns:
        MinSingularReport: the frequency at or below t, the frequency at or above t and the bound
            min(1, 2.35 t sqrt(d) / tau) next to its unclipped value
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise InvalidParameterError(f"min_singular_check needs a square matrix, got shape {W.shape}")
    if tau <= 0 or t < 0 or trials < 1:
        raise InvalidParameterError("need tau > 0, t >= 0 and trials >= 1")
    d = W.shape[0]

    below = above = 0
    remaining = trials
    while remaining:
        size = min(chunk, remaining)
        samples = W + tau * rng.standard_normal((size, d, d))
        smallest = np.linalg.svd(samples, compute_uv=False)[:, -1]
        below += int((smallest <= t).sum())
        above += int((smallest >= t).sum())
        remaining -= size

    raw = min_singular_bound(d, tau, t)
    log.debug("min singular d=%d tau=%g t=%g: %d/%d at or below t", d, tau, t, below, trials)
    return MinSingularReport(below / trials, min(1.0, raw), raw, above / trials, trials, d, tau, t)
