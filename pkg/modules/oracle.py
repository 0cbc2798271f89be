"""
Examples oracles built from a challenge sequence.

Depth 3 (Gaussian inputs): z in {0,1}^{kn} has iid coordinates equal to 0 with probability 1/n.
When z encodes a hyperedge it is replaced by the encoding of the current challenge edge S_i. Each
coordinate then draws a standard Gaussian conditioned on the side of c = Phi^{-1}(1/n) its bit
selects, so the input is exactly standard Gaussian whatever the bits were. The remaining
n^2 - kn coordinates are iid N(0, 1). Labels follow the case table below and never touch the
secret: only the challenge label y_i, the perturbed output bias b and the E3 branch of the
perturbed network are read.

    Psi(z') not an encoding                              -> 0
    some coordinate in (c, c + 1/n^2)                    -> 0
    no coordinate in (c - 1/n^2, c + 2/n^2), y_i = 0     -> b
    no coordinate in (c - 1/n^2, c + 2/n^2), y_i = 1     -> 0
    otherwise, y_i = 1                                   -> 0
    otherwise, y_i = 0                                   -> [b + sum over E3 of w_j relu(u_j)]_+

Depth 2 (smoothed Bernoulli inputs): all n^2 coordinates are Bernoulli as above, the first kn are
substituted when they encode a hyperedge, and N(0, omega^2) noise is added. Labels are b for an
encoding with y_i = 0 and 0 otherwise.

The i-th call to the oracle is tied to challenge index i whether or not it substitutes.
"""
from dataclasses import dataclass, field
from enum import Enum
import json
import logging
import math

import numpy as np
from scipy import special

from modules.encoding import encode_batch, is_encoding_batch
from modules.exceptions import InvalidParameterError, OracleDepletedError
from modules.gadgets import normal_threshold
from modules.network import ReluNetwork, eval_n3_branch
from modules.prg import ChallengeSequence

log = logging.getLogger(__name__)

# beyond this |c| the inverse-CDF transform loses the tail to underflow
INVERSE_CDF_LIMIT = 6.0


class CaseTag(str, Enum):
    NON_ENCODING = 'non_encoding'
    CLEAN_ZERO = 'clean_zero'
    CLEAN_ONE = 'clean_one'
    INTERVAL_HIT = 'interval_hit'
    NEAR_INTERVAL_ZERO = 'near_interval_zero'
    NEAR_INTERVAL_ONE = 'near_interval_one'


class OracleMode(str, Enum):
    THEOREM1 = 'theorem1'
    THEOREM2 = 'theorem2'


@dataclass
class LabeledExample:
    input: np.ndarray
    label: float
    case_tag: CaseTag

    def to_json(self) -> str:
        return json.dumps({'input': self.input.tolist(), 'label': float(self.label),
                           'case_tag': CaseTag(self.case_tag).value}, separators=(',', ':'))


@dataclass
class ExampleBatch:
    """
    A block of consecutive oracle calls

    Attributes:
        inputs (np.ndarray): (N, n^2) inputs
        labels (np.ndarray): (N,) labels
        case_tags (np.ndarray): (N,) case tag values
        challenge_indices (np.ndarray): (N,) challenge index consumed by each call
        substituted (np.ndarray): (N,) whether the call replaced z with a challenge encoding
    """
    inputs: np.ndarray
    labels: np.ndarray
    case_tags: np.ndarray
    challenge_indices: np.ndarray
    substituted: np.ndarray

    def __len__(self) -> int:
        return self.labels.shape[0]

    def __getitem__(self, index: int) -> LabeledExample:
        return LabeledExample(self.inputs[index], float(self.labels[index]), CaseTag(self.case_tags[index]))

    def __iter__(self):
        for index in range(len(self)):
            yield self[index]

    def case_counts(self) -> dict[str, int]:
        values, counts = np.unique(self.case_tags, return_counts=True)
        return {str(v): int(c) for v, c in zip(values, counts)}

    @classmethod
    def concatenate(cls, batches: list['ExampleBatch']) -> 'ExampleBatch':
        return cls(*(np.concatenate([getattr(b, name) for b in batches])
                     for name in ('inputs', 'labels', 'case_tags', 'challenge_indices', 'substituted')))


@dataclass
class OracleState:
    """
    Single-consumer oracle: holds the challenge without its secret, the perturbed network and the cursor
    """
    challenge: ChallengeSequence
    perturbed_net: ReluNetwork
    mode: OracleMode
    omega: float = 0.0
    c: float = field(default=None)
    cursor: int = 0

    def __post_init__(self):
        self.mode = OracleMode(self.mode)
        self.challenge = self.challenge.without_secret()
        if self.c is None:
            self.c = normal_threshold(self.challenge.n)
        for name in ('E1', 'E2'):
            self.perturbed_net.group(name)
        if self.mode is OracleMode.THEOREM1:
            self.perturbed_net.group('E3')
        if self.perturbed_net.input_dim != self.n ** 2:
            raise InvalidParameterError("network input dimension must be n^2")

    @property
    def n(self) -> int:
        return self.challenge.n

    @property
    def k(self) -> int:
        return self.challenge.k

    @property
    def output_bias(self) -> float:
        return self.perturbed_net.output_bias

    @property
    def remaining(self) -> int:
        return self.challenge.m - self.cursor


def sample_conditional_gaussian(bit: int, c: float, rng: np.random.Generator) -> float:
    """
    One draw of N(0, 1) conditioned on t <= c (bit 0) or t >= c (bit 1)
    """
    return float(conditional_gaussian(np.array([bit]), c, rng)[0])


def conditional_gaussian(bits: np.ndarray, c: float, rng: np.random.Generator) -> np.ndarray:
    """
    Element-wise conditional standard Gaussian draws, below c for 0-bits and above c for 1-bits

    Inverse-CDF transform of one uniform per element; when |c| exceeds the inverse-CDF limit the
    tail side is drawn by rejection instead.
    """
    bits = np.asarray(bits)
    if abs(c) <= INVERSE_CDF_LIMIT:
        uniforms = rng.random(bits.shape)
        mass_below = special.ndtr(c)
        p = np.where(bits == 0, (1.0 - uniforms) * mass_below, mass_below + uniforms * (1.0 - mass_below))
        values = special.ndtri(p)
    else:
        values = np.empty(bits.shape)
        low = bits == 0
        values[low] = _sample_below(c, int(low.sum()), rng)
        values[~low] = -_sample_below(-c, int((~low).sum()), rng)
    # Psi(t) must reproduce the bit under the >= tie rule
    return np.where(bits == 0, np.minimum(values, np.nextafter(c, -np.inf)), np.maximum(values, c))


def _sample_below(c: float, size: int, rng: np.random.Generator) -> np.ndarray:
    # N(0,1) conditioned on t <= c
    if c < 0:
        return -_tail_above(-c, size, rng)
    out = np.empty(0)
    while out.size < size:
        draws = rng.standard_normal(2 * (size - out.size))
        out = np.concatenate([out, draws[draws <= c]])
    return out[:size]


def _tail_above(a: float, size: int, rng: np.random.Generator) -> np.ndarray:
    # Marsaglia's tail method for N(0,1) conditioned on t >= a > 0
    out = np.empty(0)
    while out.size < size:
        need = size - out.size
        x = np.sqrt(a * a - 2.0 * np.log1p(-rng.random(need)))
        accept = rng.random(need) * x <= a
        out = np.concatenate([out, x[accept]])
    return out[:size]


@dataclass(frozen=True)
class HyperedgeProbability:
    closed_form: float
    lower_bound: float

    @property
    def regime_ok(self) -> bool:
        return self.closed_form >= self.lower_bound


def estimate_hyperedge_prob(n: int, k: int) -> HyperedgeProbability:
    """
    Pr[z encodes a hyperedge] = n (n-1) ... (n-k+1) (1/n)^k ((n-1)/n)^{nk-k}, next to 1/ln(n)
    """
    if not 1 <= k <= n or n < 2:
        raise InvalidParameterError(f"need 1 <= k <= n and n >= 2, got k={k}, n={n}")
    log_value = sum(math.log(n - i) for i in range(k)) - k * math.log(n) + (n * k - k) * math.log1p(-1.0 / n)
    return HyperedgeProbability(math.exp(log_value), 1.0 / math.log(n))


def clean_miss_probability(n: int, k: int) -> float:
    """
    Pr[no coordinate of an encoding's Gaussian lift lands in (c - 1/n^2, c + 2/n^2)]
    """
    c = normal_threshold(n)
    width = 1.0 / n ** 2
    near_zero = n * (special.ndtr(c) - special.ndtr(c - width))
    near_one = n / (n - 1) * (special.ndtr(c + 2 * width) - special.ndtr(c))
    return float((1.0 - near_zero) ** k * (1.0 - near_one) ** (k * n - k))


def prob_clean_example(n: int, k: int) -> float:
    """
    Pr[an oracle input encodes a hyperedge and has no coordinate near c]
    """
    return estimate_hyperedge_prob(n, k).closed_form * clean_miss_probability(n, k)


def _reserve(state: OracleState, count: int) -> np.ndarray:
    if count < 0:
        raise InvalidParameterError(f"count must be non-negative, got {count}")
    if count > state.remaining:
        raise OracleDepletedError(
            f"{count} calls requested with {state.remaining} of {state.challenge.m} challenge entries left")
    indices = np.arange(state.cursor, state.cursor + count)
    state.cursor += count
    return indices


def _bernoulli_bits(shape, n: int, rng: np.random.Generator) -> np.ndarray:
    # 0 with probability 1/n
    return (rng.random(shape) >= 1.0 / n).astype(np.uint8)


def draw_examples(state: OracleState, count: int, rng: np.random.Generator) -> ExampleBatch:
    """
    The next `count` oracle calls as one batch

    Draw order per batch: the Bernoulli bits of every call, then the conditional-Gaussian uniforms
    (depth 3) or the smoothing noise (depth 2), then the padding.

    Raises:
        OracleDepletedError: fewer than `count` challenge entries remain
    """
    indices = _reserve(state, count)
    if state.mode is OracleMode.THEOREM1:
        return _draw_depth3(state, indices, rng)
    return _draw_depth2(state, indices, rng)


def _substitute(state: OracleState, bits: np.ndarray, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, k = state.n, state.k
    kn = k * n
    valid = is_encoding_batch(bits[:, :kn], n, k)
    if valid.any():
        bits[valid, :kn] = encode_batch(state.challenge.graph.edges[indices[valid]], n)
    return valid, state.challenge.labels.array[indices]


def _draw_depth3(state: OracleState, indices: np.ndarray, rng: np.random.Generator) -> ExampleBatch:
    n, k, c = state.n, state.k, state.c
    kn, count = k * n, indices.size
    b_hat = state.output_bias
    width = 1.0 / n ** 2

    bits = _bernoulli_bits((count, kn), n, rng)
    valid, y = _substitute(state, bits, indices)
    lifted = conditional_gaussian(bits, c, rng)
    padding = rng.standard_normal((count, n * n - kn))
    inputs = np.hstack([lifted, padding])

    near = ((lifted > c - width) & (lifted < c + 2 * width)).any(axis=1)
    hit = ((lifted > c) & (lifted < c + width)).any(axis=1)

    labels = np.zeros(count)
    tags = np.full(count, CaseTag.NON_ENCODING.value, dtype=object)
    clean = valid & ~near
    tags[clean & (y == 0)] = CaseTag.CLEAN_ZERO.value
    tags[clean & (y == 1)] = CaseTag.CLEAN_ONE.value
    labels[clean & (y == 0)] = b_hat
    tags[valid & hit] = CaseTag.INTERVAL_HIT.value
    near_only = valid & near & ~hit
    tags[near_only & (y == 1)] = CaseTag.NEAR_INTERVAL_ONE.value
    branch = near_only & (y == 0)
    tags[branch] = CaseTag.NEAR_INTERVAL_ZERO.value
    if branch.any():
        labels[branch] = eval_n3_branch(state.perturbed_net, inputs[branch])

    log.debug("oracle drew %d depth-3 examples, %d substituted", count, int(valid.sum()))
    return ExampleBatch(inputs, labels, tags.astype(str), indices, valid)


def _draw_depth2(state: OracleState, indices: np.ndarray, rng: np.random.Generator) -> ExampleBatch:
    n, count = state.n, indices.size
    b_hat = state.output_bias

    bits = _bernoulli_bits((count, n * n), n, rng)
    valid, y = _substitute(state, bits, indices)
    inputs = bits + state.omega * rng.standard_normal(bits.shape)

    labels = np.zeros(count)
    tags = np.full(count, CaseTag.NON_ENCODING.value, dtype=object)
    tags[valid & (y == 0)] = CaseTag.CLEAN_ZERO.value
    tags[valid & (y == 1)] = CaseTag.CLEAN_ONE.value
    labels[valid & (y == 0)] = b_hat

    log.debug("oracle drew %d depth-2 examples, %d substituted", count, int(valid.sum()))
    return ExampleBatch(inputs, labels, tags.astype(str), indices, valid)


def gen_example_depth3(state: OracleState, rng: np.random.Generator) -> LabeledExample:
    if state.mode is not OracleMode.THEOREM1:
        raise InvalidParameterError("gen_example_depth3 needs a theorem1 oracle")
    return draw_examples(state, 1, rng)[0]


def gen_example_depth2(state: OracleState, rng: np.random.Generator) -> LabeledExample:
    if state.mode is not OracleMode.THEOREM2:
        raise InvalidParameterError("gen_example_depth2 needs a theorem2 oracle")
    return draw_examples(state, 1, rng)[0]
