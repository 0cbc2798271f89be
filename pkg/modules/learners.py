"""
Hypotheses and learners plugged into the distinguisher.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
import logging

import numpy as np
from scipy import linalg

from modules.encoding import BitVector
from modules.exceptions import InvalidParameterError, SecretAbsentError, SingularSystemError
from modules.gadgets import assemble_target
from modules.network import ReluNetwork, forward_eval
from modules.oracle import ExampleBatch
from modules.prg import Predicate
from modules.smoothing import apply_noise

log = logging.getLogger(__name__)


class Hypothesis(ABC):
    """
    A deterministic predictor over rows of inputs
    """
    @abstractmethod
    def predict(self, inputs: np.ndarray) -> np.ndarray:
        ...

    def __call__(self, inputs) -> np.ndarray:
        return self.predict(np.atleast_2d(np.asarray(inputs, dtype=np.float64)))


class ConstantHypothesis(Hypothesis):
    def __init__(self, value: float):
        self.value = float(value)

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return np.full(inputs.shape[0], self.value)


class FunctionHypothesis(Hypothesis):
    def __init__(self, fn):
        self.fn = fn

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(inputs), dtype=np.float64).reshape(-1)


class NetworkHypothesis(Hypothesis):
    def __init__(self, net: ReluNetwork):
        self.net = net

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return forward_eval(self.net, inputs).outputs[:, 0]


class ClippedHypothesis(Hypothesis):
    """
    h'(z) = max(0, min(b, h(z)))
    """
    def __init__(self, inner: Hypothesis, ceiling: float):
        if ceiling < 0:
            raise InvalidParameterError(f"clipping ceiling must be non-negative, got {ceiling}")
        self.inner = inner
        self.ceiling = float(ceiling)

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return np.clip(self.inner.predict(inputs), 0.0, self.ceiling)


class RandomFeaturesHypothesis(Hypothesis):
    def __init__(self, directions: np.ndarray, offsets: np.ndarray, coefficients: np.ndarray):
        self.directions = directions
        self.offsets = offsets
        self.coefficients = coefficients

    def features(self, inputs: np.ndarray) -> np.ndarray:
        projected = inputs @ self.directions + self.offsets
        return np.hstack([np.maximum(projected, 0.0), np.maximum(-projected, 0.0), np.ones((inputs.shape[0], 1))])

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return self.features(inputs) @ self.coefficients


@dataclass(frozen=True)
class SecretAccess:
    """
    What a verification-mode learner may see: the predicate, the secret and the parameter noise
    """
    predicate: Predicate
    secret: BitVector | None
    mode: str
    n: int
    xi: np.ndarray


class Learner(ABC):
    """
    Learner contract: train on a batch of examples with a caller-provided stream

    Learners never see the oracle state or the challenge. Only learners with requires_secret set
    receive a SecretAccess, and only in verification mode.
    """
    name = 'learner'
    requires_secret = False

    def __init__(self, m: int = 0):
        if m < 0:
            raise InvalidParameterError(f"sample budget must be non-negative, got {m}")
        self.m = m

    @abstractmethod
    def train(self, examples: ExampleBatch, rng: np.random.Generator) -> Hypothesis:
        ...

    def describe(self) -> dict:
        return {'name': self.name, 'm': self.m}


class ConstantLearner(Learner):
    name = 'constant'

    def __init__(self, value: float = 0.0, m: int = 0):
        super().__init__(m)
        self.value = float(value)

    def train(self, examples: ExampleBatch, rng: np.random.Generator) -> Hypothesis:
        return ConstantHypothesis(self.value)

    def describe(self) -> dict:
        return {**super().describe(), 'value': self.value}


class OracleLearner(Learner):
    """
    Verification-only learner that returns the perturbed secret network used by the oracle

    It ignores its training data; train() costs one network assembly whatever m is.
    """
    name = 'oracle'
    requires_secret = True

    def __init__(self, secret_access: SecretAccess | None = None, m: int = 0):
        super().__init__(m)
        self.secret_access = secret_access

    def bind(self, secret_access: SecretAccess) -> None:
        self.secret_access = secret_access

    def train(self, examples: ExampleBatch, rng: np.random.Generator) -> Hypothesis:
        access = self.secret_access
        if access is None or access.secret is None:
            raise SecretAbsentError("the oracle learner needs the challenge secret (verification mode)")
        target = assemble_target(access.mode, access.predicate, access.secret, access.n, enforce_bound=False)
        return NetworkHypothesis(apply_noise(target, access.xi))


class RandomFeaturesLearner(Learner):
    """
    Ridge regression on frozen random ReLU features

    Features come in antithetic pairs [v.z + b]_+ and [-v.z - b]_+ plus an intercept, so every
    affine function of the input lies in their span once there are at least as many pairs as
    input dimensions.
    """
    name = 'random_features'

    def __init__(self, width: int = 256, ridge: float = 1e-6, m: int = 1000):
        super().__init__(m)
        if width < 1:
            raise InvalidParameterError(f"width must be at least 1, got {width}")
        if ridge < 0:
            raise InvalidParameterError(f"ridge must be non-negative, got {ridge}")
        self.width = width
        self.ridge = ridge

    def describe(self) -> dict:
        return {**super().describe(), 'width': self.width, 'ridge': self.ridge}

    def train(self, examples: ExampleBatch, rng: np.random.Generator) -> Hypothesis:
        inputs = np.asarray(examples.inputs, dtype=np.float64)
        labels = np.asarray(examples.labels, dtype=np.float64)
        dimension = inputs.shape[1]
        pairs = (self.width + 1) // 2
        directions = rng.standard_normal((dimension, pairs)) / np.sqrt(dimension)
        offsets = rng.standard_normal(pairs)

        hypothesis = RandomFeaturesHypothesis(directions, offsets, np.zeros(2 * pairs + 1))
        features = hypothesis.features(inputs)
        gram = features.T @ features
        rhs = features.T @ labels

        # one retry with a larger ridge
        for ridge in (self.ridge, max(self.ridge * 10.0, 1e-8)):
            try:
                hypothesis.coefficients = linalg.solve(gram + ridge * np.eye(gram.shape[0]), rhs, assume_a='sym')
                return hypothesis
            except linalg.LinAlgError:
                log.warning("ridge system singular at ridge=%g", ridge)
        raise SingularSystemError(f"ridge system stays singular at ridge={ridge:g}")


def oracle_learner(secret_access: SecretAccess | None = None, m: int = 0) -> OracleLearner:
    return OracleLearner(secret_access, m)


def random_features_learner(width: int, ridge: float, m: int = 1000) -> RandomFeaturesLearner:
    return RandomFeaturesLearner(width, ridge, m)


def constant_learner(value: float, m: int = 0) -> ConstantLearner:
    return ConstantLearner(value, m)


LEARNERS = {
    'oracle': OracleLearner,
    'random_features': RandomFeaturesLearner,
    'constant': ConstantLearner,
}


def make_learner(name: str, **params) -> Learner:
    """
    Build a learner by registry name with keyword parameters
    """
    try:
        cls = LEARNERS[name]
    except KeyError:
        raise InvalidParameterError(f"unknown learner {name!r}, expected one of {sorted(LEARNERS)}") from None
    try:
        return cls(**params)
    except TypeError as e:
        raise InvalidParameterError(f"bad parameters for learner {name!r}: {e}") from None
