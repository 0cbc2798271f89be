from unittest import mock

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import linalg

from modules.encoding import BitVector
from modules.exceptions import InvalidParameterError, SecretAbsentError, SingularSystemError
from modules.gadgets import assemble_target
from modules.learners import (
    ClippedHypothesis, ConstantHypothesis, ConstantLearner, FunctionHypothesis, OracleLearner,
    RandomFeaturesLearner, SecretAccess, constant_learner, make_learner, oracle_learner, random_features_learner,
)
from modules.network import forward_eval
from modules.oracle import ExampleBatch
from modules.prg import xor_predicate
from modules.smoothing import perturb_network


def batch_of(inputs, labels):
    count = len(labels)
    return ExampleBatch(np.asarray(inputs, dtype=np.float64), np.asarray(labels, dtype=np.float64),
                        np.full(count, 'clean_zero'), np.arange(count), np.zeros(count, dtype=bool))


@pytest.mark.parametrize("value, expected", [(-5.0, 0.0), (0.5, 0.5), (3.0, 1.0)])
def test_clipping(value, expected):
    h = ClippedHypothesis(ConstantHypothesis(value), 1.0)
    assert h(np.zeros((4, 3))).tolist() == [expected] * 4


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(0, 2)), min_size=1, max_size=50), st.floats(0, 2))
def test_clipping_never_increases_loss(pairs, ceiling):
    """
    GIVEN predictions and labels in [0, b]
    WHEN predictions are clipped to [0, b]
    THEN no squared error grows
    """
    predictions = np.array([p for p, _ in pairs])
    labels = np.minimum(np.array([y for _, y in pairs]), ceiling)
    clipped = ClippedHypothesis(FunctionHypothesis(lambda z: predictions), ceiling)(np.zeros((len(pairs), 1)))
    assert ((clipped - labels) ** 2 <= (predictions - labels) ** 2 + 1e-12).all()


def test_clipping_rejects_negative_ceiling():
    with pytest.raises(InvalidParameterError):
        ClippedHypothesis(ConstantHypothesis(0.0), -1.0)


def test_constant_learner():
    learner = constant_learner(0.25, m=3)
    h = learner.train(batch_of(np.zeros((3, 2)), [0, 1, 0]), np.random.default_rng(0))
    assert h([1.0, 2.0]).tolist() == [0.25]
    assert learner.describe() == {'name': 'constant', 'm': 3, 'value': 0.25}


def test_random_features_fit_a_linear_target():
    """
    GIVEN labels that are an affine function of 5-dimensional inputs
    WHEN the random-features learner trains with 10 antithetic pairs and a tiny ridge
    THEN the training error is below 1e-8
    """
    rng = np.random.default_rng(1)
    inputs = rng.normal(size=(200, 5))
    labels = inputs @ np.array([0.5, -1.0, 2.0, 0.0, 0.3]) + 0.7
    h = random_features_learner(20, 1e-10, m=200).train(batch_of(inputs, labels), np.random.default_rng(2))
    assert np.mean((h(inputs) - labels) ** 2) <= 1e-8


def test_random_features_on_constant_labels():
    rng = np.random.default_rng(3)
    inputs = rng.normal(size=(100, 4))
    h = RandomFeaturesLearner(width=8, ridge=1e-10, m=100).train(batch_of(inputs, np.full(100, 0.8)), rng)
    np.testing.assert_allclose(h(rng.normal(size=(10, 4))), 0.8, atol=1e-4)


def test_random_features_retry_then_fail():
    inputs = np.random.default_rng(4).normal(size=(20, 3))
    learner = RandomFeaturesLearner(width=4, ridge=0.0, m=20)
    solution = np.zeros(5)
    with mock.patch('modules.learners.linalg.solve', side_effect=[linalg.LinAlgError('singular'), solution]) as solve:
        h = learner.train(batch_of(inputs, np.zeros(20)), np.random.default_rng(5))
    assert solve.call_count == 2
    assert h.coefficients is solution
    with mock.patch('modules.learners.linalg.solve', side_effect=linalg.LinAlgError('singular')):
        with pytest.raises(SingularSystemError):
            learner.train(batch_of(inputs, np.zeros(20)), np.random.default_rng(5))


@pytest.mark.parametrize("width, ridge", [(0, 1e-6), (4, -1.0)])
def test_random_features_validation(width, ridge):
    with pytest.raises(InvalidParameterError):
        RandomFeaturesLearner(width=width, ridge=ridge)


def test_oracle_learner_needs_the_secret():
    learner = oracle_learner(m=5)
    assert learner.requires_secret
    with pytest.raises(SecretAbsentError):
        learner.train(batch_of(np.zeros((1, 9)), [0.0]), np.random.default_rng(0))


def test_oracle_learner_returns_the_perturbed_secret_network():
    """
    GIVEN the noise that perturbed the skeleton
    WHEN the oracle learner is bound to the secret and trained
    THEN its hypothesis is the secret network under the same noise
    """
    P, n = xor_predicate(2), 4
    x = BitVector([1, 0, 0, 1])
    skeleton = assemble_target('theorem1', P, None, n)
    _, xi = perturb_network(skeleton, 1e-4, np.random.default_rng(6))
    learner = OracleLearner(m=0)
    learner.bind(SecretAccess(P, x, 'theorem1', n, xi))
    h = learner.train(batch_of(np.zeros((0, n * n)), []), np.random.default_rng(7))

    expected, _ = perturb_network(assemble_target('theorem1', P, x, n), 1e-4, np.random.default_rng(6))
    inputs = np.random.default_rng(8).normal(size=(50, n * n))
    np.testing.assert_allclose(h(inputs), forward_eval(expected, inputs).output, atol=1e-9)


def test_make_learner():
    assert isinstance(make_learner('constant', value=1.0), ConstantLearner)
    assert make_learner('random_features', width=8, m=10).describe() == {
        'name': 'random_features', 'm': 10, 'width': 8, 'ridge': 1e-6}
    with pytest.raises(InvalidParameterError):
        make_learner('perceptron')
    with pytest.raises(InvalidParameterError):
        make_learner('oracle', width=3)
