import math
from unittest import mock

import numpy as np
import pytest

from modules.encoding import BitVector
from modules.gadgets import assemble_depth3_target, normal_threshold
from modules.network import forward_eval
from modules.oracle import prob_clean_example
from modules.prg import predicate_from_name
from modules.verify.sampling import check_clean_probability
from modules.verify.stability import (
    _violations, check_properties_P, check_properties_Q, check_tau_exists, depth3_case_inputs, gate_margins,
)


@pytest.fixture()
def secret(rng):
    def draw(n):
        return BitVector(rng.integers(0, 2, size=n))
    return draw


@pytest.mark.parametrize("n, name", [(6, 'XOR2'), (7, 'MAJ3')])
def test_properties_P_hold_exactly_without_noise(rng, secret, n, name):
    P = predicate_from_name(name)
    report = check_properties_P(n, P.k, P, secret(n), 0.0, 3, rng, inputs_per_draw=50)
    assert report.failures == 0
    assert report.passed
    assert report.details['max_drift'] == 0.0
    assert set(report.details['violations_by_case']) >= {'clean_zero', 'non_encoding', 'interval_hit'}
    assert not any(report.details['violations_by_case'].values())


def test_exact_levels_are_stricter_than_noisy_ones():
    quiet_e1, quiet_e2 = np.array([[-0.9]]), np.array([[-1.0]])
    assert _violations('clean_zero', quiet_e1, quiet_e2, None, gate_margins(True)).all()
    assert not _violations('clean_zero', quiet_e1, quiet_e2, None, gate_margins(False)).any()
    firing = np.array([[1.9]])
    assert _violations('non_encoding', quiet_e2, firing, None, gate_margins(True)).all()
    assert not _violations('non_encoding', quiet_e2, firing, None, gate_margins(False)).any()


def test_boundary_tie_reads_as_one_bit(rng, secret):
    """
    GIVEN a P_x = 0 input with one 1-bit coordinate exactly at c + 1/n^2
    WHEN the noiseless depth-3 target evaluates it
    THEN E1 and E2 stay at -1 or below and the interval gate of that coordinate sits at 2
    """
    n, P = 6, predicate_from_name('XOR2')
    x = secret(n)
    dead = depth3_case_inputs(P, x, n, 20, rng)['dead_zone']
    assert dead.shape[0] > 0
    kn = P.k * n
    tie = normal_threshold(n) + 1.0 / n ** 2
    column = int(np.flatnonzero(dead[0, :kn] == tie)[0])

    net = assemble_depth3_target(P, x, n, enforce_bound=False)
    gates = forward_eval(net, dead[:1]).pre_activations[net.group('E1').layer]
    e1, e2, e3 = (net.group(name).slice for name in ('E1', 'E2', 'E3'))
    assert not _violations('dead_zone', gates[:, e1], gates[:, e2], gates[:, e3], gate_margins(True)).any()
    assert gates[0, e3][column] == pytest.approx(2.0, abs=1e-9)


def test_properties_P_at_n50_with_budgeted_tau(rng, secret):
    P = predicate_from_name('XOR2')
    report = check_properties_P(50, 2, P, secret(50), None, 2, rng, inputs_per_draw=25)
    assert report.details['tau'] > 0
    assert report.details['max_drift'] <= 0.5
    assert report.details['drift_within_half']
    assert report.passed


def test_drift_beyond_half_fails_properties_P(rng, secret):
    P = predicate_from_name('XOR2')
    with mock.patch('modules.verify.stability.max_preactivation_drift', return_value=0.75):
        report = check_properties_P(6, 2, P, secret(6), 0.0, 2, rng, inputs_per_draw=25)
    assert report.failures == 0
    assert not report.details['drift_within_half']
    assert not report.passed


@pytest.mark.parametrize("tau, omega", [(0.0, 0.0), (None, None)])
def test_properties_Q_on_valid_and_invalid_encodings(rng, secret, tau, omega):
    n, P = 8, predicate_from_name('XOR2')
    report = check_properties_Q(n, 2, P, secret(n), tau, omega, 4, rng, inputs_per_draw=60)
    assert set(report.details['violations_by_case']) == {'clean_zero', 'clean_one', 'non_encoding'}
    assert report.bound == pytest.approx(1 / n + math.exp(-n / 2))
    assert report.passed
    if tau == 0.0:
        assert report.failures == 0
        assert not any(report.details['violations_by_case'].values())


def test_tau_exists_keeps_noise_inside_the_budget(rng, secret):
    P = predicate_from_name('XOR3')
    report = check_tau_exists(8, 3, P, secret(8), 30, rng)
    assert report.details['norm_violations'] == 0
    assert report.details['max_norm_times_q'] <= 1.0
    assert report.details['tau'] > 0
    assert report.passed


def test_tau_exists_fails_for_oversized_noise(rng, secret):
    P = predicate_from_name('XOR2')
    with mock.patch('modules.verify.stability.budget_tau', return_value=(1.0, 10.0)):
        report = check_tau_exists(6, 2, P, secret(6), 5, rng)
    assert report.details['norm_violations'] == 5
    assert not report.passed


@pytest.mark.parametrize("n, k", [(12, 2), (20, 3)])
def test_clean_probability_matches_closed_form(rng, n, k):
    report = check_clean_probability(n, k, 20_000, rng)
    assert report.lemma_id == 'prob-z-good'
    assert report.details['closed_form'] == pytest.approx(prob_clean_example(n, k))
    assert report.bound == pytest.approx(1 / (2 * math.log(n)))
    assert report.regime_ok == (report.details['closed_form'] >= report.bound)
    assert report.trials == 1
    assert report.failures == int(not report.passed)
    assert report.passed
