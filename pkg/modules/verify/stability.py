"""
Perturbation checks: the noise magnitude tau, and the gate margins of both targets under parameter
(and input) noise.

Under noise the exact margins -1 / 2 loosen to -1/2 / 3/2. A perturbation draw counts as a failure
when any engineered input of any case class violates its margin.
"""
import logging
import math

import numpy as np

from modules.encoding import BitVector, encode_batch, is_encoding_batch, sample_hypergraph
from modules.gadgets import assemble_depth2_target, assemble_depth3_target, assemble_target, normal_threshold
from modules.network import forward_eval
from modules.oracle import conditional_gaussian
from modules.prg import Predicate, eval_predicate_batch
from modules.smoothing import (
    SAFETY_FACTOR, lipschitz_budget, max_preactivation_drift, perturb_input, perturb_network, select_omega, select_tau,
)
from modules.verify.report import VerifyReport, frequency_within

log = logging.getLogger(__name__)

LOW = -0.5
HIGH = 1.5
QUIET = -1.0
FIRING = 2.0
EXACT_TOLERANCE = 1e-9
DRIFT_LIMIT = 0.5


def budget_tau(net, n: int) -> tuple[float, float]:
    """
    (tau, q) from the Lipschitz budget at input radius 2n
    """
    q = SAFETY_FACTOR * lipschitz_budget(net, 2.0 * n)
    return select_tau(q, net.parameter_count, n), q


def edges_with_value(P: Predicate, x: BitVector, n: int, count: int, value: int,
                     rng: np.random.Generator) -> np.ndarray:
    """
    Up to `count` random hyperedges S with P(x_S) == value; empty when none turn up
    """
    candidates = sample_hypergraph(n, max(8 * count, 64), P.k, rng).edges
    chosen = candidates[eval_predicate_batch(P, x.array[candidates]) == value]
    return chosen[:count]


def _lift(bits: np.ndarray, n: int, c: float, rng: np.random.Generator, avoid: tuple[float, float]) -> np.ndarray:
    lifted = conditional_gaussian(bits, c, rng)
    keep = ~((lifted > avoid[0]) & (lifted < avoid[1])).any(axis=1)
    lifted = lifted[keep]
    inputs = np.hstack([lifted, rng.standard_normal((lifted.shape[0], n * n - bits.shape[1]))])
    return inputs[np.linalg.norm(inputs, axis=1) <= 2.0 * n]


def depth3_case_inputs(P: Predicate, x: BitVector, n: int, per_class: int,
                       rng: np.random.Generator) -> dict[str, np.ndarray]:
    """
    Inputs engineered into each case class of the depth-3 margins, all with norm at most 2n

        clean_zero / clean_one  encodings with P_x = 0 / 1, no coordinate in (c - 1/n^2, c + 2/n^2)
        non_encoding            lifts of non-encodings, no coordinate on the ramp (c, c + 1/n^2)
        interval_hit            a clean lift with one coordinate moved into (c, c + 1/n^2)
        dead_zone               a clean P_x = 0 lift with one 1-bit coordinate moved into [c + 1/n^2, c + 2/n^2),
                                the first row exactly at c + 1/n^2
    """
    k = P.k
    kn = k * n
    c = normal_threshold(n)
    width = 1.0 / n ** 2
    near = (c - width, c + 2 * width)
    cases = {}

    zero_edges = edges_with_value(P, x, n, per_class, 0, rng)
    one_edges = edges_with_value(P, x, n, per_class, 1, rng)
    cases['clean_zero'] = _lift(encode_batch(zero_edges, n), n, c, rng, near) if len(zero_edges) else np.empty((0, n * n))
    cases['clean_one'] = _lift(encode_batch(one_edges, n), n, c, rng, near) if len(one_edges) else np.empty((0, n * n))

    bits = (rng.random((2 * per_class, kn)) >= 1.0 / n).astype(np.uint8)
    bits = bits[~is_encoding_batch(bits, n, k)][:per_class]
    cases['non_encoding'] = _lift(bits, n, c, rng, (c, c + width))

    any_edges = sample_hypergraph(n, per_class, k, rng).edges
    hit = _lift(encode_batch(any_edges, n), n, c, rng, near)
    columns = rng.integers(0, kn, size=hit.shape[0])
    hit[np.arange(hit.shape[0]), columns] = c + width * rng.uniform(0.0, 1.0, size=hit.shape[0])
    hit[np.arange(hit.shape[0]), columns] = np.clip(hit[np.arange(hit.shape[0]), columns],
                                                    np.nextafter(c, np.inf), np.nextafter(c + width, -np.inf))
    cases['interval_hit'] = hit

    dead = cases['clean_zero'].copy()
    if dead.shape[0]:
        for row in range(dead.shape[0]):
            ones = np.flatnonzero(dead[row, :kn] >= c)
            column = ones[rng.integers(0, ones.size)]
            dead[row, column] = c + width if row == 0 else c + width * rng.uniform(1.0, 2.0)
    cases['dead_zone'] = dead
    return cases


def gate_margins(exact: bool) -> tuple[float, float]:
    """
    Quiet and firing levels of a gate input: the noiseless values -1 and 2, or the halfway levels under noise
    """
    if exact:
        return QUIET + EXACT_TOLERANCE, FIRING - EXACT_TOLERANCE
    return LOW, HIGH


def _quiet(gates: np.ndarray, low: float) -> np.ndarray:
    return (gates <= low).all(axis=1)


def _fires(gates: np.ndarray, high: float) -> np.ndarray:
    return (gates >= high).any(axis=1)


def _violations(case: str, e1: np.ndarray, e2: np.ndarray, e3: np.ndarray | None,
                margins: tuple[float, float] = (LOW, HIGH)) -> np.ndarray:
    low, high = margins
    e3_quiet = _quiet(e3, low) if e3 is not None else True
    if case == 'clean_zero':
        ok = _quiet(e1, low) & _quiet(e2, low) & e3_quiet
    elif case == 'clean_one':
        ok = _fires(e1, high) & _quiet(e2, low) & e3_quiet
    elif case == 'non_encoding':
        ok = _fires(e2, high)
    elif case == 'interval_hit':
        ok = _fires(e3, high)
    else:
        ok = _quiet(e1, low) & _quiet(e2, low)
    return ~ok


def check_properties_P(n: int, k: int, P: Predicate, x: BitVector, tau: float | None, trials: int,
                       rng: np.random.Generator, inputs_per_draw: int = 200) -> VerifyReport:
    """
    Gate margins of the perturbed depth-3 target on every case class

    Parameters:
        tau (float | None): parameter noise; None takes the Lipschitz-budget rule
        trials (int): perturbation draws
        inputs_per_draw (int): engineered inputs per draw, split across the classes

    Returns:
        VerifyReport: failing draws against the 1/n rate, with every neuron input moving by at most 1/2;
            at tau = 0 no draw may fail at the exact levels -1 and 2
    """
    net = assemble_depth3_target(P, x, n, enforce_bound=False)
    if tau is None:
        tau, _ = budget_tau(net, n)
    per_class = max(inputs_per_draw // 5, 1)
    margins = gate_margins(tau == 0)
    e1, e2, e3 = (net.group(name).slice for name in ('E1', 'E2', 'E3'))
    gate_layer = net.group('E1').layer

    failures = 0
    per_case = {}
    max_drift = 0.0
    for draw in range(trials):
        perturbed, _ = perturb_network(net, tau, rng)
        failed = False
        for case, inputs in depth3_case_inputs(P, x, n, per_class, rng).items():
            if not inputs.shape[0]:
                continue
            gates = forward_eval(perturbed, inputs).pre_activations[gate_layer]
            bad = int(_violations(case, gates[:, e1], gates[:, e2], gates[:, e3], margins).sum())
            per_case[case] = per_case.get(case, 0) + bad
            failed = failed or bad > 0
            max_drift = max(max_drift, max_preactivation_drift(net, perturbed, inputs))
        failures += failed

    rate_ok = failures == 0 if tau == 0 else frequency_within(failures, trials, 1.0 / n)
    drift_ok = max_drift <= DRIFT_LIMIT
    passed = rate_ok and drift_ok
    log.info("P1-P3 at n=%d: %d of %d draws failed, max drift %.3g", n, failures, trials, max_drift)
    return VerifyReport('P1-P3', trials, failures, 1.0 / n, failures / trials if trials else 0.0, passed=passed,
                        details={'tau': tau, 'violations_by_case': per_case, 'max_drift': max_drift,
                                 'drift_within_half': drift_ok})


def depth2_case_inputs(P: Predicate, x: BitVector, n: int, per_class: int,
                       rng: np.random.Generator) -> dict[str, np.ndarray]:
    """
    Binary inputs of the depth-2 margins: encodings with P_x = 0 / 1 and non-encodings on the first kn coordinates
    """
    k = P.k
    kn = k * n
    cases = {}
    for case, value in (('clean_zero', 0), ('clean_one', 1)):
        edges = edges_with_value(P, x, n, per_class, value, rng)
        padding = (rng.random((len(edges), n * n - kn)) >= 1.0 / n).astype(np.float64)
        cases[case] = np.hstack([encode_batch(edges, n), padding]) if len(edges) else np.empty((0, n * n))
    bits = (rng.random((2 * per_class, n * n)) >= 1.0 / n).astype(np.float64)
    cases['non_encoding'] = bits[~is_encoding_batch(bits[:, :kn].astype(np.uint8), n, k)][:per_class]
    return cases


def check_properties_Q(n: int, k: int, P: Predicate, x: BitVector, tau: float | None, omega: float | None,
                       trials: int, rng: np.random.Generator, inputs_per_draw: int = 200) -> VerifyReport:
    """
    Gate margins of the depth-2 target under parameter noise tau and input noise omega
    """
    net = assemble_depth2_target(P, x, n, enforce_bound=False)
    if tau is None:
        tau, _ = budget_tau(net, n)
    if omega is None:
        omega, _ = select_omega(net, n)
    per_class = max(inputs_per_draw // 3, 1)
    margins = gate_margins(tau == 0 and omega == 0)
    e1, e2 = net.group('E1').slice, net.group('E2').slice

    failures = 0
    per_case = {}
    for draw in range(trials):
        perturbed, _ = perturb_network(net, tau, rng)
        failed = False
        for case, inputs in depth2_case_inputs(P, x, n, per_class, rng).items():
            if not inputs.shape[0]:
                continue
            gates = forward_eval(perturbed, perturb_input(inputs, omega, rng)).pre_activations[0]
            bad = int(_violations(case, gates[:, e1], gates[:, e2], None, margins).sum())
            per_case[case] = per_case.get(case, 0) + bad
            failed = failed or bad > 0
        failures += failed

    rate = 1.0 / n + math.exp(-n / 2.0)
    passed = failures == 0 if tau == 0 and omega == 0 else frequency_within(failures, trials, rate)
    return VerifyReport('Q1-Q2', trials, failures, rate, failures / trials if trials else 0.0, passed=passed,
                        details={'tau': tau, 'omega': omega, 'violations_by_case': per_case})


def check_tau_exists(n: int, k: int, P: Predicate, x: BitVector, draws: int, rng: np.random.Generator,
                     mode: str = 'theorem1') -> VerifyReport:
    """
    With tau from the Lipschitz-budget rule: ||xi|| <= 1/q on every draw, and the output bias stays in
    [9/10, 11/10] with output weights in [-11/10, -9/10] on all but a 1/n fraction of draws
    """
    net = assemble_target(mode, P, x, n, enforce_bound=False)
    tau, q = budget_tau(net, n)
    norm_violations = range_violations = 0
    largest = 0.0
    for draw in range(draws):
        perturbed, xi = perturb_network(net, tau, rng)
        norm = float(np.linalg.norm(xi))
        largest = max(largest, norm * q)
        norm_violations += norm > 1.0 / q
        output = perturbed.layers[-1]
        in_range = (0.9 <= output.biases[0] <= 1.1) and bool(((output.weights >= -1.1) & (output.weights <= -0.9)).all())
        range_violations += not in_range

    passed = norm_violations == 0 and frequency_within(range_violations, draws, 1.0 / n)
    failures = max(norm_violations, range_violations)
    return VerifyReport('tau-exists', draws, failures, math.exp(-n / 2.0),
                        norm_violations / draws if draws else 0.0, passed=passed,
                        details={'tau': tau, 'q': q, 'r': net.parameter_count, 'norm_violations': norm_violations,
                                 'range_violations': range_violations, 'max_norm_times_q': largest})
