"""
Monte Carlo checks: realizability of oracle labels, the hyperedge and clean-input probabilities,
loss separation of the distinguisher and the smallest singular value of perturbed matrices.
"""
import logging
import math

import numpy as np

from modules.distinguisher import advantage_summary, expected_random_loss, run_trials, smoothing_for
from modules.encoding import is_encoding_batch
from modules.experiment import ExperimentConfig
from modules.gadgets import assemble_target, normal_threshold
from modules.network import forward_eval
from modules.oracle import (
    OracleState, conditional_gaussian, draw_examples, estimate_hyperedge_prob, prob_clean_example,
)
from modules.prg import Predicate, sample_challenge
from modules.smoothing import apply_noise, min_singular_check, perturb_network
from modules.utils.stats import binomial_sigma, within_sigmas
from modules.verify.report import VerifyReport

log = logging.getLogger(__name__)

CHUNK = 1000
LABEL_TOLERANCE = 1e-9


def check_realizability(mode: str, n: int, k: int, P: Predicate, trials: int, rng: np.random.Generator,
                        kind: str = 'pseudorandom', tau: float | None = None) -> VerifyReport:
    """
    Rate at which oracle labels equal the perturbed secret network's output

    On a pseudorandom challenge the rate must reach 1 - 2/n - 3 sigma. On a random challenge the
    rate is reported only.

    Parameters:
        mode (str): 'theorem1' or 'theorem2'
        trials (int): oracle examples
        kind (str): challenge kind
        tau (float | None): parameter noise; None takes the Lipschitz-budget rule
    """
    cfg = ExperimentConfig(n=n, k=k, predicate=P.to_string(), mode=mode, m=0, holdout_cap=1,
                           tau_policy='paper_formula' if tau is None else 'explicit', tau=tau,
                           enforce_bound=False)
    challenge = sample_challenge(P, n, trials, kind, rng, retain_secret=True)
    skeleton = assemble_target(mode, P, None, n, enforce_bound=False)
    smoothing = smoothing_for(cfg, skeleton)
    perturbed, xi = perturb_network(skeleton, smoothing.tau, rng)
    secret_net = apply_noise(assemble_target(mode, P, challenge.secret, n, enforce_bound=False), xi)
    state = OracleState(challenge, perturbed, mode, omega=smoothing.omega)

    agree = 0
    disagreements = {}
    remaining = trials
    while remaining:
        batch = draw_examples(state, min(CHUNK, remaining), rng)
        predicted = forward_eval(secret_net, batch.inputs).output
        matches = np.abs(batch.labels - predicted) <= LABEL_TOLERANCE
        agree += int(matches.sum())
        for tag in batch.case_tags[~matches]:
            disagreements[str(tag)] = disagreements.get(str(tag), 0) + 1
        remaining -= len(batch)

    lemma_id = 'realizable' if mode == 'theorem1' else 'realizable2'
    rate = agree / trials if trials else 1.0
    target = 1.0 - 2.0 / n
    asserted = kind == 'pseudorandom'
    passed = rate >= target - 3.0 * binomial_sigma(2.0 / n, trials) if asserted else True
    return VerifyReport(lemma_id, trials, trials - agree, target, rate, passed=passed, asserted=asserted,
                        details={'kind': kind, 'tau': smoothing.tau, 'omega': smoothing.omega,
                                 'disagreements_by_case': disagreements})


def check_hyperedge_probability(n: int, k: int, samples: int, rng: np.random.Generator) -> VerifyReport:
    """
    Frequency of Bernoulli vectors that encode a hyperedge against the closed form, within 3 sigma

    regime_ok records whether the closed form reaches 1/ln(n).
    """
    expected = estimate_hyperedge_prob(n, k)
    hits = 0
    remaining = samples
    while remaining:
        size = min(100 * CHUNK, remaining)
        bits = (rng.random((size, k * n)) >= 1.0 / n).astype(np.uint8)
        hits += int(is_encoding_batch(bits, n, k).sum())
        remaining -= size
    rate = hits / samples
    sigma = binomial_sigma(expected.closed_form, samples)
    passed = within_sigmas(rate, expected.closed_form, sigma)
    return VerifyReport('prob-z-good-discrete', 1, int(not passed), expected.closed_form, rate,
                        regime_ok=expected.regime_ok, passed=passed,
                        details={'samples': samples, 'sigma': sigma, 'lower_bound': expected.lower_bound})


def check_clean_probability(n: int, k: int, samples: int, rng: np.random.Generator) -> VerifyReport:
    """
    Frequency of oracle inputs that encode a hyperedge with no coordinate near c, against its closed form

    regime_ok records whether the probability reaches 1/(2 ln n).
    """
    c = normal_threshold(n)
    width = 1.0 / n ** 2
    expected = prob_clean_example(n, k)
    clean = 0
    remaining = samples
    while remaining:
        size = min(100 * CHUNK, remaining)
        bits = (rng.random((size, k * n)) >= 1.0 / n).astype(np.uint8)
        valid = bits[is_encoding_batch(bits, n, k)]
        lifted = conditional_gaussian(valid, c, rng)
        clean += int((~((lifted > c - width) & (lifted < c + 2 * width)).any(axis=1)).sum())
        remaining -= size
    rate = clean / samples
    sigma = binomial_sigma(expected, samples)
    lower_bound = 1.0 / (2.0 * math.log(n))
    passed = within_sigmas(rate, expected, sigma)
    return VerifyReport('prob-z-good', 1, int(not passed), lower_bound, rate, regime_ok=expected >= lower_bound,
                        passed=passed, details={'samples': samples, 'closed_form': expected, 'sigma': sigma})


MIN_ORACLE_ADVANTAGE = 0.8
RANDOM_LOSS_TOLERANCE = 0.2


def random_loss_within_tolerance(mean_loss: float, expected: float, b_hat: float, examples: int,
                                 tolerance: float = RANDOM_LOSS_TOLERANCE) -> bool:
    """
    Mean random-case holdout loss within `tolerance` of its closed form, widened by 3 standard errors

    A holdout example costs b^2 with probability expected / b^2 and nothing otherwise.
    """
    if expected <= 0.0:
        return mean_loss == 0.0
    variance = max(expected * b_hat ** 2 - expected ** 2, 0.0)
    standard_error = math.sqrt(variance / examples) if examples > 0 else 0.0
    return abs(mean_loss - expected) <= tolerance * expected + 3.0 * standard_error


def check_loss_separation(cfg: ExperimentConfig, trials: int, jobs: int = 1) -> list[VerifyReport]:
    """
    Full distinguisher runs per challenge kind with the configured learner

    Returns two reports, pseudorandom-small-loss and random-large-loss. When the threshold lies below
    the expected random-case loss both assert a distinguishing advantage above 1/3. With the oracle
    learner they also assert an advantage of at least 0.8 and a random-case mean loss within 20% of
    p b^2 / 2. Otherwise they only report.
    """
    if trials == 0:
        return [VerifyReport(lemma, 0, 0, 1.0 / 3.0, 0.0, passed=True, asserted=False)
                for lemma in ('pseudorandom-small-loss', 'random-large-loss')]

    pseudo = run_trials(cfg, 'pseudorandom', trials, jobs)
    random = run_trials(cfg, 'random', trials, jobs)
    summary = advantage_summary(pseudo, random)
    b_hat = float(np.mean([d.b_hat for d in pseudo + random]))
    expected = expected_random_loss(cfg.n, cfg.k, b_hat)
    threshold = pseudo[0].threshold
    regime_ok = threshold < expected

    oracle = cfg.learner_name == 'oracle'
    beats_third = summary['advantage'] > 1.0 / 3.0
    strong_advantage = summary['advantage'] >= MIN_ORACLE_ADVANTAGE
    loss_ok = random_loss_within_tolerance(summary['mean_loss_random'], expected, b_hat,
                                           trials * cfg.holdout_size)
    if not regime_ok:
        passed = True
    elif oracle:
        passed = beats_third and strong_advantage and loss_ok
    else:
        passed = beats_third
    details = {
        **summary,
        'threshold': threshold,
        'expected_random_loss': expected,
        'random_loss_relative_error': (summary['mean_loss_random'] - expected) / expected,
        'random_loss_within_tolerance': loss_ok,
        'advantage_above_third': beats_third,
        'advantage_at_least_oracle_floor': strong_advantage,
        'threshold_policy': cfg.threshold_policy,
    }
    small = sum(d.verdict == 0 for d in pseudo)
    large = sum(d.verdict == 1 for d in random)
    return [
        VerifyReport('pseudorandom-small-loss', trials, small, 1.0 / 3.0, summary['p_pseudo'], regime_ok=regime_ok,
                     passed=passed, asserted=regime_ok, details=details),
        VerifyReport('random-large-loss', trials, large, 1.0 / 3.0, 1.0 - summary['p_random'], regime_ok=regime_ok,
                     passed=passed, asserted=regime_ok, details=details),
    ]


MIN_SINGULAR_DIMS = (20, 50, 100)
MIN_SINGULAR_TAUS = (0.1, 0.01)
MIN_FREQ_ABOVE = 0.9


def check_min_singular(W: np.ndarray, tau: float, t: float, trials: int, rng: np.random.Generator,
                       above_target: float | None = None) -> VerifyReport:
    """
    Pr[sigma_min(W + P) <= t] within 3 sigma of min(1, 2.35 t sqrt(d) / tau)

    Pr[sigma_min >= t] must reach `above_target` when one is given, otherwise
    1 - 2.35 t sqrt(d) / tau - 3 sigma.
    """
    report = min_singular_check(W, tau, t, trials, rng)
    below = round(report.empirical_freq * trials)
    sigma = binomial_sigma(report.bound, trials)
    upper_ok = report.empirical_freq <= report.bound + 3.0 * sigma
    if above_target is None:
        above_target = 1.0 - report.raw_bound
        above_ok = report.freq_above >= above_target - 3.0 * binomial_sigma(min(max(above_target, 0.0), 1.0), trials)
    else:
        above_ok = report.freq_above >= above_target
    return VerifyReport('min-singular', trials, below, report.bound, report.empirical_freq,
                        passed=upper_ok and above_ok,
                        details={'d': report.d, 'tau': tau, 't': t, 'raw_bound': report.raw_bound,
                                 'freq_above': report.freq_above, 'above_target': above_target,
                                 'upper_ok': upper_ok, 'above_ok': above_ok})


def min_singular_grid(dims: tuple[int, ...] = MIN_SINGULAR_DIMS,
                      taus: tuple[float, ...] = MIN_SINGULAR_TAUS) -> list[dict]:
    """
    Grid cells d x tau at t = tau / d over unit-scale weight matrices
    """
    return [{'label': f'd={d},tau={tau}', 'W': np.eye(d), 'tau': tau, 't': tau / d, 'above_target': MIN_FREQ_ABOVE}
            for d in dims for tau in taus]


def check_min_singular_cells(cells: list[dict], trials: int, rng: np.random.Generator) -> VerifyReport:
    """
    One min-singular report over several cells; a cell fails when its own check fails

    Parameters:
        cells (list[dict]): each with label, W, tau, t and above_target (None for the bound-derived floor)
        trials (int): noise draws per cell

    Returns:
        VerifyReport: trials counts cells, failures counts failing cells
    """
    results = []
    for cell in cells:
        report = check_min_singular(cell['W'], cell['tau'], cell['t'], trials, rng, cell.get('above_target'))
        results.append({'label': cell['label'], 'passed': report.passed, 'freq_below': report.empirical,
                        'bound': report.bound, **report.details})
        log.debug("min-singular %s: below %.4f, above %.4f", cell['label'], report.empirical,
                  report.details['freq_above'])
    failures = sum(not result['passed'] for result in results)
    worst_above = min((result['freq_above'] for result in results), default=1.0)
    return VerifyReport('min-singular', len(results), failures, MIN_FREQ_ABOVE, worst_above,
                        passed=failures == 0, details={'draws_per_cell': trials, 'cells': results})
