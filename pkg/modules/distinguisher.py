"""
The distinguisher: feed oracle examples to a learner, clip its hypothesis to [0, b], score it on a
holdout and answer "pseudorandom" when the holdout loss is at most the threshold.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
import math

import numpy as np
import pandas as pd

from modules.exceptions import EmptyHoldoutError, InvalidParameterError, SecretAbsentError
from modules.experiment import ExperimentConfig, log_base_regime
from modules.gadgets import assemble_target
from modules.learners import ClippedHypothesis, Hypothesis, Learner, SecretAccess, make_learner
from modules.oracle import ExampleBatch, OracleState, draw_examples, prob_clean_example
from modules.prg import (
    ChallengeKind, ChallengeSequence, distinguishing_advantage, predicate_from_name, sample_challenge,
)
from modules.smoothing import (
    SAFETY_FACTOR, SmoothingConfig, input_lipschitz, lipschitz_budget, perturb_network, select_omega, select_tau,
)
from modules.utils.rng import derive_seed, make_stream

log = logging.getLogger(__name__)

HOLDOUT_CHUNK = 1000


def clip_hypothesis(h: Hypothesis, b_hat: float) -> Hypothesis:
    return ClippedHypothesis(h, b_hat)


def _squared_errors(h: Hypothesis, batch: ExampleBatch) -> np.ndarray:
    return (h.predict(batch.inputs) - batch.labels) ** 2


def holdout_loss(h: Hypothesis, holdout: ExampleBatch) -> float:
    """
    Mean squared error over the holdout, summed chunk-wise with exact float summation

    Raises:
        EmptyHoldoutError: the holdout holds no example
    """
    if len(holdout) == 0:
        raise EmptyHoldoutError("holdout loss of an empty holdout")
    partial = []
    for start in range(0, len(holdout), HOLDOUT_CHUNK):
        stop = start + HOLDOUT_CHUNK
        chunk = ExampleBatch(holdout.inputs[start:stop], holdout.labels[start:stop], holdout.case_tags[start:stop],
                             holdout.challenge_indices[start:stop], holdout.substituted[start:stop])
        partial.extend(_squared_errors(h, chunk))
    return math.fsum(partial) / len(holdout)


def expected_random_loss(n: int, k: int, b_hat: float) -> float:
    """
    Holdout loss of the secret network on a random challenge: clean examples disagree half the time by b
    """
    return prob_clean_example(n, k) * b_hat ** 2 / 2.0


def midpoint_threshold(n: int, k: int, b_hat: float) -> float:
    return expected_random_loss(n, k, b_hat) / 2.0


def resolve_threshold(cfg: ExperimentConfig, b_hat: float) -> tuple[float, dict[str, bool]]:
    """
    Threshold for the configured policy with the regime flags that qualify it

    'two_over_n_below_random_loss' records whether 2/n lies below the random-case loss;
    'two_over_n_threshold' is False for a midpoint or explicit threshold.
    """
    expected = expected_random_loss(cfg.n, cfg.k, b_hat)
    flags = {
        'two_over_n_below_random_loss': 2.0 / cfg.n < expected,
        'two_over_n_threshold': cfg.threshold_policy == 'paper',
        **log_base_regime(cfg.n, cfg.k),
    }
    if cfg.threshold_policy == 'paper':
        return 2.0 / cfg.n, flags
    if cfg.threshold_policy == 'midpoint':
        return expected / 2.0, flags
    return float(cfg.threshold), flags


def smoothing_for(cfg: ExperimentConfig, net) -> SmoothingConfig:
    """
    tau and omega for a skeleton network under the configured policies; inputs are taken to have norm at most 2n
    """
    q = SAFETY_FACTOR * lipschitz_budget(net, 2.0 * cfg.n)
    r = net.parameter_count
    tau = select_tau(q, r, cfg.n) if cfg.tau_policy == 'paper_formula' else float(cfg.tau)
    omega, q_input = 0.0, 1.0
    if cfg.mode == 'theorem2':
        if cfg.omega_policy == 'paper_formula':
            omega, q_input = select_omega(net, cfg.n)
        else:
            omega, q_input = float(cfg.omega), SAFETY_FACTOR * input_lipschitz(net)
    return SmoothingConfig(tau=tau, omega=omega, q=q, r=r, q_input=q_input)


@dataclass
class Decision:
    """
    Verdict 1 means "pseudorandom"; it is always holdout_loss <= threshold
    """
    holdout_loss: float
    threshold: float
    holdout_size: int
    case_breakdown: dict = field(default_factory=dict)
    regime_flags: dict = field(default_factory=dict)
    kind: str = ''
    trial: int = 0
    learner: str = ''
    b_hat: float = 1.0
    tau: float = 0.0

    @property
    def verdict(self) -> int:
        return int(self.holdout_loss <= self.threshold)

    def to_dict(self) -> dict:
        return {
            'trial': self.trial,
            'kind': self.kind,
            'learner': self.learner,
            'verdict': self.verdict,
            'loss': self.holdout_loss,
            'threshold': self.threshold,
            'holdout_size': self.holdout_size,
            'b_hat': self.b_hat,
            'tau': self.tau,
            'case_breakdown': self.case_breakdown,
            'regime_flags': self.regime_flags,
        }


def _case_breakdown(frames: list[pd.DataFrame], size: int) -> dict:
    frame = pd.concat(frames, ignore_index=True)
    grouped = frame.groupby('case_tag', sort=True)['squared_error']
    summary = pd.DataFrame({'count': grouped.size(), 'loss_sum': grouped.apply(lambda s: math.fsum(s))})
    summary['contribution'] = summary['loss_sum'] / size
    return {tag: {'count': int(row['count']), 'contribution': float(row['contribution'])}
            for tag, row in summary.iterrows()}


def run_distinguisher(challenge: ChallengeSequence, learner: Learner, cfg: ExperimentConfig,
                      rng: np.random.Generator, trial: int = 0) -> Decision:
    """
    Run the distinguisher once on a challenge

    The target skeleton is built without the secret, perturbed once, and drives the oracle. Only a
    learner with requires_secret reads challenge.secret, to rebuild the same perturbed network.

    Parameters:
        challenge (ChallengeSequence): public hypergraph and labels
        learner (Learner): learner with sample budget learner.m
        cfg (ExperimentConfig): mode, noise and threshold policies, holdout cap
        rng (np.random.Generator): stream from which the run's sub-streams are derived
        trial (int): trial index recorded in the decision

    Returns:
        Decision: verdict, holdout loss, threshold and per-case loss contributions

    Raises:
        InvalidParameterError: the challenge is shorter than m + holdout size
        SecretAbsentError: a secret-reading learner got a challenge without its secret
    """
    n = challenge.n
    holdout_size = min(n ** 3, cfg.holdout_cap)
    if challenge.m < learner.m + holdout_size:
        raise InvalidParameterError(
            f"challenge of length {challenge.m} is shorter than m + holdout = {learner.m + holdout_size}")
    P = predicate_from_name(cfg.predicate)

    seed = derive_seed(rng)
    skeleton = assemble_target(cfg.mode, P, None, n, enforce_bound=cfg.enforce_bound)
    smoothing = smoothing_for(cfg, skeleton)
    perturbed, xi = perturb_network(skeleton, smoothing.tau, make_stream(seed, 'perturbation'))
    state = OracleState(challenge.without_secret(), perturbed, cfg.mode, omega=smoothing.omega)
    oracle_rng = make_stream(seed, 'oracle')

    training = draw_examples(state, learner.m, oracle_rng)
    if learner.requires_secret:
        if challenge.secret is None:
            raise SecretAbsentError(f"learner {learner.name} needs the challenge secret")
        learner.bind(SecretAccess(P, challenge.secret, cfg.mode, n, xi))
    hypothesis = clip_hypothesis(learner.train(training, make_stream(seed, 'learner')), perturbed.output_bias)

    errors, frames = [], []
    remaining = holdout_size
    while remaining:
        batch = draw_examples(state, min(HOLDOUT_CHUNK, remaining), oracle_rng)
        squared = _squared_errors(hypothesis, batch)
        errors.extend(squared)
        frames.append(pd.DataFrame({'case_tag': batch.case_tags, 'squared_error': squared}))
        remaining -= len(batch)
    loss = math.fsum(errors) / holdout_size

    threshold, flags = resolve_threshold(cfg, perturbed.output_bias)
    decision = Decision(
        holdout_loss=loss,
        threshold=threshold,
        holdout_size=holdout_size,
        case_breakdown=_case_breakdown(frames, holdout_size),
        regime_flags=flags,
        kind=challenge.kind.value,
        trial=trial,
        learner=learner.name,
        b_hat=perturbed.output_bias,
        tau=smoothing.tau,
    )
    log.info("trial %d %s: loss %.6g threshold %.6g verdict %d", trial, decision.kind, loss, threshold, decision.verdict)
    return decision


def run_trial(cfg: ExperimentConfig, kind: str, trial: int) -> Decision:
    """
    One independent trial: fresh challenge and run streams keyed by (seed, kind, trial)
    """
    kind = ChallengeKind(kind)
    kind_key = 1 if kind is ChallengeKind.PSEUDORANDOM else 0
    learner = make_learner(cfg.learner_name, **{'m': cfg.m, **cfg.learner_params})
    P = predicate_from_name(cfg.predicate)
    length = learner.m + cfg.holdout_size
    challenge = sample_challenge(P, cfg.n, length, kind, make_stream(cfg.seed, kind_key, trial, 'graph'),
                                 retain_secret=learner.requires_secret)
    return run_distinguisher(challenge, learner, cfg, make_stream(cfg.seed, kind_key, trial, 'oracle'), trial)


def iter_trials(cfg: ExperimentConfig, kind: str, trials: int | None = None, jobs: int = 1):
    """
    Yield cfg.trials (or `trials`) independent runs in trial order, fanned out over `jobs` processes
    """
    count = cfg.trials if trials is None else trials
    if jobs <= 1 or count <= 1:
        for trial in range(count):
            yield run_trial(cfg, kind, trial)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(run_trial, [cfg] * count, [kind] * count, range(count))


def run_trials(cfg: ExperimentConfig, kind: str, trials: int | None = None, jobs: int = 1) -> list[Decision]:
    return list(iter_trials(cfg, kind, trials, jobs))


def advantage_summary(pseudo: list[Decision], random: list[Decision]) -> dict:
    """
    Pr[verdict=1 | pseudorandom], Pr[verdict=1 | random] and their difference
    """
    p_pseudo = float(np.mean([d.verdict for d in pseudo])) if pseudo else 0.0
    p_random = float(np.mean([d.verdict for d in random])) if random else 0.0
    return {
        'p_pseudo': p_pseudo,
        'p_random': p_random,
        'advantage': distinguishing_advantage(p_pseudo, p_random),
        'mean_loss_pseudo': float(np.mean([d.holdout_loss for d in pseudo])) if pseudo else None,
        'mean_loss_random': float(np.mean([d.holdout_loss for d in random])) if random else None,
    }
