"""
The verification suite: one report per lemma id, each check drawing from its own seeded stream.
"""
from collections.abc import Iterator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
import logging

import numpy as np

from modules.encoding import BitVector
from modules.experiment import ExperimentConfig, default_predicate
from modules.gadgets import assemble_depth2_target
from modules.network import pad_hidden_layers
from modules.prg import predicate_from_name
from modules.utils.rng import make_stream
from modules.verify.gadgets import (
    check_dnf_affine_layer, check_dnf_equivalence, check_interval_detector, check_n1, check_n2,
    check_validity_layer,
)
from modules.verify.report import LEMMA_IDS, VerifyReport
from modules.verify.sampling import (
    check_clean_probability, check_hyperedge_probability, check_loss_separation, check_min_singular_cells,
    check_realizability, min_singular_grid,
)
from modules.verify.stability import check_properties_P, check_properties_Q, check_tau_exists

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SuiteSettings:
    """
    Sizes of every check in one suite run
    """
    n: int = 8
    k: int = 3
    predicate: str | None = None
    exhaustive: bool = False
    seed: int = 0
    secrets: int = 20
    perturbation_draws: int = 100
    inputs_per_draw: int = 50
    realizability_examples: int = 2_000
    probability_samples: int = 100_000
    distinguisher_trials: int = 10
    holdout_cap: int = 2_000
    singular_trials: int = 2_000
    singular_tau: float = 0.1

    @property
    def predicate_name(self) -> str:
        return self.predicate or default_predicate(self.k)


def _secret(settings: SuiteSettings, rng: np.random.Generator) -> BitVector:
    return BitVector(rng.integers(0, 2, size=settings.n))


def _run_group(group: str, settings: SuiteSettings) -> list[VerifyReport]:
    """
    Run one check group on its own stream; module level so worker processes can import it
    """
    index = GROUPS.index(group)
    rng = make_stream(settings.seed, 'verify', index)
    n, k = settings.n, settings.k
    P = predicate_from_name(settings.predicate_name)

    if group == 'from-P-to-DNF':
        reports = [check_dnf_equivalence(n, k, rng, settings.secrets, settings.exhaustive)]
    elif group == 'N1-second-layer':
        reports = [check_dnf_affine_layer(n, k, rng, settings.secrets)]
    elif group == 'N1':
        reports = [check_n1(n, k, P, _secret(settings, rng), rng, settings.exhaustive)]
    elif group == 'N2-second-layer':
        reports = [check_validity_layer(n, k, rng)]
    elif group == 'N2':
        reports = [check_n2(n, k, P, _secret(settings, rng), rng)]
    elif group == 'N3':
        reports = [check_interval_detector(n, k, P, _secret(settings, rng), rng)]
    elif group == 'tau-exists':
        reports = [check_tau_exists(n, k, P, _secret(settings, rng), settings.perturbation_draws, rng)]
    elif group == 'P1-P3':
        reports = [check_properties_P(n, k, P, _secret(settings, rng), None, settings.perturbation_draws, rng,
                                      settings.inputs_per_draw)]
    elif group == 'realizable':
        reports = [check_realizability('theorem1', n, k, P, settings.realizability_examples, rng)]
    elif group == 'prob-z-good-discrete':
        reports = [check_hyperedge_probability(n, k, settings.probability_samples, rng)]
    elif group == 'prob-z-good':
        reports = [check_clean_probability(n, k, settings.probability_samples, rng)]
    elif group == 'loss-separation':
        cfg = ExperimentConfig(n=n, k=k, predicate=settings.predicate_name, mode='theorem1', m=0,
                               holdout_cap=settings.holdout_cap, threshold_policy='midpoint',
                               learner={'name': 'oracle'}, seed=settings.seed, enforce_bound=False)
        reports = check_loss_separation(cfg, settings.distinguisher_trials)
    elif group == 'Q1-Q2':
        reports = [check_properties_Q(n, k, P, _secret(settings, rng), None, None, settings.perturbation_draws, rng,
                                      settings.inputs_per_draw)]
    elif group == 'realizable2':
        reports = [check_realizability('theorem2', n, k, P, settings.realizability_examples, rng)]
    elif group == 'min-singular':
        net = pad_hidden_layers(assemble_depth2_target(P, _secret(settings, rng), n, enforce_bound=False), n * n)
        W = net.layers[0].weights
        tau = settings.singular_tau
        network = {'label': f'network,d={W.shape[0]},tau={tau}', 'W': W, 'tau': tau, 't': tau / W.shape[0],
                   'above_target': None}
        reports = [check_min_singular_cells([network, *min_singular_grid()], settings.singular_trials, rng)]
    else:
        raise ValueError(f"unknown check group {group!r}")

    for report in reports:
        report.seeds = {'seed': settings.seed, 'stream': ['verify', index]}
    return reports


# the two loss checks share one batch of distinguisher runs, placed where their lemma ids sit
GROUPS = tuple('loss-separation' if lemma == 'pseudorandom-small-loss' else lemma
               for lemma in LEMMA_IDS if lemma != 'random-large-loss')


def _batches(groups: list[str], settings: SuiteSettings, jobs: int) -> Iterator[list[VerifyReport]]:
    if jobs > 1 and len(groups) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(_run_group, groups, [settings] * len(groups))
    else:
        for group in groups:
            yield _run_group(group, settings)


def _stream(groups: list[str], wanted: set[str], settings: SuiteSettings, jobs: int) -> Iterator[VerifyReport]:
    for batch in _batches(groups, settings, jobs):
        for report in sorted(batch, key=lambda report: LEMMA_IDS.index(report.lemma_id)):
            if report.lemma_id not in wanted:
                continue
            level = logging.INFO if report.passed else logging.WARNING
            log.log(level, "%s: %s (%d/%d failures)", report.lemma_id, 'pass' if report.passed else 'FAIL',
                    report.failures, report.trials)
            yield report


def run_suite(settings: SuiteSettings, jobs: int = 1, only: list[str] | None = None) -> Iterator[VerifyReport]:
    """
    Run the checks, yielding each report as soon as its group finishes, in lemma id order

    Unknown ids raise before any check runs.

    Parameters:
        settings (SuiteSettings): sizes and seed
        jobs (int): worker processes
        only (list[str] | None): restrict to these lemma ids

    Returns:
        Iterator[VerifyReport]: exactly one report per selected lemma id
    """
    wanted = set(only or LEMMA_IDS)
    unknown = wanted - set(LEMMA_IDS)
    if unknown:
        raise ValueError(f"unknown lemma ids {sorted(unknown)}")
    groups = [g for g in GROUPS if g in wanted
              or (g == 'loss-separation' and wanted & {'pseudorandom-small-loss', 'random-large-loss'})]
    return _stream(groups, wanted, settings, jobs)


def with_overrides(settings: SuiteSettings, **overrides) -> SuiteSettings:
    return replace(settings, **{key: value for key, value in overrides.items() if value is not None})
