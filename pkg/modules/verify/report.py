"""
Verification reports.
"""
from dataclasses import dataclass, field

from modules.utils.stats import binomial_sigma

LEMMA_IDS = (
    'from-P-to-DNF',
    'N1-second-layer',
    'N1',
    'N2-second-layer',
    'N2',
    'N3',
    'tau-exists',
    'P1-P3',
    'realizable',
    'prob-z-good-discrete',
    'prob-z-good',
    'pseudorandom-small-loss',
    'random-large-loss',
    'Q1-Q2',
    'realizable2',
    'min-singular',
)


@dataclass
class VerifyReport:
    """
    Outcome of one check

    Attributes:
        lemma_id (str): one of LEMMA_IDS
        trials (int): number of checked items (inputs, draws, samples or runs)
        failures (int): items violating the checked statement
        bound (float): target the empirical value is compared with
        empirical (float): measured value, a frequency where the check counts events
        regime_ok (bool): whether the asymptotic premise of the statement holds at this n
        passed (bool): verdict of the check; informational checks always pass
        asserted (bool): whether `passed` is an assertion or informational
        seeds (dict): seed and stream key the check drew from
        details (dict): per-class counts and auxiliary measurements
    """
    lemma_id: str
    trials: int
    failures: int
    bound: float
    empirical: float
    regime_ok: bool = True
    passed: bool = True
    asserted: bool = True
    seeds: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lemma_id not in LEMMA_IDS:
            raise ValueError(f"unknown lemma id {self.lemma_id!r}")
        if not 0 <= self.failures <= max(self.trials, 0):
            raise ValueError(f"failures {self.failures} outside 0..{self.trials}")

    def to_dict(self) -> dict:
        return {
            'lemma_id': self.lemma_id,
            'passed': bool(self.passed),
            'asserted': bool(self.asserted),
            'regime_ok': bool(self.regime_ok),
            'trials': int(self.trials),
            'failures': int(self.failures),
            'empirical': float(self.empirical),
            'bound': float(self.bound),
            'seeds': self.seeds,
            'details': self.details,
        }


def frequency_within(failures: int, trials: int, rate: float, width: float = 3.0) -> bool:
    """
    failures / trials <= rate + width * binomial sigma of rate
    """
    if trials == 0:
        return True
    return failures / trials <= rate + width * binomial_sigma(rate, trials)
