import math


def binomial_sigma(p: float, trials: int) -> float:
    """
    Standard deviation of an empirical frequency over `trials` Bernoulli(p) draws
    """
    if trials <= 0:
        return 0.0
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def within_sigmas(observed: float, expected: float, sigma: float, width: float = 3.0) -> bool:
    return abs(observed - expected) <= width * sigma
