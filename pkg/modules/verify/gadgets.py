"""
Exact checks of the gadgets on binary vectors and on noiseless Gaussian lifts.
"""
import itertools
import logging

import numpy as np

from modules.dnf import compile_predicate_dnf, eval_dnf_batch
from modules.encoding import BitVector, decode_encoding, encode_batch, is_encoding_batch
from modules.gadgets import (
    assemble_depth3_target, build_dnf_affine_layer, build_interval_detector, build_threshold_layer,
    build_validity_layer, normal_threshold,
)
from modules.network import forward_eval
from modules.oracle import conditional_gaussian
from modules.prg import (
    Predicate, and_predicate, constant_predicate, eval_predicate_batch, maj_predicate, or_predicate,
    xor_maj, xor_predicate,
)
from modules.verify.report import VerifyReport

log = logging.getLogger(__name__)

TOLERANCE = 1e-9
EXHAUSTIVE_WIDTH = 16
SAMPLED_VECTORS = 100_000
SAMPLED_EDGES = 10_000


def predicate_test_set(k: int, rng: np.random.Generator) -> list[Predicate]:
    """
    Named predicates of arity k plus one random truth table
    """
    predicates = [xor_predicate(k), and_predicate(k), or_predicate(k), maj_predicate(k),
                  constant_predicate(k, 0), constant_predicate(k, 1)]
    if k >= 2:
        predicates.append(xor_maj(1, k - 1))
    predicates.append(Predicate(k, tuple(rng.integers(0, 2, size=2 ** k)), 'random'))
    return predicates


def hyperedges(n: int, k: int, exhaustive: bool, rng: np.random.Generator) -> np.ndarray:
    """
    Every ordered k-tuple of distinct vertices, or a uniform sample of them
    """
    if exhaustive:
        return np.array(list(itertools.permutations(range(n), k)), dtype=np.int64).reshape(-1, k)
    edges = np.argsort(rng.random((SAMPLED_EDGES, n)), axis=1)[:, :k]
    return edges


def binary_vectors(width: int, n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """
    All 2^width vectors when width <= 16, otherwise sparse-zero random vectors mixed with encodings
    """
    if width <= EXHAUSTIVE_WIDTH:
        shifts = np.arange(width - 1, -1, -1)
        return ((np.arange(2 ** width)[:, None] >> shifts) & 1).astype(np.uint8)
    half = SAMPLED_VECTORS // 2
    noise = (rng.random((half, width)) >= 1.0 / n).astype(np.uint8)
    edges = np.argsort(rng.random((SAMPLED_VECTORS - half, n)), axis=1)[:, :k]
    return np.vstack([noise, encode_batch(edges, n)])


def lifted_encodings(edges: np.ndarray, n: int, c: float, rng: np.random.Generator,
                     avoid: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """
    Gaussian lifts of encodings padded to n^2, keeping rows with no lifted coordinate inside `avoid`

    Returns:
        tuple[np.ndarray, np.ndarray]: the inputs and the index of the edge behind each row
    """
    bits = encode_batch(edges, n)
    return lift_bits(bits, n, c, rng, avoid)


def lift_bits(bits: np.ndarray, n: int, c: float, rng: np.random.Generator,
              avoid: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    lifted = conditional_gaussian(bits, c, rng)
    keep = ~((lifted > avoid[0]) & (lifted < avoid[1])).any(axis=1)
    padding = rng.standard_normal((int(keep.sum()), n * n - bits.shape[1]))
    return np.hstack([lifted[keep], padding]), np.flatnonzero(keep)


def check_dnf_equivalence(n: int, k: int, rng: np.random.Generator, secrets: int = 20,
                          exhaustive: bool = True, predicates: list[Predicate] | None = None) -> VerifyReport:
    """
    psi(z^S) == P(x_S) on every (sampled) hyperedge for a predicate set and random secrets, and |psi| <= 2^k
    """
    predicates = predicates or predicate_test_set(k, rng)
    edges = hyperedges(n, k, exhaustive, rng)
    encodings = encode_batch(edges, n)
    trials = failures = oversized = 0
    for P in predicates:
        for _ in range(secrets):
            x = BitVector(rng.integers(0, 2, size=n))
            psi = compile_predicate_dnf(P, x, n)
            oversized += len(psi) > 2 ** k
            expected = eval_predicate_batch(P, x.array[edges])
            failures += int((eval_dnf_batch(psi, encodings) != expected).sum())
            trials += len(edges)
    return VerifyReport('from-P-to-DNF', trials, failures + oversized, 0.0,
                        failures / trials if trials else 0.0, passed=failures == 0 and oversized == 0,
                        details={'predicates': [P.name for P in predicates], 'edges': len(edges),
                                 'oversized_formulas': oversized})


def check_dnf_affine_layer(n: int, k: int, rng: np.random.Generator, secrets: int = 20,
                           predicates: list[Predicate] | None = None) -> VerifyReport:
    """
    Each E1 output is exactly 2 on a satisfied term and at most -1 otherwise, and some output reaches 2 iff psi holds
    """
    predicates = predicates or predicate_test_set(k, rng)
    vectors = binary_vectors(k * n, n, k, rng).astype(np.int64)
    trials = failures = 0
    for P in predicates:
        for _ in range(secrets):
            x = BitVector(rng.integers(0, 2, size=n))
            psi = compile_predicate_dnf(P, x, n)
            layer = build_dnf_affine_layer(psi, k * n)
            outputs = vectors @ layer.weights + layer.biases
            terms = psi.term_matrix().astype(np.int64)
            satisfied = (vectors @ terms.T) == terms.sum(axis=1)
            exact = np.where(satisfied, np.abs(outputs - 2.0) <= TOLERANCE, outputs <= -1.0 + TOLERANCE)
            fires = (outputs >= 2.0 - TOLERANCE).any(axis=1) if outputs.shape[1] else np.zeros(len(vectors), bool)
            agree = fires == eval_dnf_batch(psi, vectors).astype(bool)
            failures += int((~(exact.all(axis=1) & agree)).sum())
            trials += len(vectors)
    return VerifyReport('N1-second-layer', trials, failures, 0.0, failures / trials if trials else 0.0,
                        passed=failures == 0, details={'vectors': len(vectors)})


def check_n1(n: int, k: int, P: Predicate, x: BitVector, rng: np.random.Generator,
             exhaustive: bool = True) -> VerifyReport:
    """
    The threshold ramp hits its exact values and E1 of the depth-3 target separates P_x = 0 from P_x = 1
    on noiseless lifts of encodings with no coordinate on the ramp
    """
    c = normal_threshold(n)
    width = 1.0 / n ** 2
    fragment = build_threshold_layer(n, k, c)
    probes = np.array([c - 5.0, c - width, c, c + width / 2, c + width, c + 5.0])
    expected_ramp = np.array([0.0, 0.0, 0.0, 0.5, 1.0, 1.0])
    ramp = fragment.evaluate(np.tile(probes[:, None], (1, k * n)))
    ramp_failures = int((np.abs(ramp - expected_ramp[:, None]) > TOLERANCE).any(axis=1).sum())

    net = assemble_depth3_target(P, x, n, enforce_bound=False)
    edges = hyperedges(n, k, exhaustive, rng)
    inputs, rows = lifted_encodings(edges, n, c, rng, (c, c + width))
    gates = forward_eval(net, inputs).pre_activations[1][:, net.group('E1').slice]
    values = eval_predicate_batch(P, x.array[edges[rows]]).astype(bool)
    margin = ((gates <= -1.0 + TOLERANCE) | (gates >= 2.0 - TOLERANCE)).all(axis=1)
    fires = (gates >= 2.0 - TOLERANCE).any(axis=1) if gates.shape[1] else np.zeros(len(rows), bool)
    failures = int((~(margin & (fires == values))).sum()) + ramp_failures
    trials = len(rows) + len(probes)
    return VerifyReport('N1', trials, failures, 0.0, failures / trials, passed=failures == 0,
                        details={'ramp_failures': ramp_failures, 'lifted_inputs': len(rows),
                                 'excluded_on_ramp': len(edges) - len(rows)})


def check_validity_layer(n: int, k: int, rng: np.random.Generator) -> VerifyReport:
    """
    Over binary vectors: some E2 output is at least 2 exactly on non-encodings, all are at most -1 on encodings
    """
    vectors = binary_vectors(k * n, n, k, rng)
    layer = build_validity_layer(n, k)
    outputs = vectors @ layer.weights + layer.biases
    valid = is_encoding_batch(vectors, n, k)
    ok = np.where(valid, (outputs <= -1.0 + TOLERANCE).all(axis=1), (outputs >= 2.0 - TOLERANCE).any(axis=1))
    if len(vectors) <= 2 ** EXHAUSTIVE_WIDTH:
        decoded = np.array([decode_encoding(v, n, k) is not None for v in vectors])
        ok &= decoded == valid
    failures = int((~ok).sum())
    return VerifyReport('N2-second-layer', len(vectors), failures, 0.0, failures / len(vectors),
                        passed=failures == 0, details={'encodings': int(valid.sum()), 'vectors': len(vectors)})


def check_n2(n: int, k: int, P: Predicate, x: BitVector, rng: np.random.Generator,
             samples: int = 20_000) -> VerifyReport:
    """
    E2 of the depth-3 target on noiseless lifts: all inputs at most -1 on encodings, some at least 2 otherwise
    """
    c = normal_threshold(n)
    width = 1.0 / n ** 2
    net = assemble_depth3_target(P, x, n, enforce_bound=False)
    half = samples // 2
    noise = (rng.random((half, k * n)) >= 1.0 / n).astype(np.uint8)
    edges = np.argsort(rng.random((samples - half, n)), axis=1)[:, :k]
    bits = np.vstack([noise, encode_batch(edges, n)])
    inputs, rows = lift_bits(bits, n, c, rng, (c, c + width))
    gates = forward_eval(net, inputs).pre_activations[1][:, net.group('E2').slice]
    valid = is_encoding_batch(bits[rows], n, k)
    ok = np.where(valid, (gates <= -1.0 + TOLERANCE).all(axis=1), (gates >= 2.0 - TOLERANCE).any(axis=1))
    failures = int((~ok).sum())
    return VerifyReport('N2', len(rows), failures, 0.0, failures / max(len(rows), 1), passed=failures == 0,
                        details={'encodings': int(valid.sum()), 'non_encodings': int((~valid).sum())})


def trapezoid(t: np.ndarray, n: int, c: float) -> np.ndarray:
    width = 1.0 / n ** 2
    scale = 3.0 * n ** 2
    return np.select(
        [t <= c - width, t < c, t <= c + width, t < c + 2 * width],
        [-1.0, scale * (t - (c - width)) - 1.0, 2.0, 2.0 - scale * (t - (c + width))],
        default=-1.0,
    )


def check_interval_detector(n: int, k: int, P: Predicate, x: BitVector, rng: np.random.Generator,
                            samples: int = 2_000) -> VerifyReport:
    """
    E3 inputs of the depth-3 target follow the trapezoid: 2 on [c, c + 1/n^2], -1 outside (c - 1/n^2, c + 2/n^2)
    """
    c = normal_threshold(n)
    width = 1.0 / n ** 2
    kn = k * n
    fragment = build_interval_detector(n, k, c)
    net = assemble_depth3_target(P, x, n, enforce_bound=False)

    landmarks = c + width * np.array([-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0])
    spread = c + width * rng.uniform(-3.0, 4.0, size=(samples, kn))
    grid = np.vstack([np.tile(landmarks[:, None], (1, kn)), spread])
    inputs = np.hstack([grid, rng.standard_normal((grid.shape[0], n * n - kn))])

    gates = forward_eval(net, inputs).pre_activations[1][:, net.group('E3').slice]
    expected = trapezoid(grid, n, c)
    shape_ok = (np.abs(gates - expected) <= TOLERANCE).all(axis=1)
    fragment_ok = (np.abs(fragment.evaluate(grid) - expected) <= TOLERANCE).all(axis=1)
    inside = (grid > c) & (grid < c + width)
    outside = (grid <= c - width) | (grid >= c + 2 * width)
    margin_ok = (np.where(inside, gates >= 2.0 - TOLERANCE, True) & np.where(outside, gates <= -1.0 + TOLERANCE, True)).all(axis=1)
    failures = int((~(shape_ok & fragment_ok & margin_ok)).sum())
    return VerifyReport('N3', grid.shape[0], failures, 0.0, failures / grid.shape[0], passed=failures == 0,
                        details={'max_deviation': float(np.abs(gates - expected).max()),
                                 'max_magnitude': fragment.max_magnitude,
                                 'magnitude_bound': 3.0 * n ** 2 + abs(c) + 2.0})
