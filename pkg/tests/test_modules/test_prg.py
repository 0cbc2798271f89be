import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from modules.encoding import BitVector, Hypergraph, encode_batch, encode_hyperedge, Hyperedge, sample_hypergraph
from modules.exceptions import DomainError, InvalidParameterError
from modules.prg import (
    ChallengeKind, ChallengeSequence, Predicate, and_predicate, constant_predicate, distinguishing_advantage,
    eval_predicate, maj_predicate, p_x_eval, predicate_from_name, prg_output, sample_challenge, xor_maj,
    xor_predicate,
)
from modules.utils.stats import binomial_sigma


@pytest.mark.parametrize("P, bits, expected", [
    (xor_predicate(2), (1, 1), 0),
    (xor_predicate(2), (0, 1), 1),
    (maj_predicate(3), (1, 0, 1), 1),
    (maj_predicate(3), (1, 0, 0), 0),
    (and_predicate(2), (1, 1), 1),
    (xor_maj(2, 3), (1, 0, 1, 1, 0), 0),
    (xor_maj(2, 3), (1, 0, 1, 0, 0), 1),
])
def test_eval_predicate(P, bits, expected):
    assert eval_predicate(P, np.array(bits)) == expected


def test_xor2_table_is_big_endian():
    assert xor_predicate(2).table == (0, 1, 1, 0)
    assert predicate_from_name('0110') == xor_predicate(2)


@pytest.mark.parametrize("name, k", [
    ('XOR3', 3), ('maj5', 5), ('XORMAJ2,3', 5), ('AND2', 2), ('OR4', 4), ('CONST1_3', 3), ('01101001', 3),
])
def test_predicate_from_name(name, k):
    P = predicate_from_name(name)
    assert P.k == k


@pytest.mark.parametrize("name", ['XOR', 'FOO2', '011', '', 'XOR0'])
def test_predicate_from_name_rejects(name):
    with pytest.raises(InvalidParameterError):
        predicate_from_name(name)


def test_xormaj_agrees_with_formula_on_all_inputs():
    """
    GIVEN the 5-ary XOR-MAJ predicate
    WHEN every input is evaluated
    THEN the table matches an independent formula
    """
    P = xor_maj(2, 3)
    for bits in itertools.product((0, 1), repeat=5):
        expected = (bits[0] ^ bits[1]) ^ int(bits[2] + bits[3] + bits[4] >= 2)
        assert eval_predicate(P, np.array(bits)) == expected


def test_constant_predicate_gives_constant_output():
    G = sample_hypergraph(10, 50, 3, np.random.default_rng(0))
    x = BitVector(np.random.default_rng(1).integers(0, 2, size=10))
    assert prg_output(constant_predicate(3, 1), G, x).to_string() == '1' * 50


def test_prg_output_example():
    G = Hypergraph(4, [[0, 1]])
    assert prg_output(xor_predicate(2), G, BitVector([0, 1, 1, 0])).to_string() == '1'


def test_prg_output_matches_p_x_on_every_seed():
    """
    GIVEN a hypergraph at n=6, k=2
    WHEN every seed x is tried
    THEN each output bit equals P(x_S) and p_x_eval on the encoding of S
    """
    P = xor_predicate(2)
    G = sample_hypergraph(6, 15, 2, np.random.default_rng(4))
    z = encode_batch(G.edges, 6)
    for seed in itertools.product((0, 1), repeat=6):
        x = BitVector(seed)
        output = prg_output(P, G, x).array
        for j, S in enumerate(G):
            assert output[j] == eval_predicate(P, x.array[list(S.members)])
            assert output[j] == p_x_eval(P, x, z[j])


def test_p_x_eval_examples():
    assert p_x_eval(and_predicate(2), BitVector([1] * 5), encode_hyperedge(Hyperedge((3, 1)), 5)) == 1
    x = BitVector([1, 0, 0, 0])
    assert p_x_eval(xor_predicate(2), x, encode_hyperedge(Hyperedge((0, 1)), 4)) == 1


def test_p_x_eval_rejects_non_encodings():
    with pytest.raises(DomainError):
        p_x_eval(xor_predicate(2), BitVector([1, 0, 1]), BitVector.from_string('111110'))


def test_prg_output_checks_shapes():
    G = Hypergraph(4, [[0, 1]])
    with pytest.raises(InvalidParameterError):
        prg_output(xor_predicate(2), G, BitVector([0, 1, 1]))
    with pytest.raises(InvalidParameterError):
        prg_output(xor_predicate(3), G, BitVector([0, 1, 1, 0]))


def test_random_labels_are_balanced():
    m = 100_000
    challenge = sample_challenge(xor_predicate(3), 20, m, 'random', np.random.default_rng(5))
    mean = challenge.labels.array.mean()
    assert abs(mean - 0.5) <= 4 * binomial_sigma(0.5, m)


def test_pseudorandom_constant_zero_labels():
    challenge = sample_challenge(constant_predicate(3, 0), 20, 200, ChallengeKind.PSEUDORANDOM,
                                 np.random.default_rng(6))
    assert challenge.labels.array.sum() == 0
    assert challenge.secret is None


@pytest.mark.parametrize("kind", ['random', 'pseudorandom'])
def test_challenge_is_reproducible(kind):
    first = sample_challenge(xor_predicate(3), 12, 40, kind, np.random.default_rng(7), retain_secret=True)
    second = sample_challenge(xor_predicate(3), 12, 40, kind, np.random.default_rng(7), retain_secret=True)
    assert first.graph == second.graph
    assert first.labels == second.labels
    assert first.secret == second.secret


def test_pseudorandom_labels_follow_the_secret():
    challenge = sample_challenge(xor_maj(2, 3), 16, 100, 'pseudorandom', np.random.default_rng(8),
                                 retain_secret=True)
    assert challenge.labels == prg_output(xor_maj(2, 3), challenge.graph, challenge.secret)


def test_challenge_json_round_trip():
    challenge = sample_challenge(xor_predicate(3), 12, 40, 'pseudorandom', np.random.default_rng(9),
                                 retain_secret=True)
    loaded = ChallengeSequence.from_json(challenge.to_json())
    assert loaded.graph == challenge.graph
    assert loaded.labels == challenge.labels
    assert loaded.secret == challenge.secret
    assert loaded.kind is ChallengeKind.PSEUDORANDOM
    assert 'secret' not in challenge.without_secret().to_json()


@given(st.floats(0, 1), st.floats(0, 1))
def test_advantage_is_signed_difference(p_pseudo, p_random):
    assert distinguishing_advantage(p_pseudo, p_random) == p_pseudo - p_random
    assert distinguishing_advantage(p_random, p_pseudo) == -(p_pseudo - p_random)


def test_predicate_rejects_bad_tables():
    with pytest.raises(InvalidParameterError):
        Predicate(2, (0, 1, 1))
    with pytest.raises(InvalidParameterError):
        Predicate(1, (0, 2))
