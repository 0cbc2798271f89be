import itertools

import numpy as np
import pytest

from modules.dnf import DnfFormula, compile_predicate_dnf, eval_dnf, eval_dnf_batch
from modules.encoding import BitVector, encode_batch
from modules.exceptions import InvalidParameterError
from modules.prg import and_predicate, constant_predicate, eval_predicate_batch, maj_predicate, xor_predicate

PREDICATES = [xor_predicate(3), maj_predicate(3), and_predicate(3), constant_predicate(3, 1)]


def test_constant_zero_compiles_to_empty_formula():
    psi = compile_predicate_dnf(constant_predicate(2, 0), BitVector([0, 1, 1]), 3)
    assert len(psi) == 0
    assert eval_dnf(psi, np.ones(6, dtype=np.uint8)) == 0


def test_and_with_all_ones_secret_is_single_empty_term():
    psi = compile_predicate_dnf(and_predicate(2), BitVector([1, 1, 1]), 3)
    assert psi.terms == ((),)
    assert eval_dnf(psi, np.zeros(6, dtype=np.uint8)) == 1


def test_single_term_example():
    psi = DnfFormula(((0,),), 4)
    assert eval_dnf(psi, BitVector([1, 0, 0, 0])) == 1
    assert eval_dnf(psi, BitVector([0, 1, 1, 1])) == 0


@pytest.mark.parametrize("P", PREDICATES, ids=lambda P: P.name)
def test_dnf_matches_predicate_on_every_hyperedge(P):
    """
    GIVEN a predicate and 20 random secrets at n=8
    WHEN psi is compiled and evaluated on all 336 hyperedge encodings
    THEN psi(z^S) equals P(x_S) everywhere
    """
    n = 8
    rng = np.random.default_rng(11)
    edges = np.array(list(itertools.permutations(range(n), P.k)))
    z = encode_batch(edges, n)
    for _ in range(20):
        x = BitVector(rng.integers(0, 2, size=n))
        psi = compile_predicate_dnf(P, x, n)
        expected = eval_predicate_batch(P, x.array[edges])
        assert (eval_dnf_batch(psi, z) == expected).all()


def test_one_term_per_satisfying_assignment():
    rng = np.random.default_rng(13)
    for P in PREDICATES:
        x = BitVector(rng.integers(0, 2, size=6))
        psi = compile_predicate_dnf(P, x, 6)
        assert len(psi) == sum(P.table)
        assert len(set(psi.terms)) == len(psi.terms)


def test_batch_agrees_with_single_evaluation():
    rng = np.random.default_rng(12)
    psi = compile_predicate_dnf(maj_predicate(3), BitVector(rng.integers(0, 2, size=5)), 5)
    z = rng.integers(0, 2, size=(200, 15))
    batch = eval_dnf_batch(psi, z)
    assert batch.tolist() == [eval_dnf(psi, row) for row in z]


def test_formula_validation():
    with pytest.raises(InvalidParameterError):
        DnfFormula(((0, 7),), 6)
    with pytest.raises(InvalidParameterError):
        compile_predicate_dnf(xor_predicate(2), BitVector([0, 1]), 3)
    with pytest.raises(InvalidParameterError):
        eval_dnf(DnfFormula(((0,),), 4), np.ones(3))


def test_formula_json_round_trip():
    psi = compile_predicate_dnf(xor_predicate(3), BitVector([1, 0, 1, 1]), 4)
    assert DnfFormula.from_json(psi.to_json(), psi.width) == psi
