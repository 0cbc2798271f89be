"""
Compile (P, x) into a positive-literal DNF psi over {0,1}^{kn} with psi(z^S) = P(x_S).

A satisfying assignment b of P is matched by z^S exactly when, for every slice j, the vertex i_j
carries x_{i_j} = b_j. Slice j has its single 0 at i_j, so this is the same as asking that every
position l with x_l != b_j is 1 in slice j: a conjunction of positive literals.
"""
from dataclasses import dataclass
import json

import numpy as np

from modules.encoding import BitVector
from modules.exceptions import InvalidParameterError
from modules.prg import Predicate


@dataclass(frozen=True)
class DnfFormula:
    """
    Disjunction of conjunctions of positive literals, each term a sorted tuple of flat positions in range(width)
    """
    terms: tuple[tuple[int, ...], ...]
    width: int

    def __post_init__(self):
        terms = tuple(tuple(sorted(set(int(i) for i in term))) for term in self.terms)
        object.__setattr__(self, 'terms', terms)
        for term in terms:
            if term and (term[0] < 0 or term[-1] >= self.width):
                raise InvalidParameterError(f"term {term} has positions outside range({self.width})")

    def __len__(self) -> int:
        return len(self.terms)

    def term_matrix(self) -> np.ndarray:
        """
        (terms, width) 0/1 incidence matrix of term positions
        """
        matrix = np.zeros((len(self.terms), self.width), dtype=np.uint8)
        for row, term in enumerate(self.terms):
            matrix[row, list(term)] = 1
        return matrix

    def to_json(self) -> str:
        return json.dumps([list(term) for term in self.terms], separators=(',', ':'))

    @classmethod
    def from_json(cls, text: str, width: int) -> 'DnfFormula':
        return cls(tuple(tuple(term) for term in json.loads(text)), width)


def compile_predicate_dnf(P: Predicate, x: BitVector, n: int) -> DnfFormula:
    """
    One term per satisfying assignment b of P: the positions j*n + l with x_l != b_j

    Parameters:
        P (Predicate): local predicate of arity k
        x (BitVector): secret of length n
        n (int): slice width

    Returns:
        DnfFormula: psi over {0,1}^{kn}
    """
    if len(x) != n:
        raise InvalidParameterError(f"secret length {len(x)} does not match n={n}")

    assignments = P.satisfying_assignments()
    mismatch = x.array[None, None, :] != assignments[:, :, None]
    flat = mismatch.reshape(len(assignments), P.k * n)

    terms = []
    seen = set()
    for row in flat:
        term = tuple(int(i) for i in np.flatnonzero(row))
        if term not in seen:
            seen.add(term)
            terms.append(term)
    return DnfFormula(tuple(terms), P.k * n)


def eval_dnf(psi: DnfFormula, z) -> int:
    """
    1 iff some term has all its positions set; an empty term is true, an empty formula is false
    """
    bits = z.array if isinstance(z, BitVector) else np.asarray(z)
    if bits.shape != (psi.width,):
        raise InvalidParameterError(f"expected {psi.width} bits, got shape {bits.shape}")
    return int(any(bits[list(term)].all() for term in psi.terms))


def eval_dnf_batch(psi: DnfFormula, z: np.ndarray) -> np.ndarray:
    """
    Row-wise psi over an (N, width) 0/1 array
    """
    z = np.asarray(z, dtype=np.int64)
    if not psi.terms:
        return np.zeros(z.shape[0], dtype=np.uint8)
    matrix = psi.term_matrix().astype(np.int64)
    hits = z @ matrix.T
    return (hits == matrix.sum(axis=1)).any(axis=1).astype(np.uint8)
