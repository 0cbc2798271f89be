"""
Local predicates, Goldreich's generator f_{P,G}, the secret-indexed function P_x and challenge sequences.
"""
from dataclasses import dataclass, field
from enum import Enum
import json
import re

import numpy as np

from modules.encoding import BitVector, Hypergraph, decode_encoding, sample_hypergraph
from modules.exceptions import DomainError, InvalidParameterError

MAX_ARITY = 20


@dataclass(frozen=True)
class Predicate:
    """
    P: {0,1}^k -> {0,1} as a truth table indexed big-endian (bit 1 is the most significant)
    """
    k: int
    table: tuple[int, ...]
    name: str = field(default='', compare=False)

    def __post_init__(self):
        table = tuple(int(v) for v in self.table)
        object.__setattr__(self, 'table', table)
        if not 1 <= self.k <= MAX_ARITY:
            raise InvalidParameterError(f"predicate arity must lie in 1..{MAX_ARITY}, got {self.k}")
        if len(table) != 2 ** self.k:
            raise InvalidParameterError(f"truth table of a {self.k}-ary predicate needs {2 ** self.k} entries")
        if any(v not in (0, 1) for v in table):
            raise InvalidParameterError("truth table entries must be 0 or 1")

    @property
    def table_array(self) -> np.ndarray:
        return np.array(self.table, dtype=np.uint8)

    def satisfying_assignments(self) -> np.ndarray:
        """
        The set B of satisfying assignments as a (|B|, k) uint8 array, in table order
        """
        indices = np.flatnonzero(self.table_array)
        return _index_bits(indices, self.k)

    def to_string(self) -> str:
        return ''.join(str(v) for v in self.table)

    @classmethod
    def from_function(cls, k: int, fn, name: str = '') -> 'Predicate':
        bits = _index_bits(np.arange(2 ** k), k)
        return cls(k, tuple(int(fn(row)) for row in bits), name)


def _index_bits(indices: np.ndarray, k: int) -> np.ndarray:
    shifts = np.arange(k - 1, -1, -1)
    return ((np.asarray(indices)[:, None] >> shifts) & 1).astype(np.uint8)


def xor_predicate(a: int) -> Predicate:
    return Predicate.from_function(a, lambda z: z.sum() % 2, f'XOR{a}')


def maj_predicate(b: int) -> Predicate:
    return Predicate.from_function(b, lambda z: z.sum() > b / 2, f'MAJ{b}')


def xor_maj(a: int, b: int) -> Predicate:
    """
    (z_1 xor ... xor z_a) xor MAJ_b(z_{a+1}, ..., z_{a+b}), with MAJ_b = 1 iff the sum exceeds b/2
    """
    return Predicate.from_function(a + b, lambda z: (z[:a].sum() + (z[a:].sum() > b / 2)) % 2, f'XORMAJ{a},{b}')


def and_predicate(k: int) -> Predicate:
    return Predicate.from_function(k, lambda z: z.all(), f'AND{k}')


def or_predicate(k: int) -> Predicate:
    return Predicate.from_function(k, lambda z: z.any(), f'OR{k}')


def constant_predicate(k: int, value: int) -> Predicate:
    return Predicate(k, (value,) * 2 ** k, f'CONST{value}_{k}')


_NAMED = [
    (re.compile(r'^XORMAJ(\d+),(\d+)$'), lambda g: xor_maj(int(g[0]), int(g[1]))),
    (re.compile(r'^XOR(\d+)$'), lambda g: xor_predicate(int(g[0]))),
    (re.compile(r'^MAJ(\d+)$'), lambda g: maj_predicate(int(g[0]))),
    (re.compile(r'^AND(\d+)$'), lambda g: and_predicate(int(g[0]))),
    (re.compile(r'^OR(\d+)$'), lambda g: or_predicate(int(g[0]))),
    (re.compile(r'^CONST([01])_(\d+)$'), lambda g: constant_predicate(int(g[1]), int(g[0]))),
]


def predicate_from_name(name: str) -> Predicate:
    """
    Build a predicate from a name such as 'XOR3', 'MAJ5', 'XORMAJ2,3', 'AND2', 'OR2', 'CONST0_3'
    or from a raw truth table string of 2^k bits

    Parameters:
        name (str): predicate name or truth table

    Returns:
        Predicate: the predicate
    """
    cleaned = name.strip().upper().replace(' ', '')
    for pattern, build in _NAMED:
        match = pattern.match(cleaned)
        if match:
            return build(match.groups())

    if cleaned and set(cleaned) <= {'0', '1'}:
        k = len(cleaned).bit_length() - 1
        if 2 ** k != len(cleaned) or k < 1:
            raise InvalidParameterError(f"truth table length must be a power of two >= 2, got {len(cleaned)}")
        return Predicate(k, tuple(int(ch) for ch in cleaned), cleaned)

    raise InvalidParameterError(f"unknown predicate {name!r}")


def eval_predicate(P: Predicate, bits) -> int:
    """
    Table lookup P(bits)
    """
    array = bits.array if isinstance(bits, BitVector) else np.asarray(bits)
    if array.shape != (P.k,):
        raise InvalidParameterError(f"predicate of arity {P.k} applied to {array.size} bits")
    index = int(array.astype(np.int64) @ (1 << np.arange(P.k - 1, -1, -1)))
    return P.table[index]


def eval_predicate_batch(P: Predicate, bits: np.ndarray) -> np.ndarray:
    """
    Row-wise table lookup over an (N, k) 0/1 array
    """
    bits = np.asarray(bits, dtype=np.int64)
    index = bits @ (1 << np.arange(P.k - 1, -1, -1))
    return P.table_array[index]


def prg_output(P: Predicate, G: Hypergraph, x) -> BitVector:
    """
    f_{P,G}(x) = (P(x_{S_1}), ..., P(x_{S_m}))
    """
    seed = x.array if isinstance(x, BitVector) else np.asarray(x, dtype=np.uint8)
    if seed.shape != (G.n,):
        raise InvalidParameterError(f"seed length {seed.size} does not match n={G.n}")
    if P.k != G.k:
        raise InvalidParameterError(f"predicate arity {P.k} does not match edge arity {G.k}")
    return BitVector(eval_predicate_batch(P, seed[G.edges]))


def p_x_eval(P: Predicate, x: BitVector, z) -> int:
    """
    P_x(z^S) = P(x_S) for the hyperedge S encoded by z

    Raises:
        DomainError: z is not a hyperedge encoding
    """
    n = len(x)
    S = decode_encoding(z, n, P.k)
    if S is None:
        raise DomainError("p_x_eval needs a valid hyperedge encoding")
    return eval_predicate(P, x.array[list(S.members)])


def distinguishing_advantage(p_pseudo: float, p_random: float) -> float:
    """
    Signed Pr[A=1 | pseudorandom] - Pr[A=1 | random]; its absolute value is the advantage
    """
    return p_pseudo - p_random


class ChallengeKind(str, Enum):
    RANDOM = 'random'
    PSEUDORANDOM = 'pseudorandom'


@dataclass(frozen=True)
class ChallengeSequence:
    """
    A challenge (S_i, y_i): public hypergraph with labels either uniform or produced by f_{P,G}(x)

    The secret is kept only in verification mode; the distinguisher never reads it.
    """
    graph: Hypergraph
    labels: BitVector
    kind: ChallengeKind
    secret: BitVector | None = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', ChallengeKind(self.kind))
        if len(self.labels) != self.graph.m:
            raise InvalidParameterError("a challenge needs one label per hyperedge")
        if self.secret is not None and len(self.secret) != self.graph.n:
            raise InvalidParameterError("secret length must equal n")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def k(self) -> int:
        return self.graph.k

    @property
    def m(self) -> int:
        return self.graph.m

    def without_secret(self) -> 'ChallengeSequence':
        return ChallengeSequence(self.graph, self.labels, self.kind, None)

    def to_json(self) -> str:
        payload = {
            'n': self.n,
            'k': self.k,
            'm': self.m,
            'kind': self.kind.value,
            'edges': self.graph.edges.tolist(),
            'labels': self.labels.to_string(),
        }
        if self.secret is not None:
            payload['secret'] = self.secret.to_string()
        return json.dumps(payload, separators=(',', ':'))

    @classmethod
    def from_json(cls, text: str) -> 'ChallengeSequence':
        payload = json.loads(text)
        graph = Hypergraph(payload['n'], np.array(payload['edges'], dtype=np.int64))
        secret = payload.get('secret')
        return cls(
            graph=graph,
            labels=BitVector.from_string(payload['labels']),
            kind=ChallengeKind(payload['kind']),
            secret=BitVector.from_string(secret) if secret is not None else None,
        )


def sample_challenge(P: Predicate, n: int, m: int, kind, rng: np.random.Generator,
                     retain_secret: bool = False) -> ChallengeSequence:
    """
    Draw a fresh hypergraph from G_{n,m,k} and label it

    kind=random gives iid uniform labels; kind=pseudorandom gives f_{P,G}(x) for a uniform secret x.
    With retain_secret the challenge keeps x (random challenges then keep an unused reference secret)
    so verification code can rebuild the secret network for either kind.

    Parameters:
        P (Predicate): local predicate
        n (int): seed length
        m (int): number of outputs
        kind (ChallengeKind | str): 'random' or 'pseudorandom'
        rng (np.random.Generator): caller-owned stream
        retain_secret (bool): keep x inside the challenge

    Returns:
        ChallengeSequence: the challenge
    """
    kind = ChallengeKind(kind)
    if m < 1:
        raise InvalidParameterError(f"need m >= 1, got m={m}")

    graph = sample_hypergraph(n, m, P.k, rng)
    secret = BitVector(rng.integers(0, 2, size=n, dtype=np.uint8))
    if kind is ChallengeKind.PSEUDORANDOM:
        labels = prg_output(P, graph, secret)
    else:
        labels = BitVector(rng.integers(0, 2, size=m, dtype=np.uint8))

    return ChallengeSequence(graph, labels, kind, secret if retain_secret else None)
