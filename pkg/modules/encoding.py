"""
Hypergraphs, the hyperedge encoding z^S and the threshold map Psi.

Indices are 0-based everywhere in code and in serialized output: a hyperedge over n vertices holds
members in range(n), and slice j of an encoding occupies flat positions j*n .. j*n + n - 1.
"""
from dataclasses import dataclass
import json

import numpy as np

from modules.exceptions import InvalidParameterError


@dataclass(frozen=True)
class Hyperedge:
    """
    Ordered tuple of k distinct vertices
    """
    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(int(i) for i in self.members)
        object.__setattr__(self, 'members', members)
        if not members:
            raise InvalidParameterError("a hyperedge needs at least one member")
        if len(set(members)) != len(members):
            raise InvalidParameterError(f"hyperedge members must be distinct, got {members}")
        if min(members) < 0:
            raise InvalidParameterError(f"hyperedge members must be non-negative, got {members}")

    @property
    def k(self) -> int:
        return len(self.members)

    def validate(self, n: int) -> None:
        if max(self.members) >= n:
            raise InvalidParameterError(f"hyperedge {self.members} is not over {n} vertices")


class Hypergraph:
    """
    An (n, m, k)-hypergraph: m ordered hyperedges of k distinct vertices over range(n)

    The edges are held as an (m, k) integer array; the array is read-only after construction.
    """
    def __init__(self, n: int, edges: np.ndarray):
        edges = np.array(edges, dtype=np.int64, copy=True)
        if edges.ndim != 2 or edges.shape[0] < 1:
            raise InvalidParameterError("edges must be a non-empty (m, k) array")
        if edges.min() < 0 or edges.max() >= n:
            raise InvalidParameterError(f"edge members must lie in range({n})")
        ordered = np.sort(edges, axis=1)
        if (np.diff(ordered, axis=1) == 0).any():
            raise InvalidParameterError("every edge must have distinct members")
        edges.setflags(write=False)
        self.n = int(n)
        self.edges = edges

    @property
    def m(self) -> int:
        return self.edges.shape[0]

    @property
    def k(self) -> int:
        return self.edges.shape[1]

    def edge(self, index: int) -> Hyperedge:
        return Hyperedge(tuple(self.edges[index]))

    def __iter__(self):
        for index in range(self.m):
            yield self.edge(index)

    def __len__(self) -> int:
        return self.m

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __repr__(self) -> str:
        return f'<Hypergraph n={self.n} m={self.m} k={self.k}>'

    def to_json(self) -> str:
        """
        Serialize the edges as a JSON array of integer arrays
        """
        return json.dumps(self.edges.tolist(), separators=(',', ':'))

    @classmethod
    def from_json(cls, n: int, text: str) -> 'Hypergraph':
        return cls(n, np.array(json.loads(text), dtype=np.int64))


class BitVector:
    """
    Immutable vector over {0,1}, stored as packed bytes

    Used for encodings z^S (length kn), seeds x (length n) and binary oracle inputs (length n^2).
    """
    __slots__ = ('_packed', '_length')

    def __init__(self, bits):
        array = np.asarray(bits)
        if array.ndim != 1:
            raise InvalidParameterError("a bit vector is one-dimensional")
        if array.size and not np.isin(array, (0, 1)).all():
            raise InvalidParameterError("bit vector entries must be 0 or 1")
        self._length = int(array.size)
        self._packed = np.packbits(array.astype(np.uint8)).tobytes()

    @property
    def array(self) -> np.ndarray:
        """
        The bits as a fresh uint8 array
        """
        unpacked = np.unpackbits(np.frombuffer(self._packed, dtype=np.uint8))
        return unpacked[:self._length].copy()

    def __len__(self) -> int:
        return self._length

    def __getitem__(self, index):
        return self.array[index]

    def __iter__(self):
        return iter(int(bit) for bit in self.array)

    def __eq__(self, other) -> bool:
        if isinstance(other, BitVector):
            return self._length == other._length and self._packed == other._packed
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self._length, self._packed))

    def __repr__(self) -> str:
        return f'BitVector({self.to_string()!r})'

    def to_string(self, slice_width: int | None = None) -> str:
        """
        Render as ASCII '0'/'1', with '|' between slices when a slice width is given
        """
        text = ''.join('1' if bit else '0' for bit in self.array)
        if not slice_width:
            return text
        return '|'.join(text[i:i + slice_width] for i in range(0, len(text), slice_width))

    @classmethod
    def from_string(cls, text: str) -> 'BitVector':
        cleaned = text.replace('|', '').strip()
        if any(ch not in '01' for ch in cleaned):
            raise InvalidParameterError(f"not a bit string: {text!r}")
        return cls(np.fromiter((ch == '1' for ch in cleaned), dtype=np.uint8, count=len(cleaned)))


def sample_hypergraph(n: int, m: int, k: int, rng: np.random.Generator) -> Hypergraph:
    """
    Draw a hypergraph from G_{n,m,k}: each edge uniform among the n(n-1)...(n-k+1) ordered k-tuples

    Parameters:
        n (int): number of vertices
        m (int): number of hyperedges
        k (int): edge arity
        rng (np.random.Generator): caller-owned stream

    Returns:
        Hypergraph: the sampled hypergraph
    """
    if not 1 <= k <= n:
        raise InvalidParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    if m < 1:
        raise InvalidParameterError(f"need m >= 1, got m={m}")

    if k * (k - 1) > n:
        # dense regime: first k entries of uniform random permutations
        edges = np.argsort(rng.random((m, n)), axis=1)[:, :k]
    else:
        # sparse regime: uniform tuples, resample the rows with a repeated member
        edges = rng.integers(0, n, size=(m, k))
        bad = _has_repeat(edges)
        while bad.any():
            edges[bad] = rng.integers(0, n, size=(int(bad.sum()), k))
            bad = _has_repeat(edges)

    return Hypergraph(n, edges)


def _has_repeat(edges: np.ndarray) -> np.ndarray:
    ordered = np.sort(edges, axis=1)
    return (np.diff(ordered, axis=1) == 0).any(axis=1)


def encode_hyperedge(S: Hyperedge, n: int) -> BitVector:
    """
    Encode S = (i_1, ..., i_k) as k slices of n bits, slice j all ones except a 0 at i_j
    """
    S.validate(n)
    return BitVector(encode_batch(np.array([S.members]), n)[0])


def encode_batch(edges: np.ndarray, n: int) -> np.ndarray:
    """
    Encode every row of an (N, k) edge array; returns an (N, kn) uint8 array
    """
    edges = np.asarray(edges, dtype=np.int64)
    count, k = edges.shape
    z = np.ones((count, k, n), dtype=np.uint8)
    rows = np.repeat(np.arange(count), k)
    slices = np.tile(np.arange(k), count)
    z[rows, slices, edges.ravel()] = 0
    return z.reshape(count, k * n)


def decode_encoding(z, n: int, k: int) -> Hyperedge | None:
    """
    Recover the hyperedge encoded by z, or None when z is not an encoding

    z is an encoding iff every slice holds exactly one 0 and no two slices put their 0 at the same index.

    Parameters:
        z (BitVector | array-like): vector of length kn
        n (int): slice width
        k (int): number of slices

    Returns:
        Hyperedge | None: the encoded hyperedge, None for not-an-encoding
    """
    bits = z.array if isinstance(z, BitVector) else np.asarray(z)
    if bits.shape != (k * n,):
        raise InvalidParameterError(f"expected a vector of length {k * n}, got shape {bits.shape}")
    slices = bits.reshape(k, n)
    zeros = slices == 0
    if not (zeros.sum(axis=1) == 1).all():
        return None
    members = tuple(int(i) for i in zeros.argmax(axis=1))
    if len(set(members)) != k:
        return None
    return Hyperedge(members)


def is_encoding_batch(z: np.ndarray, n: int, k: int) -> np.ndarray:
    """
    Row-wise encoding validity of an (N, kn) 0/1 array
    """
    z = np.asarray(z)
    zeros = z.reshape(z.shape[0], k, n) == 0
    one_zero_per_slice = (zeros.sum(axis=2) == 1).all(axis=1)
    positions = np.sort(zeros.argmax(axis=2), axis=1)
    distinct = ~(np.diff(positions, axis=1) == 0).any(axis=1)
    return one_zero_per_slice & distinct


def threshold_bits(z_prime: np.ndarray, c: float) -> np.ndarray:
    """
    Array form of Psi: 1[z'_i >= c] component-wise, ties mapping to 1
    """
    return (np.asarray(z_prime, dtype=np.float64) >= c).astype(np.uint8)


def psi_threshold_map(z_prime, c: float) -> BitVector:
    """
    The threshold map Psi(z')_i = 1[z'_i >= c]
    """
    return BitVector(threshold_bits(np.asarray(z_prime, dtype=np.float64).ravel(), c))
