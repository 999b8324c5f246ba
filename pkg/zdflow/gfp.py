# -*- coding: utf-8 -*-
"""
This module contains exact arithmetic and linear algebra over the prime field Z_d.

Matrices are dense numpy int64 arrays reduced mod d. The solver reduces an augmented block [A | B] to row echelon
form once and back-substitutes every right-hand side column, which is how the flow finder batches one round.
"""
import functools
import logging
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from zdflow import utils
from zdflow.errors import DimensionMismatch, EvenModulus, ModulusTooLarge, NonPrimeModulus, ZeroInverse

logger = logging.getLogger(__name__)


@functools.lru_cache(maxsize=256)
def is_prime(n: int) -> bool:
    """trial division"""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


@dataclass(frozen=True)
class PrimeModulus:
    """
    A prime d, checked at construction and bounded by the gfp.max_modulus setting (default 97).
    """

    d: int

    def __post_init__(self):
        if isinstance(self.d, bool) or not isinstance(self.d, (int, np.integer)):
            raise NonPrimeModulus(f"Modulus must be an integer, got {self.d!r}.")
        object.__setattr__(self, "d", int(self.d))
        if not is_prime(self.d):
            raise NonPrimeModulus(f"Modulus {self.d} is not prime.")
        limit = utils.get_setting("gfp", "max_modulus")
        if self.d > limit:
            raise ModulusTooLarge(f"Modulus {self.d} exceeds the configured limit {limit}.")

    def require_odd(self) -> "PrimeModulus":
        if self.d == 2:
            raise EvenModulus("d = 2 has no inverse of 2; the simulator needs an odd prime.")
        return self

    def __int__(self) -> int:
        return self.d


def as_modulus(modulus: Union[PrimeModulus, int]) -> PrimeModulus:
    if isinstance(modulus, PrimeModulus):
        return modulus
    return PrimeModulus(modulus)


@dataclass(frozen=True)
class FieldElement:
    value: int
    modulus: PrimeModulus

    def __post_init__(self):
        object.__setattr__(self, "modulus", as_modulus(self.modulus))
        object.__setattr__(self, "value", int(self.value) % self.modulus.d)

    def __add__(self, other: Union["FieldElement", int]) -> "FieldElement":
        return FieldElement(self.value + int(other), self.modulus)

    def __sub__(self, other: Union["FieldElement", int]) -> "FieldElement":
        return FieldElement(self.value - int(other), self.modulus)

    def __mul__(self, other: Union["FieldElement", int]) -> "FieldElement":
        return FieldElement(self.value * int(other), self.modulus)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self) -> "FieldElement":
        return FieldElement(-self.value, self.modulus)

    def __int__(self) -> int:
        return self.value

    def __bool__(self) -> bool:
        return self.value != 0

    def inverse(self) -> "FieldElement":
        return field_inv(self)


def field_inv(a: Union[FieldElement, int], modulus: Union[PrimeModulus, int] = None) -> FieldElement:
    """
    Multiplicative inverse in Z_d.

    :param a: a field element, or a plain integer together with modulus.
    :param modulus: required when a is a plain integer.
    :return: the element b with a * b = 1 mod d.
    :raises: ZeroInverse when a = 0.
    """
    if not isinstance(a, FieldElement):
        if modulus is None:
            raise ValueError("A modulus is required to invert a plain integer.")
        a = FieldElement(a, modulus)
    if a.value == 0:
        raise ZeroInverse(f"0 has no inverse mod {a.modulus.d}.")
    return FieldElement(pow(a.value, a.modulus.d - 2, a.modulus.d), a.modulus)


def inv_mod(a: int, d: int) -> int:
    """integer shortcut of field_inv for callers that already hold a checked modulus."""
    a = int(a) % d
    if a == 0:
        raise ZeroInverse(f"0 has no inverse mod {d}.")
    return pow(a, d - 2, d)


class FieldMatrix:
    """
    Dense matrix over Z_d. Entries are an immutable int64 array reduced mod d.
    """

    __slots__ = ("entries", "modulus")

    def __init__(self, entries: Union[np.ndarray, Sequence[Sequence[int]]], modulus: Union[PrimeModulus, int]):
        modulus = as_modulus(modulus)
        array = np.array(entries, dtype=np.int64)
        if array.ndim == 1 and array.size == 0:
            array = array.reshape(0, 0)
        if array.ndim != 2:
            raise DimensionMismatch(f"A field matrix needs 2 dimensions, got shape {array.shape}.")
        array = np.mod(array, modulus.d)
        array.setflags(write=False)
        object.__setattr__(self, "entries", array)
        object.__setattr__(self, "modulus", modulus)

    def __setattr__(self, key, value):
        raise AttributeError("FieldMatrix is immutable")

    @classmethod
    def zeros(cls, rows: int, cols: int, modulus: Union[PrimeModulus, int]) -> "FieldMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), modulus)

    @classmethod
    def identity(cls, n: int, modulus: Union[PrimeModulus, int]) -> "FieldMatrix":
        return cls(np.eye(n, dtype=np.int64), modulus)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], modulus: Union[PrimeModulus, int]) -> "FieldMatrix":
        return cls([list(row) for row in rows], modulus)

    @classmethod
    def column_vector(cls, values: Iterable[int], modulus: Union[PrimeModulus, int]) -> "FieldMatrix":
        values = np.array(list(values), dtype=np.int64)
        return cls(values.reshape(-1, 1), modulus)

    @property
    def d(self) -> int:
        return self.modulus.d

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple:
        return self.entries.shape

    def __getitem__(self, index):
        value = self.entries[index]
        if isinstance(value, np.ndarray):
            return value
        return int(value)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.modulus == other.modulus and np.array_equal(self.entries, other.entries)

    __hash__ = None

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        return mat_mul(self, other)

    def __repr__(self) -> str:
        return f"FieldMatrix(d={self.d}, {self.entries.tolist()})"

    def transpose(self) -> "FieldMatrix":
        return FieldMatrix(self.entries.T, self.modulus)

    def column(self, j: int) -> "FieldMatrix":
        return FieldMatrix(self.entries[:, [j]], self.modulus)

    def flat(self) -> List[int]:
        """entries of a single row or column as a list."""
        if self.rows != 1 and self.cols != 1:
            raise DimensionMismatch(f"flat needs a vector, got shape {self.shape}.")
        return [int(v) for v in self.entries.reshape(-1)]

    def to_list(self) -> List[List[int]]:
        return self.entries.tolist()

    def is_zero(self) -> bool:
        return not self.entries.any()


def mat_mul(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    """
    Product mod d.

    :raises: DimensionMismatch when the inner dimensions or the moduli differ.
    """
    if a.modulus != b.modulus:
        raise DimensionMismatch(f"Cannot multiply matrices over Z_{a.d} and Z_{b.d}.")
    if a.cols != b.rows:
        raise DimensionMismatch(f"Cannot multiply {a.shape} by {b.shape}.")
    # entries < d <= 97, so int64 products cannot overflow for any practical size
    return FieldMatrix(a.entries @ b.entries, a.modulus)


@dataclass
class EliminationStats:
    """Counters of echelon work: whole-row operations and single-entry field operations."""

    row_operations: int = 0
    field_operations: int = 0
    systems: int = 0

    def record(self, rows: int, width: int) -> None:
        self.row_operations += rows
        self.field_operations += rows * width

    def merge(self, other: "EliminationStats") -> None:
        self.row_operations += other.row_operations
        self.field_operations += other.field_operations
        self.systems += other.systems


class Solution(NamedTuple):
    solvable: bool
    x: Optional[FieldMatrix]


def _forward_eliminate(work: np.ndarray, pivot_cols: int, d: int, stats: EliminationStats) -> List[int]:
    """
    In-place row echelon form over the first pivot_cols columns; pivots are scaled to 1.

    :return: pivot column of each leading row.
    """
    rows, width = work.shape
    pivots = []
    r = 0
    for c in range(pivot_cols):
        if r == rows:
            break
        candidates = np.flatnonzero(work[r:, c])
        if candidates.size == 0:
            continue
        p = r + int(candidates[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        work[r] = (work[r] * inv_mod(work[r, c], d)) % d
        below = r + 1 + np.flatnonzero(work[r + 1 :, c])
        if below.size:
            factors = work[below, c][:, None]
            work[below] = (work[below] - factors * work[r]) % d
        stats.record(1 + below.size, width)
        pivots.append(c)
        r += 1
    return pivots


def solve_all(a: FieldMatrix, b: FieldMatrix, stats: EliminationStats = None) -> List[Solution]:
    """
    Solve A x = b for every column b of B with a single echelon reduction of [A | B].

    Underdetermined systems return the solution with every free variable set to 0.

    :param a: coefficient matrix.
    :param b: right-hand sides, one per column.
    :param stats: optional counters, updated in place.
    :return: one Solution per column of B, x is an A.cols x 1 column or None when unsolvable.
    :raises: DimensionMismatch when A.rows != B.rows or the moduli differ.
    """
    if a.modulus != b.modulus:
        raise DimensionMismatch(f"Cannot solve over Z_{a.d} with right-hand sides over Z_{b.d}.")
    if a.rows != b.rows:
        raise DimensionMismatch(f"A has {a.rows} rows but B has {b.rows}.")
    stats = stats if stats is not None else EliminationStats()
    d, n, k = a.d, a.cols, b.cols
    stats.systems += k
    work = np.concatenate([a.entries, b.entries], axis=1).astype(np.int64)
    pivots = _forward_eliminate(work, n, d, stats)
    rank = len(pivots)

    solutions = []
    for j in range(k):
        rhs = work[:, n + j]
        if rhs[rank:].any():
            solutions.append(Solution(False, None))
            continue
        x = np.zeros(n, dtype=np.int64)
        for i in range(rank - 1, -1, -1):
            c = pivots[i]
            x[c] = (rhs[i] - int(work[i, c + 1 : n] @ x[c + 1 :])) % d
        stats.record(rank, 1)
        solutions.append(Solution(True, FieldMatrix(x.reshape(-1, 1), a.modulus)))
    logger.debug(f"solve_all: {a.rows}x{n} system, {k} right-hand sides, rank {rank}")
    return solutions


def solve(a: FieldMatrix, b: FieldMatrix, stats: EliminationStats = None) -> Solution:
    """single right-hand side convenience wrapper"""
    if b.cols != 1:
        raise DimensionMismatch(f"solve takes one column, got {b.cols}; use solve_all.")
    return solve_all(a, b, stats)[0]


def rank(a: FieldMatrix) -> int:
    """row rank over Z_d"""
    work = a.entries.astype(np.int64).copy()
    return len(_forward_eliminate(work, a.cols, a.d, EliminationStats()))
