#!/usr/bin/env python3
# -*- coding: utf-8 -*-
# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026 by the nqsot authors
#
# GF(2) machinery shared by privacy amplification and the honest
# protocol run: Toeplitz two-universal hashing and syndrome codes.
#
# Bit strings are 1-d numpy uint8 arrays holding 0/1.
#
import itertools
import math

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.stats

import nqsot
from nqsot.qmath import binary_entropy

logger = nqsot.logger


def as_bits(bits: Sequence[int]) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8).reshape(-1)
    if np.any(arr > 1):
        raise nqsot.ParameterError('Bit strings may only hold 0 and 1')
    return arr


def gf2_matvec(matrix: np.ndarray, bits: np.ndarray) -> np.ndarray:
    return ((matrix.astype(np.int64) @ bits.astype(np.int64)) % 2).astype(np.uint8)


def gf2_rank(matrix: np.ndarray) -> int:
    work = np.array(matrix, dtype=np.uint8) % 2
    rows, cols = work.shape
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        pivots = np.nonzero(work[rank:, col])[0]
        if not len(pivots):
            continue
        pivot = rank + int(pivots[0])
        if pivot != rank:
            work[[rank, pivot]] = work[[pivot, rank]]
        hits = np.nonzero(work[:, col])[0]
        hits = hits[hits != rank]
        work[hits] ^= work[rank]
        rank += 1
    return rank


class ToeplitzHash:
    """Toeplitz matrix over GF(2) defined by n_in + n_out - 1 seed bits.

    Entry (i, j) is seed[n_in - 1 + i - j].
    """

    def __init__(self, n_in: int, n_out: int, seed: Sequence[int]) -> None:
        if n_in < 1 or n_out < 0:
            raise nqsot.ParameterError('Need n_in >= 1 and n_out >= 0, got %s, %s' % (n_in, n_out))
        seedbits = as_bits(seed)
        if len(seedbits) != max(0, n_in + n_out - 1):
            raise nqsot.ParameterError('Toeplitz seed must have %d bits, got %d'
                                       % (n_in + n_out - 1, len(seedbits)))
        self.n_in = n_in
        self.n_out = n_out
        self.seed = seedbits
        self._matrix: Optional[np.ndarray] = None

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self.n_out == 0:
                self._matrix = np.zeros((0, self.n_in), dtype=np.uint8)
            else:
                column = self.seed[self.n_in - 1:]
                row = self.seed[self.n_in - 1::-1]
                self._matrix = scipy.linalg.toeplitz(column, row).astype(np.uint8)
        return self._matrix

    def __call__(self, bits: Sequence[int]) -> np.ndarray:
        return toeplitz_hash(self, bits)

    @classmethod
    def random(cls, n_in: int, n_out: int, rng: np.random.Generator) -> 'ToeplitzHash':
        seed = rng.integers(0, 2, size=max(0, n_in + n_out - 1), dtype=np.uint8)
        return cls(n_in, n_out, seed)

    @classmethod
    def family(cls, n_in: int, n_out: int) -> Iterator['ToeplitzHash']:
        """Every member of the family, in seed order."""
        nseed = max(0, n_in + n_out - 1)
        for value in range(2 ** nseed):
            seed = [(value >> bit) & 1 for bit in range(nseed)]
            yield cls(n_in, n_out, seed)

    def __repr__(self) -> str:
        return 'ToeplitzHash(%d -> %d)' % (self.n_in, self.n_out)


def toeplitz_hash(h: ToeplitzHash, bits: Sequence[int]) -> np.ndarray:
    x = as_bits(bits)
    if len(x) != h.n_in:
        raise nqsot.ParameterError('Hash input must have %d bits, got %d' % (h.n_in, len(x)))
    return gf2_matvec(h.matrix, x)


@dataclass(frozen=True)
class CodeSpec:
    """How syndrome codes are sized and decoded for a given block length."""
    margin: float = 0.1
    max_ml_length: int = 24
    failure_target: float = 1e-4

    def syndrome_length(self, m: int, p_error: float) -> int:
        if m == 0:
            return 0
        return min(m, math.ceil(binary_entropy(p_error) * m) + math.ceil(self.margin * m))

    def genie_radius(self, m: int, p_error: float) -> int:
        if m == 0 or p_error == 0:
            return 0
        quantile = int(scipy.stats.binom.ppf(1 - self.failure_target, m, p_error))
        return max(math.ceil(1.25 * p_error * m), quantile)

    def build(self, m: int, p_error: float, rng: np.random.Generator) -> 'LinearCode':
        s = self.syndrome_length(m, p_error)
        if m <= self.max_ml_length:
            return LinearCode.random(m, s, rng)
        # Large blocks are never rank-checked; s < m makes a rank defect vanishingly rare
        parity = rng.integers(0, 2, size=(s, m), dtype=np.uint8)
        return LinearCode(parity, radius=self.genie_radius(m, p_error))

    @classmethod
    def from_config(cls, margin: Optional[float] = None) -> 'CodeSpec':
        if margin is None:
            margin = nqsot.get_config_float('code-margin')
        return cls(margin=margin,
                   max_ml_length=nqsot.get_config_int('code-max-ml-length'),
                   failure_target=nqsot.get_config_float('decoder-failure-target'))


class LinearCode:
    """Binary linear code given by an s x m parity-check matrix.

    Blocks up to the ML ceiling are decoded by exhaustive coset search.
    Longer blocks use a genie-aided decoder that is told the true string
    and succeeds exactly when the error weight is within `radius`; it
    stands in for an asymptotically good code at syndrome rate ~h(p).
    """

    def __init__(self, parity_check: np.ndarray, radius: Optional[int] = None) -> None:
        parity = np.asarray(parity_check, dtype=np.uint8)
        if parity.ndim != 2:
            raise nqsot.ParameterError('Parity-check matrix must be 2-d')
        self.parity_check = parity
        self.syndrome_bits, self.length = parity.shape
        self.radius = radius
        self._columns: Optional[Tuple[int, ...]] = None
        self._min_distance: Optional[int] = None

    @classmethod
    def random(cls, m: int, s: int, rng: np.random.Generator) -> 'LinearCode':
        if s > m:
            raise nqsot.ParameterError('Syndrome length %d exceeds block length %d' % (s, m))
        while True:
            parity = rng.integers(0, 2, size=(s, m), dtype=np.uint8)
            if gf2_rank(parity) == s:
                return cls(parity)
            logger.debug('Rejecting rank-deficient %dx%d parity check', s, m)

    @property
    def is_genie(self) -> bool:
        return self.radius is not None

    @property
    def columns(self) -> Tuple[int, ...]:
        """Parity-check columns packed into integers, bit k = row k."""
        if self._columns is None:
            self._columns = tuple(_pack_syndrome(self.parity_check[:, j]) for j in range(self.length))
        return self._columns

    def syndrome(self, bits: Sequence[int]) -> np.ndarray:
        return syndrome(self, bits)

    def is_codeword(self, bits: Sequence[int]) -> bool:
        return not np.any(self.syndrome(bits))

    def minimum_distance(self) -> int:
        """Exhaustive search over low-weight patterns; 0 means no nonzero codeword exists."""
        if self._min_distance is None:
            self._min_distance = 0
            for weight in range(1, self.length + 1):
                if any(_xor_all(self.columns, combo) == 0
                       for combo in itertools.combinations(range(self.length), weight)):
                    self._min_distance = weight
                    break
        return self._min_distance

    def correction_radius(self) -> int:
        if self.is_genie:
            return int(self.radius)  # type: ignore[arg-type]
        dist = self.minimum_distance()
        if dist == 0:
            return self.length
        return (dist - 1) // 2

    def __repr__(self) -> str:
        kind = 'genie' if self.is_genie else 'ml'
        return 'LinearCode(m=%d, s=%d, %s)' % (self.length, self.syndrome_bits, kind)


def _xor_all(columns: Sequence[int], indices: Sequence[int]) -> int:
    acc = 0
    for idx in indices:
        acc ^= columns[idx]
    return acc


def _pack_syndrome(bits: np.ndarray) -> int:
    return int(sum(int(bit) << k for k, bit in enumerate(bits)))


def syndrome(code: LinearCode, bits: Sequence[int]) -> np.ndarray:
    x = as_bits(bits)
    if len(x) != code.length:
        raise nqsot.ParameterError('Code expects %d bits, got %d' % (code.length, len(x)))
    return gf2_matvec(code.parity_check, x)


def ml_decode(code: LinearCode, received: Sequence[int], syn: Sequence[int]) -> np.ndarray:
    """Closest string to `received` whose syndrome is `syn`.

    Flip patterns are tried by increasing weight, and within a weight in
    itertools.combinations order, so ties go to the lexicographically
    smallest tuple of flipped positions.
    """
    y = as_bits(received)
    target = as_bits(syn)
    if len(y) != code.length:
        raise nqsot.ParameterError('Code expects %d bits, got %d' % (code.length, len(y)))
    if len(target) != code.syndrome_bits:
        raise nqsot.ParameterError('Syndrome must have %d bits, got %d' % (code.syndrome_bits, len(target)))
    wanted = _pack_syndrome(target) ^ _pack_syndrome(syndrome(code, y))
    columns = code.columns
    for weight in range(code.length + 1):
        for combo in itertools.combinations(range(code.length), weight):
            if _xor_all(columns, combo) == wanted:
                out = y.copy()
                out[list(combo)] ^= 1
                return out
    raise nqsot.ValidationError('Syndrome is not reachable by this parity check')


def genie_decode(code: LinearCode, received: Sequence[int], syn: Sequence[int], truth: Sequence[int]) -> np.ndarray:
    y = as_bits(received)
    x = as_bits(truth)
    if len(y) != code.length or len(x) != code.length:
        raise nqsot.ParameterError('Code expects %d bits' % code.length)
    if not np.array_equal(syndrome(code, x), as_bits(syn)):
        raise nqsot.ValidationError('Genie string does not match the syndrome')
    weight = int(np.count_nonzero(x ^ y))
    if weight <= code.correction_radius():
        return x.copy()
    logger.debug('Genie decoder: %d errors exceed radius %d', weight, code.correction_radius())
    return y.copy()


def decode(code: LinearCode, received: Sequence[int], syn: Sequence[int],
           truth: Optional[Sequence[int]] = None) -> np.ndarray:
    if code.is_genie:
        if truth is None:
            raise nqsot.ParameterError('Genie decoding needs the true string')
        return genie_decode(code, received, syn, truth)
    return ml_decode(code, received, syn)
