#!/usr/bin/env python3
# -*- coding: utf-8 -*-
# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026 by the nqsot authors
#
# Small-dimension Hermitian matrix core: states, the depolarizing channel,
# entropies and distance measures. All logarithms are base 2.
#
import enum
import math

import numpy as np
import scipy.optimize
import scipy.special

from typing import Iterable, Optional, Sequence, Union

import nqsot

logger = nqsot.logger

MAX_DIM = 16
HERMITIAN_TOL = 1e-12
PSD_TOL = -1e-10
TRACE_TOL = 1e-10
# Eigenvalues below this are exactly zero for entropy purposes
ZERO_EIGEN = 1e-14

ArrayLike = Union[np.ndarray, Sequence[Sequence[complex]]]

ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class QubitBasis(enum.Enum):
    COMPUTATIONAL = '+'
    HADAMARD = 'x'

    @classmethod
    def parse(cls, tag: Union[str, 'QubitBasis']) -> 'QubitBasis':
        if isinstance(tag, QubitBasis):
            return tag
        if tag in ('+', 'plus', 'computational'):
            return cls.COMPUTATIONAL
        if tag in ('x', 'X', '×', 'times', 'hadamard'):
            return cls.HADAMARD
        raise nqsot.ParameterError('Unknown basis tag: %r' % (tag,))

    @property
    def other(self) -> 'QubitBasis':
        if self is QubitBasis.COMPUTATIONAL:
            return QubitBasis.HADAMARD
        return QubitBasis.COMPUTATIONAL

    @property
    def index(self) -> int:
        return 0 if self is QubitBasis.COMPUTATIONAL else 1

    @classmethod
    def from_index(cls, idx: int) -> 'QubitBasis':
        return cls.COMPUTATIONAL if int(idx) == 0 else cls.HADAMARD

    def __str__(self) -> str:
        return self.value


class DensityMatrix:
    """Hermitian, positive semi-definite, unit-trace matrix of dimension 2..16.

    Instances are immutable: the backing array is marked read-only.
    """
    entries: np.ndarray

    def __init__(self, entries: ArrayLike, validate: bool = True) -> None:
        arr = np.array(entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise nqsot.ValidationError('Density matrix must be square, got shape %s' % (arr.shape,))
        if not 2 <= arr.shape[0] <= MAX_DIM:
            raise nqsot.ValidationError('Density matrix dimension must be in 2..%d, got %d'
                                        % (MAX_DIM, arr.shape[0]))
        arr.setflags(write=False)
        self.entries = arr
        if validate:
            self.validate()

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def validate(self) -> None:
        arr = self.entries
        herm = float(np.max(np.abs(arr - arr.conj().T)))
        if herm > HERMITIAN_TOL:
            raise nqsot.ValidationError('Matrix is not Hermitian (deviation %.3g)' % herm)
        trace = complex(np.trace(arr))
        if abs(trace - 1) > TRACE_TOL:
            raise nqsot.ValidationError('Matrix does not have unit trace (trace %s)' % trace)
        mineig = float(np.min(np.linalg.eigvalsh(arr)))
        if mineig < PSD_TOL:
            raise nqsot.ValidationError('Matrix is not positive semi-definite (min eigenvalue %.3g)' % mineig)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def conjugate(self, unitary: np.ndarray) -> 'DensityMatrix':
        """Return U rho U^dagger."""
        return DensityMatrix(unitary @ self.entries @ unitary.conj().T, validate=False)

    def tensor(self, other: 'DensityMatrix') -> np.ndarray:
        return np.kron(self.entries, other.entries)

    def is_pure(self, tol: float = 1e-10) -> bool:
        return abs(float(np.real(np.trace(self.entries @ self.entries))) - 1) <= tol

    @classmethod
    def from_vector(cls, vec: Iterable[complex]) -> 'DensityMatrix':
        v = np.array(list(vec), dtype=complex)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise nqsot.ValidationError('Cannot build a state from the zero vector')
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int = 2) -> 'DensityMatrix':
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def diagonal(cls, probs: Sequence[float]) -> 'DensityMatrix':
        return cls(np.diag(np.asarray(probs, dtype=complex)))

    @classmethod
    def mixture(cls, weights: Sequence[float], states: Sequence['DensityMatrix']) -> 'DensityMatrix':
        if len(weights) != len(states) or not states:
            raise nqsot.ParameterError('Need one weight per state')
        acc = np.zeros_like(states[0].entries)
        for weight, state in zip(weights, states):
            if state.dim != states[0].dim:
                raise nqsot.ParameterError('Dimension mismatch in mixture')
            acc = acc + weight * state.entries
        return cls(acc)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.dim == other.dim and bool(np.allclose(self.entries, other.entries, atol=1e-12))

    def __hash__(self) -> int:
        return hash(np.round(self.entries, 10).tobytes())

    def __repr__(self) -> str:
        return 'DensityMatrix(%s)' % np.array2string(self.entries, precision=6)


class DepolarizingChannel:
    """N(rho) = r rho + (1 - r) id/d, r being the probability the state survives."""
    r: float

    def __init__(self, r: float) -> None:
        self.r = check_unit_interval(r, 'r')

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        return depolarize(rho, self.r)

    def __repr__(self) -> str:
        return 'DepolarizingChannel(r=%s)' % self.r


def check_unit_interval(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise nqsot.ParameterError('%s must be in [0, 1], got %s' % (name, value))
    return value


def _check_same_dim(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.dim != sigma.dim:
        raise nqsot.ParameterError('Dimension mismatch: %d vs %d' % (rho.dim, sigma.dim))


def basis_vector(x: int, theta: QubitBasis) -> np.ndarray:
    if x not in (0, 1):
        raise nqsot.ParameterError('Bit must be 0 or 1, got %r' % (x,))
    vec = np.zeros(2, dtype=complex)
    vec[x] = 1.0
    if theta is QubitBasis.HADAMARD:
        vec = HADAMARD @ vec
    return vec


def bb84_state(x: int, theta: QubitBasis) -> DensityMatrix:
    """|x><x| in basis theta."""
    vec = basis_vector(int(x), QubitBasis.parse(theta))
    return DensityMatrix(np.outer(vec, vec.conj()))


def depolarize(rho: DensityMatrix, r: float) -> DensityMatrix:
    r = check_unit_interval(r, 'r')
    mixed = np.eye(rho.dim, dtype=complex) / rho.dim
    return DensityMatrix(r * rho.entries + (1 - r) * mixed, validate=False)


def depolarize_operator(op: np.ndarray, r: float) -> np.ndarray:
    """Depolarizing map on an arbitrary (possibly unnormalized) operator."""
    dim = op.shape[0]
    return r * op + (1 - r) * np.trace(op) * np.eye(dim, dtype=complex) / dim


def entropy_of_spectrum(eigenvalues: np.ndarray) -> float:
    lam = np.real(np.asarray(eigenvalues, dtype=float))
    lam = np.where(lam < ZERO_EIGEN, 0.0, lam)
    return float(scipy.special.entr(lam).sum() / math.log(2))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    lam = rho.eigenvalues()
    if float(np.min(lam)) < PSD_TOL:
        raise nqsot.ValidationError('State is not positive semi-definite (min eigenvalue %.3g)' % np.min(lam))
    return entropy_of_spectrum(lam)


def trace_norm(op: np.ndarray) -> float:
    """||A||_1 of a Hermitian operator, normalized or not."""
    herm = (op + op.conj().T) / 2
    return float(np.sum(np.abs(np.linalg.eigvalsh(herm))))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    _check_same_dim(rho, sigma)
    return min(1.0, 0.5 * trace_norm(rho.entries - sigma.entries))


def _psd_sqrt(op: np.ndarray) -> np.ndarray:
    lam, vecs = np.linalg.eigh(op)
    lam = np.sqrt(np.clip(lam, 0.0, None))
    return (vecs * lam) @ vecs.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """F(rho, sigma) = Tr sqrt(sqrt(rho) sigma sqrt(rho))."""
    _check_same_dim(rho, sigma)
    root = _psd_sqrt(rho.entries)
    inner = root @ sigma.entries @ root
    lam = np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2), 0.0, None)
    return min(1.0, float(np.sum(np.sqrt(lam))))


def c_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """C(rho, sigma) = sqrt(1 - F^2); equals the trace distance on pure states."""
    fid = fidelity(rho, sigma)
    return math.sqrt(max(0.0, 1.0 - fid * fid))


def binary_entropy(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise nqsot.ParameterError('Binary entropy argument must be in [0, 1], got %s' % p)
    return float((scipy.special.entr(p) + scipy.special.entr(1.0 - p)) / math.log(2))


def binary_entropy_inv(y: float, branch: str = 'lower') -> float:
    """Inverse of h on [0, 1/2] (lower) or [1/2, 1] (upper)."""
    y = float(y)
    if not 0.0 <= y <= 1.0:
        raise nqsot.ParameterError('Binary entropy value must be in [0, 1], got %s' % y)
    if branch not in ('lower', 'upper'):
        raise nqsot.ParameterError('Branch must be lower or upper, got %r' % (branch,))
    if y == 0.0:
        return 0.0 if branch == 'lower' else 1.0
    if y == 1.0:
        return 0.5

    def func(p: float) -> float:
        return binary_entropy(p) - y

    lower = float(scipy.optimize.bisect(func, 0.0, 0.5, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=400))
    if branch == 'lower':
        return lower
    return 1.0 - lower


def random_pure_state(dim: int, rng: np.random.Generator) -> DensityMatrix:
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return DensityMatrix.from_vector(vec)


def random_density_matrix(dim: int, rng: np.random.Generator, components: Optional[int] = None) -> DensityMatrix:
    """Random mixture of random pure states."""
    if components is None:
        components = dim
    weights = rng.dirichlet(np.ones(components))
    states = [random_pure_state(dim, rng) for _ in range(components)]
    return DensityMatrix.mixture(list(weights), states)
