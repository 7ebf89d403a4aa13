#!/usr/bin/env python3
# -*- coding: utf-8 -*-
# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026 by the nqsot authors
#
# Entropic and statistical toolkit: guessing probabilities, min-entropy,
# non-uniformity, and the bound calculators built on them.
#
import math

from dataclasses import dataclass, field
from typing import Hashable, List, Optional, Sequence, Tuple

import numpy as np

import nqsot
from nqsot.qmath import DensityMatrix, trace_norm

logger = nqsot.logger

PROB_TOL = 1e-10
# Largest quantum side register the dual program is asked to handle
MAX_DUAL_DIM = 4


class CqState:
    """Classical X with a quantum register E conditioned on each value of X.

    A purely classical E is represented by diagonal conditionals. The
    optional side tag names a classical register U that travels along with
    E (for example the hash seed in privacy amplification).
    """

    def __init__(self, labels: Sequence[Hashable], probs: Sequence[float],
                 conditionals: Sequence[DensityMatrix], side: Optional[str] = None) -> None:
        if not labels:
            raise nqsot.ParameterError('A cq-state needs at least one label')
        if len(labels) != len(probs) or len(labels) != len(conditionals):
            raise nqsot.ParameterError('Need one probability and one conditional per label')
        if len(set(labels)) != len(labels):
            raise nqsot.ParameterError('Labels must be distinct')
        parr = np.asarray(probs, dtype=float)
        if np.any(parr < 0) or abs(float(parr.sum()) - 1) > PROB_TOL:
            raise nqsot.ValidationError('Probabilities must be non-negative and sum to 1 (sum %s)' % parr.sum())
        dims = {rho.dim for rho in conditionals}
        if len(dims) != 1:
            raise nqsot.ValidationError('All conditionals must have the same dimension, got %s' % sorted(dims))
        parr.setflags(write=False)
        self.labels: Tuple[Hashable, ...] = tuple(labels)
        self.probs: np.ndarray = parr
        self.conditionals: Tuple[DensityMatrix, ...] = tuple(conditionals)
        self.side = side

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def dim_e(self) -> int:
        return self.conditionals[0].dim

    @property
    def is_classical(self) -> bool:
        for rho in self.conditionals:
            offdiag = rho.entries - np.diag(np.diag(rho.entries))
            if np.max(np.abs(offdiag)) > 1e-12:
                return False
        return True

    def weighted(self) -> List[np.ndarray]:
        """P(x) rho_E^x for every label, in label order."""
        return [p * rho.entries for p, rho in zip(self.probs, self.conditionals)]

    def rho_e(self) -> np.ndarray:
        return sum(self.weighted(), np.zeros((self.dim_e, self.dim_e), dtype=complex))

    def joint(self) -> np.ndarray:
        """The block-diagonal operator sum_x P(x)|x><x| (x) rho_E^x."""
        dim = self.dim_e
        out = np.zeros((self.size * dim, self.size * dim), dtype=complex)
        for idx, block in enumerate(self.weighted()):
            out[idx * dim:(idx + 1) * dim, idx * dim:(idx + 1) * dim] = block
        return out

    def tensor(self, other: 'CqState') -> 'CqState':
        """Product of two independent cq-states, labels become pairs."""
        labels = list()
        probs = list()
        conds = list()
        for lx, px, rx in zip(self.labels, self.probs, self.conditionals):
            for ly, py, ry in zip(other.labels, other.probs, other.conditionals):
                labels.append((lx, ly))
                probs.append(px * py)
                conds.append(DensityMatrix(rx.tensor(ry), validate=False))
        return CqState(labels, probs, conds)

    @classmethod
    def from_joint_distribution(cls, pxe: np.ndarray, labels: Optional[Sequence[Hashable]] = None) -> 'CqState':
        """Build a cq-state with classical E from a P(x, e) table."""
        pxe = np.asarray(pxe, dtype=float)
        if pxe.ndim != 2:
            raise nqsot.ParameterError('Joint distribution must be a 2-d table')
        nx, ne = pxe.shape
        if ne < 2:
            pxe = np.hstack([pxe, np.zeros((nx, 2 - ne))])
            ne = 2
        px = pxe.sum(axis=1)
        conds = list()
        for x in range(nx):
            if px[x] > 0:
                conds.append(DensityMatrix.diagonal(pxe[x] / px[x]))
            else:
                conds.append(DensityMatrix.maximally_mixed(ne))
        if labels is None:
            labels = list(range(nx))
        return cls(labels, list(px), conds)

    def __repr__(self) -> str:
        return 'CqState(labels=%s, probs=%s, dim_e=%d)' % (self.labels, np.round(self.probs, 6), self.dim_e)


@dataclass(frozen=True)
class BoundParams:
    n: int
    eps: float
    dim_x: int = 2
    gamma: Optional[float] = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise nqsot.ParameterError('n must be at least 1, got %s' % self.n)
        if not 0 < self.eps < 1:
            raise nqsot.ParameterError('eps must be in (0, 1), got %s' % self.eps)
        if self.dim_x < 2:
            raise nqsot.ParameterError('dim_x must be at least 2, got %s' % self.dim_x)
        if self.gamma is not None and self.gamma < 3:
            raise nqsot.ParameterError('gamma must be at least 3, got %s' % self.gamma)

    @property
    def effective_gamma(self) -> float:
        if self.gamma is None:
            return 2 * math.sqrt(self.dim_x) + 1
        return float(self.gamma)


@dataclass(frozen=True)
class SplitResult:
    index: int
    guaranteed_bits: float
    branches: Tuple[float, ...] = field(default_factory=tuple)


def helstrom_guess_prob(p0: float, rho0: DensityMatrix, p1: float, rho1: DensityMatrix) -> float:
    if abs(p0 + p1 - 1) > PROB_TOL or p0 < 0 or p1 < 0:
        raise nqsot.ParameterError('Priors must be non-negative and sum to 1, got %s + %s' % (p0, p1))
    if rho0.dim != rho1.dim:
        raise nqsot.ParameterError('Dimension mismatch: %d vs %d' % (rho0.dim, rho1.dim))
    value = 0.5 * (1 + trace_norm(p0 * rho0.entries - p1 * rho1.entries))
    return min(1.0, max(value, max(p0, p1)))


def classical_guess(joint: np.ndarray, guess_axes: Sequence[int]) -> float:
    """Optimal probability of guessing the variables on guess_axes.

    The remaining axes of the probability table are what the guesser sees.
    """
    table = np.asarray(joint, dtype=float)
    guess_axes = tuple(guess_axes)
    rest = tuple(ax for ax in range(table.ndim) if ax not in guess_axes)
    moved = np.transpose(table, guess_axes + rest)
    nguess = int(np.prod([table.shape[ax] for ax in guess_axes]))
    flat = moved.reshape(nguess, -1)
    return float(flat.max(axis=0).sum())


def classical_guess_prob(state: CqState) -> float:
    """sum_e max_x P(x, e) for a cq-state with diagonal conditionals."""
    pxe = np.array([np.real(np.diag(block)) for block in state.weighted()])
    return classical_guess(pxe, (0,))


def _pick_solver() -> Tuple[str, dict]:
    import cvxpy as cp
    config = nqsot.get_main_config()
    wanted = str(config.get('sdp-solver', 'auto')).upper()
    installed = cp.installed_solvers()
    if wanted == 'AUTO':
        wanted = 'CLARABEL' if 'CLARABEL' in installed else 'SCS'
    if wanted not in installed:
        raise nqsot.UnsupportedInstance('SDP solver %s is not installed (have: %s)' % (wanted, ', '.join(installed)))
    opts: dict = dict()
    if wanted == 'SCS':
        opts = {'eps': 1e-9, 'max_iters': 200000}
    return wanted, opts


def guess_prob_dual(state: CqState) -> float:
    """Solve min Tr(sigma) subject to sigma >= P(x) rho_E^x for every x."""
    import cvxpy as cp
    dim = state.dim_e
    if dim > MAX_DUAL_DIM:
        raise nqsot.UnsupportedInstance('Dual program limited to dim(E) <= %d, got %d' % (MAX_DUAL_DIM, dim))
    sigma = cp.Variable((dim, dim), hermitian=True)
    constraints = [sigma - block >> 0 for block in state.weighted()]
    problem = cp.Problem(cp.Minimize(cp.real(cp.trace(sigma))), constraints)
    solver, opts = _pick_solver()
    logger.debug('Solving guessing-probability dual with %s (|X|=%d, dim=%d)', solver, state.size, dim)
    problem.solve(solver=solver, **opts)
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise nqsot.UnsupportedInstance('Dual program did not converge: %s' % problem.status)
    if problem.status == cp.OPTIMAL_INACCURATE:
        logger.warning('Dual program solved inaccurately with %s', solver)
    return min(1.0, float(problem.value))


def guess_prob(state: CqState) -> float:
    if state.size == 1:
        return 1.0
    if state.size == 2:
        return helstrom_guess_prob(float(state.probs[0]), state.conditionals[0],
                                   float(state.probs[1]), state.conditionals[1])
    if state.is_classical:
        return classical_guess_prob(state)
    if state.dim_e <= MAX_DUAL_DIM:
        return guess_prob_dual(state)
    raise nqsot.UnsupportedInstance('No exact guessing probability for |X|=%d with quantum E of dim %d'
                                    % (state.size, state.dim_e))


def min_entropy_cq(state: CqState) -> float:
    """H_min(X|E) = -log2 P_guess(X|E), in bits."""
    pguess = guess_prob(state)
    return max(0.0, -math.log2(pguess))


def min_entropy_dual(state: CqState) -> float:
    return max(0.0, -math.log2(guess_prob_dual(state)))


def non_uniformity(state: CqState) -> float:
    mixed = state.rho_e() / state.size
    total = 0.0
    for block in state.weighted():
        total += trace_norm(block - mixed)
    return 0.5 * total


def pa_bound(hmin: float, ell: int, eps: float) -> float:
    """Upper bound on d(F(X)|F,U,E) after hashing to ell bits."""
    if ell < 0:
        raise nqsot.ParameterError('ell must be non-negative, got %s' % ell)
    if eps < 0:
        raise nqsot.ParameterError('eps must be non-negative, got %s' % eps)
    return 2.0 ** (-0.5 * (hmin - ell) - 1) + eps


def aep_floor(eps: float) -> int:
    return math.ceil(8 / 5 * math.log2(2 / eps ** 2))


def aep_delta(params: BoundParams) -> float:
    return math.sqrt(math.log2(2 / params.eps ** 2) / params.n) * 4 * math.log2(2 * math.sqrt(params.dim_x) + 1)


def _check_aep(params: BoundParams, per_round_entropy: Sequence[float]) -> None:
    if len(per_round_entropy) != params.n:
        raise nqsot.ParameterError('Got %d per-round entropies for n=%d' % (len(per_round_entropy), params.n))
    floor = aep_floor(params.eps)
    if params.n < floor:
        raise nqsot.PreconditionError('AEP bound needs n >= %d for eps=%s, got n=%d' % (floor, params.eps, params.n))


def aep_lower_bound(params: BoundParams, per_round_entropy: Sequence[float], use_gamma: bool = False) -> float:
    """Smooth min-entropy lower bound for n independent rounds.

    With use_gamma the single-system contribution is taken from
    params.gamma (defaulting to 2 sqrt(dim_x) + 1, which makes both forms
    coincide).
    """
    _check_aep(params, per_round_entropy)
    total = float(math.fsum(per_round_entropy))
    if use_gamma:
        slack = 4 * math.log2(params.effective_gamma) * math.sqrt(math.log2(2 / params.eps ** 2)) * math.sqrt(params.n)
        return total - slack
    return total - aep_delta(params) * params.n


def split_index(branch_entropies: Sequence[float], alpha: Optional[float] = None) -> SplitResult:
    """Pick the branch D the adversary knows most about.

    alpha is the pairwise entropy guarantee; by default it is the sum of
    the two smallest branches.
    """
    if not branch_entropies:
        raise nqsot.ParameterError('Need at least one branch entropy')
    if len(branch_entropies) < 2:
        raise nqsot.ParameterError('Need at least two branches, got %d' % len(branch_entropies))
    if any(h < 0 for h in branch_entropies):
        raise nqsot.ParameterError('Branch entropies must be non-negative')
    branches = tuple(float(h) for h in branch_entropies)
    # np.argmin returns the first minimum
    index = int(np.argmin(branches))
    if alpha is None:
        alpha = sum(sorted(branches)[:2])
    m = len(branches)
    if m == 2:
        guaranteed = alpha / 2
    else:
        guaranteed = alpha / 2 - math.log2(m)
    return SplitResult(index=index, guaranteed_bits=guaranteed, branches=branches)


def chernoff_tail(n: int, eps: float) -> float:
    if n < 1:
        raise nqsot.ParameterError('n must be at least 1, got %s' % n)
    if eps < 0:
        raise nqsot.ParameterError('eps must be non-negative, got %s' % eps)
    return min(1.0, 2 * math.exp(-2 * eps * eps * n))

