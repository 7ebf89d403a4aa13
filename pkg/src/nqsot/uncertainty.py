#!/usr/bin/env python3
# -*- coding: utf-8 -*-
# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026 by the nqsot authors
#
# Uncertainty bound t(r) for an adversary that partially measures each
# BB84 qubit and keeps the rest in depolarizing storage.
#
import argparse
import csv
import functools
import io
import math
import sys

from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.special

import nqsot
from nqsot.qmath import (ID2, PAULI_X, PAULI_Y, PAULI_Z, QubitBasis, binary_entropy, binary_entropy_inv,
                         bb84_state, check_unit_interval, depolarize_operator, entropy_of_spectrum)

if TYPE_CHECKING:
    from nqsot.protocol import AttackStrategy

logger = nqsot.logger

ALPHA_MAX = 1 / math.sqrt(2)
COMPLETENESS_TOL = 1e-8
ORBIT_TOL = 1e-10
# Outcomes less likely than this are treated as impossible
MIN_OUTCOME_PROB = 1e-14
INV_PHI = (math.sqrt(5) - 1) / 2

ORBIT_GROUP = (ID2, PAULI_X, PAULI_Z, PAULI_X @ PAULI_Z)

CSV_HEADER = ('r', 't_closed', 't_numeric', 'argmin_alpha')


def _h(q: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Vectorized binary entropy, clipping float noise just outside [0, 1]."""
    q = np.clip(q, 0.0, 1.0)
    return (scipy.special.entr(q) + scipy.special.entr(1.0 - q)) / math.log(2)


class MeasurementOperator:
    """F = alpha |phi><phi| + beta (id - |phi><phi|), beta = sqrt(1/2 - alpha^2).

    The axis (x, z) is the Bloch vector of |phi> in the XZ plane, with the
    Y component filled up to unit length.
    """

    def __init__(self, alpha: float, axis_x: float = 0.0, axis_z: float = 1.0) -> None:
        alpha = float(alpha)
        if alpha < -1e-12 or alpha > ALPHA_MAX + 1e-12:
            raise nqsot.ValidationError('alpha must be in [0, 1/sqrt(2)], got %s' % alpha)
        norm2 = axis_x * axis_x + axis_z * axis_z
        if norm2 > 1 + 1e-12:
            raise nqsot.ValidationError('Axis (%s, %s) lies outside the unit disc' % (axis_x, axis_z))
        self.alpha = min(max(alpha, 0.0), ALPHA_MAX)
        self.beta = math.sqrt(max(0.0, 0.5 - self.alpha ** 2))
        self.axis_x = float(axis_x)
        self.axis_z = float(axis_z)
        self.axis_y = math.sqrt(max(0.0, 1.0 - norm2))
        proj = (ID2 + self.axis_x * PAULI_X + self.axis_y * PAULI_Y + self.axis_z * PAULI_Z) / 2
        self.matrix: np.ndarray = self.alpha * proj + self.beta * (ID2 - proj)
        self.matrix.setflags(write=False)
        purity = float(np.real(np.trace(self.matrix @ self.matrix)))
        if abs(purity - 0.5) > 1e-12:
            raise nqsot.ValidationError('Tr(F^2) is %s, expected 1/2' % purity)

    def orbit(self) -> 'OrbitMeasurement':
        return OrbitMeasurement(self)

    def __repr__(self) -> str:
        return 'MeasurementOperator(alpha=%.6g, axis=(%.6g, %.6g))' % (self.alpha, self.axis_x, self.axis_z)


class OrbitMeasurement:
    """The four operators g F g^dagger, g in (id, X, Z, XZ), in that order."""

    def __init__(self, base: MeasurementOperator) -> None:
        self.base = base
        self.operators: Tuple[np.ndarray, ...] = tuple(g @ base.matrix @ g.conj().T for g in ORBIT_GROUP)
        check_complete(self.operators, tol=ORBIT_TOL)

    def __iter__(self):
        return iter(self.operators)

    def __len__(self) -> int:
        return len(self.operators)


Measurement = Union[OrbitMeasurement, Sequence[np.ndarray]]


def check_complete(operators: Sequence[np.ndarray], tol: float = COMPLETENESS_TOL) -> None:
    total = sum((op.conj().T @ op for op in operators), np.zeros((2, 2), dtype=complex))
    deviation = float(np.max(np.abs(total - ID2)))
    if deviation > tol:
        raise nqsot.ValidationError('Measurement is not complete (deviation %.3g)' % deviation)


def cost_B(measurement: Measurement, r: float) -> float:
    """H(X|Theta K E) when outcome k is kept and the post-measurement qubit is stored.

    X and Theta are uniform bits; each operator is applied as rho -> F rho F^dagger.
    """
    ops = list(measurement)
    check_complete(ops)
    r = check_unit_interval(r, 'r')
    cond = 0.0
    stored = 0.0
    mixed = 0.0
    for theta in QubitBasis:
        states = [bb84_state(x, theta).entries for x in (0, 1)]
        for op in ops:
            weights = list()
            posts = list()
            for rho in states:
                post = op @ rho @ op.conj().T
                pk = float(np.real(np.trace(post)))
                if pk < MIN_OUTCOME_PROB:
                    weights.append(0.0)
                    posts.append(None)
                    continue
                weights.append(pk)
                posts.append(post / pk)
            total = sum(weights)
            if total < MIN_OUTCOME_PROB:
                continue
            p_theta_k = total / 4
            cond += p_theta_k * binary_entropy(min(1.0, weights[0] / total))
            avg = np.zeros((2, 2), dtype=complex)
            for weight, post in zip(weights, posts):
                if post is None:
                    continue
                avg = avg + (weight / total) * post
                stored += weight / 4 * entropy_of_spectrum(np.linalg.eigvalsh(depolarize_operator(post, r)))
            mixed += p_theta_k * entropy_of_spectrum(np.linalg.eigvalsh(depolarize_operator(avg, r)))
    return cond + stored - mixed


def cost_C(op: MeasurementOperator, r: float) -> float:
    r = check_unit_interval(r, 'r')
    fmat = op.matrix
    probe = 0.0
    for theta in QubitBasis:
        rho = bb84_state(0, theta).entries
        probe += float(_h(2 * np.real(np.trace(fmat @ rho @ fmat))))
    twice_sq = 2 * fmat @ fmat
    return (0.5 * probe + binary_entropy((1 + r) / 2)
            - entropy_of_spectrum(np.linalg.eigvalsh(depolarize_operator(twice_sq, r))))


def cost_c_grid(alpha: np.ndarray, axis_x: np.ndarray, axis_z: np.ndarray, r: float) -> np.ndarray:
    """cost_C over broadcast arrays of (alpha, x, z).

    With c = alpha^2 - beta^2 the two probe probabilities are 1/2 + c z and
    1/2 + c x, and N(2F^2) has eigenvalues 2 r alpha^2 + (1 - r)/2 and its
    complement, so no matrices are needed.
    """
    alpha = np.asarray(alpha, dtype=float)
    c = 2 * alpha ** 2 - 0.5
    probe = 0.5 * (_h(0.5 + c * np.asarray(axis_z)) + _h(0.5 + c * np.asarray(axis_x)))
    return probe + _h((1 + r) / 2) - _h(2 * r * alpha ** 2 + (1 - r) / 2)


def golden_section(func, lower: float, upper: float, tol: float = 1e-6, maxiter: int = 200) -> Tuple[float, float]:
    """Minimize func on [lower, upper]; the endpoints are checked too."""
    x1 = upper - INV_PHI * (upper - lower)
    x2 = lower + INV_PHI * (upper - lower)
    f1 = func(x1)
    f2 = func(x2)
    lo, hi = lower, upper
    for _ in range(maxiter):
        if hi - lo <= tol:
            break
        if f2 > f1:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = func(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = func(x2)
    best = min(((func(lower), lower), (func(upper), upper), (f1, x1), (f2, x2)), key=lambda item: item[0])
    return best[1], best[0]


@dataclass(frozen=True)
class NumericMinimum:
    min_bits: float
    argmin_alpha: float
    argmin_axis: Tuple[float, float]


def t_numeric(r: float, alpha_points: Optional[int] = None, axis_points: Optional[int] = None,
              tol: Optional[float] = None) -> NumericMinimum:
    """Minimize cost_C over alpha and the XZ quarter circle.

    A coarse grid picks the best (alpha, axis) cell, then golden-section
    search refines alpha at that axis within the neighbouring grid cells.
    """
    r = check_unit_interval(r, 'r')
    if alpha_points is None:
        alpha_points = nqsot.get_config_int('uncertainty-alpha-points')
    if axis_points is None:
        axis_points = nqsot.get_config_int('uncertainty-axis-points')
    if tol is None:
        tol = nqsot.get_config_float('uncertainty-tolerance')
    if alpha_points < 2 or axis_points < 2:
        raise nqsot.ParameterError('Grid needs at least 2 points per axis')

    alphas = np.linspace(0.0, ALPHA_MAX, alpha_points)
    angles = np.linspace(0.0, math.pi / 2, axis_points)
    axis_x = np.sin(angles)
    axis_z = np.cos(angles)
    axis_x[-1] = 1.0
    axis_z[-1] = 0.0
    grid = cost_c_grid(alphas[:, None], axis_x[None, :], axis_z[None, :], r)
    # argmin takes the first hit, so ties prefer the smallest alpha
    ia, ix = np.unravel_index(int(np.argmin(grid)), grid.shape)
    logger.debug('t_numeric(r=%s): grid %dx%d minimum %.9g at alpha=%.6g angle=%.6g',
                 r, alpha_points, axis_points, grid[ia, ix], alphas[ia], angles[ix])
    bx = float(axis_x[ix])
    bz = float(axis_z[ix])

    def along_alpha(a: float) -> float:
        return float(cost_c_grid(np.array(a), bx, bz, r))

    lower = float(alphas[max(0, ia - 1)])
    upper = float(alphas[min(alpha_points - 1, ia + 1)])
    best_alpha, best_value = golden_section(along_alpha, lower, upper, tol=tol)
    if grid[ia, ix] < best_value:
        best_alpha, best_value = float(alphas[ia]), float(grid[ia, ix])

    closed = t_closed_form(r)
    if best_value < closed - 1e-6:
        logger.warning('Numeric minimum %.9g at r=%s lies below the closed form %.9g (alpha=%.6g, axis=(%.6g, %.6g))',
                       best_value, r, closed, best_alpha, bx, bz)
    return NumericMinimum(min_bits=best_value, argmin_alpha=best_alpha, argmin_axis=(bx, bz))


@functools.lru_cache(maxsize=None)
def r_hat() -> float:
    return 2 * binary_entropy_inv(0.5, branch='upper') - 1


def t_closed_form(r: float) -> float:
    r = check_unit_interval(r, 'r')
    if r >= r_hat():
        return binary_entropy((1 + r) / 2)
    return 0.5


def strategy_entropy(strategy: 'AttackStrategy', r: float) -> float:
    """H(X|Theta K E) that a concrete attack leaves, via cost_B."""
    return cost_B(strategy.operators(), r)


def curve_points(r_min: float, r_max: float, step: float) -> List[float]:
    if not 0.0 <= r_min <= r_max <= 1.0:
        raise nqsot.ParameterError('Need 0 <= r-min <= r-max <= 1, got %s..%s' % (r_min, r_max))
    if not step > 0:
        raise nqsot.ParameterError('Step must be positive, got %s' % step)
    count = int(math.floor((r_max - r_min) / step + 1e-9)) + 1
    return [round(r_min + idx * step, 12) for idx in range(count)]


def _cached_minimum(r: float, use_cache: bool) -> NumericMinimum:
    ident = 'uncertainty:%r:%s:%s:%s' % (r, nqsot.get_config_int('uncertainty-alpha-points'),
                                         nqsot.get_config_int('uncertainty-axis-points'),
                                         nqsot.get_config_float('uncertainty-tolerance'))
    if use_cache:
        cached = nqsot.get_cache(ident, suffix='json')
        if cached:
            return NumericMinimum(min_bits=cached['min'], argmin_alpha=cached['alpha'],
                                  argmin_axis=(cached['x'], cached['z']))
    found = t_numeric(r)
    if use_cache:
        nqsot.save_cache({'min': found.min_bits, 'alpha': found.argmin_alpha,
                          'x': found.argmin_axis[0], 'z': found.argmin_axis[1]}, ident, suffix='json')
    return found


def curve_rows(points: Sequence[float], use_cache: bool = False) -> List[dict]:
    rows = list()
    for r in points:
        found = _cached_minimum(r, use_cache)
        rows.append({
            'r': r,
            't_closed': t_closed_form(r),
            't_numeric': found.min_bits,
            'argmin_alpha': found.argmin_alpha,
        })
    return rows


def render_csv(rows: Sequence[dict], rhat_row: dict) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([nqsot.format_float(row[key]) for key in CSV_HEADER])
    out.write('# r_hat,%s\n' % ','.join(nqsot.format_float(rhat_row[key]) for key in CSV_HEADER))
    return out.getvalue()


def main(cmdargs: argparse.Namespace) -> None:
    try:
        points = curve_points(cmdargs.r_min, cmdargs.r_max, cmdargs.step)
    except nqsot.ParameterError as ex:
        logger.critical('ERROR: %s', ex)
        sys.exit(2)
    use_cache = not cmdargs.nocache
    logger.info('Minimizing at %d storage-noise values', len(points))
    rows = curve_rows(points, use_cache=use_cache)
    rhat = r_hat()
    rhat_row = curve_rows([rhat], use_cache=use_cache)[0]
    worst = max(abs(row['t_closed'] - row['t_numeric']) for row in rows)
    logger.info('Threshold r_hat = %s, worst closed/numeric gap %.3g', nqsot.format_float(rhat), worst)

    if cmdargs.format == 'json':
        contents = nqsot.dump_json({'rows': rows, 'r_hat': rhat_row})
    else:
        contents = render_csv(rows, rhat_row)
    nqsot.write_output(contents, cmdargs.outfile)
