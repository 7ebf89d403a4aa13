#!/usr/bin/env python3
# -*- coding: utf-8 -*-
# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026 by the nqsot authors
#
# Seeded property suites. `nqsot verify` runs them from the command line
# and the test-suite calls the same functions with smaller counts.
#
import argparse
import math
import sys

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

import nqsot
from nqsot import entstat, protocol, uncertainty
from nqsot.coding import ToeplitzHash
from nqsot.qmath import ID2, PAULI_X, PAULI_Z, QubitBasis, binary_entropy, random_density_matrix

logger = nqsot.logger

SUITES = ('entropy', 'appendixB', 'pa', 'protocol')

EXACT_TOL = 1e-9
SDP_TOL = 1e-6
ORBIT_TOL = 1e-10
AGREEMENT_TOL = 1e-4


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: int = 0
    counterexample: Optional[str] = None

    def check(self, ok: bool, describe: Callable[[], str]) -> bool:
        self.checks += 1
        if not ok:
            self.failures += 1
            if self.counterexample is None:
                self.counterexample = describe()
                logger.debug('%s: first counterexample: %s', self.name, self.counterexample)
        return ok

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def as_dict(self) -> Dict[str, object]:
        return {'suite': self.name, 'passed': self.passed, 'checks': self.checks,
                'failures': self.failures, 'counterexample': self.counterexample}


def _random_joint(rng: np.random.Generator, shape) -> np.ndarray:
    # Small Dirichlet concentration gives lopsided tables with many near-zero cells
    flat = rng.dirichlet(np.full(int(np.prod(shape)), rng.choice([0.2, 1.0, 5.0])))
    return flat.reshape(shape)


def check_entropy(seed: int = 0, duality: int = 200, classical: int = 1000, products: int = 50) -> SuiteResult:
    """Duality, chain rule, monotonicity and multiplicativity of guessing probabilities."""
    res = SuiteResult('entropy')
    rng = nqsot.make_rng(seed, 0)

    for idx in range(duality):
        p0 = float(rng.uniform(0.05, 0.95))
        rhos = [random_density_matrix(2, rng) for _ in range(2)]
        state = entstat.CqState([0, 1], [p0, 1 - p0], rhos)
        helstrom = -math.log2(entstat.helstrom_guess_prob(p0, rhos[0], 1 - p0, rhos[1]))
        dual = entstat.min_entropy_dual(state)
        res.check(abs(dual - helstrom) <= SDP_TOL,
                  lambda: 'duality #%d: dual %.12g vs Helstrom %.12g' % (idx, dual, helstrom))

    for idx in range(classical):
        shape = tuple(int(v) for v in rng.integers(2, 4, size=3))
        joint = _random_joint(rng, shape)
        p_xy = entstat.classical_guess(joint, (0, 1))
        p_x_given_y = entstat.classical_guess(joint, (0,))
        p_y = entstat.classical_guess(joint.sum(axis=0), (0,))
        res.check(p_xy >= p_x_given_y / shape[1] - EXACT_TOL,
                  lambda: 'chain rule #%d: P(XY|E)=%.12g < P(X|YE)/|Y|=%.12g' % (idx, p_xy, p_x_given_y / shape[1]))
        res.check(p_xy <= p_y + EXACT_TOL,
                  lambda: 'monotonicity #%d: P(XY|E)=%.12g > P(Y|E)=%.12g' % (idx, p_xy, p_y))

        pxe = joint.sum(axis=1)
        state = entstat.CqState.from_joint_distribution(pxe)
        dist = entstat.non_uniformity(state)
        res.check(dist <= 1 - 1 / state.size + EXACT_TOL,
                  lambda: 'non-uniformity #%d: %.12g above 1 - 1/|X|' % (idx, dist))
        px = pxe.sum(axis=1)
        trivial = entstat.CqState.from_joint_distribution(px[:, None])
        stat = 0.5 * float(np.abs(px - 1 / len(px)).sum())
        res.check(abs(entstat.non_uniformity(trivial) - stat) <= EXACT_TOL,
                  lambda: 'trivial E #%d: non-uniformity differs from statistical distance %.12g' % (idx, stat))

    for idx in range(products):
        left = entstat.CqState.from_joint_distribution(_random_joint(rng, (2, 2)))
        right = entstat.CqState.from_joint_distribution(_random_joint(rng, (3, 2)))
        joint_guess = entstat.classical_guess_prob(left.tensor(right))
        expected = entstat.classical_guess_prob(left) * entstat.classical_guess_prob(right)
        res.check(abs(joint_guess - expected) <= EXACT_TOL,
                  lambda: 'classical product #%d: %.12g vs %.12g' % (idx, joint_guess, expected))

        qleft = entstat.CqState([0, 1], [0.5, 0.5], [random_density_matrix(2, rng) for _ in range(2)])
        qright = entstat.CqState([0, 1], [0.5, 0.5], [random_density_matrix(2, rng) for _ in range(2)])
        qjoint = entstat.guess_prob_dual(qleft.tensor(qright))
        qexpected = entstat.guess_prob(qleft) * entstat.guess_prob(qright)
        res.check(abs(qjoint - qexpected) <= SDP_TOL,
                  lambda: 'quantum product #%d: %.12g vs %.12g' % (idx, qjoint, qexpected))
    return res


def _random_operator(rng: np.random.Generator) -> uncertainty.MeasurementOperator:
    alpha = float(rng.uniform(0, uncertainty.ALPHA_MAX))
    angle = float(rng.uniform(0, 2 * math.pi))
    radius = math.sqrt(float(rng.uniform(0, 1)))
    return uncertainty.MeasurementOperator(alpha, radius * math.cos(angle), radius * math.sin(angle))


def check_appendix_b(seed: int = 0, instances: int = 100, grid: Tuple[int, int, int] = (20, 20, 10),
                     r_step: float = 0.05) -> SuiteResult:
    res = SuiteResult('appendixB')
    rng = nqsot.make_rng(seed, 1)

    for idx in range(instances):
        op = _random_operator(rng)
        r = float(rng.uniform(0, 1))
        lhs = uncertainty.cost_B(op.orbit(), r)
        rhs = uncertainty.cost_C(op, r)
        res.check(abs(lhs - rhs) <= ORBIT_TOL,
                  lambda: 'orbit %r at r=%.6g: B=%.15g C=%.15g' % (op, r, lhs, rhs))

        other = _random_operator(rng)
        weight = float(rng.uniform(0, 1))
        mixed = ([math.sqrt(weight) * f for f in op.orbit()]
                 + [math.sqrt(1 - weight) * g for g in other.orbit()])
        combined = uncertainty.cost_B(mixed, r)
        split = weight * lhs + (1 - weight) * uncertainty.cost_B(other.orbit(), r)
        res.check(abs(combined - split) <= ORBIT_TOL,
                  lambda: 'convexity %r/%r w=%.6g r=%.6g: %.15g vs %.15g' % (op, other, weight, r, combined, split))

        for g in (ID2, PAULI_X, PAULI_Z, PAULI_X @ PAULI_Z):
            turned = uncertainty.cost_B([g @ f @ g.conj().T for f in op.orbit()], r)
            res.check(abs(turned - lhs) <= ORBIT_TOL,
                      lambda: 'Pauli invariance %r r=%.6g: %.15g vs %.15g' % (op, r, turned, lhs))

    nalpha, nangle, ny = grid
    for r in uncertainty.curve_points(0.0, 1.0, r_step):
        for alpha in np.linspace(0, uncertainty.ALPHA_MAX, nalpha):
            for angle in np.linspace(0, math.pi / 2, nangle):
                flat = uncertainty.cost_c_grid(alpha, math.cos(angle), math.sin(angle), r)
                for y in np.linspace(0.05, 0.95, ny):
                    shrink = math.sqrt(1 - y * y)
                    tilted = uncertainty.cost_C(
                        uncertainty.MeasurementOperator(alpha, shrink * math.cos(angle), shrink * math.sin(angle)), r)
                    res.check(tilted >= flat - EXACT_TOL,
                              lambda: 'XZ dominance r=%.6g alpha=%.6g angle=%.6g y=%.3g: %.12g < %.12g'
                                      % (r, alpha, angle, y, tilted, flat))

    for r in uncertainty.curve_points(0.0, 1.0, r_step):
        found = uncertainty.t_numeric(r)
        closed = uncertainty.t_closed_form(r)
        res.check(abs(found.min_bits - closed) <= AGREEMENT_TOL,
                  lambda: 'global agreement r=%.6g: numeric %.9g closed %.9g' % (r, found.min_bits, closed))

    rhat = uncertainty.r_hat()
    below = uncertainty.t_numeric(rhat - 0.002).argmin_alpha
    above = uncertainty.t_numeric(rhat + 0.002).argmin_alpha
    res.check(abs(below - 0.5) > 0.1 and abs(above - 0.5) <= 0.01,
              lambda: 'threshold transition: argmin alpha %.6g below, %.6g above r_hat' % (below, above))
    return res


def gf2_matvec_rows(matrix: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Apply a GF(2) matrix to every row of `rows`."""
    return (rows.astype(np.int64) @ matrix.T.astype(np.int64)) % 2


def _pa_distance(joint: np.ndarray, h: ToeplitzHash, inputs: np.ndarray) -> float:
    """d(F(X)|E) for one hash and a classical P(x, e) table."""
    outs = gf2_matvec_rows(h.matrix, inputs) @ (1 << np.arange(h.n_out))
    nout = 2 ** h.n_out
    hashed = np.zeros((nout, joint.shape[1]))
    np.add.at(hashed, outs, joint)
    pe = joint.sum(axis=0)
    return 0.5 * float(np.abs(hashed - pe / nout).sum())


def check_pa(seed: int = 0, max_n: int = 6, instances: int = 3) -> SuiteResult:
    """Exhaustive privacy-amplification check over the whole Toeplitz family."""
    res = SuiteResult('pa')
    rng = nqsot.make_rng(seed, 2)
    for n in range(1, max_n + 1):
        inputs = np.array([[(value >> bit) & 1 for bit in range(n)] for value in range(2 ** n)], dtype=np.uint8)
        for ell in (1, 2):
            if ell > n:
                continue
            family = list(ToeplitzHash.family(n, ell))
            for idx in range(instances):
                joint = _random_joint(rng, (2 ** n, 2))
                hmin = -math.log2(entstat.classical_guess(joint, (0,)))
                distance = float(np.mean([_pa_distance(joint, h, inputs) for h in family]))
                bound = entstat.pa_bound(hmin, ell, 0.0)
                res.check(distance <= bound + EXACT_TOL,
                          lambda: 'n=%d ell=%d #%d: d=%.12g exceeds bound %.12g (H_min %.6g)'
                                  % (n, ell, idx, distance, bound, hmin))
    return res


def _within_sigma(observed: float, expected: float, count: int, sigmas: float = 3.0) -> bool:
    sigma = math.sqrt(max(expected * (1 - expected), 1e-12) / count)
    return abs(observed - expected) <= sigmas * sigma


def check_protocol(seed: int = 0, trials: int = 200, noiseless_trials: int = 1000, rounds: int = 10000,
                   exact_samples: int = 2) -> SuiteResult:
    res = SuiteResult('protocol')

    params = protocol.ProtocolParams(n=1024, ell=16, eps=0.15, p_error=0.05, p_erase=0.3, r=0.5, seed=seed)
    agreed = aborted = 0
    for trial in range(trials):
        choice = QubitBasis.from_index(trial % 2)
        _, agree = protocol.run_honest(params, choice, trial=trial)
        if agree is None:
            aborted += 1
        elif agree:
            agreed += 1
    completed = trials - aborted
    rate = agreed / completed if completed else 0.0
    res.check(rate >= 0.99, lambda: 'robust agreement %.4g over %d trials' % (rate, completed))
    res.check(aborted / trials <= 0.01, lambda: 'abort rate %.4g over %d trials' % (aborted / trials, trials))

    quiet = protocol.ProtocolParams(n=64, ell=8, eps=0.1, seed=seed)
    bad = [trial for trial in range(noiseless_trials)
           if not protocol.run_noiseless(quiet, QubitBasis.from_index(trial % 2), trial=trial)[1]]
    res.check(not bad, lambda: 'noise-free run disagrees at trial %d' % bad[0])

    for trial in range(3):
        views = [protocol.alice_view(protocol.run_honest(params, basis, trial=trial)[0]) for basis in QubitBasis]
        res.check(views[0] == views[1], lambda: 'Alice view depends on the choice bit at trial %d' % trial)

    expected_rates = (
        (protocol.StoreAsIs(r=0.9), 0.95),
        (protocol.StoreAsIs(r=0.3), 0.65),
        (protocol.MeasureComputational(), 0.75),
        (protocol.MeasureHadamard(), 0.75),
        (protocol.MeasureBreidbart(), math.cos(math.pi / 8) ** 2),
    )
    for idx, (strategy, expected) in enumerate(expected_rates):
        analytic = protocol.analytic_guess_rate(strategy)
        res.check(abs(analytic - expected) <= 1e-12,
                  lambda: '%s analytic rate %.15g, expected %.15g' % (strategy.tag, analytic, expected))
        rng = nqsot.make_rng(seed, 3, idx)
        x = rng.integers(0, 2, size=rounds)
        theta = rng.integers(0, 2, size=rounds)
        table = protocol.strategy_table(strategy)
        k = protocol._sample_outcomes(table, x, theta, rng)
        empirical = protocol._finish_batch(table, x, theta, k, rng).empirical
        res.check(_within_sigma(empirical, expected, rounds),
                  lambda: '%s empirical rate %.6g vs %.6g' % (strategy.tag, empirical, expected))

    for r in (0.0, 0.4, 0.9):
        halves = protocol.analytic_guess_rate(protocol.Partial(r=r, alpha=0.5))
        store = protocol.analytic_guess_rate(protocol.StoreAsIs(r=r))
        res.check(abs(halves - store) <= EXACT_TOL,
                  lambda: 'partial alpha=1/2 at r=%s: %.12g vs store %.12g' % (r, halves, store))

    small = protocol.ProtocolParams(n=8, ell=1, eps=0.1, r=1.0, seed=seed)
    full = protocol.exact_advantage_small_n(small, protocol.StoreAsIs(r=1.0), exact_samples)
    res.check(all(abs(val - 0.5) <= EXACT_TOL for val in full.values),
              lambda: 'noiseless storage: d=%s, expected 0.5' % full.values)

    previous: Optional[List[float]] = None
    for r in (1.0, 0.8, 0.5, 0.2, 0.0):
        shallow = protocol.ProtocolParams(n=8, ell=1, eps=0.1, r=r, seed=seed)
        values = protocol.exact_advantage_small_n(shallow, protocol.StoreAsIs(r=r), exact_samples).values
        if previous is not None:
            prev = previous
            res.check(all(cur <= old + EXACT_TOL for cur, old in zip(values, prev)),
                      lambda: 'd grew when r dropped to %s: %s after %s' % (r, values, prev))
        previous = values
    return res


def check_anchors() -> SuiteResult:
    """Closed-form anchors every other suite leans on."""
    res = SuiteResult('anchors')
    rhat = uncertainty.r_hat()
    res.check(abs(rhat - 0.77994) <= 5e-4, lambda: 'r_hat = %.9g' % rhat)
    res.check(abs(binary_entropy((1 + rhat) / 2) - 0.5) <= EXACT_TOL, lambda: 'h((1 + r_hat)/2) != 1/2')
    return res


RUNNERS: Dict[str, Callable[..., SuiteResult]] = {
    'entropy': check_entropy,
    'appendixB': check_appendix_b,
    'pa': check_pa,
    'protocol': check_protocol,
}


def run_suites(names: List[str], seed: int = 0) -> List[SuiteResult]:
    results = [check_anchors()]
    for name in names:
        logger.info('Running suite: %s', name)
        result = RUNNERS[name](seed=seed)
        logger.info('  %s: %d checks, %d failures', name, result.checks, result.failures)
        results.append(result)
    return results


def render(results: List[SuiteResult], fmt: str) -> str:
    if fmt == 'json':
        return nqsot.dump_json([result.as_dict() for result in results])
    lines = list()
    for result in results:
        status = 'PASS' if result.passed else 'FAIL'
        lines.append('%s: %s (%d checks, %d failures)' % (result.name, status, result.checks, result.failures))
        if result.counterexample:
            lines.append('  first counterexample: %s' % result.counterexample)
    return '\n'.join(lines) + '\n'


def main(cmdargs: argparse.Namespace) -> None:
    if cmdargs.suite == 'all':
        names = list(SUITES)
    elif cmdargs.suite in SUITES:
        names = [cmdargs.suite]
    else:
        logger.critical('ERROR: unknown suite %s', cmdargs.suite)
        sys.exit(2)
    results = run_suites(names, seed=cmdargs.seed)
    nqsot.write_output(render(results, cmdargs.format), cmdargs.outfile)
    failed = [result for result in results if not result.passed]
    if failed:
        for result in failed:
            logger.critical('%s failed: %s', result.name, result.counterexample)
        sys.exit(1)
