#!/usr/bin/env python3
# -*- coding: utf-8 -*-
# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026 by the nqsot authors
#
# Security-parameter calculators for the ideal and the robust protocol,
# the depolarizing-noise trade-off, identification and abort parameters.
#
import argparse
import csv
import io
import math
import sys

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import nqsot
from nqsot.qmath import binary_entropy, binary_entropy_inv, check_unit_interval
from nqsot import uncertainty

logger = nqsot.logger

REGIME_STORE = 'store-limited'
REGIME_MEASURE = 'measure-limited'

# Slack used when rounding interval endpoints that are integers in exact arithmetic
ROUNDING_SLACK = 1e-9

REPORT_KEYS = ('mode', 'n', 'eps', 't', 'p_error', 'p_erase', 'syndrome_overhead', 'min_rounds',
               'delta', 'margin_bits', 'ell_max', 'secure', 'regime')
IDENT_KEYS = ('t', 'd', 'm', 'ell', 'eps_prime', 'exponent', 'secure')


@dataclass(frozen=True)
class OtParams:
    n: int
    eps: float
    t: float
    p_error: float = 0.0
    p_erase: float = 0.0
    ell: Optional[int] = None

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise nqsot.ParameterError('n must be a positive integer, got %s' % self.n)
        if not 0 < self.eps < 1:
            raise nqsot.ParameterError('eps must be in (0, 1), got %s' % self.eps)
        if not 0 <= self.t <= 1:
            raise nqsot.ParameterError('t must be in [0, 1], got %s' % self.t)
        if not 0 <= self.p_error < 0.5:
            raise nqsot.ParameterError('p_error must be in [0, 1/2), got %s' % self.p_error)
        if not 0 <= self.p_erase < 1:
            raise nqsot.ParameterError('p_erase must be in [0, 1), got %s' % self.p_erase)
        if self.ell is not None and self.ell < 0:
            raise nqsot.ParameterError('ell must be non-negative, got %s' % self.ell)


@dataclass
class SecurityReport:
    mode: str
    n: int
    eps: float
    t: float
    delta: float
    margin_bits: float
    ell_max: int
    secure: bool
    p_error: float = 0.0
    p_erase: float = 0.0
    syndrome_overhead: float = 0.0
    min_rounds: int = 0
    regime: Optional[str] = None

    def as_dict(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in REPORT_KEYS}


@dataclass
class IdentReport:
    t: float
    d: int
    m: int
    ell: int
    eps_prime: float
    exponent: float
    secure: bool = field(default=False)

    def as_dict(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in IDENT_KEYS}


def min_rounds(eps: float) -> int:
    """Smallest n admitted by both OT theorems: ceil(8/5 log2(2/eps^4))."""
    if not 0 < eps < 1:
        raise nqsot.ParameterError('eps must be in (0, 1), got %s' % eps)
    return math.ceil(8 / 5 * math.log2(2 / eps ** 4))


def _check_floor(n: int, eps: float) -> int:
    floor = min_rounds(eps)
    if n < floor:
        raise nqsot.PreconditionError('n must be at least %d for eps=%s (got n=%d)' % (floor, eps, n))
    return floor


def delta_ideal(n: int, eps: float) -> float:
    return 8 * math.sqrt(math.log2(2 / eps ** 4) / n)


def delta_robust(n: int, eps: float, p_erase: float) -> float:
    return 8 * math.sqrt(math.log2(2 / eps ** 4) / ((1 - p_erase - eps) * n))


def _ell_bound(n: int, eps: float, t: float, delta: float, leak_rate: float,
               kept_fraction: float, slack: float) -> float:
    """(t - delta - leak_rate) kept_fraction n/4 - slack + 1/2 - log2(1/eps), unrounded."""
    return (t - delta - leak_rate) * kept_fraction * n / 4 - slack + 0.5 - math.log2(1 / eps)


def _finish(margin: float) -> Tuple[int, bool]:
    ell = math.floor(margin)
    if ell < 1:
        return -1, False
    return ell, True


def ell_ideal(n: int, eps: float, t: float) -> SecurityReport:
    params = OtParams(n=n, eps=eps, t=t)
    floor = _check_floor(params.n, params.eps)
    delta = delta_ideal(params.n, params.eps)
    margin = _ell_bound(params.n, params.eps, params.t, delta, 0.0, 1.0, 0.0)
    ell, secure = _finish(margin)
    logger.debug('ell_ideal(n=%d, eps=%s, t=%s): delta=%.9g margin=%.9g', n, eps, t, delta, margin)
    return SecurityReport(mode='ideal', n=params.n, eps=params.eps, t=params.t, delta=delta,
                          margin_bits=margin, ell_max=ell, secure=secure, min_rounds=floor)


def ell_robust(n: int, eps: float, t: float, p_error: float, p_erase: float,
               syndrome_overhead: float = 0.0) -> SecurityReport:
    """Robust protocol bound.

    syndrome_overhead is added to h(p_error) as extra leaked bits per
    reconciled bit; 0 is the asymptotic code family.
    """
    params = OtParams(n=n, eps=eps, t=t, p_error=p_error, p_erase=p_erase)
    if params.p_erase + params.eps >= 1:
        raise nqsot.ParameterError('p_erase + eps must be below 1, got %s' % (params.p_erase + params.eps))
    if syndrome_overhead < 0:
        raise nqsot.ParameterError('syndrome overhead must be non-negative, got %s' % syndrome_overhead)
    floor = _check_floor(params.n, params.eps)
    delta = delta_robust(params.n, params.eps, params.p_erase)
    leak = binary_entropy(params.p_error) + syndrome_overhead
    margin = _ell_bound(params.n, params.eps, params.t, delta, leak, 1 - params.p_erase, params.eps * params.n / 2)
    ell, secure = _finish(margin)
    logger.debug('ell_robust(n=%d, eps=%s, t=%s, p_error=%s, p_erase=%s): delta=%.9g margin=%.9g',
                 n, eps, t, p_error, p_erase, delta, margin)
    return SecurityReport(mode='robust', n=params.n, eps=params.eps, t=params.t, delta=delta,
                          margin_bits=margin, ell_max=ell, secure=secure, p_error=params.p_error,
                          p_erase=params.p_erase, syndrome_overhead=syndrome_overhead, min_rounds=floor)


def regime_for(r: float) -> str:
    if r >= uncertainty.r_hat():
        return REGIME_STORE
    return REGIME_MEASURE


def secure_predicate(r: float, p_error: float) -> Tuple[bool, str]:
    r = check_unit_interval(r, 'r')
    if not 0 <= p_error < 0.5:
        raise nqsot.ParameterError('p_error must be in [0, 1/2), got %s' % p_error)
    return uncertainty.t_closed_form(r) > binary_entropy(p_error), regime_for(r)


def qber_threshold() -> float:
    return binary_entropy_inv(0.5, branch='lower')


def ident_security(t: float, d: int, m: int, ell: int) -> IdentReport:
    """Distance from uniform of the identification hash output."""
    if d < 1:
        raise nqsot.ParameterError('Code distance must be at least 1, got %s' % d)
    if m < 2:
        raise nqsot.ParameterError('Password space must have at least 2 entries, got %s' % m)
    if ell < 0:
        raise nqsot.ParameterError('ell must be non-negative, got %s' % ell)
    eps_prime = 0.5 * 2.0 ** (-0.5 * (t * d / 2 - math.log2(m) - ell))
    exponent = t * d - 2 * math.log2(m) - 2 * ell
    return IdentReport(t=t, d=d, m=m, ell=ell, eps_prime=eps_prime, exponent=exponent, secure=exponent > 0)


def abort_interval(n: int, p_erase: float, eps: float) -> Tuple[int, int]:
    """Accepted range for the per-basis count of unerased rounds."""
    if eps < 0 or not 0 <= p_erase < 1:
        raise nqsot.ParameterError('Need eps >= 0 and p_erase in [0, 1)')
    if p_erase + eps >= 1:
        raise nqsot.ParameterError('p_erase + eps must be below 1, got %s' % (p_erase + eps))
    lo = math.ceil((1 - p_erase - eps) * n / 2 - ROUNDING_SLACK)
    hi = math.floor((1 - p_erase + eps) * n / 2 + ROUNDING_SLACK)
    if lo > hi:
        raise nqsot.ParameterError('Abort interval [%d, %d] is empty for n=%d, p_erase=%s, eps=%s'
                                   % (lo, hi, n, p_erase, eps))
    return lo, hi


def honest_abort_bound(n: int, eps: float) -> float:
    """Two Chernoff applications, one per basis."""
    if n < 1 or eps < 0:
        raise nqsot.ParameterError('Need n >= 1 and eps >= 0')
    return min(1.0, 4 * math.exp(-2 * eps * eps * n))


def _render(report: Dict[str, Any], fmt: str) -> str:
    if fmt == 'csv':
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(list(report.keys()))
        values = list()
        for val in report.values():
            if isinstance(val, float):
                values.append(nqsot.format_float(val))
            elif isinstance(val, bool):
                values.append(str(val).lower())
            elif val is None:
                values.append('')
            else:
                values.append(str(val))
        writer.writerow(values)
        return out.getvalue()
    return nqsot.dump_json(report)


def _warn_unused(cmdargs: argparse.Namespace) -> None:
    """Flags the chosen mode never reads."""
    unused = list()
    if cmdargs.mode == 'ident':
        unused = [flag for flag, val in (('--n', cmdargs.n), ('--eps', cmdargs.eps)) if val is not None]
    if cmdargs.mode != 'robust':
        unused += [flag for flag, val in (('--p-error', cmdargs.p_error), ('--p-erase', cmdargs.p_erase),
                                          ('--syndrome-overhead', cmdargs.syndrome_overhead)) if val]
    for flag in unused:
        logger.warning('Ignoring %s in %s mode', flag, cmdargs.mode)


def main(cmdargs: argparse.Namespace) -> None:
    regime = None
    if cmdargs.t is not None:
        t = cmdargs.t
    elif cmdargs.r is not None:
        try:
            t = uncertainty.t_closed_form(cmdargs.r)
            regime = regime_for(cmdargs.r)
        except nqsot.ParameterError as ex:
            logger.critical('ERROR: %s', ex)
            sys.exit(2)
        logger.info('Uncertainty bound t(%s) = %s (%s)', cmdargs.r, nqsot.format_float(t), regime)
    else:
        logger.critical('ERROR: need either --t or --r')
        sys.exit(2)

    _warn_unused(cmdargs)
    try:
        if cmdargs.mode == 'ident':
            if cmdargs.ident_d is None or cmdargs.ident_m is None or cmdargs.ell is None:
                logger.critical('ERROR: ident mode needs --ident-d, --ident-m and --ell')
                sys.exit(2)
            ident = ident_security(t, cmdargs.ident_d, cmdargs.ident_m, cmdargs.ell)
            nqsot.write_output(_render(ident.as_dict(), cmdargs.format), cmdargs.outfile)
            sys.exit(0 if ident.secure else 3)
        if cmdargs.n is None or cmdargs.eps is None:
            logger.critical('ERROR: %s mode needs --n and --eps', cmdargs.mode)
            sys.exit(2)
        if cmdargs.mode == 'robust':
            report = ell_robust(cmdargs.n, cmdargs.eps, t, cmdargs.p_error, cmdargs.p_erase,
                                syndrome_overhead=cmdargs.syndrome_overhead)
        else:
            report = ell_ideal(cmdargs.n, cmdargs.eps, t)
    except nqsot.PreconditionError as ex:
        logger.critical('ERROR: precondition violated: %s', ex)
        sys.exit(2)
    except nqsot.ParameterError as ex:
        logger.critical('ERROR: %s', ex)
        sys.exit(2)

    report.regime = regime
    nqsot.write_output(_render(report.as_dict(), cmdargs.format), cmdargs.outfile)
    if not report.secure:
        logger.critical('Parameters are infeasible: no positive output length')
        sys.exit(3)
    if cmdargs.ell is not None and cmdargs.ell > report.ell_max:
        logger.warning('Requested ell=%d exceeds the certified maximum %d', cmdargs.ell, report.ell_max)
