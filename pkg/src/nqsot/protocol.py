#!/usr/bin/env python3
# -*- coding: utf-8 -*-
# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026 by the nqsot authors
#
# Executable randomized-OT protocols: the noise-free and the robust flow
# between honest parties, individual-storage attacks by a dishonest Bob,
# seeded Monte Carlo and exact small-n security evaluation.
#
import argparse
import base64
import functools
import itertools
import json
import math
import sys

from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.stats

import nqsot
from nqsot import bounds, uncertainty
from nqsot.coding import CodeSpec, ToeplitzHash, decode
from nqsot.entstat import helstrom_guess_prob, split_index
from nqsot.qmath import (ID2, DensityMatrix, DepolarizingChannel, QubitBasis, bb84_state, check_unit_interval,
                         depolarize_operator, trace_norm)

logger = nqsot.logger

SENDER_ALICE = 'A'
SENDER_BOB = 'B'

SIM_REPORT_KEYS = ('params', 'correctness_rate', 'abort_rate', 'per_bit_guess_analytic',
                   'per_bit_guess_empirical', 'ell_certified')

BREIDBART_ANGLE = math.pi / 8


def pack_bits(bits: Sequence[int]) -> Dict[str, Any]:
    """Bit string as {len, b64}; bits are packed little-endian within each byte."""
    arr = np.asarray(bits, dtype=np.uint8).reshape(-1)
    packed = np.packbits(arr, bitorder='little')
    return {'len': int(len(arr)), 'b64': base64.b64encode(packed.tobytes()).decode()}


def unpack_bits(obj: Dict[str, Any]) -> np.ndarray:
    raw = np.frombuffer(base64.b64decode(obj['b64']), dtype=np.uint8)
    return np.unpackbits(raw, bitorder='little', count=int(obj['len'])).astype(np.uint8)


def pad_bits(bits: np.ndarray, length: int) -> np.ndarray:
    """Right-pad with zeros to the hash input length."""
    out = np.zeros(length, dtype=np.uint8)
    out[:len(bits)] = bits
    return out


@dataclass(frozen=True)
class ProtocolParams:
    n: int
    ell: int
    eps: float
    p_error: float = 0.0
    p_erase: float = 0.0
    r: float = 1.0
    code: CodeSpec = field(default_factory=CodeSpec)
    seed: int = 0
    # Ordering token only: storage noise acts between qubits and reveal
    reveal_delay: str = 'T_rev'
    certified: bool = False

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise nqsot.ParameterError('n must be a positive integer, got %s' % self.n)
        if int(self.ell) != self.ell or self.ell < 0:
            raise nqsot.ParameterError('ell must be a non-negative integer, got %s' % self.ell)
        if not 0 < self.eps < 1:
            raise nqsot.ParameterError('eps must be in (0, 1), got %s' % self.eps)
        if not 0 <= self.p_error < 0.5:
            raise nqsot.ParameterError('p_error must be in [0, 1/2), got %s' % self.p_error)
        if not 0 <= self.p_erase < 1:
            raise nqsot.ParameterError('p_erase must be in [0, 1), got %s' % self.p_erase)
        if self.p_erase + self.eps >= 1:
            raise nqsot.ParameterError('p_erase + eps must be below 1')
        check_unit_interval(self.r, 'r')
        if self.certified:
            report = bounds.ell_robust(self.n, self.eps, uncertainty.t_closed_form(self.r),
                                       self.p_error, self.p_erase)
            if self.ell > report.ell_max:
                raise nqsot.ParameterError('ell=%d exceeds the certified maximum %d' % (self.ell, report.ell_max))

    @property
    def storage(self) -> DepolarizingChannel:
        return DepolarizingChannel(self.r)

    def as_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'ell': self.ell,
            'eps': self.eps,
            'p_error': self.p_error,
            'p_erase': self.p_erase,
            'r': self.r,
            'code_margin': self.code.margin,
            'seed': self.seed,
        }


@dataclass(frozen=True)
class AttackStrategy:
    """A dishonest Bob acting on every qubit separately.

    operators() lists the measurement operators applied as rho -> F rho F^dagger;
    non-destructive strategies keep the post-measurement qubit in storage
    with noise r until the reveal.
    """
    r: float = 1.0
    tag: ClassVar[str] = ''
    destructive: ClassVar[bool] = False

    def __post_init__(self) -> None:
        check_unit_interval(self.r, 'r')

    def operators(self) -> List[np.ndarray]:
        raise NotImplementedError

    def describe(self) -> Dict[str, Any]:
        return {'strategy': self.tag, 'r': self.r}


def _projectors(vec0: np.ndarray) -> List[np.ndarray]:
    vec1 = np.array([-np.conj(vec0[1]), np.conj(vec0[0])])
    return [np.outer(vec0, vec0.conj()), np.outer(vec1, vec1.conj())]


@dataclass(frozen=True)
class StoreAsIs(AttackStrategy):
    tag: ClassVar[str] = 'store'

    def operators(self) -> List[np.ndarray]:
        return [ID2]


@dataclass(frozen=True)
class MeasureComputational(AttackStrategy):
    tag: ClassVar[str] = 'computational'
    destructive: ClassVar[bool] = True

    def operators(self) -> List[np.ndarray]:
        return _projectors(np.array([1.0, 0.0], dtype=complex))


@dataclass(frozen=True)
class MeasureHadamard(AttackStrategy):
    tag: ClassVar[str] = 'hadamard'
    destructive: ClassVar[bool] = True

    def operators(self) -> List[np.ndarray]:
        return _projectors(np.array([1.0, 1.0], dtype=complex) / math.sqrt(2))


@dataclass(frozen=True)
class MeasureBreidbart(AttackStrategy):
    tag: ClassVar[str] = 'breidbart'
    destructive: ClassVar[bool] = True

    def operators(self) -> List[np.ndarray]:
        return _projectors(np.array([math.cos(BREIDBART_ANGLE), math.sin(BREIDBART_ANGLE)], dtype=complex))


@dataclass(frozen=True)
class Partial(AttackStrategy):
    alpha: float = 0.5
    axis_x: float = 0.0
    axis_z: float = 1.0
    tag: ClassVar[str] = 'partial'

    def __post_init__(self) -> None:
        super().__post_init__()
        uncertainty.MeasurementOperator(self.alpha, self.axis_x, self.axis_z)

    def operators(self) -> List[np.ndarray]:
        return list(uncertainty.MeasurementOperator(self.alpha, self.axis_x, self.axis_z).orbit())

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info.update({'alpha': self.alpha, 'axis_x': self.axis_x, 'axis_z': self.axis_z})
        return info


STRATEGIES = {cls.tag: cls for cls in (StoreAsIs, MeasureComputational, MeasureHadamard, MeasureBreidbart, Partial)}


def make_strategy(tag: str, r: float = 1.0, alpha: float = 0.5, axis_x: float = 0.0,
                  axis_z: float = 1.0) -> AttackStrategy:
    if tag not in STRATEGIES:
        raise nqsot.ParameterError('Unknown strategy %r (known: %s)' % (tag, ', '.join(STRATEGIES)))
    if tag == Partial.tag:
        return Partial(r=r, alpha=alpha, axis_x=axis_x, axis_z=axis_z)
    return STRATEGIES[tag](r=r)


class StrategyTable:
    """Everything about a strategy that only depends on (x, theta, k).

    probs[x, theta, k] is P(k | x, theta); guess[theta, k] is the optimal
    probability of guessing x after the reveal, and guess0[x, theta, k]
    is the chance that the Helstrom measurement answers 0 when the bit
    really was x.
    """

    def __init__(self, strategy: AttackStrategy) -> None:
        self.strategy = strategy
        ops = strategy.operators()
        self.outcomes = len(ops)
        self.probs = np.zeros((2, 2, self.outcomes))
        self.stored: Dict[Tuple[int, int, int], Optional[np.ndarray]] = dict()
        for x in (0, 1):
            for theta in QubitBasis:
                rho = bb84_state(x, theta).entries
                for k, op in enumerate(ops):
                    post = op @ rho @ op.conj().T
                    prob = float(np.real(np.trace(post)))
                    if prob < uncertainty.MIN_OUTCOME_PROB:
                        prob = 0.0
                    self.probs[x, theta.index, k] = prob
                    if strategy.destructive or prob == 0.0:
                        self.stored[(x, theta.index, k)] = None
                    else:
                        self.stored[(x, theta.index, k)] = depolarize_operator(post / prob, strategy.r)

        self.guess = np.zeros((2, self.outcomes))
        self.guess0 = np.zeros((2, 2, self.outcomes))
        self.outcome_prob = np.zeros((2, self.outcomes))
        for th in (0, 1):
            for k in range(self.outcomes):
                weights = self.probs[:, th, k] / 2
                total = float(weights.sum())
                self.outcome_prob[th, k] = total
                if total == 0.0:
                    continue
                post0, post1 = weights / total
                if strategy.destructive:
                    self.guess[th, k] = max(post0, post1)
                    answer0 = 1.0 if post0 >= post1 else 0.0
                    self.guess0[:, th, k] = answer0
                    continue
                sig = [self.stored[(x, th, k)] for x in (0, 1)]
                sig = [s if s is not None else ID2 / 2 for s in sig]
                self.guess[th, k] = helstrom_guess_prob(post0, DensityMatrix(sig[0], validate=False),
                                                        post1, DensityMatrix(sig[1], validate=False))
                lam, vecs = np.linalg.eigh(post0 * sig[0] - post1 * sig[1])
                positive = vecs[:, lam > 1e-15]
                proj = positive @ positive.conj().T
                for x in (0, 1):
                    self.guess0[x, th, k] = min(1.0, max(0.0, float(np.real(np.trace(proj @ sig[x])))))
        # Per-basis guessing probability, averaged over outcomes
        self.basis_guess = (self.outcome_prob * self.guess).sum(axis=1)
        self.rate = float(self.basis_guess.mean())

    @property
    def round_dim(self) -> int:
        if self.strategy.destructive:
            return self.outcomes
        return 2 * self.outcomes

    def round_block(self, x: int, theta: int) -> np.ndarray:
        """Adversary's register after one round: block-diagonal over k."""
        if self.strategy.destructive:
            return np.diag(self.probs[x, theta].astype(complex))
        out = np.zeros((self.round_dim, self.round_dim), dtype=complex)
        for k in range(self.outcomes):
            stored = self.stored[(x, theta, k)]
            if stored is None:
                continue
            out[2 * k:2 * k + 2, 2 * k:2 * k + 2] = self.probs[x, theta, k] * stored
        return out


@functools.lru_cache(maxsize=64)
def strategy_table(strategy: AttackStrategy) -> StrategyTable:
    return StrategyTable(strategy)


def analytic_guess_rate(strategy: AttackStrategy, r: Optional[float] = None) -> float:
    """Per-bit guessing probability by exhaustive enumeration of (x, theta, k)."""
    if r is not None and r != strategy.r:
        strategy = _with_noise(strategy, r)
    return strategy_table(strategy).rate


def _with_noise(strategy: AttackStrategy, r: float) -> AttackStrategy:
    if isinstance(strategy, Partial):
        return Partial(r=r, alpha=strategy.alpha, axis_x=strategy.axis_x, axis_z=strategy.axis_z)
    return type(strategy)(r=r)


@dataclass(frozen=True)
class AttackRound:
    k: Optional[int]
    stored: Optional[DensityMatrix]
    x: int
    theta: QubitBasis


def _sample_outcomes(table: StrategyTable, x: np.ndarray, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(table.probs[x, theta], axis=1)
    cum[:, -1] = np.inf
    draws = rng.random(len(x))
    return (draws[:, None] >= cum).sum(axis=1)


def apply_attack(strategy: AttackStrategy, x: int, theta: QubitBasis, rng: np.random.Generator) -> AttackRound:
    """One round of the adversary's map on |x>_theta."""
    if x not in (0, 1):
        raise nqsot.ParameterError('Bit must be 0 or 1, got %r' % (x,))
    x = int(x)
    theta = QubitBasis.parse(theta)
    table = strategy_table(strategy)
    k = int(_sample_outcomes(table, np.array([x]), np.array([theta.index]), rng)[0])
    stored = table.stored[(x, theta.index, k)]
    dm = DensityMatrix(stored) if stored is not None else None
    if isinstance(strategy, StoreAsIs):
        return AttackRound(k=None, stored=dm, x=x, theta=theta)
    return AttackRound(k=k, stored=dm, x=x, theta=theta)


@dataclass
class GuessStats:
    per_round: np.ndarray
    correct: np.ndarray

    @property
    def analytic(self) -> float:
        return float(self.per_round.mean()) if len(self.per_round) else 0.0

    @property
    def empirical(self) -> float:
        return float(self.correct.mean()) if len(self.correct) else 0.0


def _finish_batch(table: StrategyTable, x: np.ndarray, theta: np.ndarray, k: np.ndarray,
                  rng: np.random.Generator) -> GuessStats:
    per_round = table.guess[theta, k]
    answer0 = rng.random(len(x)) < table.guess0[x, theta, k]
    guesses = np.where(answer0, 0, 1)
    return GuessStats(per_round=per_round, correct=guesses == x)


def adversary_finish(strategy: AttackStrategy, rounds: Sequence[AttackRound], reveal: Sequence[QubitBasis],
                     rng: np.random.Generator) -> GuessStats:
    """Per-qubit Helstrom guess of every x once the bases are revealed."""
    if len(rounds) != len(reveal):
        raise nqsot.ParameterError('Reveal has %d bases for %d rounds' % (len(reveal), len(rounds)))
    table = strategy_table(strategy)
    x = np.array([rnd.x for rnd in rounds], dtype=int)
    theta = np.array([QubitBasis.parse(th).index for th in reveal], dtype=int)
    k = np.array([rnd.k if rnd.k is not None else 0 for rnd in rounds], dtype=int)
    return _finish_batch(table, x, theta, k, rng)


@dataclass
class Message:
    seq: int
    sender: str
    kind: str
    payload: Dict[str, Any]

    def to_json(self) -> str:
        return json.dumps({'seq': self.seq, 'sender': self.sender, 'kind': self.kind, 'payload': self.payload},
                          sort_keys=True)


class Transcript:
    """Ordered protocol messages, serialized as JSON lines."""

    def __init__(self, messages: Optional[Sequence[Message]] = None) -> None:
        self.messages: List[Message] = list(messages) if messages else list()

    def add(self, sender: str, kind: str, payload: Dict[str, Any]) -> Message:
        msg = Message(seq=len(self.messages), sender=sender, kind=kind, payload=payload)
        self.messages.append(msg)
        return msg

    def find(self, kind: str, sender: Optional[str] = None) -> Optional[Message]:
        for msg in self.messages:
            if msg.kind == kind and (sender is None or msg.sender == sender):
                return msg
        return None

    @property
    def kinds(self) -> List[str]:
        return [msg.kind for msg in self.messages]

    @property
    def aborted(self) -> bool:
        return self.find('abort') is not None

    def validate(self) -> None:
        kinds = [kind for kind in self.kinds if kind not in ('output', 'otpad')]
        if kinds not in (['qubits', 'report', 'reveal'], ['qubits', 'report', 'abort'], ['qubits', 'reveal']):
            raise nqsot.ValidationError('Unexpected message order: %s' % ', '.join(self.kinds))
        if 'otpad' in self.kinds and self.kinds.index('otpad') < self.kinds.index('reveal'):
            raise nqsot.ValidationError('One-time pad sent before the reveal')

    def dumps(self) -> str:
        return ''.join(msg.to_json() + '\n' for msg in self.messages)

    @classmethod
    def loads(cls, text: str) -> 'Transcript':
        messages = list()
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            messages.append(Message(seq=obj['seq'], sender=obj['sender'], kind=obj['kind'], payload=obj['payload']))
        return cls(messages)

    def save(self, path: str) -> None:
        with open(path, 'w') as fh:
            fh.write(self.dumps())
        logger.info('Wrote transcript to %s', path)

    @classmethod
    def load(cls, path: str) -> 'Transcript':
        with open(path, 'r') as fh:
            return cls.loads(fh.read())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Transcript):
            return NotImplemented
        return self.dumps() == other.dumps()

    def __len__(self) -> int:
        return len(self.messages)


def alice_view(transcript: Transcript) -> Optional[Dict[str, Any]]:
    """What an honest Bob ever tells Alice: the erasure report."""
    msg = transcript.find('report', sender=SENDER_BOB)
    if msg is None:
        return None
    return dict(msg.payload)


def _alice_prepare(params: ProtocolParams, trial: int) -> Tuple[np.ndarray, np.ndarray]:
    alice = nqsot.make_rng(params.seed, trial, nqsot.STREAM_ALICE)
    x = alice.integers(0, 2, size=params.n, dtype=np.uint8)
    theta = alice.integers(0, 2, size=params.n, dtype=np.uint8)
    return x, theta


def _choice_for(params: ProtocolParams, trial: int) -> QubitBasis:
    rng = nqsot.make_rng(params.seed, trial, nqsot.STREAM_CHOICE)
    return QubitBasis.from_index(int(rng.integers(0, 2)))


def _bob_measure(params: ProtocolParams, trial: int, x: np.ndarray, theta: np.ndarray,
                 choice: QubitBasis, p_error: float, p_erase: float) -> Tuple[np.ndarray, np.ndarray]:
    channel = nqsot.make_rng(params.seed, trial, nqsot.STREAM_CHANNEL)
    bob = nqsot.make_rng(params.seed, trial, nqsot.STREAM_BOB)
    received = channel.random(params.n) >= p_erase
    flips = (channel.random(params.n) < p_error).astype(np.uint8)
    guesses = bob.integers(0, 2, size=params.n, dtype=np.uint8)
    same = theta == choice.index
    outcome = np.where(same, x ^ flips, guesses).astype(np.uint8)
    return received, outcome


def run_noiseless(params: ProtocolParams, choice: QubitBasis, trial: int = 0) -> Tuple[Transcript, bool]:
    """Noise-free ROT: qubits, then the basis and hash reveal."""
    choice = QubitBasis.parse(choice)
    x, theta = _alice_prepare(params, trial)
    transcript = Transcript()
    transcript.add(SENDER_ALICE, 'qubits', {'n': params.n})
    _, outcome = _bob_measure(params, trial, x, theta, choice, 0.0, 0.0)

    hashing = nqsot.make_rng(params.seed, trial, nqsot.STREAM_HASHING)
    hashes = [ToeplitzHash.random(params.n, params.ell, hashing) for _ in QubitBasis]
    transcript.add(SENDER_ALICE, 'reveal', {
        'theta': pack_bits(theta),
        'hash_plus': pack_bits(hashes[0].seed),
        'hash_times': pack_bits(hashes[1].seed),
    })
    outputs = [hashes[b](pad_bits(x[theta == b], params.n)) for b in (0, 1)]
    mine = theta == choice.index
    bob_out = hashes[choice.index](pad_bits(outcome[mine], params.n))
    transcript.add(SENDER_ALICE, 'output', {'s_plus': pack_bits(outputs[0]), 's_times': pack_bits(outputs[1])})
    transcript.add(SENDER_BOB, 'output', {'choice': str(choice), 's_choice': pack_bits(bob_out)})
    return transcript, bool(np.array_equal(bob_out, outputs[choice.index]))


def run_honest(params: ProtocolParams, choice: QubitBasis, trial: int = 0) -> Tuple[Transcript, Optional[bool]]:
    """Robust ROT between honest parties; agree is None when Alice aborts."""
    choice = QubitBasis.parse(choice)
    x, theta = _alice_prepare(params, trial)
    transcript = Transcript()
    transcript.add(SENDER_ALICE, 'qubits', {'n': params.n})

    received, outcome = _bob_measure(params, trial, x, theta, choice, params.p_error, params.p_erase)
    transcript.add(SENDER_BOB, 'report', {'received': pack_bits(received)})

    sets = [received & (theta == b) for b in (0, 1)]
    counts = [int(s.sum()) for s in sets]
    lo, hi = bounds.abort_interval(params.n, params.p_erase, params.eps)
    if any(not lo <= cnt <= hi for cnt in counts):
        logger.debug('Trial %d: aborting, basis counts %s outside [%d, %d]', trial, counts, lo, hi)
        transcript.add(SENDER_ALICE, 'abort', {'counts': counts, 'interval': [lo, hi]})
        return transcript, None

    hashing = nqsot.make_rng(params.seed, trial, nqsot.STREAM_HASHING)
    hashes = list()
    syndromes = list()
    code_seeds = list()
    for b in (0, 1):
        hashes.append(ToeplitzHash.random(params.n, params.ell, hashing))
        code_seed = int(hashing.integers(0, 2 ** 63))
        code = params.code.build(counts[b], params.p_error, nqsot.make_rng(code_seed))
        code_seeds.append(code_seed)
        syndromes.append(code.syndrome(x[sets[b]]))
    transcript.add(SENDER_ALICE, 'reveal', {
        'i_plus': pack_bits(sets[0]),
        'i_times': pack_bits(sets[1]),
        'hash_plus': pack_bits(hashes[0].seed),
        'hash_times': pack_bits(hashes[1].seed),
        'syn_plus': pack_bits(syndromes[0]),
        'syn_times': pack_bits(syndromes[1]),
        'code_plus': code_seeds[0],
        'code_times': code_seeds[1],
    })
    outputs = [hashes[b](pad_bits(x[sets[b]], params.n)) for b in (0, 1)]

    # Bob rebuilds the code from the revealed seed
    c = choice.index
    code = params.code.build(counts[c], params.p_error, nqsot.make_rng(code_seeds[c]))
    corrected = decode(code, outcome[sets[c]], syndromes[c], truth=x[sets[c]])
    bob_out = hashes[c](pad_bits(corrected, params.n))

    transcript.add(SENDER_ALICE, 'output', {'s_plus': pack_bits(outputs[0]), 's_times': pack_bits(outputs[1])})
    transcript.add(SENDER_BOB, 'output', {'choice': str(choice), 's_choice': pack_bits(bob_out)})
    return transcript, bool(np.array_equal(bob_out, outputs[c]))


def rot_outputs(transcript: Transcript) -> Tuple[np.ndarray, np.ndarray, np.ndarray, QubitBasis]:
    """(S_plus, S_times, S'_C, C) recorded in a finished transcript."""
    alice = transcript.find('output', sender=SENDER_ALICE)
    bob = transcript.find('output', sender=SENDER_BOB)
    if alice is None or bob is None:
        raise nqsot.ParameterError('Transcript has no outputs (aborted run?)')
    return (unpack_bits(alice.payload['s_plus']), unpack_bits(alice.payload['s_times']),
            unpack_bits(bob.payload['s_choice']), QubitBasis.parse(bob.payload['choice']))


def ot_from_rot(s_plus: np.ndarray, s_times: np.ndarray, m0: Sequence[int], m1: Sequence[int]
                ) -> Tuple[np.ndarray, np.ndarray]:
    """Alice masks her two inputs with the randomized-OT strings."""
    m0 = np.asarray(m0, dtype=np.uint8)
    m1 = np.asarray(m1, dtype=np.uint8)
    if len(m0) != len(s_plus) or len(m1) != len(s_times):
        raise nqsot.ParameterError('Inputs must have %d bits' % len(s_plus))
    return m0 ^ s_plus, m1 ^ s_times


def ot_receive(masked: Tuple[np.ndarray, np.ndarray], s_choice: np.ndarray, choice: QubitBasis) -> np.ndarray:
    return masked[QubitBasis.parse(choice).index] ^ s_choice


def run_ot(params: ProtocolParams, choice: QubitBasis, m0: Sequence[int], m1: Sequence[int],
           trial: int = 0) -> Tuple[Transcript, Optional[np.ndarray]]:
    """Chosen-input OT: robust ROT followed by a one-time pad."""
    transcript, agree = run_honest(params, choice, trial=trial)
    if agree is None:
        return transcript, None
    s_plus, s_times, s_choice, chosen = rot_outputs(transcript)
    masked = ot_from_rot(s_plus, s_times, m0, m1)
    # The pad goes right after the reveal, ahead of the local outputs
    pad = Message(seq=0, sender=SENDER_ALICE, kind='otpad',
                  payload={'e0': pack_bits(masked[0]), 'e1': pack_bits(masked[1])})
    at = transcript.kinds.index('reveal') + 1
    transcript.messages.insert(at, pad)
    for seq, msg in enumerate(transcript.messages):
        msg.seq = seq
    return transcript, ot_receive(masked, s_choice, chosen)


@dataclass
class ExactEstimate:
    mean: float
    ci_low: float
    ci_high: float
    values: List[float]

    def as_dict(self) -> Dict[str, Any]:
        return {'mean': self.mean, 'ci_low': self.ci_low, 'ci_high': self.ci_high, 'samples': len(self.values)}


def _confidence(values: Sequence[float]) -> Tuple[float, float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if len(arr) < 2:
        return mean, mean, mean
    sem = float(scipy.stats.sem(arr))
    if sem == 0.0:
        return mean, mean, mean
    low, high = scipy.stats.t.interval(0.95, len(arr) - 1, loc=mean, scale=sem)
    return mean, float(low), float(high)


def exact_advantage_small_n(params: ProtocolParams, strategy: AttackStrategy, samples: int) -> ExactEstimate:
    """Exact d(S_Dbar | S_D, D, E) averaged over sampled bases and hash seeds.

    All 2^n strings X are summed exactly; the adversary's register is the
    tensor product of the per-round block-diagonal states. D is the
    basis whose rounds leave the least min-entropy.
    """
    max_n = nqsot.get_config_int('exact-max-n')
    max_ell = nqsot.get_config_int('exact-max-ell')
    max_dim = nqsot.get_config_int('exact-max-joint-dim')
    if params.n > max_n:
        raise nqsot.UnsupportedInstance('Exact mode supports n <= %d, got %d' % (max_n, params.n))
    if params.ell > max_ell:
        raise nqsot.UnsupportedInstance('Exact mode supports ell <= %d, got %d' % (max_ell, params.ell))
    if samples < 1:
        raise nqsot.ParameterError('Need at least one classical sample, got %s' % samples)
    table = strategy_table(strategy)
    joint_dim = table.round_dim ** params.n
    if joint_dim > max_dim:
        raise nqsot.UnsupportedInstance('Adversary register of dimension %d exceeds %d' % (joint_dim, max_dim))
    if joint_dim * 2 > max_dim:
        logger.debug('Exact mode near its ceiling: joint dimension %d', joint_dim)

    n = params.n
    nout = 2 ** params.ell
    strings = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)
    blocks = {(x, th): table.round_block(x, th) for x in (0, 1) for th in (0, 1)}
    round_entropy = [max(0.0, -math.log2(max(g, 1e-300))) for g in table.basis_guess]
    values = list()
    for sample in range(samples):
        rng = nqsot.make_rng(params.seed, sample, nqsot.STREAM_EXACT)
        theta = rng.integers(0, 2, size=n, dtype=np.uint8)
        hashes = [ToeplitzHash.random(n, params.ell, rng) for _ in (0, 1)]
        # Rounded so that equal round counts give an exact tie, which goes to basis 0
        entropies = [round(round_entropy[b] * int((theta == b).sum()), 9) for b in (0, 1)]
        known = split_index(entropies).index
        other = 1 - known

        buckets: Dict[Tuple[int, int], np.ndarray] = dict()
        for xs in strings:
            outs = [_as_int(hashes[b](pad_bits(xs[theta == b], n))) for b in (0, 1)]
            key = (outs[other], outs[known])
            rho = functools.reduce(np.kron, [blocks[(int(xs[i]), int(theta[i]))] for i in range(n)])
            if key in buckets:
                buckets[key] += rho
            else:
                buckets[key] = rho.copy()
        scale = 2.0 ** -n
        dist = 0.0
        for s_known in range(nout):
            blocks_here = [buckets.get((s, s_known)) for s in range(nout)]
            present = [blk for blk in blocks_here if blk is not None]
            if not present:
                continue
            marginal = sum(present) * scale
            for blk in blocks_here:
                part = blk * scale if blk is not None else np.zeros_like(marginal)
                dist += trace_norm(part - marginal / nout)
        values.append(0.5 * dist)
        logger.debug('Exact sample %d: D=%d entropies=%s d=%.9g', sample, known, entropies, values[-1])
    mean, low, high = _confidence(values)
    return ExactEstimate(mean=mean, ci_low=low, ci_high=high, values=values)


def _as_int(bits: np.ndarray) -> int:
    return int(sum(int(bit) << idx for idx, bit in enumerate(bits)))


@dataclass
class SimReport:
    params: Dict[str, Any]
    correctness_rate: Optional[float]
    abort_rate: float
    per_bit_guess_analytic: float
    per_bit_guess_empirical: float
    ell_certified: Dict[str, Any]
    d_estimate: Optional[Dict[str, Any]] = None

    def as_dict(self) -> Dict[str, Any]:
        out = {key: getattr(self, key) for key in SIM_REPORT_KEYS}
        if self.d_estimate is not None:
            out['d_estimate'] = self.d_estimate
        return out


def certify(params: ProtocolParams) -> Dict[str, Any]:
    """Certified output length at these parameters plus the asymptotic verdict."""
    t = uncertainty.t_closed_form(params.r)
    secure, regime = bounds.secure_predicate(params.r, params.p_error)
    try:
        ell_max: Optional[int] = bounds.ell_robust(params.n, params.eps, t, params.p_error, params.p_erase).ell_max
    except nqsot.PreconditionError as ex:
        logger.debug('No certified length: %s', ex)
        ell_max = None
    return {'t': t, 'ell_max': ell_max, 'secure': secure, 'regime': regime}


def simulate(params: ProtocolParams, strategy: AttackStrategy, trials: int, exact_samples: int = 0) -> SimReport:
    if trials < 1:
        raise nqsot.ParameterError('Need at least one trial, got %s' % trials)
    table = strategy_table(strategy)
    agreed = 0
    aborted = 0
    correct = 0
    rounds = 0
    for trial in range(trials):
        choice = _choice_for(params, trial)
        _, agree = run_honest(params, choice, trial=trial)
        if agree is None:
            aborted += 1
        elif agree:
            agreed += 1

        x, theta = _alice_prepare(params, trial)
        adversary = nqsot.make_rng(params.seed, trial, nqsot.STREAM_ADVERSARY)
        xi = x.astype(int)
        ti = theta.astype(int)
        k = _sample_outcomes(table, xi, ti, adversary)
        stats = _finish_batch(table, xi, ti, k, adversary)
        correct += int(stats.correct.sum())
        rounds += len(xi)
        logger.debug('Trial %d: choice=%s agree=%s guessed %d/%d', trial, choice, agree,
                     int(stats.correct.sum()), len(xi))

    completed = trials - aborted
    report = SimReport(
        params=dict(params.as_dict(), trials=trials, **strategy.describe()),
        correctness_rate=agreed / completed if completed else None,
        abort_rate=aborted / trials,
        per_bit_guess_analytic=table.rate,
        per_bit_guess_empirical=correct / rounds,
        ell_certified=certify(params),
    )
    if exact_samples:
        report.d_estimate = exact_advantage_small_n(params, strategy, exact_samples).as_dict()
    return report


def _warn_unused(cmdargs: argparse.Namespace) -> None:
    if cmdargs.strategy == 'partial':
        return
    for flag, val, default in (('--alpha', cmdargs.alpha, 0.5), ('--axis-x', cmdargs.axis_x, 0.0),
                               ('--axis-z', cmdargs.axis_z, 1.0)):
        if val != default:
            logger.warning('Ignoring %s for the %s strategy', flag, cmdargs.strategy)


def main(cmdargs: argparse.Namespace) -> None:
    _warn_unused(cmdargs)
    try:
        code = CodeSpec.from_config(cmdargs.code_margin)
        params = ProtocolParams(n=cmdargs.n, ell=cmdargs.ell, eps=cmdargs.eps, p_error=cmdargs.p_error,
                                p_erase=cmdargs.p_erase, r=cmdargs.r, code=code, seed=cmdargs.seed)
        strategy = make_strategy(cmdargs.strategy, r=cmdargs.r, alpha=cmdargs.alpha,
                                 axis_x=cmdargs.axis_x, axis_z=cmdargs.axis_z)
        if cmdargs.exact:
            # Fail on the exact-mode ceilings before spending time on trials
            if params.n > nqsot.get_config_int('exact-max-n') or params.ell > nqsot.get_config_int('exact-max-ell'):
                raise nqsot.UnsupportedInstance('Exact mode supports n <= %s and ell <= %s'
                                                % (nqsot.get_config_int('exact-max-n'),
                                                   nqsot.get_config_int('exact-max-ell')))
        report = simulate(params, strategy, cmdargs.trials, exact_samples=cmdargs.samples if cmdargs.exact else 0)
        if cmdargs.transcript:
            transcript, _ = run_honest(params, _choice_for(params, 0), trial=0)
            transcript.save(cmdargs.transcript)
    except (nqsot.ParameterError, nqsot.ValidationError, nqsot.UnsupportedInstance) as ex:
        logger.critical('ERROR: %s', ex)
        sys.exit(2)

    if cmdargs.format == 'csv':
        logger.warning('Simulation reports are structured, writing JSON')
    nqsot.write_output(nqsot.dump_json(report.as_dict()), cmdargs.outfile)
