import argparse
import json
import logging
import math
import os

import numpy as np
import pytest

import nqsot
from nqsot import bounds, protocol
from nqsot.qmath import QubitBasis, binary_entropy

ROBUST = dict(n=256, ell=4, eps=0.3, p_error=0.02, p_erase=0.1, r=0.9, seed=5)


def _sim_args(**kwargs) -> argparse.Namespace:
    args = dict(n=256, ell=4, eps=0.3, p_error=0.02, p_erase=0.1, r=0.9, strategy='store', alpha=0.5,
                axis_x=0.0, axis_z=1.0, trials=2, exact=False, samples=2, transcript=None, code_margin=None,
                seed=0, format='json', outfile=None)
    args.update(kwargs)
    return argparse.Namespace(**args)


def test_pack_bits() -> None:
    packed = protocol.pack_bits([1, 0, 1, 1, 0, 0, 0, 0, 1])
    assert packed == {'len': 9, 'b64': 'DQE='}
    assert list(protocol.unpack_bits(packed)) == [1, 0, 1, 1, 0, 0, 0, 0, 1]
    assert list(protocol.unpack_bits(protocol.pack_bits([]))) == []
    assert list(protocol.pad_bits(np.array([1, 1], dtype=np.uint8), 4)) == [1, 1, 0, 0]


@pytest.mark.parametrize('kwargs', [
    dict(n=0, ell=1, eps=0.1),
    dict(n=10, ell=-1, eps=0.1),
    dict(n=10, ell=1, eps=0.0),
    dict(n=10, ell=1, eps=0.1, p_error=0.5),
    dict(n=10, ell=1, eps=0.5, p_erase=0.6),
    dict(n=10, ell=1, eps=0.1, r=1.2),
    dict(n=1000, ell=500, eps=0.1, r=0.5, certified=True),
])
def test_params_rejected(kwargs: dict) -> None:
    with pytest.raises(nqsot.ParameterError):
        protocol.ProtocolParams(**kwargs)


def test_params_storage() -> None:
    params = protocol.ProtocolParams(n=16, ell=2, eps=0.1, r=0.25)
    assert params.storage.r == 0.25
    assert params.as_dict()['code_margin'] == pytest.approx(0.1)


def test_run_honest_agrees() -> None:
    params = protocol.ProtocolParams(**ROBUST)
    for trial in range(4):
        transcript, agree = protocol.run_honest(params, QubitBasis.from_index(trial % 2), trial=trial)
        assert agree is True
        transcript.validate()
        assert transcript.kinds == ['qubits', 'report', 'reveal', 'output', 'output']
        s_plus, s_times, s_choice, choice = protocol.rot_outputs(transcript)
        assert len(s_plus) == len(s_times) == len(s_choice) == params.ell
        assert np.array_equal(s_choice, (s_plus, s_times)[choice.index])


def test_run_honest_is_deterministic() -> None:
    params = protocol.ProtocolParams(**ROBUST)
    first, _ = protocol.run_honest(params, '+', trial=2)
    again, _ = protocol.run_honest(params, '+', trial=2)
    other, _ = protocol.run_honest(params, '+', trial=3)
    assert first == again
    assert first != other


def test_run_honest_abort(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(bounds, 'abort_interval', lambda n, p_erase, eps: (0, 0))
    params = protocol.ProtocolParams(**ROBUST)
    transcript, agree = protocol.run_honest(params, 'x')
    assert agree is None
    assert transcript.aborted
    assert transcript.kinds == ['qubits', 'report', 'abort']
    transcript.validate()
    with pytest.raises(nqsot.ParameterError):
        protocol.rot_outputs(transcript)
    assert protocol.run_ot(params, 'x', [0] * 4, [1] * 4) == (transcript, None)


def test_channel_statistics() -> None:
    params = protocol.ProtocolParams(n=100000, ell=1, eps=0.1, p_error=0.05, p_erase=0.3, seed=11)
    x, theta = protocol._alice_prepare(params, 0)
    received, outcome = protocol._bob_measure(params, 0, x, theta, QubitBasis.COMPUTATIONAL, 0.05, 0.3)
    for basis in (0, 1):
        rows = theta == basis
        rate = 1.0 - received[rows].mean()
        assert abs(rate - 0.3) < 4 * math.sqrt(0.3 * 0.7 / rows.sum())
    same = theta == QubitBasis.COMPUTATIONAL.index
    flips = (outcome[same] != x[same]).mean()
    assert abs(flips - 0.05) < 4 * math.sqrt(0.05 * 0.95 / same.sum())


def test_run_noiseless() -> None:
    params = protocol.ProtocolParams(n=64, ell=8, eps=0.1, seed=1)
    for trial in range(10):
        transcript, agree = protocol.run_noiseless(params, QubitBasis.from_index(trial % 2), trial=trial)
        assert agree
        assert transcript.kinds == ['qubits', 'reveal', 'output', 'output']
        transcript.validate()


def test_alice_view_ignores_choice() -> None:
    params = protocol.ProtocolParams(**ROBUST)
    for trial in range(3):
        views = [protocol.alice_view(protocol.run_honest(params, basis, trial=trial)[0]) for basis in QubitBasis]
        assert views[0] is not None
        assert views[0] == views[1]
    assert protocol.alice_view(protocol.Transcript()) is None


def test_run_ot() -> None:
    params = protocol.ProtocolParams(**ROBUST)
    m0 = [1, 0, 0, 1]
    m1 = [0, 1, 1, 1]
    for choice, wanted in (('+', m0), ('x', m1)):
        transcript, received = protocol.run_ot(params, choice, m0, m1)
        assert received is not None
        assert list(received) == wanted
        assert transcript.kinds == ['qubits', 'report', 'reveal', 'otpad', 'output', 'output']
        assert [msg.seq for msg in transcript.messages] == list(range(6))
        transcript.validate()


def test_ot_from_rot_length_check() -> None:
    with pytest.raises(nqsot.ParameterError):
        protocol.ot_from_rot(np.zeros(4, dtype=np.uint8), np.zeros(4, dtype=np.uint8), [1, 0], [1, 0, 1, 1])


def test_transcript_files(tmp_path) -> None:
    params = protocol.ProtocolParams(**ROBUST)
    transcript, _ = protocol.run_honest(params, '+')
    path = os.path.join(tmp_path, 'transcript.jsonl')
    transcript.save(path)
    loaded = protocol.Transcript.load(path)
    assert loaded == transcript
    assert len(loaded) == 5
    assert protocol.Transcript.loads(transcript.dumps() + '\n\n') == transcript
    with open(path) as fh:
        first = json.loads(fh.readline())
    assert first == {'seq': 0, 'sender': 'A', 'kind': 'qubits', 'payload': {'n': 256}}


def test_transcript_order_rules() -> None:
    bad = protocol.Transcript()
    bad.add('A', 'qubits', {})
    bad.add('A', 'reveal', {})
    bad.add('B', 'report', {})
    with pytest.raises(nqsot.ValidationError):
        bad.validate()
    early = protocol.Transcript()
    early.add('A', 'qubits', {})
    early.add('A', 'otpad', {})
    early.add('A', 'reveal', {})
    with pytest.raises(nqsot.ValidationError):
        early.validate()


@pytest.mark.parametrize('strategy,expected', [
    (protocol.StoreAsIs(r=1.0), 1.0),
    (protocol.StoreAsIs(r=0.9), 0.95),
    (protocol.StoreAsIs(r=0.0), 0.5),
    (protocol.MeasureComputational(), 0.75),
    (protocol.MeasureHadamard(), 0.75),
    (protocol.MeasureBreidbart(), math.cos(math.pi / 8) ** 2),
])
def test_analytic_rates(strategy: protocol.AttackStrategy, expected: float) -> None:
    assert protocol.analytic_guess_rate(strategy) == pytest.approx(expected, abs=1e-12)


def test_partial_half_matches_store() -> None:
    for r in (0.1, 0.6):
        assert (protocol.analytic_guess_rate(protocol.Partial(alpha=0.5), r=r)
                == pytest.approx(protocol.analytic_guess_rate(protocol.StoreAsIs(r=r)), abs=1e-9))


def test_make_strategy() -> None:
    assert protocol.make_strategy('breidbart', r=0.3) == protocol.MeasureBreidbart(r=0.3)
    partial = protocol.make_strategy('partial', r=0.4, alpha=0.6, axis_x=1.0, axis_z=0.0)
    assert partial.describe() == {'strategy': 'partial', 'r': 0.4, 'alpha': 0.6, 'axis_x': 1.0, 'axis_z': 0.0}
    with pytest.raises(nqsot.ParameterError):
        protocol.make_strategy('coinflip')
    with pytest.raises(nqsot.ValidationError):
        protocol.make_strategy('partial', alpha=0.9)


def test_apply_attack_and_finish() -> None:
    rng = nqsot.make_rng(7)
    store = protocol.StoreAsIs(r=1.0)
    rounds = [protocol.apply_attack(store, x, theta, rng) for x in (0, 1) for theta in ('+', 'x')]
    assert all(rnd.k is None and rnd.stored is not None for rnd in rounds)
    stats = protocol.adversary_finish(store, rounds, [rnd.theta for rnd in rounds], rng)
    assert stats.analytic == pytest.approx(1.0)
    assert stats.empirical == 1.0

    measured = protocol.apply_attack(protocol.MeasureComputational(), 1, '+', rng)
    assert measured.k == 1
    assert measured.stored is None
    with pytest.raises(nqsot.ParameterError):
        protocol.adversary_finish(store, rounds, ['+'], rng)
    with pytest.raises(nqsot.ParameterError):
        protocol.apply_attack(store, 2, '+', rng)


def test_exact_full_knowledge() -> None:
    params = protocol.ProtocolParams(n=4, ell=1, eps=0.1, r=1.0)
    estimate = protocol.exact_advantage_small_n(params, protocol.StoreAsIs(r=1.0), 3)
    assert estimate.values == pytest.approx([0.5] * 3, abs=1e-9)
    assert estimate.ci_low == pytest.approx(estimate.mean, abs=1e-9)
    assert estimate.ci_high == pytest.approx(estimate.mean, abs=1e-9)
    assert estimate.as_dict()['samples'] == 3


def test_exact_shrinks_with_noise() -> None:
    previous = None
    for r in (1.0, 0.8, 0.5, 0.2, 0.0):
        params = protocol.ProtocolParams(n=8, ell=1, eps=0.1, r=r, seed=2)
        values = protocol.exact_advantage_small_n(params, protocol.StoreAsIs(r=r), 2).values
        assert all(0.0 <= val <= 0.5 + 1e-9 for val in values)
        if previous is not None:
            assert all(cur <= old + 1e-9 for cur, old in zip(values, previous))
        previous = values


@pytest.mark.parametrize('n,ell,strategy', [
    (9, 1, protocol.StoreAsIs()),
    (4, 3, protocol.StoreAsIs()),
    (3, 1, protocol.Partial(alpha=0.6)),
])
def test_exact_unsupported(n: int, ell: int, strategy: protocol.AttackStrategy) -> None:
    params = protocol.ProtocolParams(n=n, ell=ell, eps=0.1)
    with pytest.raises(nqsot.UnsupportedInstance):
        protocol.exact_advantage_small_n(params, strategy, 1)


def test_certify() -> None:
    params = protocol.ProtocolParams(**ROBUST)
    verdict = protocol.certify(params)
    assert verdict['t'] == pytest.approx(binary_entropy(0.95))
    assert verdict['secure']
    assert verdict['regime'] == bounds.REGIME_STORE
    assert isinstance(verdict['ell_max'], int)
    assert protocol.certify(protocol.ProtocolParams(n=8, ell=1, eps=0.1))['ell_max'] is None


def test_simulate() -> None:
    params = protocol.ProtocolParams(**ROBUST)
    report = protocol.simulate(params, protocol.StoreAsIs(r=0.9), trials=3)
    again = protocol.simulate(params, protocol.StoreAsIs(r=0.9), trials=3)
    assert report.as_dict() == again.as_dict()
    assert tuple(report.as_dict()) == protocol.SIM_REPORT_KEYS
    assert report.correctness_rate == 1.0
    assert report.abort_rate == 0.0
    assert report.per_bit_guess_analytic == pytest.approx(0.95)
    assert abs(report.per_bit_guess_empirical - 0.95) < 0.05
    assert report.params['trials'] == 3
    with pytest.raises(nqsot.ParameterError):
        protocol.simulate(params, protocol.StoreAsIs(), trials=0)


def test_simulate_with_exact() -> None:
    params = protocol.ProtocolParams(n=4, ell=1, eps=0.3, r=1.0)
    report = protocol.simulate(params, protocol.StoreAsIs(r=1.0), trials=2, exact_samples=2)
    assert report.as_dict()['d_estimate']['mean'] == pytest.approx(0.5, abs=1e-9)


def test_main_report(capsys: pytest.CaptureFixture, sampledir: str, tmp_path) -> None:
    path = os.path.join(tmp_path, 'first.jsonl')
    protocol.main(_sim_args(transcript=path, format='csv'))
    report = json.loads(capsys.readouterr().out)
    with open(os.path.join(sampledir, 'sim-report-keys.txt')) as fh:
        assert list(report.keys()) == fh.read().split()
    assert report['params']['strategy'] == 'store'
    assert protocol.Transcript.load(path).kinds[0] == 'qubits'


@pytest.mark.parametrize('kwargs', [
    dict(n=64, exact=True),
    dict(strategy='partial', alpha=0.9),
    dict(p_error=0.7),
    dict(trials=0),
])
def test_main_errors(kwargs: dict) -> None:
    with pytest.raises(SystemExit) as exc:
        protocol.main(_sim_args(**kwargs))
    assert exc.value.code == 2


def test_main_warns_unused_flags(caplog: pytest.LogCaptureFixture, capsys: pytest.CaptureFixture) -> None:
    caplog.set_level(logging.WARNING, logger='nqsot')
    protocol.main(_sim_args(strategy='store', alpha=0.7, axis_x=0.6))
    capsys.readouterr()
    assert 'Ignoring --alpha for the store strategy' in caplog.text
    assert 'Ignoring --axis-x for the store strategy' in caplog.text
    assert '--axis-z' not in caplog.text
