import argparse
import json
import os
import pathlib

import numpy as np
import pytest

import nqsot


def test_config_defaults() -> None:
    assert nqsot.get_config_int('exact-max-n') == 8
    assert nqsot.get_config_float('code-margin') == pytest.approx(0.1)
    assert nqsot.get_main_config()['sdp-solver'] == 'auto'


def test_cmdline_config_override() -> None:
    cmdargs = argparse.Namespace(config={'nqsot.code-margin': '0.25', 'other.key': 'x'})
    config = dict(nqsot.DEFAULT_CONFIG)
    nqsot._cmdline_config_override(cmdargs, config, 'nqsot')
    assert config['code-margin'] == '0.25'
    assert 'key' not in config


def test_config_fallback_on_garbage() -> None:
    nqsot.MAIN_CONFIG['float-digits'] = 'lots'
    assert nqsot.get_config_int('float-digits') == 9


def test_cache_roundtrip(tmp_path: pathlib.Path) -> None:
    ident = 'uncertainty:test'
    assert nqsot.get_cache(ident, suffix='json') is None
    nqsot.save_cache({'min': 0.5}, ident, suffix='json')
    assert nqsot.get_cache(ident, suffix='json') == {'min': 0.5}
    assert nqsot.get_cache_file(ident, suffix='json').startswith(str(tmp_path))
    nqsot.clear_cache(ident, suffix='json')
    assert nqsot.get_cache(ident, suffix='json') is None


def test_make_rng_streams() -> None:
    first = nqsot.make_rng(7, 0, nqsot.STREAM_ALICE).integers(0, 2 ** 32, size=8)
    again = nqsot.make_rng(7, 0, nqsot.STREAM_ALICE).integers(0, 2 ** 32, size=8)
    other = nqsot.make_rng(7, 0, nqsot.STREAM_CHANNEL).integers(0, 2 ** 32, size=8)
    trial = nqsot.make_rng(7, 1, nqsot.STREAM_ALICE).integers(0, 2 ** 32, size=8)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other)
    assert not np.array_equal(first, trial)


@pytest.mark.parametrize('value,expected', [
    (0.5, '0.5'),
    (1 / 3, '0.333333333'),
    (112205.0, '112205'),
    (3.86e-22, '3.86e-22'),
])
def test_format_float(value: float, expected: str) -> None:
    assert nqsot.format_float(value) == expected


def test_dump_json_rounds_nested() -> None:
    out = nqsot.dump_json({'a': [1 / 3, np.float64(2 / 3)], 'b': np.int64(4), 'c': None})
    assert json.loads(out) == {'a': [0.333333333, 0.666666667], 'b': 4, 'c': None}
    assert out.endswith('\n')


def test_write_output(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture[str]) -> None:
    nqsot.write_output('hello\n', None)
    assert capsys.readouterr().out == 'hello\n'
    dest = os.path.join(tmp_path, 'out.csv')
    nqsot.write_output('a,b\n', dest)
    with open(dest) as fh:
        assert fh.read() == 'a,b\n'
