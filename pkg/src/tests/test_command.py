import pytest

import nqsot
import nqsot.command


@pytest.fixture(autouse=True)
def keephandlers():
    saved = list(nqsot.logger.handlers)
    yield
    nqsot.logger.handlers = saved


@pytest.mark.parametrize('argv,func', [
    (['uncertainty', '--step', '0.1'], nqsot.command.cmd_uncertainty),
    (['bounds', '--t', '0.5', '--n', '1000', '--eps', '0.1'], nqsot.command.cmd_bounds),
    (['bounds', '--r', '0.9', '--mode', 'ident', '--ident-d', '50', '--ident-m', '4', '--ell', '2'],
     nqsot.command.cmd_bounds),
    (['simulate', '--n', '64', '--eps', '0.1', '--ell', '4', '--strategy', 'store'], nqsot.command.cmd_simulate),
    (['verify', 'pa'], nqsot.command.cmd_verify),
])
def test_subcommands(argv: list, func) -> None:
    cmdargs = nqsot.command.setup_parser().parse_args(argv)
    assert cmdargs.func is func


def test_global_options() -> None:
    parser = nqsot.command.setup_parser()
    cmdargs = parser.parse_args(['--seed', '9', '--format', 'json', '--out', 'curve.json',
                                 '-c', 'nqsot.code-margin=0.3', '-c', 'nqsot.flag', 'verify', 'all'])
    assert cmdargs.seed == 9
    assert cmdargs.format == 'json'
    assert cmdargs.outfile == 'curve.json'
    assert cmdargs.config == {'nqsot.code-margin': '0.3', 'nqsot.flag': 'true'}
    nqsot.setup_config(cmdargs)
    assert nqsot.get_config_float('code-margin') == pytest.approx(0.3)
    assert nqsot.get_config_int('exact-max-n') == 8


def test_defaults() -> None:
    cmdargs = nqsot.command.setup_parser().parse_args(['simulate', '--n', '64', '--eps', '0.1', '--ell', '4',
                                                       '--strategy', 'partial'])
    assert cmdargs.r == 1.0
    assert cmdargs.trials == 1
    assert cmdargs.samples == 8
    assert cmdargs.alpha == 0.5
    assert cmdargs.format == 'csv'
    assert not cmdargs.exact


@pytest.mark.parametrize('argv', [
    ['bounds', '--n', '1000', '--eps', '0.1'],
    ['bounds', '--t', '0.5', '--r', '0.5'],
    ['simulate', '--n', '64', '--eps', '0.1', '--ell', '4'],
    ['simulate', '--n', '64', '--eps', '0.1', '--ell', '4', '--strategy', 'guess'],
    ['verify', 'everything'],
    ['--format', 'xml', 'verify', 'pa'],
])
def test_usage_errors(argv: list) -> None:
    with pytest.raises(SystemExit) as exc:
        nqsot.command.setup_parser().parse_args(argv)
    assert exc.value.code == 2


def test_cmd_without_subcommand(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr('sys.argv', ['nqsot'])
    with pytest.raises(SystemExit) as exc:
        nqsot.command.cmd()
    assert exc.value.code == 1


def test_cmd_bounds_end_to_end(monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture) -> None:
    monkeypatch.setattr('sys.argv', ['nqsot', '-q', '--format', 'json', 'bounds', '--t', '0.5',
                                     '--n', '1000000', '--eps', '0.001'])
    nqsot.command.cmd()
    assert '"ell_max": 112205' in capsys.readouterr().out
