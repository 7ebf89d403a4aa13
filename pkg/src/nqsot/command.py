#!/usr/bin/env python3
# -*- coding: utf-8 -*-
# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026 by the nqsot authors
#
import argparse
import logging
import nqsot
import sys

from typing import Any, Optional, Sequence, Union

logger = nqsot.logger


def cmd_uncertainty(cmdargs: argparse.Namespace) -> None:
    import nqsot.uncertainty
    nqsot.uncertainty.main(cmdargs)


def cmd_bounds(cmdargs: argparse.Namespace) -> None:
    import nqsot.bounds
    nqsot.bounds.main(cmdargs)


def cmd_simulate(cmdargs: argparse.Namespace) -> None:
    import nqsot.protocol
    nqsot.protocol.main(cmdargs)


def cmd_verify(cmdargs: argparse.Namespace) -> None:
    import nqsot.verify
    nqsot.verify.main(cmdargs)


class ConfigOption(argparse.Action):
    """Action class for storing key=value arguments in a dict."""
    def __call__(self, parser: argparse.ArgumentParser,
                 namespace: argparse.Namespace,
                 keyval: Union[str, Sequence[Any], None],
                 option_string: Optional[str] = None) -> None:
        config = getattr(namespace, self.dest, None)

        if config is None:
            config = dict()
            setattr(namespace, self.dest, config)

        if isinstance(keyval, str):
            if '=' in keyval:
                key, value = keyval.split('=', maxsplit=1)
            else:
                key, value = keyval, 'true'

            config[key] = value


def cmd_channel_opts(sp: argparse.ArgumentParser, required: bool = True) -> None:
    sp.add_argument('--n', type=int, required=required,
                    help='Number of transmitted qubits')
    sp.add_argument('--eps', type=float, required=required,
                    help='Security parameter')
    sp.add_argument('--p-error', dest='p_error', type=float, default=0.0,
                    help='Honest bit-error rate (QBER)')
    sp.add_argument('--p-erase', dest='p_erase', type=float, default=0.0,
                    help='Honest erasure rate')


def setup_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='nqsot',
        description='Oblivious transfer from noisy quantum storage: bounds, curves and simulations',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument('--version', action='version', version=nqsot.__VERSION__)
    parser.add_argument('-d', '--debug', action='store_true', default=False,
                        help='Add more debugging info to the output')
    parser.add_argument('-q', '--quiet', action='store_true', default=False,
                        help='Output critical information only')
    parser.add_argument('--seed', type=int, default=0,
                        help='Seed for every random stream')
    parser.add_argument('--out', dest='outfile', default=None,
                        help='Write results to this file instead of stdout')
    parser.add_argument('--format', choices=('csv', 'json'), default='csv',
                        help='Output format for curves and reports')
    parser.add_argument('-c', '--config', metavar='NAME=VALUE', action=ConfigOption,
                        help='''Set config option NAME to VALUE. Override value
                        from config files. NAME is in dotted section.key
                        format, e.g. nqsot.code-margin=0.2. Using NAME and
                        omitting =VALUE will set the value to "true".''')

    try:
        import shtab  # type: ignore
        shtab.add_argument_to(parser, ["--print-completion"])
    except ImportError:
        pass

    subparsers = parser.add_subparsers(help='sub-command help', dest='subcmd')

    # nqsot uncertainty
    sp_unc = subparsers.add_parser('uncertainty', help='Emit the uncertainty bound t(r) next to its numeric minimum')
    sp_unc.add_argument('--r-min', dest='r_min', type=float, default=0.0,
                        help='Smallest storage-noise parameter')
    sp_unc.add_argument('--r-max', dest='r_max', type=float, default=1.0,
                        help='Largest storage-noise parameter')
    sp_unc.add_argument('--step', type=float, default=0.05,
                        help='Distance between curve points')
    sp_unc.add_argument('-C', '--no-cache', dest='nocache', action='store_true', default=False,
                        help='Do not use local cache')
    sp_unc.set_defaults(func=cmd_uncertainty)

    # nqsot bounds
    sp_bnd = subparsers.add_parser('bounds', help='Compute the certified output length for given parameters')
    cmd_channel_opts(sp_bnd, required=False)
    sb_g = sp_bnd.add_mutually_exclusive_group(required=True)
    sb_g.add_argument('--t', type=float, default=None,
                      help='Uncertainty bound per received qubit')
    sb_g.add_argument('--r', type=float, default=None,
                      help='Storage-noise parameter; t is taken from the closed form')
    sp_bnd.add_argument('--mode', choices=('ideal', 'robust', 'ident'), default='ideal',
                        help='Which protocol to evaluate')
    sp_bnd.add_argument('--syndrome-overhead', dest='syndrome_overhead', type=float, default=0.0,
                        help='Syndrome bits per reconciled bit on top of h(p-error)')
    sp_bnd.add_argument('--ident-d', dest='ident_d', type=int, default=None,
                        help='Minimum distance of the identification code')
    sp_bnd.add_argument('--ident-m', dest='ident_m', type=int, default=None,
                        help='Number of possible passwords')
    sp_bnd.add_argument('--ell', type=int, default=None,
                        help='Requested output length, checked against the bound')
    sp_bnd.set_defaults(func=cmd_bounds)

    # nqsot simulate
    sp_sim = subparsers.add_parser('simulate', help='Run honest protocols and an individual-storage attack')
    cmd_channel_opts(sp_sim)
    sp_sim.add_argument('--ell', type=int, required=True,
                        help='Output string length')
    sp_sim.add_argument('--r', type=float, default=1.0,
                        help='Storage-noise parameter of the adversary')
    sp_sim.add_argument('--strategy', required=True,
                        choices=('store', 'computational', 'hadamard', 'breidbart', 'partial'),
                        help='Attack applied to every qubit')
    sp_sim.add_argument('--alpha', type=float, default=0.5,
                        help='Eigenvalue alpha of the partial measurement')
    sp_sim.add_argument('--axis-x', dest='axis_x', type=float, default=0.0,
                        help='X component of the partial measurement axis')
    sp_sim.add_argument('--axis-z', dest='axis_z', type=float, default=1.0,
                        help='Z component of the partial measurement axis')
    sp_sim.add_argument('--trials', type=int, default=1,
                        help='Number of seeded protocol runs')
    sp_sim.add_argument('--exact', action='store_true', default=False,
                        help='Also compute the exact security distance (small n only)')
    sp_sim.add_argument('--samples', type=int, default=8,
                        help='Classical samples for --exact')
    sp_sim.add_argument('--transcript', default=None,
                        help='Write the first honest transcript to this file as JSON lines')
    sp_sim.add_argument('--code-margin', dest='code_margin', type=float, default=None,
                        help='Extra syndrome bits as a fraction of the block (default: nqsot.code-margin)')
    sp_sim.set_defaults(func=cmd_simulate)

    # nqsot verify
    sp_ver = subparsers.add_parser('verify', help='Run the property suites')
    sp_ver.add_argument('suite', choices=('entropy', 'appendixB', 'pa', 'protocol', 'all'),
                        help='Which suite to run')
    sp_ver.set_defaults(func=cmd_verify)

    return parser


def cmd() -> None:
    parser = setup_parser()
    cmdargs = parser.parse_args()
    logger.setLevel(logging.DEBUG)

    ch = logging.StreamHandler()
    formatter = logging.Formatter('%(message)s')
    ch.setFormatter(formatter)

    if cmdargs.quiet:
        ch.setLevel(logging.CRITICAL)
    elif cmdargs.debug:
        ch.setLevel(logging.DEBUG)
    else:
        ch.setLevel(logging.INFO)

    logger.addHandler(ch)

    if 'func' not in cmdargs:
        parser.print_help()
        sys.exit(1)

    nqsot.setup_config(cmdargs)
    cmdargs.func(cmdargs)


if __name__ == '__main__':
    # We're running from a checkout, so reflect git commit in the version
    import os

    try:
        if nqsot.__VERSION__.find('-dev') > 0:
            base = os.path.dirname(os.path.dirname(os.path.dirname(os.path.realpath(__file__))))
            dotgit = os.path.join(base, '.git')
            ecode, short = nqsot.git_run_command(['--git-dir', dotgit, 'rev-parse', '--short', 'HEAD'])
            if ecode == 0:
                nqsot.__VERSION__ = '%s-%.5s' % (nqsot.__VERSION__, short.strip())
    except Exception:
        # Any failures above are non-fatal
        pass
    cmd()
