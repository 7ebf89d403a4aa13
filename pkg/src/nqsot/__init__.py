# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026 by the nqsot authors
import argparse
import copy
import hashlib
import json
import logging
import os
import pathlib
import shutil
import subprocess
import sys
import time

import numpy as np

from typing import Any, Dict, List, Optional, Tuple, Union

ConfigDictT = Dict[str, Union[str, List[str], None]]

__VERSION__ = '0.1-dev'

logger = logging.getLogger('nqsot')

# Role indices for the per-trial stream split, see make_rng()
STREAM_ALICE = 0
STREAM_CHANNEL = 1
STREAM_BOB = 2
STREAM_ADVERSARY = 3
STREAM_HASHING = 4
STREAM_CHOICE = 5
STREAM_EXACT = 6

DEFAULT_CONFIG: ConfigDictT = {
    # Coarse grid used by the uncertainty minimizer before golden-section refinement
    'uncertainty-alpha-points': '201',
    'uncertainty-axis-points': '91',
    'uncertainty-tolerance': '1e-6',
    # Extra syndrome bits on top of ceil(h(p_error) * m), as a fraction of m
    'code-margin': '0.1',
    # Longest block for which we do real exhaustive ML syndrome decoding
    'code-max-ml-length': '24',
    # Per-block failure probability the genie decoder radius is sized for
    'decoder-failure-target': '1e-4',
    # Ceilings for the exact small-n security evaluation
    'exact-max-n': '8',
    'exact-max-ell': '2',
    'exact-max-joint-dim': '256',
    # auto: CLARABEL if installed, SCS otherwise
    'sdp-solver': 'auto',
    # How long to keep numeric minimizations in cache (minutes)
    'cache-expire': '1440',
    # Significant digits for every float we print
    'float-digits': '9',
}

# This is where we store actual config
MAIN_CONFIG: ConfigDictT = dict()
# Indicates that we've cleaned cache already
_CACHE_CLEANED = False


class ParameterError(ValueError):
    """A parameter lies outside its documented range."""


class PreconditionError(ParameterError):
    """An admissibility floor of one of the security theorems is not met."""


class ValidationError(ValueError):
    """A state or measurement does not satisfy its invariants."""


class UnsupportedInstance(RuntimeError):
    """The request is outside what we can compute exactly."""


def _run_command(cmdargs: List[str], stdin: Optional[bytes] = None) -> Tuple[int, bytes, bytes]:
    logger.debug('Running %s', ' '.join(cmdargs))
    try:
        sp = subprocess.Popen(cmdargs, stdout=subprocess.PIPE, stdin=subprocess.PIPE, stderr=subprocess.PIPE)
    except FileNotFoundError:
        logger.debug('Command not found: %s', cmdargs[0])
        return 127, b'', b''
    (output, error) = sp.communicate(input=stdin)

    return sp.returncode, output, error


def git_run_command(args: List[str]) -> Tuple[int, str]:
    cmdargs = ['git', '--no-pager'] + args
    ecode, out, err = _run_command(cmdargs)
    return ecode, out.decode(errors='replace')


def setup_config(cmdargs: argparse.Namespace) -> None:
    """Setup configuration options. Needs to be called before accessing any of
    the config options."""
    _setup_main_config(cmdargs)


def _cmdline_config_override(cmdargs: argparse.Namespace, config: Dict[str, Any], section: str) -> None:
    """Use cmdline.config to set and override config values for section."""
    if not getattr(cmdargs, 'config', None):
        return

    section += '.'

    config_override = {
        key[len(section):]: val
        for key, val in cmdargs.config.items()
        if key.startswith(section)
    }

    config.update(config_override)


def get_config_from_git(regexp: str, defaults: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    args = ['config', '-z', '--get-regexp', regexp]
    ecode, out = git_run_command(args)
    gitconfig = defaults
    if not gitconfig:
        gitconfig = dict()
    if ecode != 0 or not out:
        return gitconfig

    for line in out.split('\x00'):
        if not line:
            continue
        if '\n' in line:
            key, value = line.split('\n', 1)
        else:
            key, value = line, 'true'
        cfgkey = key.split('.')[-1].lower()
        gitconfig[cfgkey] = value

    return gitconfig


def _setup_main_config(cmdargs: Optional[argparse.Namespace] = None) -> None:
    global MAIN_CONFIG

    defcfg = copy.deepcopy(DEFAULT_CONFIG)
    config = get_config_from_git(r'nqsot\..*', defaults=defcfg)
    if cmdargs:
        _cmdline_config_override(cmdargs, config, 'nqsot')

    MAIN_CONFIG = config


def get_main_config() -> ConfigDictT:
    if not MAIN_CONFIG:
        _setup_main_config()
    return MAIN_CONFIG


def get_config_int(key: str) -> int:
    config = get_main_config()
    try:
        return int(str(config[key]))
    except (KeyError, ValueError):
        logger.critical('ERROR: %s must be an integer: %s', key, config.get(key))
        return int(str(DEFAULT_CONFIG[key]))


def get_config_float(key: str) -> float:
    config = get_main_config()
    try:
        return float(str(config[key]))
    except (KeyError, ValueError):
        logger.critical('ERROR: %s must be a number: %s', key, config.get(key))
        return float(str(DEFAULT_CONFIG[key]))


def get_cache_dir(appname: str = 'nqsot') -> str:
    global _CACHE_CLEANED
    if 'XDG_CACHE_HOME' in os.environ:
        cachehome = os.environ['XDG_CACHE_HOME']
    else:
        cachehome = os.path.join(str(pathlib.Path.home()), '.cache')
    cachedir = os.path.join(cachehome, appname)
    pathlib.Path(cachedir).mkdir(parents=True, exist_ok=True)
    if _CACHE_CLEANED:
        return cachedir

    expage = time.time() - get_config_int('cache-expire') * 60
    for entry in os.listdir(cachedir):
        fullpath = os.path.join(cachedir, entry)
        st = os.stat(fullpath)
        if st.st_mtime < expage:
            logger.debug('Cleaning up cache: %s', entry)
            if os.path.isdir(fullpath):
                shutil.rmtree(fullpath)
            else:
                os.unlink(fullpath)
    _CACHE_CLEANED = True
    return cachedir


def get_cache_file(identifier: str, suffix: Optional[str] = None) -> str:
    cachedir = get_cache_dir()
    cachefile = hashlib.sha1(identifier.encode()).hexdigest()
    if suffix:
        cachefile = f'{cachefile}.{suffix}'
    return os.path.join(cachedir, cachefile)


def get_cache(identifier: str, suffix: Optional[str] = None) -> Optional[Any]:
    fullpath = get_cache_file(identifier, suffix=suffix)
    try:
        with open(fullpath) as fh:
            logger.debug('Using cache %s for %s', fullpath, identifier)
            return json.loads(fh.read())
    except FileNotFoundError:
        logger.debug('Cache miss for %s', identifier)
    except json.JSONDecodeError:
        logger.debug('Error decoding cache data in %s', fullpath)
    return None


def clear_cache(identifier: str, suffix: Optional[str] = None) -> None:
    fullpath = get_cache_file(identifier, suffix=suffix)
    if os.path.exists(fullpath):
        os.unlink(fullpath)
        logger.debug('Removed cache %s for %s', fullpath, identifier)


def save_cache(contents: Any, identifier: str, suffix: Optional[str] = None) -> None:
    fullpath = get_cache_file(identifier, suffix=suffix)
    try:
        with open(fullpath, 'w') as fh:
            fh.write(json.dumps(contents))
            logger.debug('Saved cache %s for %s', fullpath, identifier)
    except FileNotFoundError:
        logger.debug('Could not write cache %s for %s', fullpath, identifier)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for (seed, stream...).

    Every protocol trial draws from stream (trial, role) with the STREAM_*
    role indices, so roles never shift each other's randomness.
    """
    seq = np.random.SeedSequence(seed & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(seq))


def format_float(value: float) -> str:
    digits = get_config_int('float-digits')
    return '%.*g' % (digits, value)


def round_floats(obj: Any) -> Any:
    """Round every float inside a JSON-able structure to the output precision."""
    if isinstance(obj, (float, np.floating)):
        return float(format_float(float(obj)))
    if isinstance(obj, dict):
        return {key: round_floats(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(val) for val in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_output(contents: str, outpath: Optional[str] = None) -> None:
    if not outpath or outpath == '-':
        sys.stdout.write(contents)
        sys.stdout.flush()
        return
    with open(outpath, 'w') as fh:
        fh.write(contents)
    logger.info('Wrote %s', outpath)


def dump_json(obj: Any) -> str:
    return json.dumps(round_floats(obj), indent=2, sort_keys=False) + '\n'
