"""Python front end to the becmf solvers.

Configs are plain dicts (or JSON file paths) in the same format the ``bec``
command line reads; results come back as dicts.
"""

import json
import os

from . import _core
from ._core import BecError, ConfigError, lowest_eigenpairs, node_coordinates, occupation, solve_thermo

__all__ = [
    "BecError",
    "ConfigError",
    "normalize_config",
    "stationary",
    "full_eps",
    "expand",
    "sweep",
    "evolve",
    "h_minus_one_norm_sq",
    "occupation",
    "solve_thermo",
    "lowest_eigenpairs",
    "node_coordinates",
]


def _text(config):
    # returns (json text, directory relative paths resolve against)
    if isinstance(config, (str, os.PathLike)) and os.path.exists(config):
        with open(config) as fh:
            return fh.read(), os.path.dirname(os.path.abspath(config))
    if isinstance(config, dict):
        return json.dumps(config), os.getcwd()
    return str(config), os.getcwd()


def normalize_config(config=None):
    text, base = _text(config if config is not None else {})
    return json.loads(_core.normalize_config(text, base))


def stationary(config=None):
    text, base = _text(config if config is not None else {})
    return json.loads(_core.stationary(text, base))


def full_eps(config, epsilon):
    text, base = _text(config)
    return json.loads(_core.full_eps(text, float(epsilon), base))


def expand(config=None, order=2):
    text, base = _text(config if config is not None else {})
    return json.loads(_core.expand(text, int(order), base))


def sweep(config, epsilons=()):
    text, base = _text(config)
    return json.loads(_core.sweep(text, [float(e) for e in epsilons], base))


def evolve(config=None, t_final=None, dt=None):
    """Returns (summary dict, observables CSV text)."""
    text, base = _text(config if config is not None else {})
    summary, csv = _core.evolve(text, t_final, dt, base)
    return json.loads(summary), csv


def h_minus_one_norm_sq(microstructure, dim=1):
    """(Fourier sum, cell quadrature) of the H^-1 norm squared."""
    return _core.h_minus_one_norm_sq(json.dumps(microstructure), dim)
