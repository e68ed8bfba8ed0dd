"""Reach-avoid value functions, the safety filter and episodes.

Thin layer over the compiled ``_racbf`` module. Set RACBF_EXTENSION_DIR to
load the module from a build tree instead of the installed package.
"""

import json
import os
import sys

_ext_dir = os.environ.get("RACBF_EXTENSION_DIR")
if _ext_dir:
    sys.path.insert(0, _ext_dir)
    import _racbf as _ext  # noqa: E402

    sys.path.remove(_ext_dir)
else:
    from . import _racbf as _ext  # noqa: E402

Config = _ext.Config
ValueFunction = _ext.ValueFunction
Session = _ext.Session
solve = _ext.solve
filter_control = _ext.filter_control
run_episode = _ext.run_episode
check_residuals = _ext.check_residuals

ConfigError = _ext.ConfigError
FormatError = _ext.FormatError
OutOfDomain = _ext.OutOfDomain
HorizonError = _ext.HorizonError
InstabilityError = _ext.InstabilityError
ContractViolation = _ext.ContractViolation


def solve_to(config, out_dir):
    """Solve and write value.ravg plus solve_report.json; returns the report."""
    return json.loads(_ext.solve_to(config, str(out_dir)))


def simulate_to(config, value_path, out_dir, seeds, force=False):
    """Run seeded episodes and write the CSVs; returns the summary."""
    return json.loads(_ext.simulate_to(config, str(value_path), str(out_dir), list(seeds), force))


def provenance(value):
    return json.loads(value.provenance)


__all__ = [
    "Config",
    "ValueFunction",
    "Session",
    "solve",
    "solve_to",
    "simulate_to",
    "filter_control",
    "run_episode",
    "check_residuals",
    "provenance",
    "ConfigError",
    "FormatError",
    "OutOfDomain",
    "HorizonError",
    "InstabilityError",
    "ContractViolation",
]
