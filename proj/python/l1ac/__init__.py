"""Switched L1 adaptive control toolkit.

Thin wrapper over the C++ core: scenario simulation, reference-system
co-simulation, stability/performance certificates and the dense linear
algebra primitives they are built on. Scenario configs are JSON documents;
structured results come back as dicts (reports as JSON strings parsed here).
"""

import json as _json

from _l1ac import (  # noqa: F401
    __version__,
    bperp,
    compare,
    dwell_time,
    expm,
    gev_max,
    lyap_solve,
    monte_carlo,
    pinv,
    simulate,
)
import _l1ac as _core


def certify(config_json: str) -> dict:
    """Stability/performance certificate for a scenario config."""
    return _json.loads(_core.certify(config_json))


def theorem1_check(config_json: str) -> dict:
    """Certificate plus the five performance-bound checks on a co-simulation."""
    return _json.loads(_core.theorem1_check(config_json))
