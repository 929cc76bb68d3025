"""Low-rank approximations of the identity matrix.

Thin wrapper over the compiled ``_core`` module; ``trace`` returns the proof
replay report as a dict.
"""

import json

from ._core import *  # noqa: F401,F403
from ._core import trace_json as _trace_json


def trace(A, gamma, **kwargs):
    return json.loads(_trace_json(A, gamma, **kwargs))
