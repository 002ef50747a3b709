"""Seismic vulnerability workbench: vulnerability index, damage curves and project workflow."""

import json as _json

from ._core import (
    SCHEMA_VERSION,
    VulnesisError,
    classify,
    compute_vi,
    damage_bounds,
    damage_curve,
    damage_index,
    default_scale,
    normalize_vi,
    point_in_polygon,
)
from ._core import Workbench as _Workbench

__all__ = [
    "SCHEMA_VERSION",
    "VulnesisError",
    "Workbench",
    "classify",
    "compute_vi",
    "damage_bounds",
    "damage_curve",
    "damage_index",
    "default_scale",
    "normalize_vi",
    "point_in_polygon",
]

_TEXT_RESULTS = {"field_forms", "map"}


class Workbench:
    """Project operations over a data root. Dict arguments are encoded as JSON and
    JSON results are decoded; maps and field forms come back as text."""

    def __init__(self, root):
        self._core = _Workbench(str(root))

    def __getattr__(self, name):
        method = getattr(self._core, name)

        def call(*args, **kwargs):
            encoded = [_json.dumps(a) if isinstance(a, (dict, list)) else a for a in args]
            result = method(*encoded, **kwargs)
            return result if name in _TEXT_RESULTS else _json.loads(result)

        return call
