"""Named instance descriptors and the descriptor-to-problem builder.

A descriptor is a JSON-compatible mapping with exactly one of the keys
``preset``, ``abstract`` (``{"seed": int, "dims": [4 ints], ...}``) or
``fem`` (a :class:`FemConfig` dictionary).
"""

import copy

from ..errors import ConfigError
from .abstract import make_abstract
from .fem import FemConfig, make_fem

PRESETS = {
    "laplace-1d-quarter": {
        "fem": {"m": 1, "dimension": 1, "box": [0.0, 1.0], "omega": [0.25, 0.75],
                "n_elements": 8, "coefficients": 1.0, "trace_convention": "top-order",
                "name": "laplace-1d-quarter"},
    },
    "hermite-1d-m2": {
        "fem": {"m": 2, "dimension": 1, "box": [0.0, 1.0], "omega": [0.25, 0.75],
                "n_elements": 8, "coefficients": 1.0, "trace_convention": "whitney",
                "name": "hermite-1d-m2"},
    },
    "square-2d-m1": {
        "fem": {"m": 1, "dimension": 2, "box": [[0.0, 1.0], [0.0, 1.0]],
                "omega": [[0.25, 0.75], [0.25, 0.75]], "n_elements": 8, "coefficients": 1.0,
                "trace_convention": "top-order", "name": "square-2d-m1"},
    },
    "square-2d-complex": {
        "fem": {"m": 1, "dimension": 2, "box": [[0.0, 1.0], [0.0, 1.0]],
                "omega": [[0.25, 0.75], [0.25, 0.75]], "n_elements": 8,
                "coefficients": {
                    "omega": [[[2.0, 0.5], [0.3, -0.2]], [[-0.4, 0.1], [1.0, 0.3]]],
                    "complement": [[[1.0, 0.0], [0.0, 0.5]], [[0.0, -0.5], [1.5, 0.0]]],
                },
                "trace_convention": "top-order", "name": "square-2d-complex"},
    },
    "abstract-small": {
        "abstract": {"seed": 0, "dims": [3, 3, 2, 2], "name": "abstract-small"},
    },
}


def list_builtin_instances():
    """Descriptors of every named preset, keyed by ``name``."""
    return [{"name": name, **copy.deepcopy(desc)} for name, desc in PRESETS.items()]


def resolve_descriptor(desc):
    """Expand ``{"preset": name}`` into the full descriptor."""
    if not isinstance(desc, dict):
        raise ConfigError(f"instance descriptor must be an object, got {type(desc).__name__}")
    keys = {"preset", "abstract", "fem"} & set(desc)
    if len(keys) != 1:
        raise ConfigError("instance descriptor needs exactly one of 'preset', 'abstract', 'fem'")
    if "preset" in desc:
        name = desc["preset"]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
        return {"name": name, **copy.deepcopy(PRESETS[name])}
    return copy.deepcopy(desc)


def build_instance(desc):
    """Build the problem a descriptor describes."""
    desc = resolve_descriptor(desc)
    if "fem" in desc:
        return make_fem(FemConfig.from_dict(desc["fem"]))
    params = dict(desc["abstract"])
    name = params.pop("name", None)
    allowed = {"seed", "dims", "hermitian", "real", "mix", "min_lambda", "perturbation"}
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"unknown abstract-instance fields: {sorted(unknown)}")
    if "seed" not in params or "dims" not in params:
        raise ConfigError("abstract instance needs 'seed' and 'dims'")
    p = make_abstract(**params)
    if name:
        object.__setattr__(p, "name", name)
    return p
