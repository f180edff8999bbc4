"""Problem generators and the structural-condition verifier."""

from .abstract import make_abstract
from .conditions import ConditionsReport, verify_conditions
from .fem import FemConfig, make_fem
from .presets import PRESETS, build_instance, list_builtin_instances, resolve_descriptor

__all__ = [
    "ConditionsReport",
    "FemConfig",
    "PRESETS",
    "build_instance",
    "list_builtin_instances",
    "make_abstract",
    "make_fem",
    "resolve_descriptor",
    "verify_conditions",
]
