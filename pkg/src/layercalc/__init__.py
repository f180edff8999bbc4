"""Layer potentials built from the Lax-Milgram theorem on finite-dimensional spaces."""

from .errors import (
    ConfigError,
    Inconsistent,
    LayerCalcError,
    NotASolution,
    NotCoercive,
    NotInvertible,
    Singular,
)
from .hilbert import (
    Functional,
    LinearMap,
    QuotientSpace,
    SesquilinearForm,
    Space,
    dual_space,
    min_norm_extension,
    norm,
    quotient_space,
)
from .laxmilgram import InfSupReport, LaxMilgramSolver, inf_sup, solve
from .problem import InteriorElement, Problem, Side, build_problem, restrict
from .potentials import (
    L_indicator,
    adjoint_problem,
    apply_L,
    double_layer,
    interior_residual,
    neumann_trace,
    newton_potential,
    single_layer,
    trace_of_double_layer,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "Inconsistent", "LayerCalcError", "NotASolution", "NotCoercive", "NotInvertible",
    "Singular", "Functional", "LinearMap", "QuotientSpace", "SesquilinearForm", "Space",
    "dual_space", "min_norm_extension", "norm", "quotient_space", "InfSupReport",
    "LaxMilgramSolver", "inf_sup", "solve", "InteriorElement", "Problem", "Side", "build_problem",
    "restrict", "L_indicator", "adjoint_problem", "apply_L", "double_layer", "interior_residual",
    "neumann_trace", "newton_potential", "single_layer", "trace_of_double_layer",
]
