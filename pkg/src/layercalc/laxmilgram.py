"""Inf-sup constants and the Babuska-Lax-Milgram solver."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NotCoercive, ShapeError
from .hilbert import Functional, SesquilinearForm, as_vector

DEFAULT_TOL_COERCIVE = 1e-10


@dataclass(frozen=True)
class InfSupReport:
    """Inf-sup constants of both slots and the operator norm of a form."""

    lambda1: float
    lambda2: float
    norm_B: float

    @property
    def lam(self):
        return min(self.lambda1, self.lambda2)

    def to_dict(self):
        return {"lambda1": self.lambda1, "lambda2": self.lambda2, "norm_B": self.norm_B}


def inf_sup(B: SesquilinearForm) -> InfSupReport:
    """Compute both inf-sup constants of ``B`` from its whitened matrix.

    ``lambda1 = inf_v sup_w |B(w, v)| / (|w| |v|)`` and ``lambda2`` the same with
    the slots exchanged. For a square matrix both equal the smallest singular
    value of ``L1^{-1} M L2^{-H}``.
    """
    if B.domain_left.dim != B.domain_right.dim:
        raise ShapeError(
            f"coercive forms need equal dimensions, got {B.domain_left.dim} x {B.domain_right.dim}"
        )
    s = B.singular_values
    lam = float(s[-1])
    return InfSupReport(lambda1=lam, lambda2=lam, norm_B=float(s[0]))


@dataclass(frozen=True, eq=False)
class LaxMilgramSolver:
    """Factor ``B`` once and solve ``B(v, u) = <v, T>`` for many ``T``.

    Raises :class:`NotCoercive` at construction if the inf-sup constant is
    below ``tol_coercive * |B|``.
    """

    form: SesquilinearForm
    tol_coercive: float = DEFAULT_TOL_COERCIVE
    report: InfSupReport = field(init=False)
    _lu: tuple = field(init=False, repr=False)

    def __post_init__(self):
        rep = inf_sup(self.form)
        threshold = self.tol_coercive * rep.norm_B
        if not rep.lam >= threshold or rep.lam == 0.0:
            raise NotCoercive(rep.lam, threshold)
        object.__setattr__(self, "report", rep)
        object.__setattr__(self, "_lu", sla.lu_factor(self.form.matrix))

    @property
    def lam(self):
        return self.report.lam

    def solve_action(self, action):
        """Solve ``matrix @ u = action`` (columns allowed)."""
        action = np.asarray(action, dtype=complex)
        if action.shape[0] != self.form.domain_left.dim:
            raise ShapeError(f"action has length {action.shape[0]}, expected {self.form.domain_left.dim}")
        if not np.any(action):
            return np.zeros(action.shape, dtype=complex)
        return sla.lu_solve(self._lu, action)

    def solve(self, T):
        """The unique ``u_T`` with ``B(e_i, u_T) = <e_i, T>`` for every basis vector."""
        if isinstance(T, Functional):
            action = T.action
        else:
            action = as_vector(T, self.form.domain_left.dim, name="action")
        return self.solve_action(action)


def solve(B: SesquilinearForm, T, tol_coercive=DEFAULT_TOL_COERCIVE):
    """One-shot Lax-Milgram solve; see :class:`LaxMilgramSolver`."""
    return LaxMilgramSolver(B, tol_coercive).solve(T)
