"""Numerical verification of the structural conditions on a problem."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..problem import Problem, Side

DEFAULT_LAMBDA_TOL = 1e-6
DEFAULT_LOCALITY_TOL = 1e-12
RANK_RTOL = 1e-10


def _rank(A, scale=None):
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    ref = s[0] if scale is None else scale
    return int(np.sum(s > RANK_RTOL * max(ref, 1e-300)))


@dataclass
class TraceExtensionCheck:
    j: int
    rank_stacked: int
    rank_augmented: int

    @property
    def passed(self):
        return self.rank_stacked == self.rank_augmented

    def to_dict(self):
        return {"j": self.j, "rank_stacked": self.rank_stacked,
                "rank_augmented": self.rank_augmented, "passed": self.passed}


@dataclass
class ConditionsReport:
    lambda1: float
    lambda2: float
    norm_B: float
    lambda_tol: float
    locality_residual: float
    locality_tol: float
    trace_extension: list = field(default_factory=list)
    kernel_intersection_defect: list = field(default_factory=list)
    factored_trace: dict = field(default_factory=dict)

    @property
    def coercive(self):
        return min(self.lambda1, self.lambda2) >= self.lambda_tol

    @property
    def local(self):
        return self.locality_residual <= self.locality_tol

    @property
    def trace_extends(self):
        return all(c.passed for c in self.trace_extension)

    @property
    def kernels_factor(self):
        """``ker R_omega`` intersected with ``ker R_complement`` lies in ``ker Tr_j``."""
        return all(d <= RANK_RTOL for d in self.kernel_intersection_defect)

    @property
    def traces_factor(self):
        """``Tr2`` factors through both restrictions (hypothesis of the trace continuity relation)."""
        return all(self.factored_trace.values())

    @property
    def passed(self):
        return self.coercive and self.local and self.trace_extends and self.kernels_factor

    def conditions(self):
        """The three structural conditions as ``(name, passed, value)`` triples."""
        return [
            ("coercivity", self.coercive, min(self.lambda1, self.lambda2)),
            ("locality", self.local, self.locality_residual),
            ("trace_extension", self.trace_extends,
             [(c.rank_stacked, c.rank_augmented) for c in self.trace_extension]),
        ]

    def to_dict(self):
        return {
            "passed": self.passed,
            "conditions": {
                "coercivity": {"passed": self.coercive, "lambda1": self.lambda1, "lambda2": self.lambda2,
                               "norm_B": self.norm_B, "tol": self.lambda_tol},
                "locality": {"passed": self.local, "residual": self.locality_residual,
                             "tol": self.locality_tol},
                "trace_extension": {"passed": self.trace_extends,
                                    "checks": [c.to_dict() for c in self.trace_extension]},
            },
            "hypotheses": {
                "kernel_factorization": {"passed": self.kernels_factor,
                                         "defects": list(self.kernel_intersection_defect)},
                "factored_trace": {"passed": self.traces_factor,
                                   "sides": {k: v for k, v in self.factored_trace.items()}},
            },
        }


def locality_residual(p: Problem):
    """Max entrywise defect of ``B = R1o^H Bo R2o + R1c^H Bc R2c`` relative to ``max |B|``."""
    lift = np.zeros_like(p.B.matrix)
    for side in Side:
        lift = lift + (p.restriction(1, side).matrix.conj().T @ p.local_form(side).matrix
                       @ p.restriction(2, side).matrix)
    scale = np.max(np.abs(p.B.matrix))
    return float(np.max(np.abs(p.B.matrix - lift)) / scale) if scale > 0 else float(np.max(np.abs(lift)))


def trace_extension_check(p: Problem, j):
    """Rank test for the trace-extension condition on ``H_j``.

    The condition says every ``(phi|_omega, psi|_complement, Tr phi)`` with
    ``Tr phi = Tr psi`` is attained by one ``w``. Those triples span the range of
    ``A (phi, psi) = (R_o phi, R_c psi, Tr phi)`` on ``{Tr phi = Tr psi}``; the
    range of ``S w = (R_o w, R_c w, Tr w)`` is always contained in it, so the
    condition holds iff the two ranks agree.
    """
    Ro = p.restriction(j, Side.OMEGA).matrix
    Rc = p.restriction(j, Side.COMPLEMENT).matrix
    T = p.trace(j).matrix
    n = Ro.shape[1]
    S = np.vstack([Ro, Rc, T])
    V = sla.null_space(np.hstack([T, -T]), rcond=RANK_RTOL)
    Z = np.zeros
    A = np.block([[Ro, Z((Ro.shape[0], n))], [Z((Rc.shape[0], n)), Rc], [T, Z((T.shape[0], n))]])
    AV = A @ V
    scale = np.linalg.norm(S, 2)
    return TraceExtensionCheck(j, _rank(S, scale), _rank(np.hstack([S, AV]), scale))


def kernel_intersection_defect(p: Problem, j):
    """``max |Tr_j k|`` over a unit basis of ``ker R_omega`` intersected with ``ker R_complement``."""
    stacked = np.vstack([p.restriction(j, Side.OMEGA).matrix, p.restriction(j, Side.COMPLEMENT).matrix])
    K = sla.null_space(stacked, rcond=RANK_RTOL)
    if K.shape[1] == 0:
        return 0.0
    T = p.trace(j).matrix
    return float(np.max(np.abs(T @ K)) / max(np.linalg.norm(T, 2), 1e-300))


def verify_conditions(p: Problem, lambda_tol=DEFAULT_LAMBDA_TOL, locality_tol=DEFAULT_LOCALITY_TOL):
    """Check coercivity, locality, trace extension and trace factorization.

    Never raises on a failed condition; inspect the returned report.
    """
    rep = p.infsup
    return ConditionsReport(
        lambda1=rep.lambda1, lambda2=rep.lambda2, norm_B=rep.norm_B, lambda_tol=lambda_tol,
        locality_residual=locality_residual(p), locality_tol=locality_tol,
        trace_extension=[trace_extension_check(p, j) for j in (1, 2)],
        kernel_intersection_defect=[kernel_intersection_defect(p, j) for j in (1, 2)],
        factored_trace={side.value: p.factored_trace(side) is not None for side in Side},
    )
