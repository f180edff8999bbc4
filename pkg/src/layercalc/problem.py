"""The abstract problem tuple: spaces, forms, restrictions and traces.

Index ``j`` selects the test space (1) or the trial space (2). ``B`` acts on
``H1 x H2``; ``B_omega`` and ``B_complement`` act on the restricted coordinate
spaces, i.e. on the ranges of the restriction maps.
"""

import enum
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import ShapeError
from .hilbert import (
    Functional,
    LinearMap,
    QuotientSpace,
    SesquilinearForm,
    Space,
    as_vector,
    dual_space,
    orthonormal_kernel_basis,
    quotient_space,
)
from .laxmilgram import DEFAULT_TOL_COERCIVE, LaxMilgramSolver, inf_sup


class Side(str, enum.Enum):
    OMEGA = "omega"
    COMPLEMENT = "complement"

    @property
    def other(self):
        return Side.COMPLEMENT if self is Side.OMEGA else Side.OMEGA

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"omega": cls.OMEGA, "o": cls.OMEGA, "interior": cls.OMEGA,
                   "complement": cls.COMPLEMENT, "c": cls.COMPLEMENT, "exterior": cls.COMPLEMENT}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown side {value!r}; use 'omega' or 'complement'") from None


@dataclass(frozen=True, eq=False)
class Problem:
    H1: Space
    H2: Space
    B: SesquilinearForm
    R1_omega: LinearMap
    R1_complement: LinearMap
    R2_omega: LinearMap
    R2_complement: LinearMap
    B_omega: SesquilinearForm
    B_complement: SesquilinearForm
    Tr1: LinearMap
    Tr2: LinearMap
    tol_coercive: float = DEFAULT_TOL_COERCIVE
    name: str = "problem"

    def __post_init__(self):
        if self.B.domain_left.dim != self.H1.dim or self.B.domain_right.dim != self.H2.dim:
            raise ShapeError("B must act on H1 x H2")
        for j, H in ((1, self.H1), (2, self.H2)):
            for m in (self.restriction(j, Side.OMEGA), self.restriction(j, Side.COMPLEMENT), self.trace(j)):
                if m.source.dim != H.dim:
                    raise ShapeError(f"map on H{j} has source dimension {m.source.dim}, expected {H.dim}")
        for side in Side:
            F = self.local_form(side)
            if F.matrix.shape != (self.restriction(1, side).target_dim, self.restriction(2, side).target_dim):
                raise ShapeError(f"local form on {side.value} does not match the restriction ranges")

    # -- accessors -----------------------------------------------------------

    def space(self, j):
        return self.H1 if j == 1 else self.H2

    def restriction(self, j, side):
        side = Side.parse(side)
        if j == 1:
            return self.R1_omega if side is Side.OMEGA else self.R1_complement
        return self.R2_omega if side is Side.OMEGA else self.R2_complement

    def trace(self, j):
        return self.Tr1 if j == 1 else self.Tr2

    def local_form(self, side):
        return self.B_omega if Side.parse(side) is Side.OMEGA else self.B_complement

    # -- derived spaces ------------------------------------------------------

    @cached_property
    def _quotients(self):
        out = {}
        for j in (1, 2):
            for side in Side:
                R = self.restriction(j, side)
                F = self.local_form(side)
                dom = F.domain_left if j == 1 else F.domain_right
                if isinstance(dom, QuotientSpace) and dom.surjection is R:
                    out[(j, side)] = dom
                else:
                    out[(j, side)] = quotient_space(self.space(j), R)
        return out

    def restricted_space(self, j, side):
        """``H_j^side``: restrictions of ``H_j`` with the infimum norm."""
        return self._quotients[(j, Side.parse(side))]

    @cached_property
    def D1(self):
        return quotient_space(self.H1, self.Tr1)

    @cached_property
    def D2(self):
        return quotient_space(self.H2, self.Tr2)

    @cached_property
    def N1(self):
        """Dual of ``D2``: Neumann data for the adjoint problem."""
        return dual_space(self.D2)

    @cached_property
    def N2(self):
        """Dual of ``D1``: Neumann data paired with Dirichlet traces of test functions."""
        return dual_space(self.D1)

    def D(self, j):
        return self.D1 if j == 1 else self.D2

    # -- derived operators ---------------------------------------------------

    @cached_property
    def solver(self):
        return LaxMilgramSolver(self.B, self.tol_coercive)

    @cached_property
    def infsup(self):
        return inf_sup(self.B)

    @property
    def lam(self):
        return self.infsup.lam

    @cached_property
    def _local_form_norms(self):
        out = {}
        for side in Side:
            F = self.local_form(side)
            restricted = SesquilinearForm(self.restricted_space(1, side), self.restricted_space(2, side), F.matrix)
            out[side] = restricted.norm
        return out

    def local_form_norm(self, side):
        """Norm of ``B^side`` on ``H_1^side x H_2^side`` (infimum norms)."""
        return self._local_form_norms[Side.parse(side)]

    @cached_property
    def test_kernel_basis(self):
        """``H1``-orthonormal basis of ``{phi : Tr1 phi = 0}``."""
        return orthonormal_kernel_basis(self.H1, self.Tr1.matrix)

    @cached_property
    def _factored_traces(self):
        out = {}
        for side in Side:
            R = self.restriction(2, side).matrix
            X = self.Tr2.matrix @ np.linalg.pinv(R)
            defect = np.max(np.abs(X @ R - self.Tr2.matrix)) if X.size else 0.0
            scale = max(np.max(np.abs(self.Tr2.matrix)), 1.0)
            out[side] = X if defect <= 1e-10 * scale else None
        return out

    def factored_trace(self, side):
        """Matrix ``X`` with ``Tr2 F = X (F|_side)`` for all ``F``, or ``None``."""
        return self._factored_traces[Side.parse(side)]

    def has_factored_traces(self):
        return all(self.factored_trace(s) is not None for s in Side)

    # -- transformations -----------------------------------------------------

    def adjoint(self):
        """The problem for ``B*(phi, psi) = conj(B(psi, phi))``."""
        return Problem(
            H1=self.H2, H2=self.H1, B=self.B.adjoint(),
            R1_omega=self.R2_omega, R1_complement=self.R2_complement,
            R2_omega=self.R1_omega, R2_complement=self.R1_complement,
            B_omega=self.B_omega.adjoint(), B_complement=self.B_complement.adjoint(),
            Tr1=self.Tr2, Tr2=self.Tr1, tol_coercive=self.tol_coercive,
            name=f"adjoint({self.name})",
        )

    def swap_sides(self):
        """Exchange the roles of Omega and its complement."""
        return replace(
            self,
            R1_omega=self.R1_complement, R1_complement=self.R1_omega,
            R2_omega=self.R2_complement, R2_complement=self.R2_omega,
            B_omega=self.B_complement, B_complement=self.B_omega,
            name=f"swapped({self.name})",
        )

    # -- random data ---------------------------------------------------------

    def random_dirichlet(self, rng, j=2):
        return self.D(j).random_vector(rng)

    def random_neumann(self, rng, j=2):
        """Random functional in ``N_j``."""
        N = self.N2 if j == 2 else self.N1
        return Functional(self.D1 if j == 2 else self.D2, N.random_vector(rng))


@dataclass(frozen=True, eq=False)
class InteriorElement:
    """An element of ``H_2^side``, stored in restricted coordinates."""

    problem: Problem
    side: Side
    coeffs: np.ndarray

    def __post_init__(self):
        side = Side.parse(self.side)
        object.__setattr__(self, "side", side)
        dim = self.problem.restriction(2, side).target_dim
        object.__setattr__(self, "coeffs", as_vector(self.coeffs, dim, name="interior coefficients"))

    @property
    def space(self):
        return self.problem.restricted_space(2, self.side)

    def norm(self):
        return self.space.norm(self.coeffs)

    def __add__(self, other):
        self._check(other)
        return InteriorElement(self.problem, self.side, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return InteriorElement(self.problem, self.side, self.coeffs - other.coeffs)

    def __neg__(self):
        return InteriorElement(self.problem, self.side, -self.coeffs)

    def __mul__(self, c):
        return InteriorElement(self.problem, self.side, c * self.coeffs)

    __rmul__ = __mul__

    def _check(self, other):
        if other.problem is not self.problem or other.side is not self.side:
            raise ValueError("interior elements live in different spaces")


def restrict(problem, side, U):
    """``U|_side`` for a global ``U`` in ``H2``."""
    side = Side.parse(side)
    return InteriorElement(problem, side, problem.restriction(2, side)(U))


def coerce_interior(problem, side, u):
    """Accept either an :class:`InteriorElement` or raw restricted coordinates."""
    side = Side.parse(side)
    if isinstance(u, InteriorElement):
        if u.side is not side:
            raise ValueError(f"element lives on {u.side.value}, not {side.value}")
        return u
    return InteriorElement(problem, side, u)


def null_space(A, rcond=1e-10):
    return sla.null_space(np.asarray(A, dtype=complex), rcond=rcond)


def build_problem(H1, H2, B, R1_omega, R1_complement, R2_omega, R2_complement,
                  B_omega, B_complement, Tr1, Tr2, name="problem", **kwargs):
    """Assemble a :class:`Problem` from raw matrices.

    Maps and local forms may be given as arrays; the local forms are placed on
    the restricted spaces ``H_j^side`` with their infimum norms.
    """
    H1 = H1 if isinstance(H1, Space) else Space(H1)
    H2 = H1 if H2 is None else (H2 if isinstance(H2, Space) else Space(H2))

    def lmap(H, m):
        return m if isinstance(m, LinearMap) else LinearMap(H, m)

    R = {
        (1, Side.OMEGA): lmap(H1, R1_omega), (1, Side.COMPLEMENT): lmap(H1, R1_complement),
        (2, Side.OMEGA): lmap(H2, R2_omega), (2, Side.COMPLEMENT): lmap(H2, R2_complement),
    }
    if H1 is H2 and np.array_equal(R[(1, Side.OMEGA)].matrix, R[(2, Side.OMEGA)].matrix):
        R[(2, Side.OMEGA)] = R[(1, Side.OMEGA)]
    if H1 is H2 and np.array_equal(R[(1, Side.COMPLEMENT)].matrix, R[(2, Side.COMPLEMENT)].matrix):
        R[(2, Side.COMPLEMENT)] = R[(1, Side.COMPLEMENT)]
    Q = {}
    for key, m in R.items():
        if key[0] == 2 and m is R[(1, key[1])]:
            Q[key] = Q[(1, key[1])]
        else:
            Q[key] = quotient_space(H1 if key[0] == 1 else H2, m)
    local = {}
    for side, M in ((Side.OMEGA, B_omega), (Side.COMPLEMENT, B_complement)):
        M = M.matrix if isinstance(M, SesquilinearForm) else M
        local[side] = SesquilinearForm(Q[(1, side)], Q[(2, side)], M)
    Tr1 = lmap(H1, Tr1)
    Tr2 = Tr1 if (H1 is H2 and np.array_equal(lmap(H2, Tr2).matrix, Tr1.matrix)) else lmap(H2, Tr2)
    return Problem(
        H1=H1, H2=H2,
        B=B if isinstance(B, SesquilinearForm) else SesquilinearForm(H1, H2, B),
        R1_omega=R[(1, Side.OMEGA)], R1_complement=R[(1, Side.COMPLEMENT)],
        R2_omega=R[(2, Side.OMEGA)], R2_complement=R[(2, Side.COMPLEMENT)],
        B_omega=local[Side.OMEGA], B_complement=local[Side.COMPLEMENT],
        Tr1=Tr1, Tr2=Tr2, name=name, **kwargs,
    )
