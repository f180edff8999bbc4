"""Newton, single layer and double layer potentials, and Neumann traces.

Every potential is built from Lax-Milgram solves against the global form
``B``; no fundamental solution or kernel quadrature is involved.
"""

import numpy as np

from .errors import NotASolution
from .hilbert import Functional, as_vector, min_norm_extension
from .problem import InteriorElement, Problem, Side, coerce_interior, restrict

DEFAULT_TOL_SOLUTION = 1e-9


def _action(problem, g, predual):
    if isinstance(g, Functional):
        a = g.action
    else:
        a = np.asarray(g, dtype=complex)
    return as_vector(a, predual.dim, name="functional action")


def apply_L(p: Problem, u) -> Functional:
    """``Lu`` in ``H1*``: ``<phi, Lu> = B(phi, u)``."""
    u = as_vector(u, p.H2.dim)
    return Functional(p.H1, p.B.matrix @ u)


def L_indicator(p: Problem, side, u) -> Functional:
    """``L(u 1_side)`` in ``H1*``: ``<phi, L(u 1_side)> = B^side(phi|_side, u)``.

    Defined for every ``u`` in ``H_2^side``, solution or not.
    """
    u = coerce_interior(p, side, u)
    R1 = p.restriction(1, u.side).matrix
    return Functional(p.H1, R1.conj().T @ (p.local_form(u.side).matrix @ u.coeffs))


def interior_residual(p: Problem, side, u) -> float:
    """Dual norm of ``(Lu)|_side`` on ``{phi in H1 : Tr1 phi = 0}``.

    Zero certifies that ``u`` solves the homogeneous equation on ``side``.
    """
    a = L_indicator(p, side, u).action
    Z = p.test_kernel_basis
    if Z.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(Z.conj().T @ a))


def neumann_trace(p: Problem, side, u, force=False, tol=DEFAULT_TOL_SOLUTION) -> Functional:
    """Weak conormal derivative ``M^side u`` as an element of ``N2``.

    ``<Tr1 phi, M u> = B^side(phi|_side, u)``, evaluated on min-norm extensions
    of a basis of ``D1``. The value depends only on ``Tr1 phi`` when
    ``u`` solves ``(Lu)|_side = 0``; otherwise :class:`NotASolution` is raised
    unless ``force`` is set.
    """
    u = coerce_interior(p, side, u)
    if not force:
        r = interior_residual(p, u.side, u)
        threshold = tol * u.norm()
        if r > threshold:
            raise NotASolution(r, threshold)
    a = L_indicator(p, u.side, u).action
    E1 = p.D1.extension_matrix
    return Functional(p.D1, E1.conj().T @ a)


def newton_potential(p: Problem, H) -> np.ndarray:
    """``P H`` in ``H2`` with ``B(phi, P H) = <phi, H>`` for all ``phi``."""
    return p.solver.solve(_action(p, H, p.H1))


def single_layer(p: Problem, g, side=None) -> np.ndarray:
    """``S g`` in ``H2`` with ``B(phi, S g) = <Tr1 phi, g>`` for all ``phi``.

    ``side`` is accepted for symmetry with the double layer and ignored: the
    single layer does not depend on which side is called Omega.
    """
    a = _action(p, g, p.D1)
    if not np.any(a):
        return np.zeros(p.H2.dim, dtype=complex)
    return p.solver.solve_action(p.Tr1.matrix.conj().T @ a)


def dirichlet_extension(p: Problem, f):
    """Canonical extension ``F`` of ``f in D2``: the min-norm one."""
    return min_norm_extension(p.D2, f)


def _newton_of_indicator(p, side, F):
    """``P(L(1_side F))`` in ``H2``."""
    Fs = p.restriction(2, side)(F)
    return newton_potential(p, L_indicator(p, side, Fs))


def double_layer(p: Problem, side, f, extension=None) -> InteriorElement:
    """``D_side f = -F|_side + P(L(1_side F))|_side`` for any ``F`` with ``Tr2 F = f``.

    ``extension`` overrides the canonical min-norm ``F``; the result does not
    depend on the choice.
    """
    side = Side.parse(side)
    f = as_vector(f, p.D2.dim, name="Dirichlet data")
    R2 = p.restriction(2, side)
    if not np.any(f) and extension is None:
        return InteriorElement(p, side, np.zeros(R2.target_dim, dtype=complex))
    F = dirichlet_extension(p, f) if extension is None else as_vector(extension, p.H2.dim)
    return InteriorElement(p, side, R2(-F + _newton_of_indicator(p, side, F)))


def double_layer_alternate(p: Problem, side, f, extension=None) -> InteriorElement:
    """``D_side f = -P(L(1_other F))|_side``."""
    side = Side.parse(side)
    f = as_vector(f, p.D2.dim, name="Dirichlet data")
    F = dirichlet_extension(p, f) if extension is None else as_vector(extension, p.H2.dim)
    return InteriorElement(p, side, -p.restriction(2, side)(_newton_of_indicator(p, side.other, F)))


def trace_of_double_layer(p: Problem, side, f, extension=None) -> np.ndarray:
    """``Tr2^side D_side f = -Tr2 F + Tr2 P(L(1_side F))`` in ``D2``."""
    side = Side.parse(side)
    f = as_vector(f, p.D2.dim, name="Dirichlet data")
    if not np.any(f) and extension is None:
        return np.zeros(p.D2.dim, dtype=complex)
    F = dirichlet_extension(p, f) if extension is None else as_vector(extension, p.H2.dim)
    return p.Tr2(-F + _newton_of_indicator(p, side, F))


def factored_trace(p: Problem, side, u) -> np.ndarray:
    """``Tr2^side u`` for ``u in H_2^side``; needs ``Tr2`` to factor through ``|_side``."""
    u = coerce_interior(p, side, u)
    X = p.factored_trace(u.side)
    if X is None:
        raise ValueError(f"Tr2 does not factor through the restriction to {u.side.value}")
    return X @ u.coeffs


def single_layer_on(p: Problem, side, g) -> InteriorElement:
    """``S g|_side``."""
    return restrict(p, side, single_layer(p, g))


def adjoint_problem(p: Problem) -> Problem:
    return p.adjoint()


def kernel_perturbations(p: Problem, rng, count, scale=1.0):
    """``count`` random elements of ``ker Tr2`` with ``H2`` norm ``scale``."""
    K = p.Tr2.kernel
    out = []
    for _ in range(count):
        if K.shape[1] == 0:
            out.append(np.zeros(p.H2.dim, dtype=complex))
            continue
        c = rng.standard_normal(K.shape[1]) + 1j * rng.standard_normal(K.shape[1])
        k = K @ c
        out.append(scale * k / p.H2.norm(k))
    return out
