"""Finite-dimensional Hilbert spaces, forms, quotients and duals.

All pairings are conjugate-linear in the first slot: ``B(u, v) = u^H M v``
and ``<f, g> = f^H a`` for a functional with action vector ``a``.

Elements of a quotient space (range of a surjection ``R``) are stored as
coordinate vectors in the range of ``R``. The induced Gram matrix is
``(R G^{-1} R^H)^{-1}``, which realizes the infimum norm over extensions.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateQuotientError, DegenerateSpaceError, ShapeError

HERMITIAN_TOL = 1e-13
PD_TOL = 1e-12
RANK_TOL = 1e-10


def as_vector(v, dim=None, name="vector"):
    """Return ``v`` as a 1-D complex array, checking its length."""
    arr = np.asarray(v, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ShapeError(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


def as_matrix(m, shape=None, name="matrix"):
    arr = np.atleast_2d(np.asarray(m, dtype=complex))
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ShapeError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


def _hermitian_pd(gram, name="gram"):
    g = as_matrix(gram, name=name)
    if g.shape[0] != g.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {g.shape}")
    scale = np.max(np.abs(g)) if g.size else 0.0
    if scale == 0.0 or np.max(np.abs(g - g.conj().T)) > HERMITIAN_TOL * scale:
        raise DegenerateSpaceError(f"{name} is not Hermitian")
    g = 0.5 * (g + g.conj().T)
    eig = np.linalg.eigvalsh(g)
    if eig[0] <= PD_TOL * eig[-1]:
        raise DegenerateSpaceError(
            f"{name} is not positive definite (eigenvalue range {eig[0]:.3e}..{eig[-1]:.3e})"
        )
    return g


@dataclass(frozen=True, eq=False)
class Space:
    """A Hilbert space ``C^dim`` with inner product ``u^H gram v``."""

    gram: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gram", _hermitian_pd(self.gram))

    @property
    def dim(self):
        return self.gram.shape[0]

    @cached_property
    def cholesky(self):
        """Lower Cholesky factor ``L`` with ``gram = L L^H``."""
        return np.linalg.cholesky(self.gram)

    @cached_property
    def _cho(self):
        return sla.cho_factor(self.gram, lower=True)

    @cached_property
    def gram_inv(self):
        inv = sla.cho_solve(self._cho, np.eye(self.dim, dtype=complex))
        return 0.5 * (inv + inv.conj().T)

    def solve_gram(self, rhs):
        """Return ``gram^{-1} rhs``."""
        return sla.cho_solve(self._cho, np.asarray(rhs, dtype=complex))

    def inner(self, u, v):
        u = as_vector(u, self.dim)
        v = as_vector(v, self.dim)
        return complex(u.conj() @ self.gram @ v)

    def norm(self, v):
        return norm(self, v)

    def whiten(self, v):
        """Coordinates in an orthonormal basis: ``L^H v``."""
        return self.cholesky.conj().T @ np.asarray(v, dtype=complex)

    def unwhiten(self, x):
        """Inverse of :meth:`whiten`."""
        return sla.solve_triangular(self.cholesky.conj().T, np.asarray(x, dtype=complex), lower=False)

    def random_vector(self, rng, unit=False):
        v = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        if unit:
            v = v / self.norm(v)
        return v


def norm(space, v):
    """Norm ``sqrt(v^H gram v)`` of ``v`` in ``space``."""
    v = as_vector(v, space.dim)
    val = v.conj() @ space.gram @ v
    return float(np.sqrt(max(val.real, 0.0)))


@dataclass(frozen=True, eq=False)
class LinearMap:
    """A linear map from ``source`` into ``C^target_dim``."""

    source: Space
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, name="map matrix")
        if m.shape[1] != self.source.dim:
            raise ShapeError(f"map has {m.shape[1]} columns but source dimension is {self.source.dim}")
        object.__setattr__(self, "matrix", m)

    @property
    def target_dim(self):
        return self.matrix.shape[0]

    def __call__(self, v):
        return self.matrix @ as_vector(v, self.source.dim)

    @cached_property
    def singular_values(self):
        return np.linalg.svd(self.matrix, compute_uv=False)

    def has_full_row_rank(self, tol=RANK_TOL):
        s = self.singular_values
        return s.shape[0] == self.target_dim and s[-1] > tol * s[0]

    @cached_property
    def kernel(self):
        """Euclidean-orthonormal basis of the null space, as columns."""
        return sla.null_space(self.matrix, rcond=RANK_TOL)


@dataclass(frozen=True, eq=False)
class SesquilinearForm:
    """``B(u, v) = u^H matrix v`` on ``domain_left x domain_right``."""

    domain_left: Space
    domain_right: Space
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, (self.domain_left.dim, self.domain_right.dim), name="form matrix")
        object.__setattr__(self, "matrix", m)

    def __call__(self, u, v):
        u = as_vector(u, self.domain_left.dim)
        v = as_vector(v, self.domain_right.dim)
        return complex(u.conj() @ self.matrix @ v)

    @cached_property
    def whitened(self):
        """Matrix of the form in orthonormal coordinates of both slots."""
        return whiten_operator(self.matrix, self.domain_right, self.domain_left, adjoint_target=True)

    @cached_property
    def singular_values(self):
        return np.linalg.svd(self.whitened, compute_uv=False)

    @property
    def norm(self):
        """Operator norm ``sup |B(u, v)| / (|u| |v|)``."""
        return float(self.singular_values[0])

    def adjoint(self):
        """The form ``B*(v, u) = conj(B(u, v))``."""
        return SesquilinearForm(self.domain_right, self.domain_left, self.matrix.conj().T)


@dataclass(frozen=True, eq=False)
class QuotientSpace(Space):
    """Range of ``surjection`` with the infimum norm inherited from ``parent``."""

    parent: Space = field(default=None)
    surjection: LinearMap = field(default=None)

    @cached_property
    def extension_matrix(self):
        """Matrix ``E`` of the min-norm extension: ``R E = I``."""
        return self.parent.solve_gram(self.surjection.matrix.conj().T) @ self.gram


def quotient_space(parent, R):
    """Quotient of ``parent`` by ``ker R``, coordinatized by the range of ``R``."""
    if not isinstance(R, LinearMap):
        R = LinearMap(parent, R)
    if R.source is not parent and R.source.dim != parent.dim:
        raise ShapeError("surjection source does not match the parent space")
    if not R.has_full_row_rank():
        s = R.singular_values
        raise DegenerateQuotientError(
            f"map of shape {R.matrix.shape} is not surjective "
            f"(singular values {s[-1] if s.size else 0:.3e}..{s[0] if s.size else 0:.3e})"
        )
    rm = R.matrix
    schur = rm @ parent.solve_gram(rm.conj().T)
    schur = 0.5 * (schur + schur.conj().T)
    c = sla.cho_factor(schur, lower=True)
    gram = sla.cho_solve(c, np.eye(R.target_dim, dtype=complex))
    gram = 0.5 * (gram + gram.conj().T)
    return QuotientSpace(gram, parent=parent, surjection=R)


def min_norm_extension(Q, f):
    """The extension ``F`` of ``f`` with ``R F = f`` and minimal parent norm."""
    f = as_vector(f, Q.dim, name="quotient element")
    if not np.any(f):
        return np.zeros(Q.parent.dim, dtype=complex)
    return Q.extension_matrix @ f


def dual_space(D):
    """Dual of ``D`` under the Euclidean coordinate pairing ``<f, g> = f^H g``."""
    return Space(D.gram_inv)


@dataclass(frozen=True, eq=False)
class Functional:
    """A bounded functional on ``space`` with ``<f, self> = f^H action``."""

    space: Space
    action: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "action", as_vector(self.action, self.space.dim, name="action"))

    def __call__(self, f):
        """The pairing ``<f, self>`` (conjugate-linear in ``f``)."""
        return complex(as_vector(f, self.space.dim).conj() @ self.action)

    def norm(self):
        a = self.action
        val = a.conj() @ self.space.solve_gram(a)
        return float(np.sqrt(max(val.real, 0.0)))

    def __add__(self, other):
        return Functional(self.space, self.action + other.action)

    def __sub__(self, other):
        return Functional(self.space, self.action - other.action)

    def __neg__(self):
        return Functional(self.space, -self.action)

    def __mul__(self, c):
        return Functional(self.space, c * self.action)

    __rmul__ = __mul__


def pair(f, g):
    """``<f, g>`` for a space element ``f`` and a functional ``g``."""
    return g(f)


def whiten_operator(A, source, target, adjoint_target=False):
    """Matrix of ``A: source -> target`` in orthonormal coordinates.

    With ``adjoint_target`` the rows of ``A`` are read as a functional pairing
    against ``target`` (the left slot of a form), so the target factor is
    ``L^{-1}`` instead of ``L^H``.
    """
    A = np.asarray(A, dtype=complex)
    right = sla.solve_triangular(source.cholesky, A.conj().T, lower=True).conj().T
    if adjoint_target:
        return sla.solve_triangular(target.cholesky, right, lower=True)
    return target.cholesky.conj().T @ right


def operator_singular_values(A, source, target):
    """Singular values of ``A`` measured in the Gram geometries of both spaces."""
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(whiten_operator(A, source, target), compute_uv=False)


def operator_norm(A, source, target):
    s = operator_singular_values(A, source, target)
    return float(s[0]) if s.size else 0.0


def orthonormal_kernel_basis(space, A):
    """Columns spanning ``ker A`` that are orthonormal in ``space``."""
    K = sla.null_space(np.asarray(A, dtype=complex), rcond=RANK_TOL)
    if K.shape[1] == 0:
        return K
    # Gram-orthonormalize: K (K^H G K)^{-1/2} via Cholesky of the small Gram.
    small = K.conj().T @ space.gram @ K
    small = 0.5 * (small + small.conj().T)
    L = np.linalg.cholesky(small)
    return sla.solve_triangular(L, K.conj().T, lower=True).conj().T
