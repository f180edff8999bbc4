import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from layercalc.errors import DegenerateQuotientError, DegenerateSpaceError, ShapeError
from layercalc.hilbert import (
    Functional,
    LinearMap,
    SesquilinearForm,
    Space,
    dual_space,
    min_norm_extension,
    norm,
    operator_norm,
    orthonormal_kernel_basis,
    quotient_space,
)

from conftest import random_complex
from oracles import dual_norm_sampling, kkt_min_norm


def random_gram(rng, n):
    X = random_complex(rng, n, n)
    return np.eye(n) + X.conj().T @ X / n


# -- norm ---------------------------------------------------------------------

def test_norm_euclidean():
    assert norm(Space(np.eye(2)), [3, 4]) == pytest.approx(5.0)


def test_norm_zero_vector():
    assert norm(Space(random_gram(np.random.default_rng(0), 3)), np.zeros(3)) == 0.0


def test_norm_diagonal_gram():
    assert norm(Space(np.diag([2.0, 1.0])), [1, 0]) == pytest.approx(np.sqrt(2))


def test_norm_shape_mismatch():
    with pytest.raises(ShapeError):
        norm(Space(np.eye(2)), [1, 2, 3])


def test_space_rejects_non_hermitian_and_indefinite():
    with pytest.raises(DegenerateSpaceError):
        Space(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(DegenerateSpaceError):
        Space(np.diag([1.0, -1.0]))
    with pytest.raises(DegenerateSpaceError):
        Space(np.diag([1.0, 1e-14]))


# -- quotient spaces ----------------------------------------------------------

def test_quotient_projection_onto_first_coordinate():
    Q = quotient_space(Space(np.eye(3)), np.array([[1.0, 0, 0]]))
    assert np.allclose(Q.gram, [[1.0]])


def test_quotient_of_sum_map():
    Q = quotient_space(Space(np.eye(2)), np.array([[1.0, 1.0]]))
    assert np.allclose(Q.gram, [[0.5]])


def test_quotient_weighted_coordinate():
    Q = quotient_space(Space(np.diag([4.0, 1.0])), np.array([[1.0, 0.0]]))
    assert np.allclose(Q.gram, [[4.0]])


def test_quotient_rejects_rank_deficient_map():
    with pytest.raises(DegenerateQuotientError):
        quotient_space(Space(np.eye(3)), np.array([[1.0, 0, 0], [2.0, 0, 0]]))


def test_min_norm_extension_examples():
    Q = quotient_space(Space(np.eye(2)), np.array([[1.0, 1.0]]))
    assert np.allclose(min_norm_extension(Q, [0]), 0)
    assert np.allclose(min_norm_extension(Q, [1]), [0.5, 0.5])


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8), k=st.integers(1, 8))
def test_quotient_norm_matches_kkt_oracle(seed, n, k):
    k = min(k, n)
    rng = np.random.default_rng(seed)
    G = random_gram(rng, n)
    R = random_complex(rng, k, n)
    f = random_complex(rng, k)
    Q = quotient_space(Space(G), R)
    _, oracle = kkt_min_norm(G, R, f)
    assert abs(Q.norm(f) - oracle) <= 1e-9 * oracle


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8), k=st.integers(1, 8))
def test_extension_round_trip_and_minimality(seed, n, k):
    k = min(k, n)
    rng = np.random.default_rng(seed)
    P = Space(random_gram(rng, n))
    R = random_complex(rng, k, n)
    f = random_complex(rng, k)
    Q = quotient_space(P, R)
    F = min_norm_extension(Q, f)
    assert np.linalg.norm(R @ F - f) <= 1e-11 * np.linalg.norm(f) * max(1.0, np.linalg.norm(R, 2))
    assert abs(P.norm(F) - Q.norm(f)) <= 1e-10 * Q.norm(f)


# -- dual spaces --------------------------------------------------------------

def test_dual_of_identity_and_diagonal():
    assert np.allclose(dual_space(Space(np.eye(3))).gram, np.eye(3))
    assert np.allclose(dual_space(Space(np.diag([4.0]))).gram, [[0.25]])


def test_double_dual_is_original():
    G = random_gram(np.random.default_rng(5), 4)
    assert np.allclose(dual_space(dual_space(Space(G))).gram, G, atol=1e-12)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8))
def test_sampled_dual_norm_never_exceeds_exact(seed, n):
    rng = np.random.default_rng(seed)
    D = Space(random_gram(rng, n))
    g = Functional(D, random_complex(rng, n))
    plain, _ = dual_norm_sampling(D.gram, g.action, rng, samples=10_000)
    assert plain <= g.norm() * (1 + 1e-9)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 2))
def test_sampled_dual_norm_reaches_exact_in_low_dimension(seed, n):
    rng = np.random.default_rng(seed)
    D = Space(random_gram(rng, n))
    g = Functional(D, random_complex(rng, n))
    plain, _ = dual_norm_sampling(D.gram, g.action, rng, samples=10_000)
    assert plain >= 0.99 * g.norm()


@pytest.mark.parametrize("n", [3, 5, 8])
def test_refined_dual_norm_reaches_exact_up_to_dimension_eight(n):
    rng = np.random.default_rng(100 + n)
    D = Space(random_gram(rng, n))
    g = Functional(D, random_complex(rng, n))
    plain, refined = dual_norm_sampling(D.gram, g.action, rng, samples=10_000, refine_steps=4000)
    assert plain <= refined <= g.norm() * (1 + 1e-9)
    assert refined >= 0.99 * g.norm()


def test_functional_pairing_is_conjugate_linear_in_first_slot():
    D = Space(np.eye(2))
    g = Functional(D, np.array([1.0, 2.0j]))
    f = np.array([1.0j, 1.0])
    assert g(f) == pytest.approx(np.conj(1j) * 1 + 1 * 2j)
    assert g(2j * f) == pytest.approx(-2j * g(f))


# -- maps and forms -----------------------------------------------------------

def test_sesquilinear_form_value_convention():
    H = Space(np.eye(2))
    M = np.array([[1.0, 2.0], [0.0, 1.0j]])
    B = SesquilinearForm(H, H, M)
    u, v = np.array([1j, 0]), np.array([0, 1.0])
    assert B(u, v) == pytest.approx(np.conj(1j) * 2.0)


def test_form_shape_validation():
    with pytest.raises(ShapeError):
        SesquilinearForm(Space(np.eye(2)), Space(np.eye(3)), np.eye(2))


def test_form_adjoint_identity(rng):
    G1, G2 = random_gram(rng, 3), random_gram(rng, 3)
    B = SesquilinearForm(Space(G1), Space(G2), random_complex(rng, 3, 3))
    Bs = B.adjoint()
    for _ in range(20):
        phi, psi = random_complex(rng, 3), random_complex(rng, 3)
        assert abs(Bs(phi, psi) - np.conj(B(psi, phi))) <= 1e-13 * max(1, abs(B(psi, phi)))


def test_operator_norm_in_gram_geometry():
    A = np.eye(2)
    assert operator_norm(A, Space(np.diag([4.0, 1.0])), Space(np.eye(2))) == pytest.approx(1.0)


def test_orthonormal_kernel_basis(rng):
    H = Space(random_gram(rng, 5))
    A = random_complex(rng, 2, 5)
    Z = orthonormal_kernel_basis(H, A)
    assert Z.shape == (5, 3)
    assert np.allclose(A @ Z, 0, atol=1e-12)
    assert np.allclose(Z.conj().T @ H.gram @ Z, np.eye(3), atol=1e-12)


def test_linear_map_kernel(rng):
    L = LinearMap(Space(np.eye(4)), random_complex(rng, 2, 4))
    assert L.kernel.shape == (4, 2)
    assert L.has_full_row_rank()
