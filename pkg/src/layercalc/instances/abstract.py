"""Random abstract problems that satisfy the structural conditions by construction.

``H_j`` is built on degrees of freedom ordered ``[I_omega | Gamma_j | I_complement]``.
The restriction to Omega keeps ``I_omega`` and ``Gamma_j``, the restriction to
the complement keeps ``Gamma_j`` and ``I_complement``, and ``Tr_j`` keeps
``Gamma_j``. A random invertible change of coordinates is then applied so
that none of the maps is a plain coordinate selection.
"""

import numpy as np

from ..errors import ConfigError, RetryExhausted
from ..hilbert import SesquilinearForm, Space
from ..laxmilgram import inf_sup
from ..problem import build_problem

MAX_DRAWS = 10


def _complex_normal(rng, shape, real=False):
    if real:
        return rng.standard_normal(shape).astype(complex)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _random_gram(rng, n, real):
    X = _complex_normal(rng, (n, n), real)
    G = 0.5 * (np.eye(n) + X.conj().T @ X / n)
    return 0.5 * (G + G.conj().T)


def _mixing(rng, n, real, strength=0.3):
    return np.eye(n) + strength * _complex_normal(rng, (n, n), real) / np.sqrt(n)


def _selection(n, idx):
    S = np.zeros((len(idx), n), dtype=complex)
    S[np.arange(len(idx)), idx] = 1.0
    return S


def _local_block(rng, rows, cols, eps, hermitian, real):
    # identity aligned on the trailing (interior) block so rectangular blocks stay coercive
    base = np.eye(rows, cols, k=cols - rows, dtype=complex)
    P = _complex_normal(rng, (rows, cols), real) / np.sqrt(max(rows, cols))
    if hermitian:
        P = 0.5 * (P + P.conj().T)
    return base + eps * P


def make_abstract(seed, dims, hermitian=False, real=False, mix=True, min_lambda=0.1, perturbation=0.3):
    """Build a random coercive problem.

    Parameters
    ----------
    seed : int
        Seed for :func:`numpy.random.default_rng`; equal seeds give identical problems.
    dims : tuple of 4 ints
        ``(n_omega, n_complement, n_gamma1, n_gamma2)``. When the two boundary
        dimensions differ, the interior Omega block of the space with fewer
        boundary coordinates is padded so that ``dim H1 = dim H2``.
    hermitian : bool
        Use one space for both slots and Hermitian local forms (self-adjoint problem).
    real : bool
        Draw all matrices real.
    min_lambda : float
        Minimum accepted inf-sup constant; up to ten draws are attempted.
    """
    try:
        n_om, n_c, g1, g2 = (int(d) for d in dims)
    except (TypeError, ValueError):
        raise ConfigError(f"dims must be four integers, got {dims!r}") from None
    if min(n_om, n_c, g1, g2) < 1:
        raise ConfigError(f"all dims must be >= 1, got {tuple(dims)}")
    if hermitian and g1 != g2:
        raise ConfigError("a self-adjoint instance needs n_gamma1 == n_gamma2")

    rng = np.random.default_rng(seed)
    gmax = max(g1, g2)
    layout = {}
    for j, g in ((1, g1), (2, g2)):
        om = n_om + gmax - g
        n = om + g + n_c
        idx = np.arange(n)
        layout[j] = dict(
            n=n,
            omega=np.concatenate([idx[:om], idx[om:om + g]]),
            complement=idx[om:],
            gamma=idx[om:om + g],
        )
    n = layout[1]["n"]

    for _ in range(MAX_DRAWS):
        if hermitian:
            G = _random_gram(rng, n, real)
            grams = {1: G, 2: G}
            Q = _mixing(rng, n, real) if mix else np.eye(n, dtype=complex)
            mixes = {1: Q, 2: Q}
        else:
            grams = {j: _random_gram(rng, n, real) for j in (1, 2)}
            mixes = {j: (_mixing(rng, n, real) if mix else np.eye(n, dtype=complex)) for j in (1, 2)}
        k_om = (len(layout[1]["omega"]), len(layout[2]["omega"]))
        k_c = (len(layout[1]["complement"]), len(layout[2]["complement"]))
        B_om = _local_block(rng, *k_om, perturbation, hermitian, real)
        B_c = _local_block(rng, *k_c, perturbation, hermitian, real)

        # dof coordinates y = Q^{-1} x; forms transform as Q^{-H} M Q^{-1}
        Qinv = {j: np.linalg.inv(mixes[j]) for j in (1, 2)}
        sel = {
            (j, key): _selection(n, layout[j][key]) @ Qinv[j]
            for j in (1, 2) for key in ("omega", "complement", "gamma")
        }
        B = (sel[(1, "omega")].conj().T @ B_om @ sel[(2, "omega")]
             + sel[(1, "complement")].conj().T @ B_c @ sel[(2, "complement")])
        G = {j: Qinv[j].conj().T @ grams[j] @ Qinv[j] for j in (1, 2)}
        G = {j: 0.5 * (G[j] + G[j].conj().T) for j in (1, 2)}

        H1 = Space(G[1])
        H2 = H1 if hermitian else Space(G[2])
        form = SesquilinearForm(H1, H2, B)
        if inf_sup(form).lam < min_lambda:
            continue
        return build_problem(
            H1, H2, form,
            sel[(1, "omega")], sel[(1, "complement")], sel[(2, "omega")], sel[(2, "complement")],
            B_om, B_c, sel[(1, "gamma")], sel[(2, "gamma")],
            name=f"abstract(seed={seed}, dims={tuple(int(d) for d in dims)})",
        )
    raise RetryExhausted(f"no draw with inf-sup constant >= {min_lambda} in {MAX_DRAWS} attempts (seed {seed})")
