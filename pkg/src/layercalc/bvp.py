"""Dirichlet and Neumann problems: direct solvers, layer methods, equivalence checks.

The boundary space of interior solutions is ``H_2^side`` itself and the trace
of an interior element is the factored trace, so the direct solvers and the
layer-potential solvers act on the same objects and can be compared.

Coordinates
-----------
``TrS`` maps Neumann data (actions on ``D1``, Gram ``D1.gram^{-1}``) to ``D2``.
``MD`` maps ``D2`` to Neumann data. Singular values are taken after whitening
in those geometries.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import potentials as pot
from .errors import Inconsistent, NotInvertible, Singular
from .hilbert import Functional, Space, as_vector, min_norm_extension, whiten_operator
from .problem import InteriorElement, Problem, Side

DEFAULT_TOL_INVERT = 1e-8
RANK_RTOL = 1e-10
TOL_TRACE = 1e-11
TOL_LAYER = 1e-9
TOL_NEUMANN = 1e-9


# -- small linear-algebra helpers ---------------------------------------------

def _whitened_svd(A, source, target, functional_target=False):
    W = whiten_operator(A, source, target, adjoint_target=functional_target)
    if W.size == 0:
        return W, np.zeros(0), np.zeros((0, 0)), np.zeros((source.dim, 0))
    U, s, Vh = np.linalg.svd(W)
    return W, s, U, Vh.conj().T


def _numerical_kernel(A, source, target, functional_target=False, rtol=RANK_RTOL):
    """Basis of ``ker A`` in source coordinates, rank decided on the whitened matrix."""
    W, s, _, V = _whitened_svd(A, source, target, functional_target)
    if source.dim == 0:
        return np.zeros((0, 0), dtype=complex)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > rtol * scale))
    X = V[:, rank:]
    # V columns are orthonormal whitened coordinates; map back through L^{-H}
    return sla.solve_triangular(source.cholesky.conj().T, X, lower=False)


def _span_dim(M, rtol=RANK_RTOL):
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rtol * max(s[0], 1e-300))) if s[0] > 0 else 0


# -- boundary operators --------------------------------------------------------

@dataclass
class BoundaryOperator:
    """Matrix of ``TrS`` (``N2 -> D2``) or ``MD`` (``D2 -> N2``) on one side."""

    kind: str
    side: Side
    matrix: np.ndarray
    source: object
    target: object
    singular_values: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.singular_values is None:
            _, s, _, _ = _whitened_svd(self.matrix, self.source, self.target)
            self.singular_values = s

    @property
    def shape(self):
        return self.matrix.shape

    def __call__(self, x):
        return self.matrix @ as_vector(x, self.matrix.shape[1])

    @property
    def sigma_max(self):
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    def _padded(self, n):
        s = np.zeros(n)
        k = min(n, self.singular_values.size)
        s[:k] = self.singular_values[:k]
        return s

    @property
    def sigma_min_right(self):
        """Smallest singular value counted against the target dimension (surjectivity)."""
        n = self.matrix.shape[0]
        return float(self._padded(n)[-1]) if n else 0.0

    @property
    def sigma_min_left(self):
        """Smallest singular value counted against the source dimension (injectivity)."""
        n = self.matrix.shape[1]
        return float(self._padded(n)[-1]) if n else 0.0

    @property
    def sigma_min(self):
        return min(self.sigma_min_left, self.sigma_min_right)

    def rank(self, rtol=RANK_RTOL):
        s = self.singular_values
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > rtol * s[0]))

    def kernel(self, rtol=RANK_RTOL):
        return _numerical_kernel(self.matrix, self.source, self.target, rtol=rtol)

    def kernel_dim(self, rtol=RANK_RTOL):
        return self.matrix.shape[1] - self.rank(rtol)

    def cokernel(self, rtol=RANK_RTOL):
        """Basis of the target-orthogonal complement of the range."""
        W, s, U, _ = _whitened_svd(self.matrix, self.source, self.target)
        r = self.rank(rtol)
        return sla.solve_triangular(self.target.cholesky.conj().T, U[:, r:], lower=False)

    def to_dict(self):
        return {"kind": self.kind, "side": self.side.value, "shape": list(self.matrix.shape),
                "singular_values": [float(x) for x in self.singular_values],
                "sigma_min": self.sigma_min, "sigma_max": self.sigma_max}


def boundary_operator(p: Problem, kind, side=Side.OMEGA):
    """Assemble ``TrS`` or ``MD`` column by column from the potentials.

    Raises :class:`NotCoercive` through the solver when ``B`` is not coercive.
    """
    side = Side.parse(side)
    kind = _kind(kind)
    p.solver  # fail early on non-coercive forms
    if kind == "TrS":
        cols = [p.Tr2(pot.single_layer(p, e)) for e in np.eye(p.D1.dim, dtype=complex)]
        M = np.array(cols, dtype=complex).T.reshape(p.D2.dim, p.D1.dim)
        return BoundaryOperator("TrS", side, M, p.N2, p.D2)
    cols = [pot.neumann_trace(p, side, pot.double_layer(p, side, e), force=True).action
            for e in np.eye(p.D2.dim, dtype=complex)]
    M = np.array(cols, dtype=complex).T.reshape(p.D1.dim, p.D2.dim)
    return BoundaryOperator("MD", side, M, p.D2, p.N2)


def _kind(kind):
    k = str(kind).strip()
    aliases = {"trs": "TrS", "dirichlet": "TrS", "md": "MD", "neumann": "MD"}
    if k.lower() not in aliases:
        raise ValueError(f"unknown boundary operator {kind!r}; use 'TrS' or 'MD'")
    return aliases[k.lower()]


# -- direct solvers -------------------------------------------------------------

@dataclass
class DirichletSolution:
    u: InteriorElement
    trace_residual: float
    interior_residual: float
    stability: float
    kernel: np.ndarray

    @property
    def kernel_dim(self):
        return self.kernel.shape[1]

    def to_dict(self):
        return {"side": self.u.side.value, "trace_residual": self.trace_residual,
                "interior_residual": self.interior_residual, "stability": self.stability,
                "kernel_dim": self.kernel_dim, "norm": self.u.norm()}


def _interior_rows(p, side):
    """Rows ``Z^H R1^H B^side`` expressing ``B^side(phi|_side, .) = 0`` for ``Tr1 phi = 0``."""
    R1 = p.restriction(1, side).matrix
    return p.test_kernel_basis.conj().T @ (R1.conj().T @ p.local_form(side).matrix)


def _interior_trace(p, side, u_coeffs):
    X = p.factored_trace(side)
    if X is not None:
        return X @ u_coeffs
    return p.Tr2(min_norm_extension(p.restricted_space(2, side), u_coeffs))


def solve_dirichlet_direct(p: Problem, side, f, unique=True):
    """Solve ``(Lu)|_side = 0``, ``Tr u = f`` for ``u`` in ``H_2^side``.

    The unknown is a global ``U`` with ``Tr2 U = f`` and ``u = U|_side``, so no
    factored trace is needed to pose the problem. With ``unique=False`` a
    non-unique problem returns the min-norm solution instead of raising.

    Raises
    ------
    Singular
        The homogeneous problem has nonzero solutions (carries a kernel basis in
        restricted coordinates).
    Inconsistent
        No ``u`` meets both constraints.
    """
    side = Side.parse(side)
    f = as_vector(f, p.D2.dim, name="Dirichlet data")
    R2 = p.restriction(2, side).matrix
    rows = _interior_rows(p, side) @ R2
    A = np.vstack([rows, p.Tr2.matrix])
    # H2-whitened unknown so the least-squares solution is the min-norm one
    L = p.H2.cholesky
    Aw = sla.solve_triangular(L, A.conj().T, lower=True).conj().T
    scale = max(np.linalg.norm(Aw, 2), 1e-300)
    N = sla.null_space(Aw, rcond=RANK_RTOL)
    N = sla.solve_triangular(L.conj().T, N, lower=False)
    # N is H2-orthonormal, so |N c|_side <= |c| and an absolute cut is meaningful
    Hs = p.restricted_space(2, side)
    K = R2 @ N
    if N.shape[1]:
        Uk, sk, _ = np.linalg.svd(Hs.cholesky.conj().T @ K, full_matrices=False)
        kdim = int(np.sum(sk > 1e-8))
        kernel = sla.solve_triangular(Hs.cholesky.conj().T, Uk[:, :kdim], lower=False)
    else:
        kdim = 0
        kernel = np.zeros((R2.shape[0], 0), dtype=complex)
    if kdim and unique:
        raise Singular(kernel)
    b = np.concatenate([np.zeros(rows.shape[0], dtype=complex), f])
    x, *_ = np.linalg.lstsq(Aw, b, rcond=RANK_RTOL)
    U = sla.solve_triangular(L.conj().T, x, lower=False)
    defect = float(np.linalg.norm(Aw @ x - b))
    nf = p.D2.norm(f)
    threshold = 1e-9 * max(np.linalg.norm(b), scale * np.linalg.norm(x))
    if np.any(f) and defect > threshold:
        raise Inconsistent(defect, threshold)
    u = InteriorElement(p, side, R2 @ U)
    tr_res = p.D2.norm(_interior_trace(p, side, u.coeffs) - f)
    return DirichletSolution(u, tr_res, pot.interior_residual(p, side, u),
                             u.norm() / nf if nf > 0 else 0.0, kernel)


@dataclass
class NeumannSolution:
    u: InteriorElement
    residual: float
    kernel: np.ndarray

    @property
    def kernel_dim(self):
        return self.kernel.shape[1]

    def to_dict(self):
        return {"side": self.u.side.value, "residual": self.residual,
                "kernel_dim": self.kernel_dim, "norm": self.u.norm()}


def neumann_kernel(p: Problem, side):
    """Basis of ``{u in H_2^side : B^side(phi|_side, u) = 0 for all phi}``."""
    side = Side.parse(side)
    A = p.restriction(1, side).matrix.conj().T @ p.local_form(side).matrix
    return _numerical_kernel(A, p.restricted_space(2, side), p.H1, functional_target=True)


def solve_neumann_direct(p: Problem, side, g, tol=TOL_NEUMANN):
    """Solve ``B^side(phi|_side, u) = <Tr1 phi, g>`` for all ``phi`` in ``H1``.

    Returns the solution orthogonal (in ``H_2^side``) to the solution kernel,
    together with that kernel. Raises :class:`Inconsistent` when ``g`` fails the
    compatibility condition, with the defect measured in ``H1*``.
    """
    side = Side.parse(side)
    g = g if isinstance(g, Functional) else Functional(p.D1, g)
    Hs = p.restricted_space(2, side)
    A = p.restriction(1, side).matrix.conj().T @ p.local_form(side).matrix
    b = p.Tr1.matrix.conj().T @ g.action
    kernel = neumann_kernel(p, side)
    Lh = p.H1.cholesky
    Aw = sla.solve_triangular(Lh, A, lower=True)
    bw = sla.solve_triangular(Lh, b, lower=True)
    # whiten the unknown as well so lstsq returns the min-norm solution
    Ls = Hs.cholesky
    Aww = sla.solve_triangular(Ls, Aw.conj().T, lower=True).conj().T
    x, *_ = np.linalg.lstsq(Aww, bw, rcond=RANK_RTOL)
    u = sla.solve_triangular(Ls.conj().T, x, lower=False)
    defect = float(np.linalg.norm(Aw @ u - bw))
    ng = g.norm()
    if defect > tol * max(ng, 1e-300) and ng > 0:
        raise Inconsistent(defect, tol * ng)
    return NeumannSolution(InteriorElement(p, side, u), defect, kernel)


# -- layer methods ---------------------------------------------------------------

@dataclass
class LayerSolution:
    kind: str
    u: InteriorElement
    density: np.ndarray
    residual: float
    stability: float
    sigma_min: float
    sigma_max: float

    def to_dict(self):
        return {"kind": self.kind, "side": self.u.side.value, "residual": self.residual,
                "stability": self.stability, "sigma_min": self.sigma_min,
                "sigma_max": self.sigma_max, "norm": self.u.norm()}


def _pseudo_solve(op: BoundaryOperator, y, rtol):
    """Min-norm least-squares solution of ``op x = y`` in the whitened geometry."""
    W = whiten_operator(op.matrix, op.source, op.target)
    yw = op.target.whiten(y)
    xw, *_ = np.linalg.lstsq(W, yw, rcond=rtol)
    return op.source.unwhiten(xw), float(np.linalg.norm(W @ xw - yw))


def solve_via_layers(p: Problem, side, kind, data, tol_invert=DEFAULT_TOL_INVERT, strict=True,
                     operator=None):
    """Solve a boundary value problem by inverting ``TrS`` or ``MD``.

    ``kind="dirichlet"`` returns ``S g|_side`` with ``g = (TrS)^{-1} f``;
    ``kind="neumann"`` returns ``D_side f`` with ``f = (MD)^{-1} g``.

    In strict mode the operator must have a bounded right inverse
    (``sigma_min >= tol_invert * sigma_max`` over the full target); otherwise
    only the given data has to lie in its range.

    Raises
    ------
    NotInvertible
        Carries the singular-value gap.
    """
    side = Side.parse(side)
    kind = str(kind).lower()
    if kind not in ("dirichlet", "neumann"):
        raise ValueError(f"kind must be 'dirichlet' or 'neumann', got {kind!r}")
    op = operator if operator is not None else boundary_operator(p, "TrS" if kind == "dirichlet" else "MD", side)
    smin, smax = op.sigma_min_right, op.sigma_max
    if strict and not (smax > 0 and smin >= tol_invert * smax):
        raise NotInvertible(op.kind, smin, smax, tol_invert)

    if kind == "dirichlet":
        f = as_vector(data, p.D2.dim, name="Dirichlet data")
        nd = p.D2.norm(f)
        g, lsq = _pseudo_solve(op, f, tol_invert)
        if not strict and lsq > TOL_LAYER * max(nd, 1e-300) and nd > 0:
            raise NotInvertible(op.kind, smin, smax, tol_invert,
                                message=f"data has a component off the range of TrS (defect {lsq:.3e})")
        u = pot.single_layer_on(p, side, Functional(p.D1, g))
        residual = p.D2.norm(_interior_trace(p, side, u.coeffs) - f)
    else:
        gdata = data if isinstance(data, Functional) else Functional(p.D1, data)
        nd = gdata.norm()
        g, lsq = _pseudo_solve(op, gdata.action, tol_invert)
        if not strict and lsq > TOL_LAYER * max(nd, 1e-300) and nd > 0:
            raise NotInvertible(op.kind, smin, smax, tol_invert,
                                message=f"data has a component off the range of MD (defect {lsq:.3e})")
        u = pot.double_layer(p, side, g)
        residual = (pot.neumann_trace(p, side, u, force=True) - gdata).norm()
    return LayerSolution(kind, u, g, float(residual), u.norm() / nd if nd > 0 else 0.0, smin, smax)


# -- equivalence theorems -----------------------------------------------------------

DIRECTIONS = ("surjective->existence", "injective->uniqueness", "uniqueness->injective",
              "existence->surjective")


@dataclass
class EquivalenceReport:
    direction: str
    hypothesis: dict
    conclusion: dict
    consistent: bool
    applicable: bool = True

    def to_dict(self):
        return {"direction": self.direction, "applicable": self.applicable, "consistent": self.consistent,
                "hypothesis": _plain(self.hypothesis), "conclusion": _plain(self.conclusion)}


def _plain(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        elif isinstance(v, np.ndarray):
            v = [float(x) for x in v]
        elif isinstance(v, dict):
            v = _plain(v)
        out[k] = v
    return out


def dirichlet_solution_operator(p: Problem, side):
    """Matrix ``f -> u`` of the direct Dirichlet solver (columns over a ``D2`` basis)."""
    cols = [solve_dirichlet_direct(p, side, e, unique=False).u.coeffs for e in np.eye(p.D2.dim, dtype=complex)]
    return np.array(cols, dtype=complex).T.reshape(p.restriction(2, side).target_dim, p.D2.dim)


def _sample_solutions(p, side, rng, count):
    """Random elements of ``{u in H_2^side : (Lu)|_side = 0}``."""
    Hs = p.restricted_space(2, side)
    rows = _interior_rows(p, side)
    S = _numerical_kernel(rows, Hs, Space(np.eye(rows.shape[0])))
    out = []
    for _ in range(count):
        c = rng.standard_normal(S.shape[1]) + 1j * rng.standard_normal(S.shape[1])
        out.append(InteriorElement(p, side, S @ c))
    return out


def verify_equivalence(p: Problem, side=Side.OMEGA, samples=10, rng=None, seed=0,
                       tol_invert=DEFAULT_TOL_INVERT, slack=0.1, operators=None):
    """Numerical check of the four solvability and invertibility theorems.

    Returns four :class:`EquivalenceReport` objects in the order of
    :data:`DIRECTIONS`. Condition constants are substituted explicitly:
    ``c_S = 1/lambda`` for the single layer, ``c_D = |B^other|/lambda`` for the
    double layer and ``c_M = |B^side|`` for the Neumann trace. Each constant
    inequality is accepted with a ``1 + slack`` factor.
    """
    side = Side.parse(side)
    rng = np.random.default_rng(seed) if rng is None else rng
    lam = p.lam
    c_S = 1.0 / lam
    c_D = p.local_form_norm(side.other) / lam
    c_M = p.local_form_norm(side)
    ops = operators or {}
    TrS = ops.get("TrS") or boundary_operator(p, "TrS", side)
    MD = ops.get("MD") or boundary_operator(p, "MD", side)
    reports = []

    # (1) TrS onto with bounded right inverse -> Dirichlet solvable, |u| <= C1 |f|
    s = TrS.sigma_min_right
    hyp = {"sigma_min": s, "sigma_max": TrS.sigma_max, "tol_invert": tol_invert}
    if TrS.sigma_max > 0 and s >= tol_invert * TrS.sigma_max:
        C0 = 1.0 / s
        C1 = c_S * C0
        worst, worst_res, disagree = 0.0, 0.0, 0.0
        solved = 0
        for _ in range(samples):
            f = p.random_dirichlet(rng)
            try:
                sol = solve_via_layers(p, side, "dirichlet", f, tol_invert, operator=TrS)
            except NotInvertible:
                continue
            solved += 1
            worst = max(worst, sol.stability)
            worst_res = max(worst_res, sol.residual / p.D2.norm(f))
            try:
                direct = solve_dirichlet_direct(p, side, f)
                disagree = max(disagree, (direct.u - sol.u).norm() / max(direct.u.norm(), 1e-300))
            except (Singular, Inconsistent):
                disagree = max(disagree, np.inf)
        hyp.update(C0=C0)
        concl = {"solved": solved, "samples": samples, "C1_bound": C1, "C1_observed": worst,
                 "max_relative_residual": worst_res, "max_direct_disagreement": float(disagree)}
        ok = (solved == samples and worst <= (1 + slack) * C1 and worst_res <= TOL_LAYER
              and disagree <= TOL_LAYER)
        reports.append(EquivalenceReport(DIRECTIONS[0], hyp, concl, bool(ok)))
    else:
        reports.append(EquivalenceReport(DIRECTIONS[0], hyp, {}, True, applicable=False))

    # (2) MD one-to-one with bounded left inverse -> |u| <= C1 |M u| for solutions
    s = MD.sigma_min_left
    hyp = {"sigma_min": s, "sigma_max": MD.sigma_max, "tol_invert": tol_invert}
    if MD.sigma_max > 0 and s >= tol_invert * MD.sigma_max:
        C0 = 1.0 / s
        C1 = c_D * C0 * (c_M * c_S + 1.0) + c_S
        worst = 0.0
        for u in _sample_solutions(p, side, rng, samples):
            nu = u.norm()
            if nu == 0:
                continue
            Mu = pot.neumann_trace(p, side, u, force=True).norm()
            worst = max(worst, nu / Mu if Mu > 0 else np.inf)
        hyp.update(C0=C0)
        concl = {"C1_bound": C1, "C1_observed": float(worst), "samples": samples}
        reports.append(EquivalenceReport(DIRECTIONS[1], hyp, concl, bool(worst <= (1 + slack) * C1)))
    else:
        reports.append(EquivalenceReport(DIRECTIONS[1], hyp, {}, True, applicable=False))

    # (3) uniqueness <-> injectivity, through the kernels
    kernels = {sd: neumann_kernel(p, sd) for sd in Side}
    traces = [np.column_stack([_interior_trace(p, sd, k) for k in kernels[sd].T])
              if kernels[sd].shape[1] else np.zeros((p.D2.dim, 0)) for sd in Side]
    T = np.hstack(traces)
    trace_dim = _span_dim(T) if T.size else 0
    kmd = MD.kernel_dim()
    Kmd = MD.kernel()
    span_match = True
    if kmd and trace_dim:
        span_match = _span_dim(np.hstack([T, Kmd])) == trace_dim
    concl = {"kernel_dim_MD": kmd, "neumann_kernel_dim": {sd.value: int(kernels[sd].shape[1]) for sd in Side},
             "neumann_nonuniqueness_dim": trace_dim, "spans_match": bool(span_match)}
    hyp = {"sigma_min": MD.sigma_min_left, "unique_omega": kernels[Side.OMEGA].shape[1] == 0,
           "unique_complement": kernels[Side.COMPLEMENT].shape[1] == 0}
    reports.append(EquivalenceReport(DIRECTIONS[2], hyp, concl, bool(kmd == trace_dim and span_match)))

    # (4) paired Dirichlet solvability in both sides -> TrS onto
    sols = {}
    all_solvable = True
    for sd in Side:
        try:
            sols[sd] = dirichlet_solution_operator(p, sd)
        except Inconsistent:
            all_solvable = False
    hyp = {"paired_dirichlet_solvable": all_solvable}
    if all_solvable:
        C0 = {sd: _restricted_operator_norm(p, sd, sols[sd]) for sd in Side}
        bound = (p.local_form_norm(Side.OMEGA) * C0[Side.OMEGA]
                 + p.local_form_norm(Side.COMPLEMENT) * C0[Side.COMPLEMENT])
        worst_res, worst_ratio = 0.0, 0.0
        for _ in range(samples):
            f = p.random_dirichlet(rng)
            nf = p.D2.norm(f)
            if nf == 0:
                continue
            g = None
            for sd in Side:
                u = InteriorElement(p, sd, sols[sd] @ f)
                m = pot.neumann_trace(p, sd, u, force=True)
                g = m if g is None else g + m
            worst_res = max(worst_res, p.D2.norm(p.Tr2(pot.single_layer(p, g)) - f) / nf)
            worst_ratio = max(worst_ratio, g.norm() / nf)
        onto = TrS.rank() == p.D2.dim
        hyp.update(C0={sd.value: C0[sd] for sd in Side})
        concl = {"rank_TrS": TrS.rank(), "dim_D2": p.D2.dim, "onto": bool(onto),
                 "max_relative_residual": worst_res, "right_inverse_bound": bound,
                 "right_inverse_observed": worst_ratio}
        ok = onto and worst_res <= TOL_LAYER and worst_ratio <= (1 + slack) * bound
        reports.append(EquivalenceReport(DIRECTIONS[3], hyp, concl, bool(ok)))
    else:
        reports.append(EquivalenceReport(DIRECTIONS[3], hyp, {}, True, applicable=False))
    return reports


def _restricted_operator_norm(p, side, M):
    """Norm of ``M: D2 -> H_2^side``."""
    W = whiten_operator(M, p.D2, p.restricted_space(2, side))
    return float(np.linalg.norm(W, 2)) if W.size else 0.0
