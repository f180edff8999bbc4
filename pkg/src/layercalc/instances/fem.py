"""Galerkin discretizations of divergence-form operators of order 2m.

The outer box carries zero boundary conditions, so the energy inner product
``sum_{|alpha|=m} int conj(d^alpha phi) d^alpha psi`` is positive definite on
the discrete space. Coefficients are constant on each element, Omega is a
mesh-aligned subinterval or subsquare, and the degrees of freedom sitting on
its boundary form the trace coordinates.

Supported discretizations:

* ``m=1, dimension=1``: piecewise-linear hat functions.
* ``m=2, dimension=1``: Hermite cubics with nodal ``(u, u')``.
* ``m=1, dimension=2``: bilinear (Q1) elements on a uniform square grid.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NotCoercive
from ..hilbert import SesquilinearForm, Space
from ..laxmilgram import inf_sup
from ..problem import build_problem
from ..serialization import decode_complex, encode_complex

TRACE_CONVENTIONS = ("top-order", "whitney")
COERCIVITY_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class FemConfig:
    """Parameters of a Galerkin instance.

    ``coefficients`` may be a scalar, a 2x2 matrix (2-D only), an array with one
    entry per element (``(n,)`` in 1-D, ``(n, n)`` or ``(n, n, 2, 2)`` in 2-D,
    indexed ``[row_y, col_x]``), or a mapping ``{"omega": c, "complement": c}``.
    """

    m: int = 1
    dimension: int = 1
    box: tuple = (0.0, 1.0)
    omega: tuple = (0.25, 0.75)
    n_elements: int = 8
    coefficients: object = 1.0
    trace_convention: str = None
    name: str = field(default=None, compare=False)

    def __post_init__(self):
        if self.m not in (1, 2):
            raise ConfigError(f"m must be 1 or 2, got {self.m}")
        if self.dimension not in (1, 2):
            raise ConfigError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.m == 2 and self.dimension != 1:
            raise ConfigError("m=2 is only supported in dimension 1")
        if int(self.n_elements) < 2:
            raise ConfigError("n_elements must be at least 2")
        conv = self.trace_convention
        if conv is None:
            conv = "whitney" if self.m == 2 else "top-order"
            object.__setattr__(self, "trace_convention", conv)
        if conv not in TRACE_CONVENTIONS:
            raise ConfigError(f"trace_convention must be one of {TRACE_CONVENTIONS}, got {conv!r}")
        if self.m == 2 and conv == "top-order":
            raise ConfigError(
                "trace_convention 'top-order' with m=2 records only u' on the boundary; the values "
                "of u there are shared by both sides but untraced, so the trace-extension "
                "condition fails. Use 'whitney'."
            )

    def __eq__(self, other):
        # array coefficients make the generated field-wise comparison ambiguous
        if not isinstance(other, FemConfig):
            return NotImplemented
        a, b = self.to_dict(), other.to_dict()
        a.pop("name", None)
        b.pop("name", None)
        return a == b

    __hash__ = None

    @property
    def resolved_name(self):
        return self.name or f"fem(m={self.m}, d={self.dimension}, n={self.n_elements})"

    def to_dict(self):
        c = self.coefficients
        if isinstance(c, dict):
            coeff = {k: encode_complex(v) for k, v in c.items()}
        else:
            coeff = encode_complex(c)
        out = {
            "m": self.m,
            "dimension": self.dimension,
            "box": _tolist(self.box),
            "omega": _tolist(self.omega),
            "n_elements": int(self.n_elements),
            "coefficients": coeff,
            "trace_convention": self.trace_convention,
        }
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {"m", "dimension", "box", "omega", "n_elements", "coefficients", "trace_convention", "name"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown FemConfig fields: {sorted(unknown)}")
        if "coefficients" in d:
            c = d["coefficients"]
            if isinstance(c, dict):
                d["coefficients"] = {k: decode_complex(v) for k, v in c.items()}
            else:
                d["coefficients"] = decode_complex(c)
        for key in ("box", "omega"):
            if key in d:
                d[key] = _totuple(d[key])
        return cls(**d)


def _tolist(t):
    return [(_tolist(x) if isinstance(x, (tuple, list)) else float(x)) for x in t]


def _totuple(t):
    return tuple((_totuple(x) if isinstance(x, (tuple, list)) else float(x)) for x in t)


def _node_index(x, x0, h, n, what):
    k = (x - x0) / h
    kr = int(round(k))
    if abs(k - kr) > 1e-9:
        raise ConfigError(f"{what} = {x} is not on the mesh (h = {h})")
    if not 0 < kr < n:
        raise ConfigError(f"{what} = {x} must lie strictly inside the box")
    return kr


# -- element matrices ---------------------------------------------------------

_GAUSS2 = (np.array([-1.0, 1.0]) / np.sqrt(3.0), np.array([1.0, 1.0]))


def p1_stiffness(h):
    return np.array([[1.0, -1.0], [-1.0, 1.0]]) / h


def hermite_second_derivatives(t, h):
    """Second derivatives of the four Hermite cubics at reference points ``t in [0, 1]``.

    Basis order ``(u_left, u'_left, u_right, u'_right)`` on an element of length ``h``.
    """
    t = np.asarray(t, dtype=float)
    return np.stack([
        (12 * t - 6) / h**2,
        (6 * t - 4) / h,
        (6 - 12 * t) / h**2,
        (6 * t - 2) / h,
    ])


def hermite_stiffness(h):
    """``int_0^h N_i'' N_j''`` by two-point Gauss quadrature (exact for linear x linear)."""
    pts, wts = _GAUSS2
    t = 0.5 * (pts + 1.0)
    d2 = hermite_second_derivatives(t, h)
    return (d2 * (0.5 * h * wts)) @ d2.T


def q1_stiffness(hx, hy, A):
    """``int grad N_i^T A grad N_j`` on an ``hx x hy`` rectangle.

    Local node order: (0,0), (1,0), (1,1), (0,1) counterclockwise.
    """
    A = np.asarray(A, dtype=complex)
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    pts, wts = _GAUSS2
    K = np.zeros((4, 4), dtype=complex)
    for xi, wx in zip(0.5 * (pts + 1), wts):
        for eta, wy in zip(0.5 * (pts + 1), wts):
            grads = np.empty((4, 2))
            for a, (cx, cy) in enumerate(corners):
                fx = xi if cx else 1 - xi
                fy = eta if cy else 1 - eta
                dfx = (1.0 if cx else -1.0) / hx
                dfy = (1.0 if cy else -1.0) / hy
                grads[a] = (dfx * fy, fx * dfy)
            K += (0.25 * hx * hy * wx * wy) * (grads @ A @ grads.T)
    return K


# -- coefficient layout -------------------------------------------------------

def _element_coefficients(cfg, in_omega):
    """Per-element coefficients: shape ``(n,)`` in 1-D, ``(n, n, 2, 2)`` in 2-D."""
    n = int(cfg.n_elements)
    c = cfg.coefficients
    if cfg.dimension == 1:
        shape = (n,)
        if isinstance(c, dict):
            out = np.where(in_omega, complex(c["omega"]), complex(c["complement"]))
        else:
            arr = np.asarray(c, dtype=complex)
            if arr.ndim == 0:
                out = np.full(shape, complex(arr))
            elif arr.shape == shape:
                out = arr
            else:
                raise ConfigError(f"1-D coefficients must be scalar or length {n}, got shape {arr.shape}")
        return out.astype(complex)

    def as_tensor(v):
        a = np.asarray(v, dtype=complex)
        if a.ndim == 0:
            return a * np.eye(2)
        if a.shape == (2, 2):
            return a
        raise ConfigError(f"2-D coefficient must be a scalar or 2x2 matrix, got shape {a.shape}")

    if isinstance(c, dict):
        om, co = as_tensor(c["omega"]), as_tensor(c["complement"])
        return np.where(in_omega[..., None, None], om, co)
    arr = np.asarray(c, dtype=complex)
    if arr.ndim == 0 or arr.shape == (2, 2):
        return np.broadcast_to(as_tensor(arr), (n, n, 2, 2)).copy()
    if arr.shape == (n, n):
        return arr[..., None, None] * np.eye(2)
    if arr.shape == (n, n, 2, 2):
        return arr
    raise ConfigError(f"2-D coefficients have unsupported shape {arr.shape}")


# -- assembly -----------------------------------------------------------------

def _assemble(elements, ndof, local_index=None, nlocal=None):
    """Scatter ``(dofs, K)`` pairs; dofs < 0 are constrained to zero."""
    size = ndof if local_index is None else nlocal
    M = np.zeros((size, size), dtype=complex)
    for dofs, K in elements:
        idx = np.asarray(dofs)
        keep = idx >= 0
        if local_index is not None:
            idx = np.where(keep, local_index[np.where(keep, idx, 0)], -1)
            keep = idx >= 0
        ii = idx[keep]
        M[np.ix_(ii, ii)] += K[np.ix_(keep, keep)]
    return M


def _selection(ndof, idx):
    S = np.zeros((len(idx), ndof), dtype=complex)
    S[np.arange(len(idx)), idx] = 1.0
    return S


def _mesh_1d(cfg):
    n = int(cfg.n_elements)
    x0, x1 = (float(v) for v in cfg.box)
    a, b = (float(v) for v in cfg.omega)
    if not x0 < a < b < x1:
        raise ConfigError(f"omega {cfg.omega} must satisfy box[0] < a < b < box[1]")
    h = (x1 - x0) / n
    ka = _node_index(a, x0, h, n, "omega[0]")
    kb = _node_index(b, x0, h, n, "omega[1]")
    per_node = cfg.m
    node_dofs = np.full((n + 1, per_node), -1, dtype=int)
    node_dofs[1:n] = np.arange((n - 1) * per_node).reshape(n - 1, per_node)
    in_omega = (np.arange(n) >= ka) & (np.arange(n) < kb)
    coeff = _element_coefficients(cfg, in_omega)
    Kref = p1_stiffness(h) if cfg.m == 1 else hermite_stiffness(h)
    elements = []
    for e in range(n):
        dofs = np.concatenate([node_dofs[e], node_dofs[e + 1]])
        elements.append((dofs, Kref, coeff[e], bool(in_omega[e])))
    gamma_nodes = [ka, kb]
    interior_nodes = [k for k in range(ka + 1, kb)]
    return node_dofs, elements, gamma_nodes, interior_nodes, (n - 1) * per_node


def _mesh_2d(cfg):
    n = int(cfg.n_elements)
    (x0, x1), (y0, y1) = cfg.box
    (ax, bx), (ay, by) = cfg.omega
    if not (x0 < ax < bx < x1 and y0 < ay < by < y1):
        raise ConfigError(f"omega {cfg.omega} must lie strictly inside the box {cfg.box}")
    hx, hy = (x1 - x0) / n, (y1 - y0) / n
    ia, ib = _node_index(ax, x0, hx, n, "omega x0"), _node_index(bx, x0, hx, n, "omega x1")
    ja, jb = _node_index(ay, y0, hy, n, "omega y0"), _node_index(by, y0, hy, n, "omega y1")
    node_dofs = np.full((n + 1, n + 1, 1), -1, dtype=int)  # [j, i]
    node_dofs[1:n, 1:n, 0] = np.arange((n - 1) ** 2).reshape(n - 1, n - 1)
    ei = np.arange(n)
    in_omega = ((ei[None, :] >= ia) & (ei[None, :] < ib)) & ((ei[:, None] >= ja) & (ei[:, None] < jb))
    coeff = _element_coefficients(cfg, in_omega)
    elements = []
    for j in range(n):
        for i in range(n):
            dofs = np.array([node_dofs[j, i, 0], node_dofs[j, i + 1, 0],
                             node_dofs[j + 1, i + 1, 0], node_dofs[j + 1, i, 0]])
            elements.append((dofs, (hx, hy), coeff[j, i], bool(in_omega[j, i])))
    # counterclockwise from the lower-left corner
    ring = ([(ja, i) for i in range(ia, ib)] + [(j, ib) for j in range(ja, jb)]
            + [(jb, i) for i in range(ib, ia, -1)] + [(j, ia) for j in range(jb, ja, -1)])
    interior = [(j, i) for j in range(ja + 1, jb) for i in range(ia + 1, ib)]
    return node_dofs, elements, ring, interior, (n - 1) ** 2


def make_fem(config: FemConfig):
    """Assemble the Galerkin problem described by ``config``."""
    cfg = config
    if cfg.dimension == 1:
        node_dofs, elements, ring, interior, ndof = _mesh_1d(cfg)

        def element_matrix(geom, c):
            return c * geom

        def unit_matrix(geom):
            return geom

        dofs_at = lambda node: list(node_dofs[node])  # noqa: E731
    else:
        node_dofs, elements, ring, interior, ndof = _mesh_2d(cfg)

        def element_matrix(geom, c):
            return q1_stiffness(*geom, c)

        def unit_matrix(geom):
            return q1_stiffness(*geom, np.eye(2))

        dofs_at = lambda node: list(node_dofs[node])  # noqa: E731

    gamma = [d for node in ring for d in dofs_at(node)]
    i_omega = [d for node in interior for d in dofs_at(node)]
    i_omega_set = set(i_omega)
    gamma_set = set(gamma)
    i_comp = [d for d in range(ndof) if d not in i_omega_set and d not in gamma_set]
    omega_dofs = sorted(i_omega + gamma)
    comp_dofs = sorted(i_comp + gamma)

    def local_index(dofs):
        idx = np.full(ndof, -1, dtype=int)
        idx[dofs] = np.arange(len(dofs))
        return idx

    loc_om, loc_c = local_index(omega_dofs), local_index(comp_dofs)
    full, gram, part_om, part_c = [], [], [], []
    for dofs, geom, c, inside in elements:
        K = element_matrix(geom, c)
        full.append((dofs, K))
        gram.append((dofs, unit_matrix(geom)))
        (part_om if inside else part_c).append((dofs, K))

    B = _assemble(full, ndof)
    G = _assemble(gram, ndof).real.astype(complex)
    B_om = _assemble(part_om, ndof, loc_om, len(omega_dofs))
    B_c = _assemble(part_c, ndof, loc_c, len(comp_dofs))

    H = Space(G)
    form = SesquilinearForm(H, H, B)
    rep = inf_sup(form)
    if rep.lam < COERCIVITY_FLOOR * max(rep.norm_B, 1.0):
        raise NotCoercive(rep.lam, COERCIVITY_FLOOR)
    R_om = _selection(ndof, omega_dofs)
    R_c = _selection(ndof, comp_dofs)
    Tr = _selection(ndof, gamma)
    p = build_problem(H, H, form, R_om, R_c, R_om, R_c, B_om, B_c, Tr, Tr, name=cfg.resolved_name)
    return p


def fem_nodes_1d(config: FemConfig):
    """Coordinates of the free nodes of a 1-D mesh, in dof order (one per node)."""
    n = int(config.n_elements)
    x0, x1 = (float(v) for v in config.box)
    return x0 + (x1 - x0) * np.arange(1, n) / n
