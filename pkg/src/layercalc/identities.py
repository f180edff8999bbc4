"""Residual checks for Green's formula, jump, adjoint and boundedness relations.

Functional-valued defects are measured in the dual norm of the Neumann space
they live in; element-valued defects in the infimum norm of ``H_2^side`` or
``D2``. Each report passes when ``residual <= tol * scale``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import potentials as pot
from .errors import NotASolution
from .hilbert import Functional, as_vector, min_norm_extension
from .problem import Problem, Side, coerce_interior

TOL_GREEN = 1e-9
TOL_JUMP = 1e-9
TOL_ADJOINT = 1e-10
TOL_BOUNDS = 1e-9
TOL_WELL_DEFINED = 1e-10


@dataclass
class ResidualReport:
    name: str
    residual: float
    scale: float
    tol: float
    applicable: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.residual = float(self.residual)
        self.scale = float(self.scale)
        if not (np.isfinite(self.residual) and np.isfinite(self.scale)):
            raise ValueError(f"{self.name}: non-finite residual or scale")
        if self.residual < 0 or self.scale < 0:
            raise ValueError(f"{self.name}: residual and scale must be nonnegative")

    @property
    def passed(self):
        return (not self.applicable) or self.residual <= self.tol * self.scale

    def to_dict(self):
        out = {"name": self.name, "residual": self.residual, "scale": self.scale, "tol": self.tol,
               "applicable": self.applicable, "passed": self.passed}
        if self.extra:
            out["extra"] = dict(self.extra)
        return out


def _functional_defect(a, b):
    return (a - b).norm()


def _operator_scale(p):
    """Bound on the boundary operators built from one layer potential: ``1 + |B|/lambda``."""
    return 1.0 + p.infsup.norm_B / p.lam


# -- Green's formula ----------------------------------------------------------

def check_green(p: Problem, side, u, tol=TOL_GREEN, tol_solution=pot.DEFAULT_TOL_SOLUTION):
    """Green's formula for a solution ``u`` on ``side``.

    Returns the residuals of ``u = -D_side(Tr2 U) + S(M_side u)|_side`` and
    ``0 = D_other(Tr2 U) + S(M_side u)|_other`` with ``U`` the min-norm
    extension of ``u``.
    """
    u = coerce_interior(p, side, u)
    side = u.side
    r = pot.interior_residual(p, side, u)
    if r > tol_solution * u.norm():
        raise NotASolution(r, tol_solution * u.norm())
    U = min_norm_extension(u.space, u.coeffs)
    f = p.Tr2(U)
    Mu = pot.neumann_trace(p, side, u, tol=tol_solution)
    SM = pot.single_layer(p, Mu)
    inner = -pot.double_layer(p, side, f).coeffs + p.restriction(2, side)(SM)
    outer = pot.double_layer(p, side.other, f).coeffs + p.restriction(2, side.other)(SM)
    scale = u.norm()
    return (
        ResidualReport(f"green_{side.value}", p.restricted_space(2, side).norm(u.coeffs - inner), scale, tol),
        ResidualReport(f"green_{side.other.value}_vanishes", p.restricted_space(2, side.other).norm(outer),
                       scale, tol),
    )


# -- jump and continuity relations --------------------------------------------

def check_jump(p: Problem, f, g, tol=TOL_JUMP):
    """The four jump and continuity relations for data ``f in D2`` and ``g in N2``.

    The trace continuity of the single layer is only applicable when ``Tr2``
    factors through both restrictions.
    """
    f = as_vector(f, p.D2.dim, name="Dirichlet data")
    g = g if isinstance(g, Functional) else Functional(p.D1, g)
    nf, ng = p.D2.norm(f), g.norm()
    K = _operator_scale(p)
    Om, Co = Side.OMEGA, Side.COMPLEMENT

    d_jump = pot.trace_of_double_layer(p, Om, f) + pot.trace_of_double_layer(p, Co, f) + f
    S = pot.single_layer(p, g)
    s_om, s_co = pot.single_layer_on(p, Om, g), pot.single_layer_on(p, Co, g)
    m_sum = pot.neumann_trace(p, Om, s_om, force=True) + pot.neumann_trace(p, Co, s_co, force=True)
    D_om, D_co = pot.double_layer(p, Om, f), pot.double_layer(p, Co, f)
    m_diff = pot.neumann_trace(p, Om, D_om, force=True) - pot.neumann_trace(p, Co, D_co, force=True)
    reports = [
        ResidualReport("double_layer_trace_jump", p.D2.norm(d_jump), nf, tol),
        ResidualReport("single_layer_neumann_jump", _functional_defect(m_sum, g), ng, tol),
        ResidualReport("double_layer_neumann_continuity", m_diff.norm(),
                       nf * max(1.0, p.local_form_norm(Om) * p.local_form_norm(Co) / p.lam), tol),
    ]
    if p.has_factored_traces():
        t_diff = pot.factored_trace(p, Om, s_om) - pot.factored_trace(p, Co, s_co)
        reports.append(ResidualReport("single_layer_trace_continuity", p.D2.norm(t_diff), ng * K, tol,
                                      extra={"trace_of_S": p.D2.norm(p.Tr2(S))}))
    else:
        reports.append(ResidualReport("single_layer_trace_continuity", 0.0, 0.0, tol, applicable=False))
    return reports


# -- adjoint relations --------------------------------------------------------

def check_adjoint(p: Problem, f, phi, g, gamma, side=Side.OMEGA, tol=TOL_ADJOINT, adjoint=None):
    """Scalar defects of the three adjoint relations.

    ``f in D2``, ``phi in D1``, ``g in N2`` (on ``D1``), ``gamma in N1`` (on ``D2``).
    Starred operators are evaluated on ``p.adjoint()``; a functional in the
    first slot of a pairing means ``<g, f> = conj(<f, g>)``.
    """
    side = Side.parse(side)
    q = p.adjoint() if adjoint is None else adjoint
    f = as_vector(f, p.D2.dim, name="f")
    phi = as_vector(phi, p.D1.dim, name="phi")
    g = g if isinstance(g, Functional) else Functional(p.D1, g)
    gamma = gamma if isinstance(gamma, Functional) else Functional(p.D2, gamma)
    nf, nphi, ng, ngam = p.D2.norm(f), p.D1.norm(phi), g.norm(), gamma.norm()
    lam = p.lam
    b_om, b_co = p.local_form_norm(side), p.local_form_norm(side.other)

    # <phi, M D f> = <M* D* phi, f>
    lhs = pot.neumann_trace(p, side, pot.double_layer(p, side, f), force=True)(phi)
    rhs = np.conj(pot.neumann_trace(q, side, pot.double_layer(q, side, phi), force=True)(f))
    r1 = ResidualReport("adjoint_neumann_double_layer", abs(lhs - rhs), nphi * nf * max(1.0, b_om * b_co / lam),
                        tol, extra={"lhs": abs(lhs)})

    # <gamma, Tr2 S g> = <Tr1 S* gamma, g>
    lhs = np.conj(gamma(p.Tr2(pot.single_layer(p, g))))
    rhs = g(q.Tr2(pot.single_layer(q, gamma)))
    r2 = ResidualReport("adjoint_trace_single_layer", abs(lhs - rhs), ngam * ng / lam, tol,
                        extra={"lhs": abs(lhs)})

    # <gamma, Tr^side D f> = <-gamma + M* S* gamma, f>
    lhs = np.conj(gamma(pot.trace_of_double_layer(p, side, f)))
    m_star = pot.neumann_trace(q, side, pot.single_layer_on(q, side, gamma), force=True)
    rhs = np.conj((m_star - gamma)(f))
    r3 = ResidualReport("adjoint_trace_double_layer", abs(lhs - rhs), ngam * nf * (1.0 + b_om / lam), tol,
                        extra={"lhs": abs(lhs)})
    return [r1, r2, r3]


# -- boundedness and well-definedness -----------------------------------------

def _bound_report(name, ratios, bound, tol):
    if not ratios:
        return ResidualReport(name, 0.0, 0.0, tol, extra={"samples": 0, "max_ratio": None, "bound": bound})
    worst = max(ratios)
    return ResidualReport(name, max(0.0, worst - bound), bound, tol,
                          extra={"samples": len(ratios), "max_ratio": worst, "bound": bound,
                                 "sharpness": worst / bound if bound > 0 else None})


def check_bounds(p: Problem, samples, rng=None, tol=TOL_BOUNDS, seed=0):
    """Sampled check of ``|S g| <= |g|/lambda`` and ``|D_side f| <= |B^other| |f| / lambda``.

    Also covers ``|M^side u| <= |B^side| |u|`` on single-layer solutions. Zero
    inputs are skipped. The reports record the sharpest observed ratio.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed) if rng is None else rng
    lam = p.lam
    ratios = {"single_layer": [], "double_layer_omega": [], "double_layer_complement": [],
              "neumann_omega": [], "neumann_complement": []}
    for _ in range(samples):
        g = p.random_neumann(rng)
        f = p.random_dirichlet(rng)
        ng, nf = g.norm(), p.D2.norm(f)
        if ng > 0:
            ratios["single_layer"].append(p.H2.norm(pot.single_layer(p, g)) / ng)
            for side in Side:
                u = pot.single_layer_on(p, side, g)
                if u.norm() > 0:
                    ratios[f"neumann_{side.value}"].append(pot.neumann_trace(p, side, u).norm() / u.norm())
        if nf > 0:
            for side in Side:
                ratios[f"double_layer_{side.value}"].append(pot.double_layer(p, side, f).norm() / nf)
    return [
        _bound_report("single_layer_bound", ratios["single_layer"], 1.0 / lam, tol),
        _bound_report("double_layer_omega_bound", ratios["double_layer_omega"],
                      p.local_form_norm(Side.COMPLEMENT) / lam, tol),
        _bound_report("double_layer_complement_bound", ratios["double_layer_complement"],
                      p.local_form_norm(Side.OMEGA) / lam, tol),
        _bound_report("neumann_omega_bound", ratios["neumann_omega"], p.local_form_norm(Side.OMEGA), tol),
        _bound_report("neumann_complement_bound", ratios["neumann_complement"],
                      p.local_form_norm(Side.COMPLEMENT), tol),
    ]


def check_well_defined(p: Problem, f, rng, perturbations=5, tol=TOL_WELL_DEFINED):
    """Independence of ``D_side f`` and ``Tr^side D_side f`` from the extension of ``f``.

    Recomputes both with ``F + k`` for random ``k in ker Tr2`` (``|k| = |F|``)
    and compares against the min-norm extension, on each side.
    """
    f = as_vector(f, p.D2.dim)
    F = pot.dirichlet_extension(p, f)
    scale_F = max(p.H2.norm(F), 1.0)
    ks = pot.kernel_perturbations(p, rng, perturbations, scale=scale_F)
    reports = []
    for side in Side:
        base = pot.double_layer(p, side, f)
        alt = pot.double_layer_alternate(p, side, f)
        tbase = pot.trace_of_double_layer(p, side, f)
        d_err = t_err = 0.0
        for k in ks:
            d_err = max(d_err, (pot.double_layer(p, side, f, extension=F + k) - base).norm())
            t_err = max(t_err, p.D2.norm(pot.trace_of_double_layer(p, side, f, extension=F + k) - tbase))
        scale = max(base.norm(), p.D2.norm(f))
        reports.append(ResidualReport(f"double_layer_{side.value}_extension_independent", d_err, scale, tol,
                                      extra={"perturbations": len(ks)}))
        reports.append(ResidualReport(f"double_layer_{side.value}_alternate_formula", (alt - base).norm(),
                                      scale, tol))
        reports.append(ResidualReport(f"trace_double_layer_{side.value}_extension_independent", t_err,
                                      max(p.D2.norm(tbase), p.D2.norm(f)), tol))
    return reports
