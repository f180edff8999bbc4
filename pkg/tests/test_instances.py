import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from layercalc.errors import ConfigError, NotCoercive, RetryExhausted
from layercalc.instances import (
    FemConfig,
    build_instance,
    list_builtin_instances,
    make_abstract,
    make_fem,
    resolve_descriptor,
    verify_conditions,
)
from layercalc.instances.conditions import locality_residual, trace_extension_check
from layercalc.problem import Side, build_problem

from conftest import PRESET_NAMES

dims_strategy = st.tuples(st.integers(1, 8), st.integers(1, 8), st.integers(1, 4), st.integers(1, 4))


# -- abstract instances ---------------------------------------------------------

def test_small_abstract_passes_all_conditions():
    rep = verify_conditions(make_abstract(0, (2, 2, 1, 1)))
    assert rep.passed
    assert [ok for _, ok, _ in rep.conditions()] == [True, True, True]


def test_abstract_is_deterministic():
    a, b = make_abstract(11, (3, 4, 2, 2)), make_abstract(11, (3, 4, 2, 2))
    for name in ("B", "B_omega", "B_complement"):
        assert np.array_equal(getattr(a, name).matrix, getattr(b, name).matrix)
    for name in ("R1_omega", "R2_complement", "Tr1", "Tr2"):
        assert np.array_equal(getattr(a, name).matrix, getattr(b, name).matrix)
    assert np.array_equal(a.H1.gram, b.H1.gram) and np.array_equal(a.H2.gram, b.H2.gram)


@pytest.mark.parametrize("dims", [(2, 2, 0, 0), (0, 2, 1, 1), (2, 2, 1, -1)])
def test_abstract_rejects_empty_blocks(dims):
    with pytest.raises(ConfigError):
        make_abstract(0, dims)


def test_abstract_retry_exhaustion():
    with pytest.raises(RetryExhausted):
        make_abstract(0, (3, 3, 2, 2), min_lambda=10.0)


@given(seed=st.integers(0, 2**31 - 1), dims=dims_strategy, hermitian=st.booleans(), real=st.booleans())
def test_abstract_instances_satisfy_conditions(seed, dims, hermitian, real):
    if hermitian:
        dims = (dims[0], dims[1], dims[2], dims[2])
    p = make_abstract(seed, dims, hermitian=hermitian, real=real)
    rep = verify_conditions(p)
    assert rep.passed, rep.to_dict()
    assert rep.locality_residual <= 1e-12
    assert rep.traces_factor
    assert p.lam >= 0.1
    assert (p.D1.dim, p.D2.dim) == (dims[2], dims[3])


def test_hermitian_instance_is_self_adjoint():
    p = make_abstract(2, (3, 3, 2, 2), hermitian=True)
    assert p.H1 is p.H2
    assert np.allclose(p.B.matrix, p.B.matrix.conj().T, atol=1e-13)


# -- Galerkin instances ---------------------------------------------------------

def test_laplace_stiffness_is_second_difference(laplace):
    n, h = 8, 1 / 8
    T = (np.diag(2 * np.ones(n - 1)) - np.diag(np.ones(n - 2), 1) - np.diag(np.ones(n - 2), -1)) / h
    assert np.allclose(laplace.B.matrix, T, atol=1e-12)
    assert (laplace.D1.dim, laplace.D2.dim) == (2, 2)


def test_complex_constant_coefficient_lambda():
    p = make_fem(FemConfig(m=1, dimension=1, n_elements=8, coefficients=1 + 0.5j))
    assert p.lam >= 1.0
    assert p.lam == pytest.approx(abs(1 + 0.5j))


def test_hermite_whitney_boundary_dimension(presets):
    p = presets["hermite-1d-m2"]
    assert p.D2.dim == 4
    assert verify_conditions(p).passed


def test_m2_defaults_to_whitney_and_rejects_top_order():
    assert FemConfig(m=2).trace_convention == "whitney"
    with pytest.raises(ConfigError):
        FemConfig(m=2, trace_convention="top-order")


@pytest.mark.parametrize("kwargs", [
    dict(omega=(0.3, 0.75)),
    dict(omega=(0.0, 0.5)),
    dict(m=2, dimension=2),
    dict(n_elements=1),
    dict(trace_convention="sideways"),
])
def test_fem_config_validation(kwargs):
    with pytest.raises(ConfigError):
        make_fem(FemConfig(**kwargs))


def test_fem_rejects_degenerate_coefficients():
    with pytest.raises(NotCoercive):
        make_fem(FemConfig(n_elements=8, coefficients=0.0))


def test_2d_trace_ring_is_counterclockwise(presets):
    p = presets["square-2d-m1"]
    n = 8
    dofs = np.argmax(np.abs(p.Tr2.matrix), axis=1)
    j, i = np.divmod(dofs, n - 1)
    pts = np.stack([(i + 1) / n, (j + 1) / n], axis=1)
    assert np.allclose(pts[0], [0.25, 0.25])
    # the signed area of the polygon is positive for counterclockwise order
    x, y = pts[:, 0], pts[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert area == pytest.approx(0.25)
    assert len(pts) == 16


def test_2d_per_element_coefficients():
    c = np.ones((4, 4))
    c[1:3, 1:3] = 3.0
    p = make_fem(FemConfig(m=1, dimension=2, box=((0, 1), (0, 1)), omega=((0.25, 0.75), (0.25, 0.75)),
                           n_elements=4, coefficients=c))
    assert verify_conditions(p).passed


# -- condition checker negative controls ------------------------------------------

def _split_problem(B_shift=0.0, trace_rows=(2,)):
    n = 5
    E = np.eye(n)
    om, co = E[[0, 1, 2]], E[[2, 3, 4]]
    Bom, Bc = np.eye(3), np.eye(3)
    Bc[0, 0] = 0.0
    B = om.T @ Bom @ om + co.T @ Bc @ co + B_shift * np.eye(n)
    Tr = E[list(trace_rows)]
    return build_problem(E, None, B, om, co, om, co, Bom, Bc, Tr, Tr)


def test_hand_built_problem_passes():
    assert verify_conditions(_split_problem()).passed


def test_locality_negative_control():
    p = _split_problem(B_shift=0.1)
    assert locality_residual(p) > 1e-3
    rep = verify_conditions(p)
    assert not rep.local and not rep.passed


def test_trace_extension_negative_control():
    # the shared coordinate 2 is not traced, so a pair agreeing on the trace may disagree there
    n = 5
    E = np.eye(n)
    om, co = E[[0, 1, 2]], E[[2, 3, 4]]
    Bom, Bc = np.eye(3), np.eye(3)
    Bc[0, 0] = 0
    B = om.T @ Bom @ om + co.T @ Bc @ co
    Tr = E[[1]]
    p = build_problem(E, None, B, om, co, om, co, Bom, Bc, Tr, Tr)
    assert not trace_extension_check(p, 2).passed
    assert not verify_conditions(p).passed


def test_verify_conditions_never_raises_on_failure():
    rep = verify_conditions(_split_problem(B_shift=0.5))
    d = rep.to_dict()
    assert d["passed"] is False
    json.dumps(d)


# -- presets and descriptors ----------------------------------------------------------

def test_preset_registry_names():
    names = [d["name"] for d in list_builtin_instances()]
    for required in ("laplace-1d-quarter", "hermite-1d-m2", "square-2d-m1", "abstract-small"):
        assert required in names


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_preset_descriptor_round_trips_through_json(name):
    desc = resolve_descriptor({"preset": name})
    again = json.loads(json.dumps(desc))
    assert again == desc
    a, b = build_instance(desc), build_instance(again)
    assert np.array_equal(a.B.matrix, b.B.matrix)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_every_preset_passes_conditions(presets, name):
    rep = verify_conditions(presets[name])
    assert rep.passed
    assert rep.locality_residual <= 1e-12


@pytest.mark.parametrize("name", [n for n in PRESET_NAMES if "abstract" not in n])
def test_fem_config_round_trip(name):
    desc = resolve_descriptor({"preset": name})
    cfg = FemConfig.from_dict(desc["fem"])
    assert FemConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_descriptor_errors():
    with pytest.raises(ConfigError):
        resolve_descriptor({"preset": "nope"})
    with pytest.raises(ConfigError):
        resolve_descriptor({"preset": "a", "fem": {}})
    with pytest.raises(ConfigError):
        build_instance({"abstract": {"seed": 0}})
    with pytest.raises(ConfigError):
        build_instance({"abstract": {"seed": 0, "dims": [1, 1, 1, 1], "colour": 2}})


def test_side_parsing():
    assert Side.parse("interior") is Side.OMEGA
    assert Side.parse("C") is Side.COMPLEMENT
    assert Side.OMEGA.other is Side.COMPLEMENT
    with pytest.raises(ValueError):
        Side.parse("left")
