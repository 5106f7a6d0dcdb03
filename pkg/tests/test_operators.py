import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trunclap.errors import (DivergentSingularity, IneligibleProfile, InvalidMode, InvalidParams,
                             NonSymmetric)
from trunclap.operators import (
    Frame,
    LineField,
    OperatorSpec,
    OptimizerConfig,
    angular_profile_monotonicity,
    directional,
    directional_integral,
    extremal_I_optimize,
    extremal_I_repr,
    extremal_J,
    local_limit,
    local_truncated,
    plane_J,
    radial_hessian_eigs,
    reduce_angle,
    representation_branch,
    symmetric_angle,
    two_direction_monotonicity,
)
from trunclap.profiles import (build_glued_profile, make_capped_power, make_gaussian, make_positive_power,
                               make_power, make_shifted_power)

from oracles import (C1, c_power, gauss_directional, gauss_laplacian, power_cusp, power_directional)


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
@pytest.mark.parametrize("g", [0.1, 0.4, 0.9])
@pytest.mark.parametrize("r", [0.5, 2.0])
def test_power_directional_closed_forms(s, g, r):
    p = make_power(g)
    for theta in (0.0, math.pi / 2):
        assert directional(p, r, theta, s).value == pytest.approx(power_directional(g, s, r, theta), rel=1e-9)


@pytest.mark.parametrize("s", [0.6, 0.75, 0.95])
@pytest.mark.parametrize("r", [0.3, 1.0, 3.0])
def test_gaussian_directional_hypergeometric(s, r):
    p = make_gaussian(1.0)
    for theta in (0.0, 0.3, 1.0, math.pi / 2):
        assert directional(p, r, theta, s).value == pytest.approx(gauss_directional(s, r, theta), rel=1e-9)


@pytest.mark.parametrize("s,g", [(0.6, 0.1), (0.75, 0.3), (0.9, 0.2), (0.75, 1.2)])
def test_positive_power_radial_values(s, g):
    p = make_positive_power(g, s)
    for r in (0.5, 2.0):
        # g(r) = -r^g, so the value is minus the closed form for +|x|^g
        want = -c_power(g, s) * r ** (g - 2 * s)
        assert directional(p, r, 0.0, s).value == pytest.approx(want, rel=1e-8, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(r=st.floats(0.2, 20.0), theta=st.floats(0.0, math.pi / 2), g=st.floats(0.1, 0.9))
def test_power_homogeneity(r, theta, g):
    s = 0.75
    p = make_power(g)
    a = directional(p, r, theta, s).value
    b = directional(p, 1.0, theta, s).value
    assert a == pytest.approx(r ** (-(g + 2 * s)) * b, rel=1e-8)


@pytest.mark.parametrize("g", [0.4, 0.9])
def test_cusp_near_radial_direction(g):
    r, s = 2.0, 0.75
    p = make_power(g)
    f0 = directional_integral(p, r, 0.0, s).value
    for th in (1e-12, 1e-8, 1e-4):
        diff = directional_integral(p, r, th, s).value - f0
        assert diff / power_cusp(g, r, th) == pytest.approx(1.0, abs=2e-3)


def test_angles_reduce_by_symmetry():
    assert reduce_angle(math.pi - 0.2) == pytest.approx(0.2)
    assert reduce_angle(-0.3) == pytest.approx(0.3)
    p = make_gaussian(1.0)
    assert directional(p, 1.0, math.pi - 0.4, 0.75).value == pytest.approx(
        directional(p, 1.0, 0.4, 0.75).value, rel=1e-12)


def test_divergent_singularity_on_radial_line():
    with pytest.raises(DivergentSingularity):
        directional(make_power(1.2), 1.0, 0.0, 0.75)
    # off the radial line the same profile is fine
    assert math.isfinite(directional(make_power(1.2), 1.0, 0.5, 0.75).value)


@pytest.mark.parametrize("p", [make_power(0.4), make_gaussian(1.0), make_shifted_power(1.5),
                               build_glued_profile(1.2).as_profile()], ids=lambda p: p.name)
def test_angular_monotonicity(p):
    for r in (0.5, 2.0):
        rep = angular_profile_monotonicity(p, r, 0.75, 17)
        assert rep.nonincreasing, rep.worst_violation
        two = two_direction_monotonicity(p, r, 0.75, 9)
        assert two.nonincreasing and two.symmetry_defect < 1e-9


def test_representation_branches():
    assert representation_branch(OperatorSpec("I_extremal", "plus", 1, 3, 0.75))[0] == "radial"
    assert representation_branch(OperatorSpec("I_extremal", "plus", 2, 3, 0.75))[0] == "radial+orthogonal"
    assert representation_branch(OperatorSpec("I_extremal", "minus", 2, 3, 0.75))[0] == "orthogonal"
    name, terms, _ = representation_branch(OperatorSpec("I_extremal", "minus", 3, 3, 0.75))
    assert name == "symmetric" and terms[0][1] == pytest.approx(math.acos(1 / math.sqrt(3)))


def test_representation_refuses_unlicensed_profiles():
    spec = OperatorSpec("I_extremal", "plus", 2, 3, 0.75)
    with pytest.raises(IneligibleProfile):
        extremal_I_repr(make_capped_power(0.2), 2.0, spec)
    assert math.isfinite(extremal_I_repr(make_capped_power(0.2), 2.0, spec, override=True).value)


@pytest.mark.parametrize("sign,k", [("plus", 2), ("minus", 2), ("minus", 3)])
def test_repr_matches_optimizer_on_gaussian(sign, k):
    p = make_gaussian(1.0)
    spec = OperatorSpec("I_extremal", sign, k, 3, 0.75)
    rep = extremal_I_repr(p, 1.0, spec).value
    opt = extremal_I_optimize(p, np.array([0.6, 0.0, 0.8]), spec)
    assert opt.value == pytest.approx(rep, rel=1e-6)
    assert not opt.stalled


def test_optimizer_is_deterministic_and_seeded():
    p = make_gaussian(1.0)
    spec = OperatorSpec("I_extremal", "minus", 2, 3, 0.75)
    x = np.array([1.0, 0.0, 0.0])
    a = extremal_I_optimize(p, x, spec, OptimizerConfig(seed=3))
    b = extremal_I_optimize(p, x, spec, OptimizerConfig(seed=3))
    assert a.value == b.value
    assert np.array_equal(a.frame.vectors, b.frame.vectors)


def test_optimizer_on_line_field():
    # u depends on the last coordinate only, so I_{e_1} u = 0 and the minimum over 1-frames is 0
    def func(pts):
        return -1.0 / (1.0 + np.minimum(np.abs(pts[..., -1]), 1e150) ** 2)

    field = LineField(func, scale=lambda _x, xi: 1.0 / max(abs(float(xi[-1])), 1e-6))
    spec = OperatorSpec("I_extremal", "minus", 1, 2, 0.75)
    res = extremal_I_optimize(field, np.array([1.0, 0.0]), spec)
    assert abs(res.value) < 1e-12
    assert abs(res.frame.vectors[1, 0]) < 1e-6


def test_frame_validation():
    with pytest.raises(InvalidParams):
        Frame(np.array([[1.0, 1.0], [0.0, 1.0]]))
    f = Frame(np.eye(3)[:, :2])
    assert f.angles_to([1, 0, 0]) == pytest.approx([0.0, math.pi / 2])


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_plane_operators_on_gaussian(k, r):
    s = 0.75
    p = make_gaussian(1.0)
    plus = plane_J(p, r, "plus_radialplane", k, s, N=k + 1).value
    assert plus == pytest.approx(gauss_laplacian(s, k, r), rel=1e-9)
    # the orthogonal plane sees exp(-r^2) times the profile at the plane's origin
    minus = plane_J(p, r, "minus_orthoplane", k, s, N=k + 1).value
    assert minus == pytest.approx(math.exp(-r * r) * gauss_laplacian(s, k, 0.0), rel=1e-9)


@pytest.mark.parametrize("k", [2, 3])
def test_full_space_routes_agree(k):
    p = make_gaussian(1.0)
    for r in (0.5, 1.5):
        a = plane_J(p, r, "plus_radialplane", k, 0.75, N=k).value
        b = plane_J(p, r, "minus_orthoplane", k, 0.75, N=k).value
        assert a == pytest.approx(b, rel=1e-8)
        assert a == pytest.approx(gauss_laplacian(0.75, k, r), rel=1e-8)


def test_plane_operator_mode_errors():
    p = make_gaussian(1.0)
    with pytest.raises(InvalidMode):
        plane_J(p, 1.0, "sideways", 2, 0.75)
    with pytest.raises(InvalidMode):
        plane_J(p, 1.0, "plus_radialplane", 1, 0.75)
    with pytest.raises(IneligibleProfile):
        extremal_J(make_capped_power(0.2), 2.0, OperatorSpec("J_extremal", "plus", 2, 3, 0.75))


def test_local_limits():
    p = make_gaussian(1.0)
    spec = radial_hessian_eigs(p, 1.0, 3)
    assert spec.radial == pytest.approx(2 / math.e)
    assert spec.tangential == pytest.approx(-2 / math.e)
    assert local_limit(p, 1.0, 2, 3, "plus") == pytest.approx(0.0, abs=1e-15)
    assert local_limit(p, 1.0, 2, 3, "minus") == pytest.approx(-4 / math.e)
    assert local_truncated(np.diag([3.0, -1.0, 2.0]), 2, "plus") == 5.0
    with pytest.raises(NonSymmetric):
        local_truncated(np.array([[1.0, 2.0], [0.0, 1.0]]), 1, "plus")


def test_directional_tends_to_second_derivative():
    # I_xi u -> u'' along xi as s -> 1 (radial direction of the gaussian at r = 1: g'' = 2/e)
    p = make_gaussian(1.0)
    gaps = [abs(directional(p, 1.0, 0.0, s).value - 2 / math.e) for s in (0.6, 0.8, 0.95, 0.99)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.05


def test_spec_validation():
    with pytest.raises(InvalidParams):
        OperatorSpec("I_extremal", "up", 1, 2, 0.75)
    with pytest.raises(InvalidParams):
        OperatorSpec("I_extremal", "plus", 3, 2, 0.75)
    with pytest.raises(InvalidParams):
        OperatorSpec("I_extremal", "plus", 1, 2, 0.4)
    assert symmetric_angle(4) == pytest.approx(math.pi / 3)
