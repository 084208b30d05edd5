import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from gcinverse.errors import InvalidArgument
from gcinverse.geometry import DomainGrid, contains, make_disc, make_ellipse


@given(st.floats(0.1, 5.0), st.sampled_from([16, 32, 64]), st.integers(4, 12))
@settings(max_examples=25, deadline=None)
def test_disc_area_and_perimeter(R, M, nr):
    g = make_disc(R, M, nr)
    assert math.isclose(g.interior_weights.sum(), math.pi * R * R, rel_tol=1e-12)
    assert math.isclose(g.boundary_weights.sum(), 2 * math.pi * R, rel_tol=1e-12)
    assert math.isclose(g.area, math.pi * R * R)
    assert np.allclose(np.abs(g.boundary_nodes), R)
    assert np.all(np.abs(g.interior_nodes) < R)


def test_disc_normals_are_outward_unit():
    g = make_disc(2.0, 32, 8)
    assert np.allclose(np.abs(g.boundary_normals), 1.0)
    assert np.allclose(g.boundary_normals, g.boundary_nodes / 2.0)


def test_ellipse_perimeter_against_quad():
    a, b = 2.0, 1.0
    g = make_ellipse(a, b, 128, 1024)
    ref = quad(lambda t: math.hypot(a * math.sin(t), b * math.cos(t)), 0, 2 * math.pi, epsabs=1e-13)[0]
    assert abs(g.boundary_weights.sum() - ref) < 1e-10
    assert math.isclose(g.interior_weights.sum(), math.pi * a * b, rel_tol=1e-12)


def test_ellipse_normals_are_orthogonal_to_tangent():
    a, b = 2.0, 1.0
    g = make_ellipse(a, b, 64, 256)
    t = g.boundary_theta
    tangent = -a * np.sin(t) + 1j * b * np.cos(t)
    assert np.allclose(np.abs(g.boundary_normals), 1.0)
    assert np.allclose((np.conj(tangent) * g.boundary_normals).real, 0.0, atol=1e-13)
    # outward: points away from the centre
    assert np.all((np.conj(g.boundary_nodes) * g.boundary_normals).real > 0)


@pytest.mark.parametrize("j,k", [(0, 0), (2, 0), (3, 1), (4, 4), (6, 2)])
def test_disc_moments_are_exact(j, k):
    # int_D x^j y^k dA over the unit disc, from the Beta function
    g = make_disc(1.0, 32, 8, breaks=(0.0, 0.5, 1.0))
    x, y = g.interior_nodes.real, g.interior_nodes.imag
    num = float(np.sum(g.interior_weights * x ** j * y ** k))
    if j % 2 or k % 2:
        ref = 0.0
    else:
        ref = 2 * math.gamma((j + 1) / 2) * math.gamma((k + 1) / 2) / ((j + k + 2) * math.gamma((j + k + 2) / 2))
    assert abs(num - ref) < 1e-13


def test_json_round_trip():
    for g in (make_disc(1.5, 32, 8, n_theta=16, breaks=(0, 0.25, 1)), make_ellipse(2.0, 1.0, 32, 256)):
        h = DomainGrid.from_json(g.to_json())
        assert h == g
        assert np.array_equal(h.interior_nodes, g.interior_nodes)


def test_node_ordering_is_angle_major():
    g = make_disc(1.0, 16, 5)
    z = g.interior_nodes.reshape(g.n_theta, g.n_r)
    assert np.allclose(np.abs(z[0]), g.r)
    assert np.allclose(np.angle(z[:, 0]) % (2 * np.pi), g.theta)


def test_contains():
    d = make_disc(1.0, 16, 4)
    assert contains(d, 0.5j) and not contains(d, 1.0) and not contains(d, 1.2)
    e = make_ellipse(2.0, 1.0, 16, 64)
    assert contains(e, 1.9) and not contains(e, 1.1j)


@pytest.mark.parametrize("call", [
    lambda: make_disc(-1.0, 32, 8),
    lambda: make_disc(1.0, 7, 8),
    lambda: make_disc(1.0, 33, 8),
    lambda: make_disc(1.0, 32, 2),
    lambda: make_disc(1.0, 32, 8, breaks=(0.0, 0.7, 0.5, 1.0)),
    lambda: make_disc(1.0, 32, 8, n_theta=9),
    lambda: make_ellipse(0.0, 1.0, 32, 256),
    lambda: make_ellipse(2.0, 1.0, 32, 17),
])
def test_invalid_arguments(call):
    with pytest.raises(InvalidArgument):
        call()


def test_radius_only_for_discs():
    with pytest.raises(InvalidArgument):
        make_ellipse(2.0, 1.0, 16, 64).radius
