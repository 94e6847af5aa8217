import numpy as np
import pytest

from capstokes.fields import (FieldSample, NearBoundaryError, distance_to_interface,
                              fundamental_gradients, fundamental_solution,
                              interior_stokes_residual, stokes_fields, stokes_solution,
                              trace_formulas)
from capstokes.grid import derivative, make_grid
from capstokes.potentials import OperatorSet, tilde_traces


def test_point_force_solves_stokes():
    mu, d = 1.3, 1e-3
    y = np.array([0.7, -0.4])
    sh = np.array([[0, 0], [d, 0], [-d, 0], [0, d], [0, -d]])
    for k in (1, 2):
        U, P = zip(*(fundamental_solution(k, y + s, mu) for s in sh))
        U, P = np.array(U), np.array(P)
        lap = (U[1] + U[2] + U[3] + U[4] - 4 * U[0]) / d**2
        grad = np.array([P[1] - P[2], P[3] - P[4]]) / (2 * d)
        div = (U[1, 0] - U[2, 0] + U[3, 1] - U[4, 1]) / (2 * d)
        assert np.allclose(mu * lap, grad, atol=1e-5)
        assert abs(div) < 1e-6
    with pytest.raises(ValueError):
        fundamental_solution(3, y)
    with pytest.raises(ValueError):
        fundamental_solution(1, [0.0, 0.0])


def test_closed_form_gradients_match_differences():
    y, d, mu = np.array([-0.3, 1.1]), 1e-6, 0.8
    dU, dP = fundamental_gradients(y[0], y[1], mu)
    for k in (1, 2):
        for i in range(2):
            e = np.zeros(2)
            e[i] = d
            Up, Pp = fundamental_solution(k, y + e, mu)
            Um, Pm = fundamental_solution(k, y - e, mu)
            assert np.allclose(dU[k - 1, i], (Up - Um) / (2 * d), atol=1e-8)
            assert dP[k - 1, i] == pytest.approx((Pp - Pm) / (2 * d), abs=1e-8)


@pytest.fixture(scope="module")
def setup():
    g = make_grid(16.0, 512)
    x = g.nodes
    f = 0.3 * np.exp(-x**2)
    beta = np.array([np.exp(-(x - 0.3) ** 2), 0.5 * x * np.exp(-0.5 * x**2)])
    return g, f, beta


def test_zero_density_gives_zero_fields(setup):
    g, f, _ = setup
    v, p = stokes_fields(g, f, np.zeros((2, g.N)), np.array([[0.0, -1.0], [2.0, -3.0]]))
    assert np.all(v == 0.0) and np.all(p == 0.0)


def test_near_boundary_points_rejected(setup):
    g, f, beta = setup
    assert distance_to_interface(g, f, [[0.0, 0.3]])[0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(NearBoundaryError, match="near-boundary"):
        stokes_fields(g, f, beta, np.array([[0.0, 0.3 + 0.5 * g.h]]))


def test_interior_residual_small(setup):
    g, f, beta = setup
    for x in ([0.0, -1.0], [1.5, -0.5], [-2.0, -3.0]):
        assert interior_stokes_residual(g, f, beta, np.array(x), 1.0, 1e-3) < 1e-5


def test_single_point_sample(setup):
    g, f, beta = setup
    s = stokes_solution(g, f, beta, [0.5, -1.0], 2.0)
    v, p = stokes_fields(g, f, beta, np.array([[0.5, -1.0]]), 2.0)
    assert isinstance(s, FieldSample)
    assert np.array_equal(s.velocity, v[0]) and s.pressure == p[0]


def test_velocity_scales_inversely_with_viscosity(setup):
    g, f, beta = setup
    x = np.array([[0.0, -1.0]])
    v1, p1 = stokes_fields(g, f, beta, x, 1.0)
    v2, p2 = stokes_fields(g, f, beta, x, 4.0)
    assert np.allclose(v2, v1 / 4.0) and np.allclose(p2, p1)


def test_trace_formulas_match_unit_viscosity_traces(setup):
    g, f, beta = setup
    ops = OperatorSet(g, f)
    mu = 1.7
    _, p, gradv = trace_formulas(ops, beta, mu)
    gu, Pi = tilde_traces(ops, derivative(g, beta), "-")
    assert np.allclose(gradv, gu / mu, atol=1e-12)
    assert np.allclose(p, Pi, atol=1e-12)


def test_bulk_limit_matches_trace_formulas():
    # extrapolate bulk values along the normal to the interface at the apex
    g = make_grid(16.0, 1024)
    x = g.nodes
    f = 0.3 * np.exp(-x**2)
    beta = np.array([np.exp(-(x - 0.3) ** 2), 0.5 * x * np.exp(-0.5 * x**2)])
    ops = OperatorSet(g, f)
    v, p, _ = trace_formulas(ops, beta, 2.0)
    i = g.N // 2
    X = np.array([x[i], f[i]])
    nu = ops.geometry.nu[:, i]
    ds = np.array([8.0, 4.0, 2.0]) * g.h
    vals, pres = zip(*(stokes_fields(g, f, beta, (X - d * nu)[None], 2.0) for d in ds))
    v0 = np.polyfit(ds, np.array(vals)[:, 0], 2)[-1]
    p0 = np.polyfit(ds, np.array(pres)[:, 0], 2)[-1]
    assert np.linalg.norm(v0 - v[:, i]) <= 1e-2 * np.linalg.norm(v[:, i])
    assert abs(p0 - p[i]) <= 1e-2 * max(abs(p[i]), np.linalg.norm(v[:, i]))
