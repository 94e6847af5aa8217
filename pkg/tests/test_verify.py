import math

import numpy as np
import pytest

from capstokes.grid import make_grid
from capstokes.verify import (IdentityReport, converges, gaussian_density, observed_orders,
                              random_density, refinement, residual_anticommute, residual_comder,
                              residual_fder, residual_ffff, residual_geometry, residual_rellich,
                              standard_profile)


@pytest.fixture(scope="module")
def g():
    return make_grid(16.0, 256)


def test_zero_density_gives_zero_residuals(g):
    f = standard_profile(g)
    z = np.zeros((2, g.N))
    assert residual_comder(g, f, z).residual_l2 == 0.0
    assert residual_anticommute(g, f, z).residual_l2 == 0.0
    assert residual_ffff(g, f, z, "+").residual_l2 == 0.0
    for which in ("R1", "R2", "R5"):
        rep = residual_rellich(g, f, z, which, "-")
        assert rep.extra["lhs"] == rep.extra["rhs"] == 0.0
        assert rep.relative == 0.0


@pytest.mark.parametrize("c", [0.0, 1.5])
def test_constant_profile_residuals_vanish(g, c):
    f = np.full(g.N, c)
    beta = gaussian_density(g)
    assert residual_comder(g, f, beta).relative <= 1e-12
    assert residual_anticommute(g, f, beta).relative <= 1e-12
    assert residual_geometry(g, f).residual_l2 <= 1e-12
    for side in ("+", "-"):
        assert residual_ffff(g, f, beta, side).relative <= 1e-12


def test_hilbert_case_of_product_rule(g):
    h = gaussian_density(g)[0]
    assert residual_fder(g, standard_profile(g), h, 0, 0).relative <= 1e-10


def test_anticommute_residual_is_linear(g):
    f = standard_profile(g)
    beta = random_density(g, seed=3)
    a = residual_anticommute(g, f, beta).residual_l2
    b = residual_anticommute(g, f, 2.5 * beta).residual_l2
    assert b == pytest.approx(2.5 * a, rel=1e-12)


def test_flat_rellich_minus():
    g = make_grid(64.0, 2048)
    rep = residual_rellich(g, np.zeros(g.N), random_density(g, seed=1), "R1", "-")
    assert rep.relative <= 1e-2


def test_product_rule_refines():
    reps = refinement(lambda g, f, beta, ops: residual_fder(g, f, gaussian_density(g)[0], 1, 2),
                      64.0, (512, 1024, 2048))
    assert converges(reps, 1.5)
    assert reps[-1].refinement_order is not None


def test_random_density_is_seeded_and_even(g):
    a, b = random_density(g, seed=5), random_density(g, seed=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, random_density(g, seed=6))
    # even about xi = 0: node j pairs with node N - j
    assert np.allclose(a[:, 1:], a[:, :0:-1], atol=1e-12)
    odd = random_density(g, seed=5, symmetric=False)
    assert not np.allclose(odd[:, 1:], odd[:, :0:-1])


def test_reports_are_deterministic(g):
    f = standard_profile(g)
    beta = random_density(g)
    assert residual_comder(g, f, beta).as_dict() == residual_comder(g, f, beta).as_dict()


def test_order_helpers():
    mk = lambda r: IdentityReport("x", r, 1.0, 1.0, 8)  # noqa: E731
    reps = [mk(1e-2), mk(1.25e-3), mk(1.5625e-4)]
    assert observed_orders(reps) == pytest.approx([3.0, 3.0])
    assert converges(reps, 1.5) and not converges(reps, 3.5)
    assert converges([mk(1e-15), mk(2e-15)])
    assert IdentityReport("z", 1.0, 0.0, 1.0, 8).relative == math.inf
    assert "relative" in mk(0.1).as_dict()
