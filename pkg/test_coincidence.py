"""
Tests für die Suche nach Koinzidenzpaaren.
"""

import math

import numpy as np
import pytest

import coincidence
import complexes
import metrics
import plmaps
from laborlog import BudgetExhausted, DeltaOutOfRange, OddDegree, UnsupportedDimension, set_quiet

set_quiet()

S2 = metrics.RoundSphere(2)


@pytest.fixture
def rng():
    return np.random.default_rng(5)


def test_borsuk_ulam_projection_hits_pole():
    pair = coincidence.borsuk_ulam_pair(plmaps.projection(2), 2)
    assert pair.residual == 0.0
    assert abs(pair.x[2]) == pytest.approx(1.0)
    assert np.array_equal(pair.y, -pair.x)
    assert pair.distance == math.pi


@pytest.mark.parametrize("n", [1, 2, 3])
def test_borsuk_ulam_random_polynomials(n, rng):
    f = plmaps.random_polynomial(n, n, rng)
    pair = coincidence.borsuk_ulam_pair(f, n)
    assert pair.residual <= 1e-9
    assert np.abs(f(pair.x) - f(pair.y)).max() <= 1e-9
    assert np.allclose(pair.y, -pair.x)
    assert pair.distance == pytest.approx(math.pi)


def test_borsuk_ulam_unsupported_dimension():
    with pytest.raises(UnsupportedDimension):
        coincidence.borsuk_ulam_pair(plmaps.projection(4), 4)


def test_borsuk_ulam_budget():
    with pytest.raises(BudgetExhausted) as err:
        coincidence.borsuk_ulam_pair(plmaps.random_polynomial(2, 2, np.random.default_rng(1)), 2, budget=10)
    assert err.value.evaluations > 10


def test_hopf_pair_projection_sphere():
    pair = coincidence.hopf_pair(plmaps.projection(2), S2, 1.0)
    assert pair.residual <= 1e-9
    assert pair.distance == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(pair.x[:2], pair.y[:2], atol=1e-9)


@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0, math.pi])
def test_hopf_pair_projection_any_delta(delta):
    pair = coincidence.hopf_pair(plmaps.projection(2), S2, delta)
    assert pair.residual <= 1e-6
    assert pair.distance == pytest.approx(delta, abs=1e-6)
    assert np.abs(pair.x[:2] - pair.y[:2]).max() <= 1e-6


@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0, math.pi])
@pytest.mark.parametrize("index", range(10))
def test_hopf_pair_random_planar_maps(index, delta):
    f = plmaps.random_polynomial(2, 2, np.random.default_rng(100 + index))
    pair = coincidence.hopf_pair(f, S2, delta)
    assert pair.residual <= 1e-6
    assert pair.distance == pytest.approx(delta, abs=1e-6)
    assert np.abs(f(pair.x) - f(pair.y)).max() <= 1e-6


def test_hopf_pair_circle(rng):
    f = plmaps.random_polynomial(1, 1, rng)
    pair = coincidence.hopf_pair(f, metrics.RoundSphere(1), 2.0)
    assert pair.residual <= 1e-9
    assert pair.distance == pytest.approx(2.0, abs=1e-6)
    assert pair.method == "circle-bracketing"


def test_hopf_pair_torus():
    coeffs = np.zeros((2, 2, 3, 2))
    coeffs[0, 1, 1, 0] = 1.0
    coeffs[1, 0, 2, 0] = 1.0
    f = plmaps.trig_torus(coeffs)
    pair = coincidence.hopf_pair(f, metrics.FlatTorus(), 0.3)
    assert pair.residual <= 1e-9
    assert pair.distance == pytest.approx(0.3, abs=1e-6)


def test_hopf_geodesic_map_midpoint():
    p, q = coincidence.hopf_geodesic_map(S2, [0, 0, 1], [1, 0, 0], 1.0)
    assert metrics.distance(S2, p, q) == pytest.approx(1.0)
    assert metrics.distance(S2, p, [0, 0, 1]) == pytest.approx(0.5)


@pytest.mark.parametrize("delta", [0.0, -1.0, 3.5])
def test_hopf_delta_out_of_range(delta):
    with pytest.raises(DeltaOutOfRange):
        coincidence.hopf_pair(plmaps.projection(2), S2, delta)


def test_even_degree_pair_circle(rng):
    K = complexes.cross_polytope_sphere(1, 4)
    f = plmaps.random_circle_map(K, 0, rng)
    pair = coincidence.even_degree_pair(f)
    assert pair.residual <= 1e-9
    assert np.allclose(pair.y, -pair.x)
    assert pair.distance == pytest.approx(math.pi)


def test_even_degree_pair_fold():
    K = complexes.cross_polytope_sphere(2, 2)
    f = plmaps.fold_sphere_map(K, [0.3, 0.1, 2.0])
    pair = coincidence.even_degree_pair(f)
    assert pair.residual <= 1e-9
    assert np.abs(f.evaluate(pair.x) - f.evaluate(pair.y)).max() <= 1e-9


@pytest.mark.parametrize("index", range(5))
def test_even_degree_pair_random_folds(index):
    gen = np.random.default_rng(200 + index)
    direction = gen.normal(size=3)
    shift = (1.5 + gen.random()) * direction / np.linalg.norm(direction)
    f = plmaps.fold_sphere_map(complexes.cross_polytope_sphere(2, 2), shift)
    pair = coincidence.even_degree_pair(f)
    assert pair.residual <= 1e-6
    assert pair.distance >= math.pi - 1e-3
    assert np.abs(f.evaluate(pair.x) - f.evaluate(pair.y)).max() <= 1e-6


def test_even_degree_pair_vertex_solution():
    K = complexes.cross_polytope_sphere(1, 3)
    pair = coincidence.even_degree_pair(plmaps.wrap_map(K, 2))
    assert pair.method == "vertex"
    assert pair.residual == 0.0


def test_even_degree_pair_rejects_odd_degree():
    K = complexes.cross_polytope_sphere(2, 1)
    with pytest.raises(OddDegree):
        coincidence.even_degree_pair(plmaps.identity_map(K))


def test_pair_serialization():
    pair = coincidence.borsuk_ulam_pair(plmaps.projection(2), 2)
    d = pair.to_dict()
    assert set(d) == {"x", "y", "distance", "residual", "method", "evaluations"}
    assert d["distance"] == pytest.approx(math.pi)
