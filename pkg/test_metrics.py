"""
Tests für die Metrik-Backends.
"""

import math
import itertools

import numpy as np
import pytest

import metrics
from metrics import RoundSphere, Euclidean, EuclideanBall, FlatTorus
from laborlog import InvalidPoint, InvalidTangent, OutsideShortPathDomain, EmptySet

S2 = RoundSphere(2)
T2 = FlatTorus()
R2 = Euclidean(2)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_distance_examples():
    assert metrics.distance(S2, [0, 0, 1], [0, 0, -1]) == pytest.approx(math.pi, abs=1e-15)
    assert metrics.distance(T2, [0.1, 0.1], [0.9, 0.1]) == pytest.approx(0.2, abs=1e-12)
    assert metrics.distance(R2, [0, 0], [3, 4]) == pytest.approx(5.0)


def test_antipodal_distance_is_exactly_pi():
    x = np.array([0.6, 0.0, 0.8])
    assert metrics.distance(S2, x, -x) == math.pi


def test_invalid_point():
    with pytest.raises(InvalidPoint):
        metrics.distance(S2, [0, 0, 1.1], [0, 0, 1])
    with pytest.raises(InvalidPoint):
        metrics.distance(EuclideanBall(2), [2.0, 0.0], [0.0, 0.0])


@pytest.mark.parametrize("space", [S2, T2, R2, RoundSphere(3)])
def test_triangle_inequality(space, rng):
    P = metrics.random_points(space, 3000, rng).reshape(1000, 3, -1)
    a, b, c = P[:, 0], P[:, 1], P[:, 2]
    dab = metrics.distances(space, a, b)
    dbc = metrics.distances(space, b, c)
    dac = metrics.distances(space, a, c)
    assert np.min(dab + dbc - dac) >= -1e-12


def test_short_path_examples():
    p = np.array([0.0, 0.6, 0.8])
    assert np.array_equal(metrics.short_path(S2, p, p, 0.7), p)
    m = metrics.short_path(S2, [1, 0, 0], [0, 1, 0], 0.5)
    assert np.allclose(m, [1 / math.sqrt(2), 1 / math.sqrt(2), 0], atol=1e-15)
    with pytest.raises(OutsideShortPathDomain) as err:
        metrics.short_path(S2, [0, 0, 1], [0, 0, -1], 0.3)
    assert err.value.distance == pytest.approx(math.pi)


@pytest.mark.parametrize("space", [S2, T2, R2])
def test_short_path_endpoints_and_reversal(space, rng):
    for _ in range(50):
        p, q = metrics.random_points(space, 2, rng)
        if metrics.distances(space, p, q) >= space.rho - 1e-6:
            continue
        assert np.array_equal(metrics.short_path(space, p, q, 0.0), metrics.check_point(space, p))
        assert np.array_equal(metrics.short_path(space, p, q, 1.0), metrics.check_point(space, q))
        t = rng.random()
        a = metrics.short_path(space, p, q, t)
        b = metrics.short_path(space, q, p, 1 - t)
        assert metrics.distances(space, a, b) < 1e-12


def test_short_path_torus_wraps():
    m = metrics.short_path(T2, [0.9, 0.5], [0.1, 0.5], 0.5)
    assert np.allclose(m, [0.0, 0.5]) or np.allclose(m, [1.0, 0.5])


def test_geodesic_shoot_examples():
    y = metrics.geodesic_shoot(S2, [1, 0, 0], [0, 1, 0], math.pi / 2)
    assert np.allclose(y, [0, 1, 0], atol=1e-15)
    x = np.array([0.0, 0.0, 1.0])
    assert np.array_equal(metrics.geodesic_shoot(S2, x, [1, 0, 0], 0.0), x)
    with pytest.raises(InvalidTangent):
        metrics.geodesic_shoot(S2, x, [0, 0.6, 0.8], 1.0)


def test_geodesic_shoot_both_ways(rng):
    for _ in range(100):
        x = metrics.random_points(S2, 1, rng)[0]
        v = metrics.random_tangent(S2, x, rng)
        d = rng.random() * math.pi / 2
        a = metrics.geodesic_shoot(S2, x, v, d)
        b = metrics.geodesic_shoot(S2, x, -v, d)
        assert metrics.distance(S2, a, b) == pytest.approx(2 * d, abs=1e-9)


def test_set_diameter():
    assert metrics.set_diameter(S2, [[0, 0, 1], [0, 0, -1]]) == pytest.approx(math.pi)
    ang = np.radians([90.0, 210.0, 330.0])
    tri = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    assert metrics.set_diameter(EuclideanBall(2), tri) == pytest.approx(math.sqrt(3.0), abs=1e-12)
    assert metrics.set_diameter(S2, [[1, 0, 0]]) == 0.0
    with pytest.raises(EmptySet):
        metrics.set_diameter(S2, np.zeros((0, 3)))


def test_cap_equator():
    t = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    eq = np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=1)
    cap = metrics.smallest_enclosing_cap(eq)
    assert cap.radius == pytest.approx(math.pi / 2, abs=1e-9)
    assert abs(abs(cap.center[2]) - 1.0) < 1e-9


def test_cap_single_point():
    p = np.array([0.0, 0.6, 0.8])
    cap = metrics.smallest_enclosing_cap([p])
    assert cap.radius == 0.0
    assert np.allclose(cap.center, p)


def _grid_oracle(P, k=400):
    # Dichtes Fibonacci-Gitter plus lokale Nachbesserung
    i = np.arange(k * k) + 0.5
    z = 1 - 2 * i / (k * k)
    phi = math.pi * (1 + 5 ** 0.5) * i
    C = np.stack([np.sqrt(1 - z * z) * np.cos(phi), np.sqrt(1 - z * z) * np.sin(phi), z], axis=1)
    R = np.arccos(np.clip(C @ P.T, -1, 1)).max(axis=1)
    best = C[np.argmin(R)]
    r = R.min()
    step = 1e-3
    while step > 1e-10:
        improved = False
        for B in metrics.tangent_basis(best):
            for s in (step, -step):
                c = best + s * B
                c /= np.linalg.norm(c)
                rc = np.arccos(np.clip(P @ c, -1, 1)).max()
                if rc < r:
                    best, r, improved = c, rc, True
        if not improved:
            step /= 2
    return r


def test_cap_three_points_matches_grid(rng):
    for _ in range(5):
        P = metrics.random_points(S2, 3, rng)
        cap = metrics.smallest_enclosing_cap(P)
        assert cap.radius == pytest.approx(_grid_oracle(P), abs=1e-6)
        assert all(cap.covers(p, 1e-9) for p in P)


def test_cap_monotone(rng):
    P = metrics.random_points(S2, 12, rng)
    radii = [metrics.smallest_enclosing_cap(P[:k]).radius for k in range(1, len(P) + 1)]
    assert all(b >= a - 1e-12 for a, b in zip(radii, radii[1:]))


def test_cap_beyond_hemisphere():
    # Vier Ecken eines Tetraeders: Ursprung im Inneren der Hülle
    P = np.array([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]) / math.sqrt(3)
    cap = metrics.smallest_enclosing_cap(P)
    assert cap.radius == pytest.approx(math.acos(-1 / 3), abs=1e-9)


@pytest.mark.parametrize("space,rho,kappa", [
    (S2, math.pi, math.pi / 2),
    (Euclidean(3), math.inf, math.inf),
    (T2, 0.5, 0.25),
])
def test_constants(space, rho, kappa):
    assert metrics.constants(space) == (rho, kappa)
    r, k = metrics.constants(space)
    assert r >= 2 * k


def test_torus_rho_is_half():
    # kürzeste Verbindung eindeutig unterhalb von 1/2, bei 1/2 zwei Verbindungen
    p = np.array([0.0, 0.0])
    for d in np.linspace(0.05, 0.49, 10):
        q = np.array([d, 0.0])
        assert metrics.distance(T2, p, q) == pytest.approx(d)
    assert metrics.distance(T2, p, [0.5, 0.0]) == pytest.approx(metrics.distance(T2, [0.5, 0.0], [1.0, 0.0]))
