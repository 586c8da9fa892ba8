"""
Tests für die Prüfstände der Hilfssätze.
"""

import math
import inspect

import numpy as np
import pytest

import geomlemmas
import metrics
from laborlog import NotClosed, PreconditionViolated, WARNINGS, reset_warnings, set_quiet

set_quiet()

S2 = metrics.RoundSphere(2)


@pytest.fixture
def rng():
    return np.random.default_rng(3)


def equator(k: int = 16, turns: int = 1) -> np.ndarray:
    t = turns * 2 * math.pi * np.arange(k) / k
    P = np.stack([np.cos(t), np.sin(t), np.zeros(k)], axis=1)
    return np.vstack([P, P[:1]])


def test_median_degenerate_triangle_has_zero_margin():
    assert geomlemmas.median_check([1, 0, 0], [0, 1, 0], [0, 1, 0]) == pytest.approx(0.0, abs=1e-12)


def test_median_matches_closed_form(rng):
    A, B, C = geomlemmas.random_median_triples(50, rng)
    for a, b, c in zip(A, B, C):
        dab, dac, dbc = (metrics.distance(S2, p, q) for p, q in ((a, b), (a, c), (b, c)))
        expected = math.acos(np.clip((math.cos(dab) + math.cos(dac)) / (2 * math.cos(dbc / 2)), -1, 1))
        margin = geomlemmas.median_check(a, b, c)
        assert (dab + dac) / 2 - margin == pytest.approx(expected, abs=1e-7)
        assert margin >= -1e-12


def test_median_precondition():
    with pytest.raises(PreconditionViolated):
        geomlemmas.median_check([0, 0, 1], [1, 0, 0], [-1, 0, 0])


def test_hemisphere_equator_is_tight():
    margin, cap, length = geomlemmas.hemisphere_check(equator())
    assert length == pytest.approx(2 * math.pi, abs=1e-9)
    assert cap.radius == pytest.approx(math.pi / 2, abs=1e-9)
    assert margin == pytest.approx(0.0, abs=1e-9)


def test_hemisphere_rejects_open_curve():
    with pytest.raises(NotClosed):
        geomlemmas.hemisphere_check(equator()[:-3])


def test_random_polygon_is_closed_and_short(rng):
    for target in (0.5, 3.0, 2 * math.pi):
        P = geomlemmas.random_closed_polygon(rng, target)
        assert np.allclose(P[0], P[-1])
        assert geomlemmas.curve_length(P[:-1]) <= target + 1e-9
        edges = metrics.distances(S2, P[:-1], P[1:])
        assert edges.max() <= geomlemmas.MAX_EDGE + 1e-12


@pytest.mark.parametrize("eps", [1e-7, 1e-4, 1e-2])
def test_near_great_circle_is_almost_tight(eps, rng):
    P = geomlemmas.near_great_circle(rng, eps)
    assert np.allclose(P[0], P[-1])
    margin, cap, length = geomlemmas.hemisphere_check(P)
    assert length <= 2 * math.pi + 1e-12
    assert -1e-9 <= margin <= 20 * eps + 1e-4


def test_quarter_ball_digon_is_tight():
    digon = [[1, 0, 0], [0, 1, 0], [1, 0, 0]]
    assert geomlemmas.quarter_ball_check(digon) == pytest.approx(0.0, abs=1e-12)


def test_quarter_ball_small_circle_has_room():
    t = np.linspace(0, 2 * math.pi, 65)
    theta = 0.4
    P = np.stack([math.sin(theta) * np.cos(t), math.sin(theta) * np.sin(t), np.full_like(t, math.cos(theta))], axis=1)
    assert geomlemmas.quarter_ball_check(P) > 0.1


def test_quarter_ball_rejects_long_curves():
    with pytest.raises(PreconditionViolated):
        geomlemmas.quarter_ball_check(equator(16, turns=2))


def test_convexity_below_kappa():
    v = geomlemmas.ball_convexity_check(S2, [0, 0, 1], math.pi / 2 - 0.01, pairs=500, seed=5)
    assert v.failures == 0
    assert v.worst_margin > 0
    v = geomlemmas.ball_convexity_check(metrics.FlatTorus(), [0.9, 0.1], 0.2, pairs=500, seed=5)
    assert v.failures == 0


def test_convexity_fails_above_kappa():
    reset_warnings()
    v = geomlemmas.ball_convexity_check(S2, [0, 0, 1], math.pi / 2 + 0.05, pairs=2000, seed=5)
    assert v.failures > 0
    assert v.worst_margin < 0
    assert v.worst_case["r"] == pytest.approx(math.pi / 2 + 0.05)
    assert any("kappa" in w for w in WARNINGS)


@pytest.mark.parametrize("lemma", geomlemmas.LEMMAS)
def test_campaigns_find_no_violations(lemma):
    v = geomlemmas.run_campaign(lemma, 60, seed=7)
    assert v.lemma == lemma
    assert v.trials > 0
    assert v.failures == 0
    assert v.passed


def test_hemisphere_campaign_reaches_tight_case():
    v = geomlemmas.hemisphere_campaign(200, seed=7)
    assert v.failures == 0
    assert v.worst_margin < 1e-3


def test_hemisphere_campaign_uses_strict_tolerance():
    tol = inspect.signature(geomlemmas.hemisphere_campaign).parameters["tol"].default
    assert tol == geomlemmas.TOL == 1e-9


def test_campaigns_are_reproducible():
    a = geomlemmas.run_campaign("median", 100, seed=1)
    b = geomlemmas.run_campaign("median", 100, seed=1)
    assert a.to_dict() == b.to_dict()
