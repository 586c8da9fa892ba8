"""
Numerische Prüfstände für die Hilfssätze der Kurvengeometrie

    hemisphere_check      geschlossene Kurve der Länge <= 2 pi liegt in einer Halbsphäre
    median_check          Seitenhalbierende: d(a, m) <= (d(a,b) + d(a,c)) / 2
    quarter_ball_check    geschlossene Kurve in der Kugel vom Radius l/4 um m
    ball_convexity_check  Kugeln mit r < kappa sind streng konvex

Jede Kampagne zieht geseedete Zufallsfälle und meldet Fehlschläge mit
dem schlechtesten Fall. Ein Fehlschlag ist ein Harnessfehler.
"""

import math
from dataclasses import dataclass

import numpy as np

import metrics
from metrics import ModelSpace
from laborlog import (
    TOL, SEED, NotClosed, PreconditionViolated, LaborError,
    info, warn, fail,
)

LEMMAS = ("hemisphere", "median", "quarter_ball", "convexity")

# Längste Kante nach Unterteilung
MAX_EDGE = 0.1
# Stichproben entlang einer Geodäte im Konvexitätstest
GEODESIC_STEPS = 32
PAIRS_PER_BALL = 100
# Anteil fast-großkreisförmiger Kurven in der Halbsphären-Kampagne
NEAR_TIGHT_SHARE = 0.25


@dataclass
class LemmaVerdict:
    lemma: str
    trials: int
    failures: int
    worst_margin: float
    worst_case: dict | None
    seed: int = SEED

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "trials": self.trials,
            "failures": self.failures,
            "worst_margin": self.worst_margin,
            "worst_case": self.worst_case,
            "seed": self.seed,
            "pass": self.passed,
        }


# ----------- KURVEN -----------

def _closed_curve(curve, tol: float) -> np.ndarray:
    """Prüft P[0] == P[-1] und gibt die Punkte ohne Wiederholung zurück"""
    P = np.atleast_2d(np.asarray(curve, dtype=float))
    space = metrics.RoundSphere(P.shape[1] - 1)
    P = metrics.check_point(space, P, 1e-6)
    if len(P) < 2 or metrics.distances(space, P[0], P[-1]) > tol:
        raise NotClosed("Kurve ist nicht geschlossen: Anfang und Ende verschieden")
    return metrics._normalize(P[:-1])


def curve_length(P: np.ndarray) -> float:
    """Länge des geschlossenen geodätischen Polygons durch P"""
    space = metrics.RoundSphere(P.shape[1] - 1)
    return float(metrics.distances(space, P, np.roll(P, -1, axis=0)).sum())


def subdivide(P: np.ndarray, max_edge: float = MAX_EDGE) -> np.ndarray:
    """Fügt geodätische Zwischenpunkte ein, bis keine Kante länger als max_edge ist"""
    space = metrics.RoundSphere(P.shape[1] - 1)
    out = []
    for p, q in zip(P, np.roll(P, -1, axis=0)):
        d = float(metrics._sphere_dist(p, q))
        k = max(1, math.ceil(d / max_edge))
        out.append(metrics.geodesic_samples(space, p, q, np.arange(k) / k))
    return np.vstack(out)


def random_closed_polygon(rng, target_length: float, dim: int = 2) -> np.ndarray:
    """
    Geschlossenes geodätisches Polygon auf S^dim mit Länge target_length.

    Die Ecken liegen nach Winkel sortiert um ein zufälliges Zentrum; die
    Tangentialvektoren werden per Bisektion skaliert, bis die Länge passt.
    Reicht die Skalierung nicht, bleibt die erreichbare Länge stehen.
    Rückgabe mit wiederholtem Anfangspunkt.
    """
    space = metrics.RoundSphere(dim)
    c = metrics.random_points(space, 1, rng)[0]
    B = metrics.tangent_basis(c)
    k = int(rng.integers(3, 12))
    ang = np.sort(rng.random(k) * 2 * math.pi)
    rad = 0.2 + rng.random(k)
    coords = np.zeros((k, dim))
    coords[:, 0] = rad * np.cos(ang)
    coords[:, 1] = rad * np.sin(ang)
    if dim > 2:
        coords[:, 2:] = 0.3 * rng.standard_normal((k, dim - 2)) * rad[:, None]
    V = coords @ B

    def polygon(s):
        return metrics.exp_map(space, c, s * V)

    s_hi = (math.pi - 1e-6) / float(np.linalg.norm(V, axis=1).max())
    if curve_length(polygon(s_hi)) <= target_length:
        s = s_hi
    else:
        lo, hi = 0.0, s_hi
        for _ in range(60):
            mid = (lo + hi) / 2
            if curve_length(polygon(mid)) < target_length:
                lo = mid
            else:
                hi = mid
        s = lo
    P = subdivide(polygon(s))
    return np.vstack([P, P[:1]])


def near_great_circle(rng, eps: float, dim: int = 2) -> np.ndarray:
    """
    Geschlossenes Polygon knapp oberhalb eines zufälligen Großkreises.

    Ecken auf Breite eps bis 1.1 eps über dem Äquator eines zufälligen Pols;
    ist die Länge größer als 2 pi, wandern alle Ecken per Bisektion ein
    Stück zum Pol. Der Kappenradius liegt dann knapp unter pi/2.
    """
    space = metrics.RoundSphere(dim)
    pole = metrics.random_points(space, 1, rng)[0]
    B = metrics.tangent_basis(pole)
    k = int(rng.integers(8, 40))
    ang = (np.arange(k) + 0.8 * rng.random(k)) * 2 * math.pi / k
    E = np.cos(ang)[:, None] * B[0] + np.sin(ang)[:, None] * B[1]
    lat = eps * (1.0 + 0.1 * rng.random(k))

    def polygon(shift):
        return metrics._normalize(np.cos(lat + shift)[:, None] * E + np.sin(lat + shift)[:, None] * pole)

    s = 0.0
    if curve_length(polygon(0.0)) > 2 * math.pi:
        lo, hi = 0.0, 0.5
        for _ in range(60):
            mid = (lo + hi) / 2
            if curve_length(polygon(mid)) > 2 * math.pi:
                lo = mid
            else:
                hi = mid
        s = hi
    P = subdivide(polygon(s))
    return np.vstack([P, P[:1]])


def _point_at_arclength(P: np.ndarray, t: float) -> np.ndarray:
    space = metrics.RoundSphere(P.shape[1] - 1)
    Q = np.roll(P, -1, axis=0)
    seg = metrics.distances(space, P, Q)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    i = int(np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(P) - 1))
    if seg[i] <= 0:
        return P[i]
    return metrics.short_path(space, P[i], Q[i], min(1.0, (t - cum[i]) / seg[i]))


# ----------- HILFSSÄTZE -----------

def hemisphere_check(curve, tol: float = TOL) -> tuple[float, metrics.Cap, float]:
    """
    Rand pi/2 - Kappenradius für eine geschlossene Kurve.

    Nur für Länge <= 2 pi aussagekräftig; längere Kurven liefern inf.
    Rückgabe (margin, cap, length).
    """
    P = _closed_curve(curve, tol)
    length = curve_length(P)
    cap = metrics.smallest_enclosing_cap(P)
    if length > 2 * math.pi + tol:
        return math.inf, cap, length
    return math.pi / 2 - cap.radius, cap, length


def _median_margins(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> np.ndarray:
    space = metrics.RoundSphere(A.shape[1] - 1)
    dab = metrics.distances(space, A, B)
    dac = metrics.distances(space, A, C)
    dbc = metrics.distances(space, B, C)
    s = np.sin(dbc)
    safe = np.where(s > 1e-12, s, 1.0)
    half = np.sin(dbc / 2)[:, None] / safe[:, None]
    M = np.where((s > 1e-12)[:, None], half * (B + C), B)
    M = metrics._normalize(M)
    return (dab + dac) / 2 - metrics.distances(space, A, M)


def median_check(a, b, c, tol: float = TOL) -> float:
    """Rand (d(a,b) + d(a,c)) / 2 - d(a, m) mit m Mitte von bc; verlangt d(a,b) + d(a,c) < pi"""
    space = metrics.RoundSphere(len(a) - 1)
    a, b, c = (metrics.check_point(space, p, 1e-6) for p in (a, b, c))
    if metrics.distance(space, a, b) + metrics.distance(space, a, c) >= math.pi:
        raise PreconditionViolated("d(a,b) + d(a,c) muss kleiner als pi sein")
    return float(_median_margins(a[None, :], b[None, :], c[None, :])[0])


def quarter_ball_check(curve, tol: float = TOL) -> float:
    """
    Rand l/4 - max d(m, Kurve) mit m Mitte von a = Kurve(0) und b = Kurve(l/2).

    Kugeln mit Radius l/4 < pi/2 sind konvex, daher genügen die Ecken.
    """
    P = _closed_curve(curve, tol)
    length = curve_length(P)
    if length >= 2 * math.pi:
        raise PreconditionViolated(f"Kurvenlänge {length:.6f} ist nicht kleiner als 2 pi")
    space = metrics.RoundSphere(P.shape[1] - 1)
    a = P[0]
    b = _point_at_arclength(P, length / 2)
    m = metrics.short_path(space, a, b, 0.5)
    reach = float(metrics.distances(space, m, np.vstack([P, b])).max())
    return length / 4 - reach


def _ball_points(space: ModelSpace, center, r: float, k: int, rng) -> np.ndarray:
    """Zufallspunkte mit Abstand < r vom Zentrum, die Hälfte im äußeren Zehntel"""
    dim = space.n
    radii = r * (1.0 - rng.random(k)) ** (1.0 / dim)
    rim = rng.random(k) < 0.5
    radii[rim] = r * (1.0 - 0.1 * rng.random(int(rim.sum())))
    radii *= 1.0 - 1e-9
    if space.kind == "sphere":
        B = metrics.tangent_basis(center)
        dirs = metrics._normalize(rng.standard_normal((k, dim))) @ B
    else:
        dirs = metrics._normalize(rng.standard_normal((k, dim)))
    return metrics.exp_map(space, center, radii[:, None] * dirs)


def ball_convexity_check(space: ModelSpace, center, r: float, pairs: int = PAIRS_PER_BALL,
                         seed: int = SEED, tol: float = TOL, steps: int = GEODESIC_STEPS) -> LemmaVerdict:
    """
    Zieht Punktpaare in B(center, r) und prüft, ob ihre kürzeste Geodäte
    im Inneren bleibt. Paare ohne eindeutige Geodäte werden übersprungen.
    """
    if r <= 0:
        raise PreconditionViolated("Radius muss positiv sein")
    center = metrics.check_point(space, center, 1e-6)
    if space.kind == "sphere":
        center = metrics._normalize(center)
    if r >= space.kappa:
        warn(f"Radius {r:.6f} >= kappa {space.kappa:.6f}: Konvexität nicht garantiert")
    rng = np.random.default_rng(seed)
    P = _ball_points(space, center, r, pairs, rng)
    Q = _ball_points(space, center, r, pairs, rng)
    ts = np.linspace(0.0, 1.0, steps + 1)

    failures = 0
    tested = 0
    worst = (math.inf, None)
    for p, q in zip(P, Q):
        if metrics.distances(space, p, q) >= space.rho - tol:
            continue
        tested += 1
        path = metrics.geodesic_samples(space, p, q, ts)
        margin = r - float(metrics.distances(space, center, path).max())
        if margin <= -tol:
            failures += 1
        if margin < worst[0]:
            worst = (margin, {"space": space.kind, "center": center.tolist(), "r": r,
                              "p": p.tolist(), "q": q.tolist()})
    return LemmaVerdict("convexity", tested, failures, float(worst[0]), worst[1], seed)


# ----------- KAMPAGNEN -----------

def _verdict(lemma: str, margins, cases, seed: int, tol: float) -> LemmaVerdict:
    margins = np.asarray(margins, dtype=float)
    if not len(margins):
        return LemmaVerdict(lemma, 0, 0, math.inf, None, seed)
    i = int(np.argmin(margins))
    failures = int(np.sum(margins < -tol))
    case = cases(i) if callable(cases) else cases[i]
    return LemmaVerdict(lemma, len(margins), failures, float(margins[i]), case, seed)


def hemisphere_campaign(trials: int, seed: int = SEED, tol: float = TOL) -> LemmaVerdict:
    """Zufallspolygone, ein Viertel davon knapp über einem Großkreis"""
    rng = np.random.default_rng(seed)
    margins, curves = [], []
    for _ in range(trials):
        if rng.random() < NEAR_TIGHT_SHARE:
            P = near_great_circle(rng, 10.0 ** rng.uniform(-7, -2))
        else:
            P = random_closed_polygon(rng, 2 * math.pi * (1.0 - rng.random()))
        margin, _, _ = hemisphere_check(P, tol)
        margins.append(margin)
        curves.append(P)
    return _verdict("hemisphere", margins, lambda i: {"curve": curves[i].tolist()}, seed, tol)


def random_median_triples(k: int, rng, dim: int = 2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tripel mit d(a,b) + d(a,c) < pi"""
    space = metrics.RoundSphere(dim)
    A = metrics.random_points(space, k, rng)
    d1 = rng.random(k) * math.pi
    d2 = rng.random(k) * (math.pi - d1)

    def shoot(d):
        G = rng.standard_normal((k, dim + 1))
        G -= np.sum(G * A, axis=1, keepdims=True) * A
        G = metrics._normalize(G)
        return metrics._normalize(np.cos(d)[:, None] * A + np.sin(d)[:, None] * G)

    return A, shoot(d1), shoot(d2)


def median_campaign(trials: int, seed: int = SEED, tol: float = 1e-12) -> LemmaVerdict:
    rng = np.random.default_rng(seed)
    A, B, C = random_median_triples(trials, rng)
    margins = _median_margins(A, B, C)
    return _verdict("median", margins,
                    lambda i: {"a": A[i].tolist(), "b": B[i].tolist(), "c": C[i].tolist()}, seed, tol)


def quarter_ball_campaign(trials: int, seed: int = SEED, tol: float = TOL) -> LemmaVerdict:
    rng = np.random.default_rng(seed)
    margins, curves = [], []
    for _ in range(trials):
        P = random_closed_polygon(rng, 2 * math.pi * (1.0 - rng.random()) * (1.0 - 1e-6))
        margins.append(quarter_ball_check(P))
        curves.append(P)
    return _verdict("quarter_ball", margins, lambda i: {"curve": curves[i].tolist()}, seed, tol)


def convexity_campaign(balls: int, seed: int = SEED, pairs: int = PAIRS_PER_BALL,
                       tol: float = TOL) -> LemmaVerdict:
    """Abwechselnd S² und T² mit Radien unterhalb von kappa"""
    rng = np.random.default_rng(seed)
    tested, failures = 0, 0
    worst = (math.inf, None)
    for i in range(balls):
        space = metrics.RoundSphere(2) if i % 2 == 0 else metrics.FlatTorus()
        r = (space.kappa - 0.01) * (1.0 - rng.random())
        center = metrics.random_points(space, 1, rng)[0]
        v = ball_convexity_check(space, center, r, pairs, int(rng.integers(2**31)), tol)
        tested += v.trials
        failures += v.failures
        if v.worst_margin < worst[0]:
            worst = (v.worst_margin, v.worst_case)
    return LemmaVerdict("convexity", tested, failures, float(worst[0]), worst[1], seed)


def run_campaign(lemma: str, trials: int, seed: int = SEED) -> LemmaVerdict:
    """
    Eine Kampagne mit trials Fällen.

    Der Median-Test ist vektorisiert und läuft mit 10 trials Tripeln,
    der Konvexitätstest mit trials / 10 Kugeln zu je 100 Paaren.
    """
    if lemma == "hemisphere":
        verdict = hemisphere_campaign(trials, seed)
    elif lemma == "median":
        verdict = median_campaign(10 * trials, seed)
    elif lemma == "quarter_ball":
        verdict = quarter_ball_campaign(trials, seed)
    elif lemma == "convexity":
        verdict = convexity_campaign(max(1, trials // 10), seed)
    else:
        raise LaborError(f"Unbekannter Hilfssatz: {lemma}")
    if verdict.passed:
        info(f"{lemma}: {verdict.trials} Fälle, schlechtester Rand {verdict.worst_margin:.3e}")
    else:
        fail(f"{lemma}: {verdict.failures} von {verdict.trials} Fällen verletzt (Harnessfehler)")
    return verdict


def run_all(trials: int, seed: int = SEED, lemmas=LEMMAS) -> list[LemmaVerdict]:
    return [run_campaign(name, trials, seed) for name in lemmas]
