"""
Metrik-Backends der Modellräume

Runde Sphären, euklidische Räume und Kugeln sowie der flache Torus
R²/Z². Alle Räume haben geschlossene Formeln für Geodäten, daher auch
für Injektivitätsradius rho und Konvexitätsradius kappa.

Punktformate:
    RoundSphere(n)   Einheitsvektor im R^(n+1)
    Euclidean(n)     Punkt im R^n
    EuclideanBall(n) Punkt im R^n mit Norm <= 1
    FlatTorus(2)     (u, v), nur modulo 1 relevant

Alle Funktionen sind rein; es gibt keinen geteilten Zustand.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

from laborlog import (
    TOL, InvalidPoint, InvalidTangent, OutsideShortPathDomain, EmptySet, LaborError,
)

KINDS = ("sphere", "euclidean", "ball", "torus")

# Grenze für den LP-Halbsphärentest; darunter wird der Rand exakt behandelt
HEMI_TOL = 1e-7


@dataclass(frozen=True)
class ModelSpace:
    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise LaborError(f"Unbekannter Modellraum: {self.kind}")
        if self.kind == "torus" and self.n != 2:
            raise LaborError("Nur der flache Torus T² wird unterstützt")

    @property
    def ambient_dim(self) -> int:
        return self.n + 1 if self.kind == "sphere" else self.n

    @property
    def compact(self) -> bool:
        return self.kind in ("sphere", "torus", "ball")

    @property
    def rho(self) -> float:
        return constants(self)[0]

    @property
    def kappa(self) -> float:
        return constants(self)[1]

    @property
    def diameter(self) -> float:
        if self.kind == "sphere":
            return math.pi
        if self.kind == "torus":
            return math.sqrt(2.0) / 2.0
        if self.kind == "ball":
            return 2.0
        return math.inf

    def __str__(self):
        names = {"sphere": "S", "euclidean": "R", "ball": "B", "torus": "T"}
        return f"{names[self.kind]}^{self.n}"


def RoundSphere(n: int) -> ModelSpace:
    return ModelSpace("sphere", n)


def Euclidean(n: int) -> ModelSpace:
    return ModelSpace("euclidean", n)


def EuclideanBall(n: int) -> ModelSpace:
    return ModelSpace("ball", n)


def FlatTorus() -> ModelSpace:
    return ModelSpace("torus", 2)


@dataclass(frozen=True, eq=False)
class Cap:
    """Abgeschlossene geodätische Kugel auf der Sphäre"""
    center: np.ndarray
    radius: float

    def covers(self, p, tol: float = TOL) -> bool:
        return _sphere_dist(self.center, np.asarray(p, dtype=float)) <= self.radius + tol

    def to_dict(self) -> dict:
        return {"center": [float(c) for c in self.center], "radius": float(self.radius)}


def constants(space: ModelSpace) -> tuple[float, float]:
    """(rho, kappa) in geschlossener Form; stets rho >= 2 kappa"""
    if space.kind == "sphere":
        return math.pi, math.pi / 2
    if space.kind == "torus":
        return 0.5, 0.25
    return math.inf, math.inf


# ----------- PUNKTE -----------

def check_point(space: ModelSpace, p, tol: float = TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != space.ambient_dim:
        raise InvalidPoint(f"Punkt {p.tolist()} hat falsche Dimension für {space}")
    if not np.all(np.isfinite(p)):
        raise InvalidPoint(f"Punkt {p.tolist()} ist nicht endlich")
    norms = np.linalg.norm(p, axis=-1)
    if space.kind == "sphere" and np.any(np.abs(norms - 1.0) > tol):
        raise InvalidPoint(f"Punkt {p.tolist()} liegt nicht auf {space}")
    if space.kind == "ball" and np.any(norms > 1.0 + tol):
        raise InvalidPoint(f"Punkt {p.tolist()} liegt außerhalb von {space}")
    if space.kind == "torus":
        p = np.mod(p, 1.0)
    return p


def _normalize(P):
    P = np.asarray(P, dtype=float)
    return P / np.linalg.norm(P, axis=-1, keepdims=True)


def _sphere_dist(P, Q):
    # Kahan-Formel: stabil bei fast gleichen und fast antipodalen Punkten
    P = _normalize(P)
    Q = _normalize(Q)
    return 2.0 * np.arctan2(np.linalg.norm(P - Q, axis=-1), np.linalg.norm(P + Q, axis=-1))


def _torus_offset(P, Q):
    d = np.asarray(Q, dtype=float) - np.asarray(P, dtype=float)
    return d - np.round(d)


def distances(space: ModelSpace, P, Q) -> np.ndarray:
    """Vektorisierte Abstände ohne Prüfung der Punkte"""
    if space.kind == "sphere":
        return _sphere_dist(P, Q)
    if space.kind == "torus":
        return np.linalg.norm(_torus_offset(P, Q), axis=-1)
    return np.linalg.norm(np.asarray(P, dtype=float) - np.asarray(Q, dtype=float), axis=-1)


def distance(space: ModelSpace, p, q, tol: float = TOL) -> float:
    p = check_point(space, p, tol)
    q = check_point(space, q, tol)
    return float(distances(space, p, q))


def pairwise(space: ModelSpace, P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    return distances(space, P[:, None, :], P[None, :, :])


def short_path(space: ModelSpace, p, q, t: float, tol: float = TOL) -> np.ndarray:
    """
    Punkt zum Parameter t auf der eindeutigen kürzesten Geodäte von p nach q.

    s(p, p, t) = p, s(p, q, 0) = p, s(p, q, 1) = q und
    s(p, q, t) = s(q, p, 1 - t) bis auf Rundung.
    """
    p = check_point(space, p, tol)
    q = check_point(space, q, tol)
    if np.array_equal(p, q):
        return p.copy()
    d = float(distances(space, p, q))
    if d >= space.rho - tol:
        raise OutsideShortPathDomain(p, q, d)
    if t == 0:
        return p.copy()
    if t == 1:
        return q.copy()

    if space.kind == "sphere":
        s = math.sin(d)
        if s < 1e-12:
            x = (1.0 - t) * p + t * q
        else:
            x = (math.sin((1.0 - t) * d) / s) * p + (math.sin(t * d) / s) * q
        return x / np.linalg.norm(x)
    if space.kind == "torus":
        return np.mod(p + t * _torus_offset(p, q), 1.0)
    return (1.0 - t) * p + t * q


def geodesic_samples(space: ModelSpace, p, q, ts) -> np.ndarray:
    """short_path für viele Parameter auf einmal, ohne Prüfung des Bereichs"""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    ts = np.asarray(ts, dtype=float)[:, None]
    if space.kind == "sphere":
        d = float(_sphere_dist(p, q))
        s = math.sin(d)
        if s < 1e-12:
            return _normalize((1.0 - ts) * p + ts * q)
        return _normalize(np.sin((1.0 - ts) * d) / s * p + np.sin(ts * d) / s * q)
    if space.kind == "torus":
        return np.mod(p + ts * _torus_offset(p, q), 1.0)
    return (1.0 - ts) * p + ts * q


def exp_map(space: ModelSpace, x, V) -> np.ndarray:
    """Exponentialabbildung in x für Tangentialvektoren V (k, D)"""
    x = np.asarray(x, dtype=float)
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if space.kind == "sphere":
        r = np.linalg.norm(V, axis=1, keepdims=True)
        safe = np.where(r > 0, r, 1.0)
        return _normalize(np.cos(r) * x + np.sin(r) * V / safe)
    if space.kind == "torus":
        return np.mod(x + V, 1.0)
    return x + V


def geodesic_shoot(space: ModelSpace, x, v, length: float, tol: float = TOL) -> np.ndarray:
    """Endpunkt der Geodäte ab x in Richtung v (Einheitsvektor) mit Länge length"""
    x = check_point(space, x, tol)
    v = np.asarray(v, dtype=float)
    if length < 0:
        raise LaborError("Länge muss >= 0 sein")
    if v.shape != (space.n if space.kind != "sphere" else space.n + 1,):
        raise InvalidTangent(f"Richtung {v.tolist()} hat falsche Dimension")
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise InvalidTangent(f"Richtung {v.tolist()} ist kein Einheitsvektor")
    if space.kind == "sphere":
        if abs(float(x @ v)) > tol:
            raise InvalidTangent(f"Richtung {v.tolist()} ist nicht tangential in {x.tolist()}")
        if length == 0:
            return x.copy()
        y = math.cos(length) * x + math.sin(length) * v
        return y / np.linalg.norm(y)
    if space.kind == "torus":
        return np.mod(x + length * v, 1.0)
    return x + length * v


def set_diameter(space: ModelSpace, points) -> float:
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        raise EmptySet("Durchmesser der leeren Menge ist nicht definiert")
    P = P.reshape(-1, space.ambient_dim)
    if len(P) == 1:
        return 0.0
    return float(pairwise(space, P).max())


# ----------- TANGENTIALRAUM -----------

def tangent_basis(x) -> np.ndarray:
    """Orthonormalbasis (n, n+1) des Tangentialraums der Sphäre in x"""
    x = _normalize(x)
    d = len(x)
    M = np.eye(d) - np.outer(x, x)
    u, s, _ = np.linalg.svd(M)
    return u[:, :d - 1].T


def random_points(space: ModelSpace, k: int, rng) -> np.ndarray:
    if space.kind == "sphere":
        return _normalize(rng.standard_normal((k, space.n + 1)))
    if space.kind == "torus":
        return rng.random((k, 2))
    if space.kind == "ball":
        g = _normalize(rng.standard_normal((k, space.n)))
        r = rng.random(k) ** (1.0 / space.n)
        return g * r[:, None]
    return rng.standard_normal((k, space.n))


def random_tangent(space: ModelSpace, x, rng) -> np.ndarray:
    if space.kind == "sphere":
        B = tangent_basis(x)
        a = rng.standard_normal(len(B))
        v = a @ B
        return v / np.linalg.norm(v)
    v = rng.standard_normal(space.n)
    return v / np.linalg.norm(v)


# ----------- KLEINSTE UMFASSENDE KAPPE -----------

def _cap_through(R: np.ndarray) -> Cap:
    # Zentrum im Spann von R, gleich weit von allen Randpunkten
    G = R @ R.T
    a = np.linalg.lstsq(G, np.ones(len(R)), rcond=None)[0]
    u = a @ R
    norm = np.linalg.norm(u)
    if norm < 1e-15:
        u = R[0]
    else:
        u = u / norm
    if u @ R[0] < 0:
        u = -u
    return Cap(u, float(_sphere_dist(u[None, :], R).max()))


def _cap_with(points: np.ndarray, boundary: list, dmax: int) -> Cap | None:
    cap = _cap_through(np.array(boundary)) if boundary else None
    for i, p in enumerate(points):
        if cap is None or not cap.covers(p, 1e-12):
            if len(boundary) + 1 == dmax:
                cap = _cap_through(np.array(boundary + [p]))
            else:
                cap = _cap_with(points[:i], boundary + [p], dmax)
    return cap


def _hemisphere_margin(P: np.ndarray) -> tuple[float, np.ndarray]:
    """LP: max s mit p_i . c >= s, |c|_inf <= 1"""
    k, d = P.shape
    cost = np.zeros(d + 1)
    cost[-1] = -1.0
    A = np.hstack([-P, np.ones((k, 1))])
    bounds = [(-1.0, 1.0)] * d + [(None, None)]
    res = linprog(cost, A_ub=A, b_ub=np.zeros(k), bounds=bounds, method="highs")
    if not res.success:
        raise LaborError(f"Halbsphären-LP gescheitert: {res.message}")
    return float(res.x[-1]), res.x[:-1]


def _lex_best(centers: list, radii: list, tol: float) -> Cap:
    rmin = min(radii)
    cands = [c for c, r in zip(centers, radii) if r <= rmin + tol]
    best = min(cands, key=lambda c: tuple(np.round(c, 12)))
    return Cap(best, float(rmin))


def smallest_enclosing_cap(points, tol: float = TOL, seed: int = 0) -> Cap:
    """
    Minimale abgeschlossene Kappe um eine Punktmenge auf der Sphäre.

    Liegt die Menge in einer offenen Halbsphäre, löst ein inkrementeller
    Welzl-Algorithmus das Problem exakt. Sonst ist der Radius >= pi/2 und
    ergibt sich aus der Facette der konvexen Hülle, die dem Ursprung am
    nächsten liegt. Punkte einer Polylinie genügen, solange ihre Kanten
    Geodäten sind.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or len(P) == 0:
        raise EmptySet("Kappe einer leeren Menge")
    if np.any(np.abs(np.linalg.norm(P, axis=1) - 1.0) > 1e-6):
        raise InvalidPoint("Kappe nur für Punkte auf der Einheitssphäre")
    P = _normalize(P)
    P = np.unique(np.round(P, 15), axis=0)
    if len(P) == 1:
        return Cap(P[0].copy(), 0.0)

    margin, _ = _hemisphere_margin(P)
    if margin > HEMI_TOL:
        rng = np.random.default_rng(seed)
        cap = _cap_with(P[rng.permutation(len(P))], [], P.shape[1])
        return cap

    # Punkte auf einer Großsphäre: beide Pole liefern Radius pi/2
    _, s, vt = np.linalg.svd(P, full_matrices=True)
    if len(s) < P.shape[1] or s[-1] < 1e-9:
        nu = vt[-1]
        radii = [float(_sphere_dist(u[None, :], P).max()) for u in (nu, -nu)]
        return _lex_best([nu, -nu], radii, tol)

    # Ursprung in oder knapp an der Hülle: nächste Facette bestimmt die Kappe
    try:
        hull = ConvexHull(P)
    except QhullError:
        hull = ConvexHull(P, qhull_options="QJ")
    normals = hull.equations[:, :-1]
    offsets = -hull.equations[:, -1]
    h = offsets.min()
    centers = [-normals[i] / np.linalg.norm(normals[i]) for i in np.flatnonzero(offsets <= h + tol)]
    radii = [float(_sphere_dist(u[None, :], P).max()) for u in centers]
    return _lex_best(centers, radii, tol)
