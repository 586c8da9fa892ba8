"""
Triangulierte Modellräume

Sphären als unterteiltes Kreuzpolytop, die Einheitskugel B^n mit
eingeschriebenem regulärem Simplex, der flache Torus und der Kegel über
dem (n-2)-Skelett des Simplex (Ziel der Shchepin-Abbildung).

Die Kombinatorik wird exakt als Indextupel gespeichert, Koordinaten als
float64. Torus-Ecken liegen als Parameter (u, v) in [0, 1)^2 vor.
"""

import json
import math
import itertools
from dataclasses import dataclass, field

import numpy as np

import metrics
from laborlog import UnsupportedDimension, NotClosedManifold, InvalidComplex, info

SPACE_TAGS = ("sphere", "ball", "torus", "polyhedron")

# Rundung für das Zusammenführen gleicher Ecken
KEY_DIGITS = 12


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """
    Simplizialkomplex mit Ecken in einem Modellraum.

    Args:
        dimension:  Dimension der maximalen Simplizes
        vertices:   Koordinaten, eine Zeile pro Ecke
        simplices:  {k: Tupel sortierter Indextupel}, alle Seiten enthalten
        space_tag:  "sphere", "ball", "torus" oder "polyhedron"
        meta:       optionale Zusatzdaten (z.B. Basisecken der Kugel)
    """
    dimension: int
    vertices: np.ndarray
    simplices: dict
    space_tag: str
    meta: dict = field(default_factory=dict)

    @property
    def top(self) -> np.ndarray:
        return np.array(self.simplices[self.dimension], dtype=int).reshape(-1, self.dimension + 1)

    @property
    def space(self) -> metrics.ModelSpace:
        if self.space_tag == "sphere":
            return metrics.RoundSphere(self.dimension)
        if self.space_tag == "torus":
            return metrics.FlatTorus()
        if self.space_tag == "ball":
            return metrics.EuclideanBall(self.dimension)
        return metrics.Euclidean(self.vertices.shape[1])

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    def count(self, k: int) -> int:
        return len(self.simplices.get(k, ()))

    def index(self, k: int) -> dict:
        """Simplex -> Position in simplices[k]"""
        return {s: i for i, s in enumerate(self.simplices[k])}

    def __repr__(self):
        counts = ", ".join(str(self.count(k)) for k in range(self.dimension + 1))
        return f"SimplicialComplex({self.space_tag}, dim={self.dimension}, f=({counts}))"


@dataclass(frozen=True, eq=False)
class Mod2Chain:
    complex: SimplicialComplex
    dimension: int
    coefficients: np.ndarray

    def is_zero(self) -> bool:
        return not np.any(self.coefficients)


# ----------- AUFBAU -----------

def _closure(top) -> dict:
    """Alle Seiten der maximalen Simplizes, sortiert"""
    top = [tuple(sorted(int(i) for i in s)) for s in top]
    dim = len(top[0]) - 1
    faces = {k: set() for k in range(dim + 1)}
    for s in top:
        for k in range(dim + 1):
            faces[k].update(itertools.combinations(s, k + 1))
    return {k: tuple(sorted(faces[k])) for k in range(dim + 1)}


def from_top(space_tag: str, vertices, top, meta: dict | None = None) -> SimplicialComplex:
    vertices = np.asarray(vertices, dtype=float)
    top = [tuple(s) for s in top]
    simplices = _closure(top)
    return SimplicialComplex(len(top[0]) - 1, vertices, simplices, space_tag, meta or {})


class VertexPool:
    """Sammelt Ecken und führt numerisch gleiche Punkte zusammen"""

    def __init__(self):
        self.points = []
        self.keys = {}

    def add(self, p) -> int:
        p = np.asarray(p, dtype=float)
        key = tuple(np.round(p, KEY_DIGITS) + 0.0)
        idx = self.keys.get(key)
        if idx is None:
            idx = len(self.points)
            self.points.append(p)
            self.keys[key] = idx
        return idx

    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)


def _drop_degenerate(simplices) -> list:
    out = []
    seen = set()
    for s in simplices:
        if len(set(s)) < len(s):
            continue
        key = tuple(sorted(s))
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


# ----------- SPHÄRE -----------

def _midpoint(verts, cache, a, b):
    key = (a, b) if a < b else (b, a)
    c = cache.get(key)
    if c is None:
        s = verts[a] + verts[b]
        verts.append(s / np.linalg.norm(s))
        c = len(verts) - 1
        cache[key] = c
    return c


def _octa_key(verts, a, b):
    # gleiche Wahl für Simplex und Antipode
    pa, pb = verts[a], verts[b]
    length = round(float(np.linalg.norm(pa - pb)), 9)
    canon = []
    for p in (pa, pb):
        q = np.round(p, 9)
        nz = q[np.flatnonzero(q)]
        if len(nz) and nz[0] < 0:
            q = -q
        canon.append(tuple(q + 0.0))
    return (length, tuple(sorted(canon)))


def _split(verts, cache, s):
    n = len(s) - 1
    if n == 1:
        m = _midpoint(verts, cache, s[0], s[1])
        return [(s[0], m), (m, s[1])]
    if n == 2:
        a, b, c = s
        ab = _midpoint(verts, cache, a, b)
        bc = _midpoint(verts, cache, b, c)
        ac = _midpoint(verts, cache, a, c)
        return [(a, ab, ac), (ab, b, bc), (ac, bc, c), (ab, bc, ac)]

    a, b, c, d = s
    m = {}
    for x, y in itertools.combinations(s, 2):
        m[(x, y)] = m[(y, x)] = _midpoint(verts, cache, x, y)
    out = [
        (a, m[a, b], m[a, c], m[a, d]),
        (b, m[a, b], m[b, c], m[b, d]),
        (c, m[a, c], m[b, c], m[c, d]),
        (d, m[a, d], m[b, d], m[c, d]),
    ]
    # Inneres Oktaeder: eine der drei Diagonalen zwischen Gegenkantenmitten
    pairs = [(m[a, b], m[c, d]), (m[a, c], m[b, d]), (m[a, d], m[b, c])]
    p, q = min(pairs, key=lambda pq: _octa_key(verts, *pq))
    ring = [x for pq in pairs if pq != (p, q) for x in pq]
    # Ring des Oktaeders um die Diagonale in zyklischer Reihenfolge
    r0, r2, r1, r3 = ring
    for u, w in ((r0, r1), (r1, r2), (r2, r3), (r3, r0)):
        out.append((p, q, u, w))
    return out


def cross_polytope_sphere(n: int, subdivisions: int = 0) -> SimplicialComplex:
    """
    Rand des Kreuzpolytops im R^(n+1), verfeinert und radial projiziert.

    Jeder Schritt halbiert alle Kanten und projiziert die Mittelpunkte auf
    die Sphäre. Die Triangulierung bleibt unter x -> -x invariant.
    """
    if not 1 <= n <= 3:
        raise UnsupportedDimension(f"Sphären nur für 1 <= n <= 3, nicht n = {n}")
    if subdivisions < 0:
        raise UnsupportedDimension("Unterteilungstiefe muss >= 0 sein")

    d = n + 1
    verts = []
    for i in range(d):
        for sign in (1.0, -1.0):
            e = np.zeros(d)
            e[i] = sign
            verts.append(e)
    # Ecke i mit Vorzeichen s hat Index 2i (+) bzw. 2i+1 (-)
    top = [tuple(2 * i + (1 if s < 0 else 0) for i, s in enumerate(signs))
           for signs in itertools.product((1, -1), repeat=d)]

    for _ in range(subdivisions):
        cache = {}
        top = [t for s in top for t in _split(verts, cache, s)]

    K = from_top("sphere", np.array(verts), top)
    info(f"Sphäre S^{n} (Stufe {subdivisions}): {len(verts)} Ecken, {len(top)} Simplizes")
    return K


def antipode_index(K: SimplicialComplex) -> np.ndarray:
    """Index der Gegenecke -v für jede Ecke v"""
    keys = {tuple(np.round(v, KEY_DIGITS) + 0.0): i for i, v in enumerate(K.vertices)}
    out = np.empty(len(K.vertices), dtype=int)
    for i, v in enumerate(K.vertices):
        j = keys.get(tuple(np.round(-v, KEY_DIGITS) + 0.0))
        if j is None:
            raise InvalidComplex(f"vertices[{i}]", "keine Gegenecke vorhanden")
        out[i] = j
    return out


def cycle_order(K: SimplicialComplex) -> np.ndarray:
    """Ecken eines triangulierten S^1 gegen den Uhrzeigersinn ab Winkel 0"""
    if K.space_tag != "sphere" or K.dimension != 1:
        raise UnsupportedDimension("cycle_order nur für S^1")
    ang = np.mod(np.arctan2(K.vertices[:, 1], K.vertices[:, 0]), 2 * math.pi)
    return np.argsort(ang, kind="stable")


# ----------- TORUS -----------

def flat_torus(subdivisions: int = 1) -> SimplicialComplex:
    """Gitter N x N mit N = 3 * 2^(s-1), jedes Quadrat diagonal geteilt"""
    if subdivisions < 1:
        raise UnsupportedDimension("Torus braucht mindestens eine Unterteilung")
    N = 3 * 2 ** (subdivisions - 1)
    idx = lambda i, j: (i % N) * N + (j % N)
    verts = np.array([(i / N, j / N) for i in range(N) for j in range(N)])
    top = []
    for i in range(N):
        for j in range(N):
            top.append((idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)))
            top.append((idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)))
    K = from_top("torus", verts, top)
    info(f"Torus T^2 ({N}x{N}): {len(verts)} Ecken, {len(top)} Dreiecke")
    return K


def unwrap(P: np.ndarray) -> np.ndarray:
    """Torus-Punkte eines kleinen Simplex relativ zum ersten Punkt ausrollen"""
    P = np.asarray(P, dtype=float)
    d = P - P[..., :1, :]
    return P[..., :1, :] + d - np.round(d)


def realize(K: SimplicialComplex, simplex, lam) -> np.ndarray:
    """Punkt im Modellraum zu baryzentrischen Koordinaten lam auf simplex"""
    V = K.vertices[list(simplex)]
    lam = np.asarray(lam, dtype=float)
    if K.space_tag == "torus":
        return np.mod(lam @ unwrap(V), 1.0)
    x = lam @ V
    if K.space_tag == "sphere":
        return x / np.linalg.norm(x, axis=-1, keepdims=True)
    return x


# ----------- KUGEL MIT EINGESCHRIEBENEM SIMPLEX -----------

def regular_simplex(n: int) -> np.ndarray:
    """Reguläres n-Simplex mit Umkreisradius 1 um den Ursprung"""
    if n == 2:
        ang = np.radians([90.0, 210.0, 330.0])
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if n == 3:
        return np.array([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)], dtype=float) / math.sqrt(3.0)
    raise UnsupportedDimension(f"Reguläres Simplex nur für n in (2, 3), nicht n = {n}")


def _exit_length(q, u):
    # t >= 0 mit |q + t u| = 1
    qu = float(q @ u)
    return -qu + math.sqrt(max(qu * qu - float(q @ q) + 1.0, 0.0))


def _prism(bottom, top_):
    """Treppen-Zerlegung eines Prismas; bottom/top in derselben Eckenordnung"""
    k = len(bottom)
    return [tuple(bottom[:i + 1]) + tuple(top_[i:]) for i in range(k)]


def simplex_ball(n: int, subdivisions: int = 0) -> SimplicialComplex:
    """
    Triangulierung von B^n, die das eingeschriebene Simplex Delta samt
    baryzentrischer Unterteilung als Teilkomplex enthält.

    Außerhalb von Delta wird entlang der Normalen der nächstgelegenen
    Seite bis zur Sphäre extrudiert: Platten über den Facetten, für n = 3
    zusätzlich Keile über den Kanten. subdivisions + 1 radiale Schichten.
    Jede Ecke merkt sich in meta["base"] die Ecke der Unterteilung, auf
    die sie orthogonal projiziert wird.
    """
    if n not in (2, 3):
        raise UnsupportedDimension(f"Kugel nur für n in (2, 3), nicht n = {n}")
    if subdivisions < 0:
        raise UnsupportedDimension("Unterteilungstiefe muss >= 0 sein")
    layers = subdivisions + 1
    steps = 2 + subdivisions

    delta = regular_simplex(n)
    pool = VertexPool()
    base_of = {}
    face_dim = {}
    bary = {}
    for k in range(1, n + 2):
        for F in itertools.combinations(range(n + 1), k):
            idx = pool.add(delta[list(F)].mean(axis=0))
            bary[F] = idx
            base_of[idx] = idx
            face_dim[idx] = k - 1

    def lift(q_idx, u, r):
        q = pool.points[q_idx]
        idx = pool.add(q + (r / layers) * _exit_length(q, u) * u)
        base_of.setdefault(idx, q_idx)
        face_dim.setdefault(idx, face_dim[q_idx])
        return idx

    simplices = []

    # Delta selbst: Fahnen F1 < F2 < ... < F(n+1)
    for perm in itertools.permutations(range(n + 1)):
        simplices.append(tuple(bary[tuple(sorted(perm[:k]))] for k in range(1, n + 2)))

    # Platten über den Facetten; Normale der Facette gegenüber v_j ist -v_j
    for j in range(n + 1):
        nu = -delta[j]
        facet = [i for i in range(n + 1) if i != j]
        for perm in itertools.permutations(facet):
            base = [bary[tuple(sorted(perm[:k]))] for k in range(1, n + 1)]
            for r in range(layers):
                lo = [lift(q, nu, r) for q in base]
                hi = [lift(q, nu, r + 1) for q in base]
                simplices.extend(_prism(lo, hi))

    # Keile über den Kanten (nur n = 3)
    if n == 3:
        for i, j in itertools.combinations(range(4), 2):
            k, l = [x for x in range(4) if x not in (i, j)]
            nu_k, nu_l = -delta[k], -delta[l]
            dirs = [nu_k]
            for s in range(1, steps):
                w = (1 - s / steps) * nu_k + (s / steps) * nu_l
                dirs.append(w / np.linalg.norm(w))
            dirs.append(nu_l)
            for spine in ((bary[(i,)], bary[(i, j)]), (bary[(j,)], bary[(i, j)])):
                for s in range(steps):
                    for r in range(layers):
                        # Querschnitt-Dreiecke, Ecken nach (Schicht, Richtung) geordnet
                        if r == 0:
                            tris = [((0, s), (1, s), (1, s + 1))]
                        else:
                            A, B = (r, s), (r, s + 1)
                            C, D = (r + 1, s), (r + 1, s + 1)
                            tris = [(A, B, D), (A, C, D)]
                        for tri in tris:
                            ends = [[lift(q, dirs[ds], dr) for dr, ds in tri] for q in spine]
                            simplices.extend(_prism(ends[0], ends[1]))

    verts = pool.array()
    top = _drop_degenerate(simplices)
    top = [s for s in top if _volume(verts[list(s)]) > 1e-12]
    delta_idx = [bary[(i,)] for i in range(n + 1)]
    meta = {
        "delta": delta_idx,
        "base": [base_of[i] for i in range(len(verts))],
        "face_dim": [face_dim[i] for i in range(len(verts))],
    }
    K = from_top("ball", verts, top, meta)
    info(f"Kugel B^{n} mit Simplex (Schichten {layers}): {len(verts)} Ecken, {len(top)} Simplizes")
    return K


def _volume(V: np.ndarray) -> float:
    D = V[1:] - V[0]
    return abs(float(np.linalg.det(D))) / math.factorial(len(D))


def skeleton_cone(n: int) -> SimplicialComplex:
    """Kegel 0 * Delta^(n-2) im R^n: Dreibein (n = 2) bzw. Dreiecksfächer (n = 3)"""
    delta = regular_simplex(n)
    verts = np.vstack([np.zeros(n), delta])
    top = [(0,) + tuple(i + 1 for i in F) for F in itertools.combinations(range(n + 1), n - 1)]
    return from_top("polyhedron", verts, top)


# ----------- INVARIANTEN -----------

def euler_characteristic(K: SimplicialComplex) -> int:
    return sum((-1) ** k * K.count(k) for k in range(K.dimension + 1))


def is_closed_manifold(K: SimplicialComplex) -> bool:
    """Jede (n-1)-Seite liegt in genau zwei n-Simplizes"""
    if K.space_tag not in ("sphere", "torus"):
        return False
    n = K.dimension
    counts = {}
    for s in K.simplices[n]:
        for f in itertools.combinations(s, n):
            counts[f] = counts.get(f, 0) + 1
    return len(counts) == K.count(n - 1) and all(c == 2 for c in counts.values())


def boundary_mod2(chain: Mod2Chain) -> Mod2Chain:
    K, k = chain.complex, chain.dimension
    if k == 0:
        return Mod2Chain(K, -1, np.zeros(0, dtype=np.uint8))
    pos = K.index(k - 1)
    out = np.zeros(K.count(k - 1), dtype=np.uint8)
    for s, c in zip(K.simplices[k], chain.coefficients):
        if c:
            for f in itertools.combinations(s, k):
                out[pos[f]] ^= 1
    return Mod2Chain(K, k - 1, out)


def fundamental_cycle_mod2(K: SimplicialComplex) -> Mod2Chain:
    if not is_closed_manifold(K):
        raise NotClosedManifold(f"{K!r} ist keine geschlossene Mannigfaltigkeit")
    return Mod2Chain(K, K.dimension, np.ones(K.count(K.dimension), dtype=np.uint8))


def edge_lengths(K: SimplicialComplex) -> np.ndarray:
    E = np.array(K.simplices[1], dtype=int)
    return metrics.distances(K.space, K.vertices[E[:, 0]], K.vertices[E[:, 1]])


# ----------- JSON -----------

def to_json(K: SimplicialComplex) -> dict:
    data = {
        "space": K.space_tag,
        "dim": K.dimension,
        "vertices": K.vertices.tolist(),
        "simplices": {str(k): [list(s) for s in K.simplices[k]] for k in range(K.dimension + 1)},
    }
    if K.meta:
        data["meta"] = K.meta
    return data


def from_json(data) -> SimplicialComplex:
    """Liest einen Komplex und prüft alle Invarianten; Fehler nennen den Pfad"""
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise InvalidComplex("$", f"kein JSON: {e}")
    if not isinstance(data, dict):
        raise InvalidComplex("$", "Objekt erwartet")
    for key in ("space", "dim", "vertices", "simplices"):
        if key not in data:
            raise InvalidComplex(f"$.{key}", "fehlt")

    tag = data["space"]
    if tag not in SPACE_TAGS:
        raise InvalidComplex("$.space", f"unbekannter Raum {tag!r}")
    dim = data["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 0:
        raise InvalidComplex("$.dim", "nichtnegative ganze Zahl erwartet")

    raw = data["vertices"]
    if not isinstance(raw, list) or not raw:
        raise InvalidComplex("$.vertices", "nichtleere Liste erwartet")
    width = None
    for i, v in enumerate(raw):
        if not isinstance(v, list) or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
            raise InvalidComplex(f"$.vertices[{i}]", "Liste von Zahlen erwartet")
        if width is None:
            width = len(v)
        elif len(v) != width:
            raise InvalidComplex(f"$.vertices[{i}]", f"Länge {len(v)} statt {width}")
    verts = np.array(raw, dtype=float)
    if not np.all(np.isfinite(verts)):
        raise InvalidComplex("$.vertices", "nicht endliche Koordinaten")
    if tag == "sphere":
        bad = np.flatnonzero(np.abs(np.linalg.norm(verts, axis=1) - 1.0) > 1e-9)
        if len(bad):
            raise InvalidComplex(f"$.vertices[{bad[0]}]", "liegt nicht auf der Einheitssphäre")

    simp = data["simplices"]
    if not isinstance(simp, dict):
        raise InvalidComplex("$.simplices", "Objekt erwartet")
    parsed = {}
    for k in range(dim + 1):
        key = str(k)
        if key not in simp:
            raise InvalidComplex(f"$.simplices.{key}", "fehlt")
        rows = []
        for i, s in enumerate(simp[key]):
            path = f"$.simplices.{key}[{i}]"
            if not isinstance(s, list) or len(s) != k + 1 or not all(isinstance(j, int) for j in s):
                raise InvalidComplex(path, f"{k + 1} Eckenindizes erwartet")
            if len(set(s)) != len(s):
                raise InvalidComplex(path, "doppelte Ecke")
            if min(s) < 0 or max(s) >= len(verts):
                raise InvalidComplex(path, "Eckenindex außerhalb des Bereichs")
            rows.append(tuple(sorted(s)))
        parsed[k] = rows

    for k in range(1, dim + 1):
        lower = set(parsed[k - 1])
        for i, s in enumerate(parsed[k]):
            for f in itertools.combinations(s, k):
                if f not in lower:
                    raise InvalidComplex(f"$.simplices.{k}[{i}]", f"Seite {list(f)} fehlt")
    for i, s in enumerate(parsed[dim]):
        V = verts[list(s)]
        if tag == "torus":
            V = unwrap(V)
        if np.linalg.matrix_rank(V[1:] - V[0], tol=1e-12) < dim and tag != "sphere":
            raise InvalidComplex(f"$.simplices.{dim}[{i}]", "entartetes Simplex")
        if tag == "sphere" and np.linalg.matrix_rank(V, tol=1e-12) < dim + 1:
            raise InvalidComplex(f"$.simplices.{dim}[{i}]", "entartetes Simplex")

    meta = data.get("meta", {})
    return SimplicialComplex(dim, verts, {k: tuple(sorted(set(v))) for k, v in parsed.items()}, tag, meta)


def save(K: SimplicialComplex, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json(K), fh)


def load(path: str) -> SimplicialComplex:
    with open(path, encoding="utf-8") as fh:
        return from_json(json.load(fh))
