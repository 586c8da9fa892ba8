"""
Stückweise lineare Abbildungen und ihre Fasern

Eine PLMap ist durch die Bilder der Ecken eines Quellkomplexes gegeben und
auf jedem Simplex affin. Auf Sphären wird in Kegelkoordinaten gerechnet:
der Punkt normalize(sum lam_i v_i) hat das Bild sum lam_i f(v_i).

Ziele:
    R^m                       metrics.Euclidean(m)
    Sphärenkomplex            Bilder auf der Einheitssphäre, radial gelesen
    Polyeder (Komplex)        Bilder auf dem Polyeder, Karten je Zielsimplex

Fasern in Kodimension 0 sind Punktmengen, in Kodimension 1 Polylinien und
Schleifen, die über gemeinsame Facetten verkettet werden.
"""

import json
import math
import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import nnls

import complexes
import metrics
from complexes import SimplicialComplex
from laborlog import (
    TOL, PERTURB, InvalidImage, NonGenericTarget, DimensionMismatch, NotClosedManifold,
    WrongCodimension, LaborError, warn,
)

# Relative Schranke für singuläre affine Stücke
SINGULAR = 1e-12
# Speicherbudget (Einträge) für die Punktsuche in vielen Simplizes
CHUNK = 2_000_000
RETRIES = 20


@dataclass
class FiberPoint:
    point: np.ndarray
    weight: int
    simplex: int


@dataclass
class FiberComponent:
    points: np.ndarray
    closed: bool
    length: float
    simplices: list = field(default_factory=list)


@dataclass
class Fiber:
    target_point: np.ndarray
    codim: int
    points: list = field(default_factory=list)
    components: list = field(default_factory=list)
    offset: np.ndarray | None = None

    @property
    def total_weight(self) -> int:
        return sum(abs(p.weight) for p in self.points)

    @property
    def total_length(self) -> float:
        return float(sum(c.length for c in self.components))

    def all_points(self) -> np.ndarray:
        if self.codim == 0:
            pts = [p.point for p in self.points]
        else:
            pts = [q for c in self.components for q in c.points]
        return np.array(pts) if pts else np.zeros((0, 0))


class UnionFind:
    """Zusammenhangskomponenten mit Pfadkompression"""

    def __init__(self, size: int):
        self.parents = list(range(size))

    def find(self, a: int) -> int:
        root = a
        while root != self.parents[root]:
            root = self.parents[root]
        while a != root:
            self.parents[a], a = root, self.parents[a]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parents[rb] = ra

    def components(self) -> list[list[int]]:
        groups = {}
        for i in range(len(self.parents)):
            groups.setdefault(self.find(i), []).append(i)
        return list(groups.values())


# ----------- HILFSFUNKTIONEN -----------

def _augment(P: np.ndarray) -> np.ndarray:
    """(..., k, m) Eckenbilder -> (..., m+1, k) Matrix [P^T; 1]"""
    Pt = np.swapaxes(P, -1, -2)
    ones = np.ones(Pt.shape[:-2] + (1, Pt.shape[-1]))
    return np.concatenate([Pt, ones], axis=-2)


def _singular(M: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(M, compute_uv=False)
    return s[..., -1] <= SINGULAR * np.maximum(s[..., 0], 1.0)


def _contains(P: np.ndarray, y: np.ndarray, tol: float) -> np.ndarray | None:
    """Baryzentrische Koordinaten eines Urbilds von y in conv(P), sonst None"""
    w = 1.0 / max(tol, 1e-12) ** 0.5
    A = np.vstack([P.T, w * np.ones(len(P))])
    b = np.append(y, w)
    lam, res = nnls(A, b)
    if res <= 10 * tol * max(1.0, float(np.abs(b[:-1]).max(initial=0.0))):
        return lam
    return None


def _bbox_hit(P: np.ndarray, y: np.ndarray, tol: float) -> np.ndarray:
    lo = P.min(axis=1) - tol
    hi = P.max(axis=1) + tol
    return np.all((lo <= y) & (y <= hi), axis=1)


# ----------- PL-ABBILDUNG -----------

class PLMap:
    """
    Auf jedem Simplex affine Abbildung.

    Args:
        source:  Quellkomplex (Sphäre, Torus oder Kugel)
        target:  metrics.Euclidean(m) oder Zielkomplex (Sphäre/Polyeder)
        images:  ein Zielpunkt pro Ecke
        name:    Kennung für Reports
    """

    def __init__(self, source: SimplicialComplex, target, images, name: str = "pl", tol: float = TOL):
        images = np.array(images, dtype=float)
        if images.ndim == 1:
            images = images[:, None]
        if len(images) != len(source.vertices):
            raise InvalidImage(f"{len(images)} Bilder für {len(source.vertices)} Ecken")
        if not np.all(np.isfinite(images)):
            raise InvalidImage("Bilder müssen endlich sein")

        self.source = source
        self.target = target
        self.images = images
        self.name = name
        self.n = source.dimension
        self.top = source.top
        self.pieces = images[self.top]

        if isinstance(target, metrics.ModelSpace):
            if target.kind != "euclidean":
                raise InvalidImage(f"Ziel {target} wird nicht unterstützt, nur R^m oder Komplexe")
            if images.shape[1] != target.n:
                raise InvalidImage(f"Bilder haben Dimension {images.shape[1]}, Ziel ist {target}")
            self.target_kind = "euclidean"
            self.target_dim = target.n
        elif isinstance(target, SimplicialComplex) and target.space_tag == "sphere":
            if images.shape[1] != target.ambient_dim:
                raise InvalidImage("Bilder passen nicht zur Zielsphäre")
            bad = np.flatnonzero(np.abs(np.linalg.norm(images, axis=1) - 1.0) > 1e-9)
            if len(bad):
                raise InvalidImage(f"Bild der Ecke {bad[0]} liegt nicht auf der Zielsphäre")
            self.target_kind = "sphere"
            self.target_dim = target.dimension
        elif isinstance(target, SimplicialComplex) and target.space_tag == "polyhedron":
            if images.shape[1] != target.ambient_dim:
                raise InvalidImage("Bilder passen nicht zum Zielpolyeder")
            self.target_kind = "polyhedron"
            self.target_dim = target.dimension
        else:
            raise InvalidImage("Ziel muss R^m, ein Sphären- oder ein Polyederkomplex sein")

        self.codim = self.n - self.target_dim
        self.is_constant = bool(np.ptp(images, axis=0).max() <= tol)
        self._cells = None
        if self.target_kind == "polyhedron":
            self._cells = self._cell_table(tol)
            in_cell = self._cells[self.top].all(axis=1)
            self.carrier = np.where(in_cell.any(axis=1), in_cell.argmax(axis=1), -1)
            self.simplicial = bool(np.all(self.carrier >= 0))
        else:
            self.carrier = None
            self.simplicial = True

        self.degenerate = self._degenerate_flags()
        self._frames = self._source_frames()
        self._facet_ids = None
        self._face_cache = {}
        self._degree2 = None

    def __repr__(self):
        tgt = str(self.target) if isinstance(self.target, metrics.ModelSpace) else repr(self.target)
        return f"PLMap({self.name}: {self.source!r} -> {tgt})"

    # ----------- STRUKTUR -----------

    def _cell_table(self, tol):
        """in_cell[v, T]: Bild der Ecke v liegt im Zielsimplex T"""
        T = self.target
        cells = T.vertices[T.top]
        M = _augment(cells)
        pinv = np.linalg.pinv(M)
        b = np.hstack([self.images, np.ones((len(self.images), 1))])
        lam = np.einsum("tij,vj->vti", pinv, b)
        res = np.linalg.norm(np.einsum("tij,vtj->vti", M, lam) - b[:, None, :], axis=2)
        inside = (lam.min(axis=2) >= -tol) & (res <= tol)
        off = np.flatnonzero(~inside.any(axis=1))
        if len(off):
            raise InvalidImage(f"Bild der Ecke {off[0]} liegt nicht auf dem Zielpolyeder")
        return inside

    def _degenerate_flags(self):
        if self.target_kind == "sphere":
            M = np.swapaxes(self.pieces, 1, 2)
        else:
            M = _augment(self.pieces)
        rank = np.linalg.matrix_rank(M, tol=1e-10)
        return rank < min(self.n, self.target_dim) + 1

    def _source_frames(self):
        V = self.source.vertices[self.top]
        tag = self.source.space_tag
        if tag == "sphere":
            return np.linalg.inv(np.swapaxes(V, 1, 2))
        if tag == "torus":
            V = complexes.unwrap(V)
        return np.linalg.inv(_augment(V))

    @property
    def facet_ids(self) -> np.ndarray:
        """Indizes der (n-1)-Seiten jedes Top-Simplex"""
        if self._facet_ids is None:
            pos = self.source.index(self.n - 1)
            self._facet_ids = np.array(
                [[pos[f] for f in itertools.combinations(s, self.n)] for s in self.source.simplices[self.n]],
                dtype=int)
        return self._facet_ids

    def orientation(self) -> np.ndarray:
        """Vorzeichen der Jacobi-Determinante je Simplex (Kodimension 0, euklidisches Ziel)"""
        if self.codim != 0 or self.target_kind == "sphere":
            raise WrongCodimension("Orientierung nur für Kodimension 0 mit euklidischem Ziel")
        V = self.source.vertices[self.top]
        tag = self.source.space_tag
        if tag == "sphere":
            src = np.linalg.det(V)
        else:
            if tag == "torus":
                V = complexes.unwrap(V)
            src = np.linalg.det(_augment(V))
        img = np.linalg.det(_augment(self.pieces))
        return np.sign(src) * np.sign(img)

    # ----------- AUSWERTUNG -----------

    def locate(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Simplex und baryzentrische Koordinaten für Quellpunkte X"""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        S, k = len(self.top), self.n + 1
        tag = self.source.space_tag
        idx = np.empty(len(X), dtype=int)
        lam = np.empty((len(X), k))
        step = max(1, CHUNK // (S * k))
        for a in range(0, len(X), step):
            Y = X[a:a + step]
            if tag == "sphere":
                L = np.einsum("sij,qj->qsi", self._frames, Y)
            elif tag == "torus":
                base = self.source.vertices[self.top[:, 0]]
                D = Y[:, None, :] - base[None, :, :]
                P = base[None, :, :] + D - np.round(D)
                P = np.concatenate([P, np.ones(P.shape[:2] + (1,))], axis=2)
                L = np.einsum("sij,qsj->qsi", self._frames, P)
            else:
                aug = np.hstack([Y, np.ones((len(Y), 1))])
                L = np.einsum("sij,qj->qsi", self._frames, aug)
            best = L.min(axis=2).argmax(axis=1)
            sel = L[np.arange(len(Y)), best]
            idx[a:a + step] = best
            lam[a:a + step] = sel / sel.sum(axis=1, keepdims=True)
        return idx, lam

    def evaluate(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        idx, lam = self.locate(X)
        out = np.einsum("qi,qid->qd", lam, self.pieces[idx])
        if self.target_kind == "sphere":
            out = out / np.linalg.norm(out, axis=1, keepdims=True)
        return out[0] if single else out

    __call__ = evaluate

    def random_source_points(self, k: int, rng) -> np.ndarray:
        """Zufällige Punkte: zufälliges Simplex, zufällige baryzentrische Koordinaten"""
        S = rng.integers(len(self.top), size=k)
        lam = rng.dirichlet(np.ones(self.n + 1), size=k)
        return np.array([complexes.realize(self.source, self.top[s], l) for s, l in zip(S, lam)])

    # ----------- ZIELKARTEN -----------

    def target_cell(self, y, tol: float = TOL) -> int:
        """Zielsimplex, in dessen relativem Inneren y liegt"""
        T = self.target
        M = _augment(T.vertices[T.top])
        b = np.append(y, 1.0)
        lam = np.einsum("tij,j->ti", np.linalg.pinv(M), b)
        res = np.linalg.norm(np.einsum("tij,tj->ti", M, lam) - b, axis=1)
        on = res <= tol
        if not on.any() or lam[on].min(axis=1).max() < -tol:
            raise InvalidImage(f"Zielpunkt {np.round(y, 6).tolist()} liegt nicht auf dem Zielpolyeder")
        inner = np.flatnonzero(on & (lam.min(axis=1) > tol))
        if len(inner) == 0:
            raise NonGenericTarget(y, "Zielpunkt auf einer Seite niedrigerer Dimension")
        return int(inner[0])

    def _chart(self, y, tol):
        """(aktive Simplizes, Kartenbilder der Ecken, Zielpunkt in der Karte)"""
        S = len(self.top)
        if self.target_kind == "euclidean":
            return np.arange(S), self.images, y
        if self.target_kind == "sphere":
            B = metrics.tangent_basis(y)
            return np.arange(S), self.images @ B.T, np.zeros(len(B))
        t = self.target_cell(y, tol)
        V = self.target.vertices[self.target.top[t]]
        E = np.linalg.pinv(V[1:] - V[0])
        active = np.flatnonzero(self.carrier_mask(t))
        return active, (self.images - V[0]) @ E, (y - V[0]) @ E

    def carrier_mask(self, t: int) -> np.ndarray:
        return self._cells[self.top][:, :, t].all(axis=1)

    def project_to_target(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.target_kind == "euclidean":
            return y
        if self.target_kind == "sphere":
            return y / np.linalg.norm(y)
        best, bd = None, math.inf
        for s in self.target.top:
            V = self.target.vertices[s]
            lam, _ = nnls(np.vstack([V.T, 1e3 * np.ones(len(V))]), np.append(y, 1e3))
            lam = lam / lam.sum()
            p = lam @ V
            d = float(np.linalg.norm(p - y))
            if d < bd:
                best, bd = p, d
        return best

    def _facing(self, lam, simplices, y):
        # Sphärenziel: nur die Seite des Bildkegels, die in Richtung y zeigt
        vals = np.einsum("qi,qid->qd", lam, self.images[simplices])
        return vals @ y > 0

    # ----------- FASERN -----------

    def fiber(self, y, tol: float = TOL) -> Fiber:
        """
        Faser über einem regulären Wert y.

        NonGenericTarget, wenn y näher als tol an einem kritischen Bild liegt
        (Faserpunkt auf einer niedrigeren Seite oder entartetes Stück trifft y).
        """
        y = np.asarray(y, dtype=float)
        if self.codim == 0:
            return self._fiber_codim0(y, tol)
        if self.codim == 1:
            return self._fiber_codim1(y, tol)
        raise WrongCodimension(f"Fasern nur in Kodimension 0 oder 1, nicht {self.codim}")

    def _fiber_codim0(self, y, tol):
        active, C, yc = self._chart(y, tol)
        P = C[self.top[active]]
        near = _bbox_hit(P, yc, tol)
        idx = active[near]
        M = _augment(P[near])
        rhs = np.append(yc, 1.0)
        sing = _singular(M) if len(M) else np.zeros(0, dtype=bool)

        for s in idx[sing]:
            lam = _contains(C[self.top[s]], yc, tol)
            if lam is not None and (self.target_kind != "sphere" or lam @ self.images[self.top[s]] @ y > 0):
                raise NonGenericTarget(y, f"entartetes Stück {s} enthält den Zielpunkt")

        reg = idx[~sing]
        points = []
        if len(reg):
            lam = np.linalg.solve(M[~sing], np.broadcast_to(rhs, (len(reg), len(rhs)))[..., None])[..., 0]
            hit = lam.min(axis=1) >= -tol
            if self.target_kind == "sphere":
                hit &= self._facing(lam, self.top[reg], y)
            if np.any(lam[hit].min(axis=1) < tol):
                raise NonGenericTarget(y, "Urbild auf einer Seite eines Simplex")
            for s, l in zip(reg[hit], lam[hit]):
                points.append(FiberPoint(complexes.realize(self.source, self.top[s], l), 1, int(s)))
        return Fiber(y, 0, points=points)

    def _fiber_codim1(self, y, tol):
        active, C, yc = self._chart(y, tol)
        n = self.n
        F_all = np.array(self.source.simplices[n - 1], dtype=int)
        fids = np.unique(self.facet_ids[active])
        P = C[F_all[fids]]
        near = _bbox_hit(P, yc, tol)
        fids = fids[near]
        M = _augment(P[near])
        rhs = np.append(yc, 1.0)
        sing = _singular(M) if len(M) else np.zeros(0, dtype=bool)

        for f in fids[sing]:
            lam = _contains(C[F_all[f]], yc, tol)
            if lam is not None:
                raise NonGenericTarget(y, f"entartete Seite {f} enthält den Zielpunkt")

        hit_point = {}
        reg = fids[~sing]
        if len(reg):
            lam = np.linalg.solve(M[~sing], np.broadcast_to(rhs, (len(reg), len(rhs)))[..., None])[..., 0]
            hit = lam.min(axis=1) >= -tol
            if self.target_kind == "sphere":
                hit &= self._facing(lam, F_all[reg], y)
            if np.any(lam[hit].min(axis=1) < tol):
                raise NonGenericTarget(y, "Faser trifft eine Seite niedrigerer Dimension")
            for f, l in zip(reg[hit], lam[hit]):
                hit_point[int(f)] = complexes.realize(self.source, F_all[f], l)

        # Segmente je Simplex: genau 0 oder 2 getroffene Facetten
        segments = []
        for s in active:
            hs = [int(f) for f in self.facet_ids[s] if int(f) in hit_point]
            if not hs:
                continue
            if len(hs) != 2:
                raise NonGenericTarget(y, f"Simplex {s} mit {len(hs)} Faserpunkten")
            segments.append((hs[0], hs[1], int(s)))

        return Fiber(y, 1, components=self._chain(segments, hit_point))

    def _chain(self, segments, hit_point) -> list:
        """Segmente über gemeinsame Facetten zu Polylinien und Schleifen verketten"""
        if not segments:
            return []
        nodes = sorted(hit_point)
        pos = {f: i for i, f in enumerate(nodes)}
        uf = UnionFind(len(nodes))
        adj = {f: [] for f in nodes}
        for a, b, s in segments:
            uf.union(pos[a], pos[b])
            adj[a].append((b, s))
            adj[b].append((a, s))

        space = self.source.space
        components = []
        for group in uf.components():
            members = [nodes[i] for i in group]
            ends = [f for f in members if len(adj[f]) == 1]
            closed = not ends
            start = min(ends) if ends else min(members)
            order, simplices = [start], []
            prev_seg = None
            cur = start
            while True:
                step = [(nb, s) for nb, s in adj[cur] if s != prev_seg]
                if not step:
                    break
                nb, s = step[0]
                simplices.append(s)
                if nb == start:
                    break
                order.append(nb)
                prev_seg, cur = s, nb
            pts = np.array([hit_point[f] for f in order])
            if len(pts) > 1:
                seg = metrics.distances(space, pts[:-1], pts[1:])
                length = float(seg.sum())
            else:
                length = 0.0
            if closed and len(pts) > 1:
                length += float(metrics.distances(space, pts[-1], pts[0]))
            components.append(FiberComponent(pts, closed, length, simplices))
        components.sort(key=lambda c: -c.length)
        return components

    # ----------- ROBUSTE FASERECKEN -----------

    def _faces(self, k):
        if k not in self._face_cache:
            F = np.array(self.source.simplices[k], dtype=int)
            P = self.images[F]
            self._face_cache[k] = (F, P, P.min(axis=1), P.max(axis=1), np.linalg.pinv(_augment(P)))
        return self._face_cache[k]

    def fiber_points(self, y, tol: float = TOL) -> np.ndarray:
        """
        Ecken der Faser f^-1(y) als Punktmenge, auch an kritischen Werten.

        Die Faser in einem Simplex ist ein konvexes Polytop; seine Ecken liegen
        auf Seiten der Dimension <= m (m = Dimension des Zielraums). Der
        Durchmesser der Faser ist der Durchmesser dieser Punktmenge.
        """
        if self.target_kind == "sphere":
            raise LaborError("fiber_points nur für euklidische und polyedrische Ziele")
        y = np.asarray(y, dtype=float)
        rhs = np.append(y, 1.0)
        kmax = min(self.n, self.images.shape[1])
        out = []
        for k in range(kmax + 1):
            F, P, lo, hi, pinv = self._faces(k)
            near = np.flatnonzero(np.all((lo - tol <= y) & (y <= hi + tol), axis=1))
            if not len(near):
                continue
            lam = pinv[near] @ rhs
            M = _augment(P[near])
            res = np.linalg.norm(np.einsum("fij,fj->fi", M, lam) - rhs, axis=1)
            ok = (res <= 10 * tol) & (lam.min(axis=1) >= -tol)
            for f, l in zip(near[ok], lam[ok]):
                l = np.clip(l, 0.0, None)
                out.append(complexes.realize(self.source, F[f], l / l.sum()))
        if not out:
            return np.zeros((0, self.source.ambient_dim))
        return np.unique(np.round(np.array(out), 13) + 0.0, axis=0)

    def fiber_diameter(self, y, tol: float = TOL) -> float:
        P = self.fiber_points(y, tol)
        return metrics.set_diameter(self.source.space, P) if len(P) else 0.0

    # ----------- JSON -----------

    def to_json(self) -> dict:
        if self.target_kind == "euclidean":
            target = f"R^{self.target_dim}"
        else:
            target = complexes.to_json(self.target)
        return {"name": self.name, "source": complexes.to_json(self.source),
                "target": target, "images": self.images.tolist()}


def from_json(data) -> PLMap:
    if isinstance(data, str):
        data = json.loads(data)
    for key in ("source", "target", "images"):
        if key not in data:
            raise InvalidImage(f"$.{key} fehlt")
    source = complexes.from_json(data["source"])
    tgt = data["target"]
    if isinstance(tgt, str):
        if not tgt.startswith("R^") or not tgt[2:].isdigit():
            raise InvalidImage(f"$.target: unbekanntes Ziel {tgt!r}")
        target = metrics.Euclidean(int(tgt[2:]))
    else:
        target = complexes.from_json(tgt)
    return make_pl_map(source, target, data["images"], name=data.get("name", "pl"))


def load(path: str) -> PLMap:
    with open(path, encoding="utf-8") as fh:
        return from_json(json.load(fh))


# ----------- GENERISCHE WERTE -----------

def perturb(f: PLMap, y, rng, scale: float = PERTURB) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return f.project_to_target(y + scale * rng.standard_normal(y.shape))


def regular_fiber(f: PLMap, y, rng, tol: float = TOL, retries: int = RETRIES) -> Fiber:
    """Faser über y; nicht-generische Werte werden um PERTURB verschoben und protokolliert"""
    y0 = np.asarray(y, dtype=float)
    cur = y0
    for attempt in range(retries + 1):
        try:
            fib = f.fiber(cur, tol)
            if attempt:
                fib.offset = cur - y0
            return fib
        except NonGenericTarget as e:
            if attempt == retries:
                raise
            cur = perturb(f, y0, rng, PERTURB * (attempt + 1))
            warn(f"{f.name}: {e}; verschoben um {np.linalg.norm(cur - y0):.1e}")


def sample_regular_value(f: PLMap, rng, tol: float = TOL) -> tuple[np.ndarray, Fiber]:
    """Bild eines zufälligen Quellpunkts, generisch gemacht"""
    x = f.random_source_points(1, rng)[0]
    fib = regular_fiber(f, f.evaluate(x), rng, tol)
    return fib.target_point, fib


# ----------- GRAD UND VIELFACHHEIT -----------

def mod2_degree(f: PLMap, rng=None, tol: float = TOL) -> int:
    """Parität der generischen Faser; unabhängig vom gewählten Wert"""
    if f.n != f.target_dim:
        raise DimensionMismatch(f"Grad braucht gleiche Dimensionen, hier {f.n} -> {f.target_dim}")
    if f.source.space_tag not in ("sphere", "torus"):
        raise NotClosedManifold("Grad nur für geschlossene Quellen")
    if f._degree2 is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        if f.target_kind == "sphere":
            y = metrics.random_points(metrics.RoundSphere(f.target_dim), 1, rng)[0]
            fib = regular_fiber(f, y, rng, tol)
        else:
            _, fib = sample_regular_value(f, rng, tol)
        f._degree2 = fib.total_weight % 2
    return f._degree2


def multiplicity(f: PLMap, samples: int, rng=None, tol: float = TOL) -> int:
    """Größte Fasermächtigkeit über Stichproben; untere Schranke der Vielfachheit"""
    if f.codim != 0:
        raise WrongCodimension("Vielfachheit nur in Kodimension 0")
    rng = rng if rng is not None else np.random.default_rng(0)
    best = 0
    for _ in range(samples):
        _, fib = sample_regular_value(f, rng, tol)
        best = max(best, fib.total_weight)
    return best


def fiber_length(f: PLMap, y, tol: float = TOL) -> tuple[list[float], float]:
    if f.codim != 1:
        raise WrongCodimension("Faserlänge nur in Kodimension 1")
    fib = f.fiber(y, tol)
    lengths = [c.length for c in fib.components]
    return lengths, float(sum(lengths))


def fold_faces(f: PLMap) -> np.ndarray:
    """(n-1)-Seiten, an denen die Orientierung umschlägt (Falten)"""
    sign = f.orientation()
    owners = {}
    for s, row in enumerate(f.facet_ids):
        for fid in row:
            owners.setdefault(int(fid), []).append(s)
    folds = [fid for fid, own in owners.items() if len(own) == 2 and sign[own[0]] * sign[own[1]] < 0]
    return np.array(sorted(folds), dtype=int)


def critical_values(f: PLMap) -> np.ndarray:
    """Bilder der Faltenseiten: (Anzahl, n, m)"""
    F = np.array(f.source.simplices[f.n - 1], dtype=int)
    return f.images[F[fold_faces(f)]]


# ----------- ANALYTISCHE FAMILIEN -----------

@dataclass(frozen=True, eq=False)
class AnalyticMap:
    """
    Vektorisierte Abbildung auf einem Modellraum.

    Args:
        name:     Familienname (projection, height, polynomial, trig, square)
        space:    Quellraum
        dim_out:  Dimension des Bildes
        func:     (k, D) -> (k, dim_out)
        params:   Parameter für den Report
    """
    name: str
    space: metrics.ModelSpace
    dim_out: int
    func: Callable
    params: dict = field(default_factory=dict)

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return self.func(X[None, :])[0]
        return self.func(X)

    def to_dict(self) -> dict:
        return {"family": self.name, "space": str(self.space), "params": self.params}


def projection(n: int) -> AnalyticMap:
    return AnalyticMap("projection", metrics.RoundSphere(n), n, lambda X: X[:, :n].copy())


def height(n: int) -> AnalyticMap:
    return AnalyticMap("height", metrics.RoundSphere(n), 1, lambda X: X[:, n:n + 1].copy())


def polynomial(n: int, terms: list) -> AnalyticMap:
    """terms: Liste von (Exponenten je Koordinate, Koeffizientenvektor)"""
    E = np.array([t[0] for t in terms], dtype=int)
    Cf = np.array([t[1] for t in terms], dtype=float)
    if Cf.ndim == 1:
        Cf = Cf[:, None]

    def func(X):
        mono = np.prod(X[:, None, :] ** E[None, :, :], axis=2)
        return mono @ Cf

    params = {"terms": [[list(map(int, e)), list(map(float, c))] for e, c in zip(E, Cf)]}
    return AnalyticMap("polynomial", metrics.RoundSphere(n), Cf.shape[1], func, params)


def random_polynomial(n: int, m: int, rng, degree: int = 3) -> AnalyticMap:
    """Zufälliges Polynom vom Grad <= degree in den n+1 Koordinaten"""
    terms = []
    for e in itertools.product(range(degree + 1), repeat=n + 1):
        if 0 < sum(e) <= degree:
            terms.append((e, rng.standard_normal(m) / (1 + sum(e))))
    return polynomial(n, terms)


def trig_torus(coeffs: np.ndarray) -> AnalyticMap:
    """coeffs[c, j, l, 0/1]: cos/sin-Koeffizienten der Frequenz (j, l - L)"""
    coeffs = np.asarray(coeffs, dtype=float)
    m, J, L2, _ = coeffs.shape
    L = L2 // 2
    jj, ll = np.meshgrid(np.arange(J), np.arange(L2) - L, indexing="ij")

    def func(X):
        ph = 2 * math.pi * (X[:, 0, None, None] * jj + X[:, 1, None, None] * ll)
        c, s = np.cos(ph), np.sin(ph)
        return np.einsum("kjl,cjl->kc", c, coeffs[..., 0]) + np.einsum("kjl,cjl->kc", s, coeffs[..., 1])

    return AnalyticMap("trig", metrics.FlatTorus(), m, func, {"coeffs": coeffs.tolist()})


def random_trig(m: int, rng, freq: int = 2) -> AnalyticMap:
    coeffs = rng.standard_normal((m, freq + 1, 2 * freq + 1, 2))
    coeffs[:, 0, :freq + 1, :] = 0.0
    return trig_torus(coeffs)


def square_map() -> AnalyticMap:
    """z -> z^2 auf der Riemannschen Zahlenkugel, Grad 2"""
    def func(X):
        a, b, c = X[:, 0], X[:, 1], X[:, 2]
        den = 1 + c * c
        return np.stack([(a * a - b * b) / den, 2 * a * b / den, 2 * c / den], axis=1)
    return AnalyticMap("square", metrics.RoundSphere(2), 3, func)


def family(name: str, n: int, rng=None) -> AnalyticMap:
    rng = rng if rng is not None else np.random.default_rng(0)
    if name == "projection":
        return projection(n)
    if name == "height":
        return height(n)
    if name == "polynomial":
        return random_polynomial(n, n, rng)
    if name == "trig":
        return random_trig(2, rng)
    if name == "square":
        return square_map()
    raise LaborError(f"Unbekannte Familie: {name}")


# ----------- KONSTRUKTIONEN -----------

def make_pl_map(source: SimplicialComplex, target, vertex_images, name: str = "pl") -> PLMap:
    """
    Geprüfte PL-Abbildung aus einer Bildtabelle.

    Bilder neben dem Ziel ergeben InvalidImage. Entartete affine Stücke
    stehen in f.degenerate und sind kein Fehler.
    """
    return PLMap(source, target, vertex_images, name=name)


def pl_from_function(K: SimplicialComplex, func, target=None, name: str | None = None) -> PLMap:
    images = np.asarray(func(K.vertices), dtype=float)
    if images.ndim == 1:
        images = images[:, None]
    if target is None:
        target = metrics.Euclidean(images.shape[1])
    label = name or getattr(func, "name", "pl")
    return make_pl_map(K, target, images, name=label)


def identity_map(K: SimplicialComplex) -> PLMap:
    return make_pl_map(K, K, K.vertices, name="identity")


def constant_map(K: SimplicialComplex, value, target=None) -> PLMap:
    value = np.asarray(value, dtype=float)
    target = target if target is not None else metrics.Euclidean(len(value))
    return make_pl_map(K, target, np.tile(value, (len(K.vertices), 1)), name="constant")


def circle_map(K: SimplicialComplex, phase: Callable, name: str = "circle") -> PLMap:
    """S^1 -> S^1, Ecke mit Winkel theta geht auf Winkel phase(theta)"""
    theta = np.arctan2(K.vertices[:, 1], K.vertices[:, 0])
    phi = phase(theta)
    return PLMap(K, K, np.stack([np.cos(phi), np.sin(phi)], axis=1), name=name)


def wrap_map(K: SimplicialComplex, k: int) -> PLMap:
    """Ecke Nummer i (zyklisch) geht auf Ecke Nummer k*i"""
    order = complexes.cycle_order(K)
    images = np.empty_like(K.vertices)
    images[order] = K.vertices[order[(k * np.arange(len(order))) % len(order)]]
    return make_pl_map(K, K, images, name=f"wrap{k}")


def random_circle_map(K: SimplicialComplex, winding: int, rng, amplitude: float = 1.5) -> PLMap:
    a = rng.standard_normal(3) * amplitude / 3
    p = rng.random(3) * 2 * math.pi
    phase = lambda t: winding * t + sum(a[j] * np.sin((j + 1) * t + p[j]) for j in range(3))
    return circle_map(K, phase, name=f"circle{winding}")


def sphere_self_map(K: SimplicialComplex, func: Callable, name: str) -> PLMap:
    img = np.asarray(func(K.vertices), dtype=float)
    img = img / np.linalg.norm(img, axis=1, keepdims=True)
    return PLMap(K, K, img, name=name)


def fold_sphere_map(K: SimplicialComplex, shift) -> PLMap:
    """x -> normalize(x + shift), für |shift| > 1 Grad 0"""
    shift = np.asarray(shift, dtype=float)
    return sphere_self_map(K, lambda X: X + shift, "fold")


def tripod_map(K: SimplicialComplex, labels, radii, name: str = "tripod") -> PLMap:
    """
    Abbildung auf das Dreibein: Ecke v geht auf radii[v] * (Beinende labels[v]).

    Ecken mit einem Nachbarn anderer Marke gehen auf den Kegelpunkt, damit
    jedes Simplex in einem Bein landet.
    """
    cone = complexes.skeleton_cone(2)
    labels = np.asarray(labels, dtype=int)
    radii = np.clip(np.asarray(radii, dtype=float), 0.0, 1.0)
    E = np.array(K.simplices[1], dtype=int)
    mixed = labels[E[:, 0]] != labels[E[:, 1]]
    radii = radii.copy()
    radii[E[mixed].ravel()] = 0.0
    images = radii[:, None] * cone.vertices[1 + labels]
    return PLMap(K, cone, images, name=name)


def height_tripod(K: SimplicialComplex) -> PLMap:
    z = K.vertices[:, -1]
    return tripod_map(K, (z >= 0).astype(int), np.abs(z), name="height-tripod")


def random_tripod_map(K: SimplicialComplex, rng) -> PLMap:
    C = metrics.random_points(metrics.RoundSphere(K.dimension), 3, rng)
    labels = np.argmax(K.vertices @ C.T, axis=1)
    w = rng.standard_normal(K.ambient_dim)
    radii = 0.5 + 0.4 * np.tanh(K.vertices @ w)
    return tripod_map(K, labels, radii, name="random-tripod")
