"""
Breiten w(f) = sup_y diam f^-1(y)

Untere Schranke: größter Durchmesser einer tatsächlich berechneten Faser.
Obere Schranke: für Quellen mit euklidischer Metrik exakt über alle Paare
von Seiten (p in F1, q in F2, f(p) = f(q)); sonst Lipschitz-Schlupf der
Stichprobe, gedeckelt durch den Durchmesser der Quelle.

Das Infimum über alle Abbildungen wird nicht berechnet. Der Harness prüft
die Schranken auf endlichen Familien, obere Schranken kommen von
expliziten Konstruktionen (shchepin_map).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

import coincidence
import complexes
import metrics
import plmaps
from plmaps import PLMap
from laborlog import (
    TOL, SEED, SAMPLES, BudgetExhausted, NonGenericTarget, UnsupportedDimension, LaborError,
    info, warn, fail,
)

REFINE_ROUNDS = 3
# Top-Kandidaten je Verfeinerungsrunde
REFINE_KEEP = 5
# Speicherbudget für die Paarsuche über Seiten
PAIR_CHUNK = 200_000
BOUND_KINDS = ("rho", "kappa", "sphere_simplex")


@dataclass
class WidthReport:
    map_id: str
    lower: float
    upper: float
    witness_target: np.ndarray
    samples: int
    mesh_scale: float
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "map_id": self.map_id,
            "lower": self.lower,
            "upper": self.upper,
            "witness_target": [float(c) for c in np.atleast_1d(self.witness_target)],
            "samples": self.samples,
            "mesh_scale": self.mesh_scale,
            "provenance": self.provenance,
        }


# ----------- SCHRANKEN -----------

def sphere_simplex_bound(n: int) -> float:
    """Untere Schranke u_(n-1)(S^n) >= arccos(-1/n)"""
    return math.acos(-1.0 / n)


def ball_simplex_bound(n: int) -> float:
    """u_(n-1)(B^n) = sqrt((2n+2)/n), Kantenlänge des eingeschriebenen Simplex"""
    return math.sqrt((2 * n + 2) / n)


def floor_for(space: metrics.ModelSpace, bound_kind: str) -> float:
    if bound_kind == "rho":
        return metrics.constants(space)[0]
    if bound_kind == "kappa":
        return metrics.constants(space)[1]
    if bound_kind == "sphere_simplex":
        if space.kind != "sphere":
            raise LaborError("sphere_simplex-Schranke nur für Sphären")
        return sphere_simplex_bound(space.n)
    raise LaborError(f"Unbekannte Schranke: {bound_kind}")


# ----------- FASERDURCHMESSER -----------

def _fiber_diameter(f: PLMap, y, rng, tol) -> float:
    if f.target_kind == "sphere":
        P = plmaps.regular_fiber(f, y, rng, tol).all_points()
        return metrics.set_diameter(f.source.space, P) if len(P) else 0.0
    return f.fiber_diameter(y, tol)


def target_samples(f: PLMap, k: int, rng) -> np.ndarray:
    """Geschichtete Zielpunkte: je Quellsimplex bzw. je Zielsimplex reihum"""
    if k <= 0:
        return np.zeros((0, f.images.shape[1]))
    if f.target_kind == "sphere":
        return metrics.random_points(metrics.RoundSphere(f.target_dim), k, rng)
    if f.target_kind == "polyhedron":
        T = f.target
        cells = np.arange(k) % len(T.top)
        lam = rng.dirichlet(np.ones(T.dimension + 1), size=k)
        return np.einsum("ki,kid->kd", lam, T.vertices[T.top[cells]])
    S = np.arange(k) % len(f.top)
    lam = rng.dirichlet(np.ones(f.n + 1), size=k)
    return np.einsum("ki,kid->kd", lam, f.pieces[S])


def _coincidence_seed(f: PLMap, tol: float, seed: int) -> list:
    """Bildpunkte von Koinzidenzpaaren im Abstand rho als Kandidaten"""
    if f.codim != 0 or f.target_kind != "euclidean" or f.source.space_tag not in ("sphere", "torus"):
        return []
    space = f.source.space
    try:
        if space.kind == "sphere":
            pair = coincidence.borsuk_ulam_pair(f, space.n, tol=tol, seed=seed)
        else:
            pair = coincidence.hopf_pair(f, space, space.rho, tol=tol, seed=seed)
    except BudgetExhausted as e:
        warn(f"{f.name}: kein Koinzidenz-Startwert ({e})")
        return []
    return [f.evaluate(pair.x)]


def map_width(f: PLMap, samples: int = SAMPLES, refine_rounds: int = REFINE_ROUNDS,
              seed: int = SEED, tol: float = TOL) -> WidthReport:
    """
    Untere und obere Schranke für sup_y diam f^-1(y).

    Kandidaten: Eckenbilder, geschichtete Stichprobe, Koinzidenz-Startwerte
    und Verfeinerung um die besten bisherigen Werte.
    """
    if f.codim not in (0, 1):
        raise LaborError(f"Breite nur für Kodimension 0 oder 1, nicht {f.codim}")
    rng = np.random.default_rng(seed)

    cands = [np.unique(np.round(f.images, 12), axis=0)]
    cands.append(target_samples(f, samples, rng))
    seeds = _coincidence_seed(f, tol, seed)
    if seeds:
        cands.append(np.array(seeds))
    Y = np.vstack(cands)

    scored = []
    for y in Y:
        try:
            scored.append((_fiber_diameter(f, y, rng, tol), y))
        except NonGenericTarget as e:
            warn(f"{f.name}: {e}")
    total = len(Y)

    # Verfeinerung um die bisher besten Zielpunkte
    radius = 2.0 * float(np.ptp(f.images, axis=0).max(initial=0.0)) / max(samples, 1) ** (1.0 / max(f.target_dim, 1))
    for r in range(refine_rounds):
        scored.sort(key=lambda t: -t[0])
        top = [y for _, y in scored[:REFINE_KEEP]]
        k = max(8, samples // (REFINE_KEEP * max(refine_rounds, 1)))
        for y0 in top:
            for y in y0 + (radius / 2 ** r) * rng.standard_normal((k, len(y0))):
                y = f.project_to_target(y)
                try:
                    scored.append((_fiber_diameter(f, y, rng, tol), y))
                except (NonGenericTarget, LaborError):
                    continue
                total += 1

    lower, witness = max(scored, key=lambda t: t[0]) if scored else (0.0, Y[0])
    mesh_scale = float(complexes.edge_lengths(f.source).max())
    upper, provenance = _upper_bound(f, lower, Y, mesh_scale, tol)
    upper = max(upper, lower)
    info(f"{f.name}: Breite in [{lower:.9f}, {upper:.9f}] nach {total} Zielpunkten")
    return WidthReport(f.name, float(lower), float(upper), witness, total, mesh_scale,
                       {"lower": "computed-fiber", "upper": provenance, "tol": tol})


# ----------- OBERE SCHRANKE -----------

def _upper_bound(f: PLMap, lower: float, Y: np.ndarray, mesh_scale: float, tol: float):
    space = f.source.space
    diam = space.diameter
    if f.source.space_tag == "ball" and f.target_kind != "sphere":
        return face_pair_sup(f, tol), "face-pair-enumeration"
    if f.is_constant:
        return diam, "source-diameter"
    L = _inverse_lipschitz(f)
    if not math.isfinite(L) or len(Y) < 2:
        return diam, "source-diameter"
    spacing = float(cKDTree(Y).query(Y, k=2)[0][:, 1].max())
    return min(diam, lower + 2.0 * spacing * L + 2.0 * mesh_scale), "lipschitz-slack"


def _inverse_lipschitz(f: PLMap) -> float:
    """max ||(Df)^-1|| über die Stücke; unendlich, sobald ein Stück entartet"""
    if f.codim != 0 or np.any(f.degenerate):
        return math.inf
    V = f.source.vertices[f.top]
    if f.source.space_tag == "torus":
        V = complexes.unwrap(V)
    Es = V[:, 1:] - V[:, :1]
    Et = f.pieces[:, 1:] - f.pieces[:, :1]
    # Df = Et^T Es^+T; kleinster Singulärwert auf dem Tangentialraum
    J = np.einsum("sji,sjk->sik", Et, np.linalg.pinv(Es).swapaxes(1, 2))
    smin = np.linalg.svd(J, compute_uv=False)[:, f.target_dim - 1]
    if np.any(smin <= 1e-12):
        return math.inf
    return float(1.0 / smin.min())


def face_pair_sup(f: PLMap, tol: float = TOL) -> float:
    """
    sup |p - q| über alle Paare mit f(p) = f(q), exakt für euklidische Quellen.

    Das Maximum einer konvexen Funktion über dem Polytop
    {(lam, mu) >= 0 : A lam = B mu} liegt in einer Ecke; deren Träger sind
    Seitenpaare mit dim F1 + dim F2 <= m.
    """
    m = f.images.shape[1]
    n = f.n
    K = f.source
    best = 0.0
    for k1 in range(min(n, m) + 1):
        for k2 in range(k1, min(n, m - k1) + 1):
            F1 = np.array(K.simplices[k1], dtype=int)
            F2 = np.array(K.simplices[k2], dtype=int)
            P1, P2 = f.images[F1], f.images[F2]
            lo1, hi1 = P1.min(axis=1), P1.max(axis=1)
            lo2, hi2 = P2.min(axis=1), P2.max(axis=1)
            overlap = np.all((lo1[:, None] <= hi2[None] + tol) & (lo2[None] <= hi1[:, None] + tol), axis=2)
            I, J = np.nonzero(overlap)
            step = max(1, PAIR_CHUNK // (k1 + k2 + 2))
            for a in range(0, len(I), step):
                best = max(best, _pair_chunk(K, P1[I[a:a + step]], P2[J[a:a + step]],
                                             F1[I[a:a + step]], F2[J[a:a + step]], tol))
    return best


def _pair_chunk(K, P1, P2, F1, F2, tol) -> float:
    c, k1, m = P1.shape
    k2 = P2.shape[1]
    M = np.zeros((c, m + 2, k1 + k2))
    M[:, :m, :k1] = np.swapaxes(P1, 1, 2)
    M[:, :m, k1:] = -np.swapaxes(P2, 1, 2)
    M[:, m, :k1] = 1.0
    M[:, m + 1, k1:] = 1.0
    rhs = np.zeros(m + 2)
    rhs[m:] = 1.0
    s = np.linalg.svd(M, compute_uv=False)
    full = s[:, -1] > 1e-10 * np.maximum(s[:, 0], 1.0)
    if not full.any():
        return 0.0
    M, F1, F2 = M[full], F1[full], F2[full]
    z = np.einsum("cij,j->ci", np.linalg.pinv(M), rhs)
    res = np.linalg.norm(np.einsum("cij,cj->ci", M, z) - rhs, axis=1)
    ok = (res <= 10 * tol) & (z.min(axis=1) >= -tol)
    if not ok.any():
        return 0.0
    z = np.clip(z[ok], 0.0, None)
    lam, mu = z[:, :k1], z[:, k1:]
    p = np.einsum("ci,cid->cd", lam / lam.sum(axis=1, keepdims=True), K.vertices[F1[ok]])
    q = np.einsum("ci,cid->cd", mu / mu.sum(axis=1, keepdims=True), K.vertices[F2[ok]])
    return float(metrics.distances(K.space, p, q).max())


# ----------- KONSTRUKTION -----------

def shchepin_map(n: int, subdivisions: int = 0) -> PLMap:
    """
    B^n -> Kegel 0 * Delta^(n-2): orthogonale Projektion auf das
    eingeschriebene Simplex, danach g auf der baryzentrischen Unterteilung.

    g ist die Identität auf Schwerpunkten von Seiten der Dimension <= n-2
    und schickt Facetten- und Simplexschwerpunkt auf die Kegelspitze.
    """
    if n not in (2, 3):
        raise UnsupportedDimension(f"Shchepin-Abbildung nur für n in (2, 3), nicht {n}")
    K = complexes.simplex_ball(n, subdivisions)
    cone = complexes.skeleton_cone(n)
    base = np.array(K.meta["base"], dtype=int)
    keep = np.array(K.meta["face_dim"]) <= n - 2
    images = np.where(keep[:, None], K.vertices[base], 0.0)
    return PLMap(K, cone, images, name=f"shchepin{n}")


# ----------- HARNESS -----------

@dataclass
class HarnessRow:
    map_id: str
    lower: float
    upper: float
    bound: float
    passed: bool
    report: WidthReport | None = None

    def to_dict(self) -> dict:
        return {"map_id": self.map_id, "lower": self.lower, "upper": self.upper,
                "bound": self.bound, "pass": self.passed}


def width_bound_harness(space: metrics.ModelSpace, maps: list, bound_kind: str,
                        samples: int = SAMPLES, refine_rounds: int = REFINE_ROUNDS,
                        mesh_tolerance: float = 0.1, seed: int = SEED, tol: float = TOL) -> list[HarnessRow]:
    """Prüft map_width().lower >= Schranke - mesh_tolerance für jede Abbildung"""
    bound = floor_for(space, bound_kind)
    rows = []
    for i, f in enumerate(maps):
        if f.source.space != space:
            raise LaborError(f"{f.name}: Quelle {f.source.space} passt nicht zu {space}")
        rep = map_width(f, samples, refine_rounds, seed + i, tol)
        ok = rep.lower >= bound - mesh_tolerance
        if not ok:
            fail(f"{f.name}: Breite {rep.lower:.6f} unter der Schranke {bound:.6f} (Harness- oder Gitterfehler)")
        rows.append(HarnessRow(f.name, rep.lower, rep.upper, bound, ok, rep))
    return rows


# ----------- HALBSPHÄREN -----------

@dataclass
class HalfSphereVerdict:
    kind: str
    direction: np.ndarray
    radius: float
    boundary: bool = False

    def to_dict(self) -> dict:
        return {"kind": self.kind, "direction": self.direction.tolist(), "radius": self.radius,
                "boundary": self.boundary}


def half_sphere_test(points, tol: float = TOL) -> HalfSphereVerdict:
    """InsideOpenHalfSphere genau dann, wenn die kleinste Kappe Radius < pi/2 hat"""
    cap = metrics.smallest_enclosing_cap(points, tol)
    if cap.radius < math.pi / 2 - tol:
        return HalfSphereVerdict("InsideOpenHalfSphere", cap.center, cap.radius)
    return HalfSphereVerdict("EvadesAllHalfSpheres", cap.center, cap.radius,
                             boundary=abs(cap.radius - math.pi / 2) <= tol)
