"""
Suche nach Koinzidenzpaaren

Die Sätze garantieren die Existenz der Paare, liefern aber kein Verfahren.
Hier wird gesucht: antipodal-symmetrische Netze, Vorzeichenwechsel und
lokale Nachbesserung mit least_squares.

    borsuk_ulam_pair   x und -x mit f(x) = f(-x)
    hopf_pair          Paar im Abstand delta mit gleichem Bild
    even_degree_pair   Paar außerhalb des Kurzweg-Bereichs für PL-Abbildungen
                       geraden Grades, exakt pro Simplexpaar gelöst

Ein erschöpftes Budget ist nie ein Beweis der Nichtexistenz.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig
from scipy.optimize import brentq, least_squares

import complexes
import metrics
import plmaps
from laborlog import (
    TOL, SEED, BudgetExhausted, DeltaOutOfRange, OddDegree, UnsupportedDimension, info,
)

MULTISTART = 64
REFINE_DEPTH = 12
BUDGET = 500_000
# Obergrenze für die Netzgröße bei der Vorzeichensuche
MAX_SIMPLICES = 20_000
# Lockerung der baryzentrischen Bedingung für Startpunkte
SLACK = 0.05
DELTA_MATCH = 1e-6


@dataclass
class CoincidencePair:
    x: np.ndarray
    y: np.ndarray
    distance: float
    residual: float
    method: str
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "x": [float(c) for c in self.x],
            "y": [float(c) for c in self.y],
            "distance": float(self.distance),
            "residual": float(self.residual),
            "method": self.method,
            "evaluations": int(self.evaluations),
        }


class _OutOfBudget(Exception):
    pass


class _Budget:
    """Zählt Auswertungen und bricht bei Überschreitung ab"""

    def __init__(self, f, budget: int):
        self.f = f
        self.budget = budget
        self.count = 0
        self.best = (math.inf, None)

    def __call__(self, X):
        X = np.atleast_2d(X)
        self.count += len(X)
        if self.count > self.budget:
            raise _OutOfBudget()
        out = np.asarray(self.f(X), dtype=float)
        return out.reshape(len(X), -1)

    def offer(self, residual: float, pair):
        if residual < self.best[0]:
            self.best = (residual, pair)


# ----------- BORSUK-ULAM -----------

def borsuk_ulam_pair(f, n: int, tol: float = TOL, budget: int = BUDGET, seed: int = SEED,
                     multistart: int = MULTISTART, refine_depth: int = REFINE_DEPTH) -> CoincidencePair:
    """
    Antipodales Paar mit |f(x) - f(-x)|_inf <= tol.

    g(x) = f(x) - f(-x) ist ungerade. Auf immer feineren Kreuzpolytop-Netzen
    liefert die PL-Interpolation von g Nullstellenkandidaten je Simplex, die
    im Tangentialraum nachgebessert werden.
    """
    if n not in (1, 2, 3):
        raise UnsupportedDimension(f"Borsuk-Ulam-Suche nur für n in (1, 2, 3), nicht {n}")
    space = metrics.RoundSphere(n)
    ev = _Budget(f, budget)

    def g(X):
        X = np.atleast_2d(X)
        return ev(X) - ev(-X)

    try:
        if n == 1:
            x = _bu_circle(g, tol, ev)
        else:
            x = _bu_sphere(g, n, tol, ev, seed, multistart, refine_depth)
    except _OutOfBudget:
        raise BudgetExhausted(ev.best[0], ev.best[1], ev.count)
    if x is None:
        raise BudgetExhausted(ev.best[0], ev.best[1], ev.count)

    r = float(np.abs(g(x)).max())
    pair = CoincidencePair(x, -x, metrics.distance(space, x, -x), r, "antipodal-mesh+least_squares", ev.count)
    info(f"Borsuk-Ulam-Paar: Residuum {r:.2e} nach {ev.count} Auswertungen")
    return pair


def _bu_circle(g, tol, ev, samples: int = 257):
    theta = np.linspace(0.0, math.pi, samples)
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    G = g(pts)[:, 0]
    for i, v in enumerate(G):
        if abs(v) <= tol:
            return pts[i]
    # g(pi) = -g(0): mindestens ein Vorzeichenwechsel
    i = int(np.flatnonzero(np.sign(G[:-1]) != np.sign(G[1:]))[0])
    phi = lambda t: g(np.array([math.cos(t), math.sin(t)]))[0, 0]
    t = brentq(phi, theta[i], theta[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    x = np.array([math.cos(t), math.sin(t)])
    ev.offer(abs(phi(t)), (x, -x))
    return x


def _refine_sphere(g, x0):
    B = metrics.tangent_basis(x0)

    def point(u):
        x = x0 + u @ B
        return x / np.linalg.norm(x)

    res = least_squares(lambda u: g(point(u))[0], np.zeros(len(B)), method="trf",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=100)
    x = point(res.x)
    return x, float(np.abs(g(x)).max())


def _bu_sphere(g, n, tol, ev, seed, multistart, refine_depth):
    start = {2: 3, 3: 1}[n]
    for level in range(start, refine_depth + 1):
        if 2 ** (n + 1) * (2 ** n) ** level > MAX_SIMPLICES:
            break
        K = complexes.cross_polytope_sphere(n, level)
        G = g(K.vertices)
        res = np.abs(G).max(axis=1)
        i = int(np.argmin(res))
        ev.offer(float(res[i]), (K.vertices[i], -K.vertices[i]))
        if res[i] <= tol:
            return K.vertices[i].copy()

        # Nullstelle der PL-Interpolation je Simplex
        top = K.top
        M = plmaps._augment(G[top])
        ok = ~plmaps._singular(M)
        rhs = np.zeros(n + 1)
        rhs[-1] = 1.0
        lam = np.linalg.solve(M[ok], np.broadcast_to(rhs, (int(ok.sum()), n + 1))[..., None])[..., 0]
        score = lam.min(axis=1)
        order = np.argsort(-score, kind="stable")
        cands = []
        for j in order:
            if score[j] < -SLACK or len(cands) >= multistart:
                break
            x0 = lam[j] @ K.vertices[top[ok][j]]
            x0 = x0 / np.linalg.norm(x0)
            # x und -x sind gleichwertig; nur ein Vertreter
            if any(min(np.linalg.norm(x0 - c), np.linalg.norm(x0 + c)) < 1e-9 for c in cands):
                continue
            cands.append(x0)

        rng = np.random.default_rng(seed + level)
        while len(cands) < min(multistart, 8):
            cands.append(metrics.random_points(metrics.RoundSphere(n), 1, rng)[0])

        for x0 in cands:
            x, r = _refine_sphere(g, x0)
            ev.offer(r, (x, -x))
            if r <= tol:
                return x
    return None


# ----------- HOPF -----------

def hopf_geodesic_map(space: metrics.ModelSpace, x, v, delta: float):
    """h(x, v): Endpunkte der Geodäte durch x in Richtung +-v, je delta/2"""
    return (metrics.geodesic_shoot(space, x, v, delta / 2),
            metrics.geodesic_shoot(space, x, -np.asarray(v, dtype=float), delta / 2))


def hopf_pair(f, space: metrics.ModelSpace, delta: float, tol: float = TOL, budget: int = BUDGET,
              seed: int = SEED, multistart: int = MULTISTART) -> CoincidencePair:
    """
    Paar im Abstand delta mit f(p) = f(q), gesucht über dem Einheitstangentialbündel.

    Karten: auf S^n x = normalize(x0 + B u) und v aus w0 + a durch Projektion
    auf den Tangentialraum; auf T^2 Basispunkt (u, v) und Winkel.
    """
    if not 0 < delta <= space.rho + 1e-12:
        raise DeltaOutOfRange(f"delta = {delta} außerhalb von (0, {space.rho}]")
    if space.kind not in ("sphere", "torus"):
        raise UnsupportedDimension(f"Hopf-Suche nur auf Sphären und dem Torus, nicht {space}")
    ev = _Budget(f, budget)
    rng = np.random.default_rng(seed)
    try:
        if space.kind == "sphere" and space.n == 1:
            p, q = _hopf_circle(ev, delta, tol)
            method = "circle-bracketing"
        elif space.kind == "sphere":
            p, q = _hopf_sphere(ev, space.n, delta, tol, rng, multistart)
            method = "tangent-bundle+least_squares"
        else:
            p, q = _hopf_torus(ev, delta, tol, rng, multistart)
            method = "torus-chart+least_squares"
    except _OutOfBudget:
        raise BudgetExhausted(ev.best[0], ev.best[1], ev.count)
    if p is None:
        raise BudgetExhausted(ev.best[0], ev.best[1], ev.count)

    r = float(np.abs(ev(p) - ev(q)).max())
    d = metrics.distance(space, p, q)
    info(f"Hopf-Paar auf {space}: Abstand {d:.9f}, Residuum {r:.2e}")
    return CoincidencePair(p, q, d, r, method, ev.count)


def _hopf_circle(ev, delta, tol, samples: int = 512):
    h = delta / 2

    def ends(t):
        t = np.atleast_1d(t)
        p = np.stack([np.cos(t + h), np.sin(t + h)], axis=1)
        q = np.stack([np.cos(t - h), np.sin(t - h)], axis=1)
        return p, q

    def g(t):
        p, q = ends(t)
        return (ev(p) - ev(q))[:, 0]

    theta = np.linspace(0.0, 2 * math.pi, samples + 1)
    G = g(theta)
    k = int(np.argmin(np.abs(G)))
    if abs(G[k]) <= tol:
        p, q = ends(theta[k])
        return p[0], q[0]
    flips = np.flatnonzero(np.sign(G[:-1]) != np.sign(G[1:]))
    if not len(flips):
        ev.offer(float(abs(G[k])), ends(theta[k]))
        return None, None
    i = int(flips[0])
    t = brentq(lambda s: g(s)[0], theta[i], theta[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    p, q = ends(t)
    ev.offer(float(abs(g(t)[0])), (p[0], q[0]))
    return p[0], q[0]


def _hopf_sphere(ev, n, delta, tol, rng, multistart):
    c, s = math.cos(delta / 2), math.sin(delta / 2)
    space = metrics.RoundSphere(n)

    def ends(x, w):
        v = w - (w @ x) * x
        v = v / np.linalg.norm(v)
        return c * x + s * v, c * x - s * v

    # Grobe Stichprobe über dem Tangentialbündel für die Startwerte
    X = metrics.random_points(space, 16 * multistart, rng)
    W = np.array([metrics.random_tangent(space, x, rng) for x in X])
    P = c * X + s * W
    Q = c * X - s * W
    R = np.abs(ev(P) - ev(Q)).max(axis=1)
    starts = np.argsort(R, kind="stable")[:multistart]

    for k in starts:
        x0, w0 = X[k], W[k]
        B = metrics.tangent_basis(x0)

        def unpack(z):
            x = x0 + z[:n] @ B
            x = x / np.linalg.norm(x)
            return ends(x, w0 + z[n:])

        def fun(z):
            p, q = unpack(z)
            return (ev(p) - ev(q))[0]

        res = least_squares(fun, np.zeros(2 * n + 1), method="trf", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=200)
        p, q = unpack(res.x)
        r = float(np.abs(ev(p) - ev(q)).max())
        ev.offer(r, (p, q))
        if r <= tol and abs(metrics.distance(space, p, q) - delta) <= DELTA_MATCH:
            return p, q
    return None, None


def _hopf_torus(ev, delta, tol, rng, multistart):
    h = delta / 2

    def ends(z):
        d = h * np.array([math.cos(z[2]), math.sin(z[2])])
        return np.mod(z[:2] + d, 1.0), np.mod(z[:2] - d, 1.0)

    Z = np.column_stack([rng.random((16 * multistart, 2)), rng.random(16 * multistart) * math.pi])
    D = h * np.column_stack([np.cos(Z[:, 2]), np.sin(Z[:, 2])])
    R = np.abs(ev(np.mod(Z[:, :2] + D, 1.0)) - ev(np.mod(Z[:, :2] - D, 1.0))).max(axis=1)
    starts = np.argsort(R, kind="stable")[:multistart]

    for k in starts:
        res = least_squares(lambda z: (ev(ends(z)[0]) - ev(ends(z)[1]))[0], Z[k], method="trf",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
        p, q = ends(res.x)
        r = float(np.abs(ev(p) - ev(q)).max())
        ev.offer(r, (p, q))
        if r <= tol and abs(metrics.distance(metrics.FlatTorus(), p, q) - delta) <= DELTA_MATCH:
            return p, q
    return None, None


# ----------- GERADER GRAD -----------

def even_degree_pair(f: plmaps.PLMap, tol: float = TOL, budget: int = BUDGET) -> CoincidencePair:
    """
    Antipodales Paar mit f(x) = f(-x) für eine PL-Abbildung geraden Grades auf S^n.

    x liegt im Simplex sigma und -x im Gegensimplex mit denselben
    Kegelkoordinaten lam. Bei Sphärenzielen ist A^T lam = t B^T lam mit
    t > 0 ein verallgemeinertes Eigenwertproblem.
    """
    if plmaps.mod2_degree(f) != 0:
        raise OddDegree(f"{f.name} hat ungeraden Grad")
    if f.source.space_tag != "sphere":
        raise UnsupportedDimension("Paare außerhalb des Kurzweg-Bereichs nur für Sphärenquellen")
    K = f.source
    space = K.space
    anti = complexes.antipode_index(K)

    diff = np.abs(f.images - f.images[anti]).max(axis=1)
    i = int(np.argmin(diff))
    if diff[i] <= tol:
        x = K.vertices[i]
        return CoincidencePair(x.copy(), -x, metrics.distance(space, x, -x), float(diff[i]), "vertex", 1)

    best = (math.inf, None)
    evaluations = 0
    seen = set()
    for s in K.top:
        key = tuple(sorted(s))
        if key in seen:
            continue
        seen.add(tuple(sorted(anti[s])))
        evaluations += 1
        if evaluations > budget:
            raise BudgetExhausted(best[0], best[1], evaluations)
        A = f.images[s]
        Bm = f.images[anti[s]]
        for lam in _antipodal_solutions(A, Bm, f.target_kind, tol):
            x = lam @ K.vertices[s]
            x = x / np.linalg.norm(x)
            r = float(np.abs(f.evaluate(x) - f.evaluate(-x)).max())
            if r < best[0]:
                best = (r, (x, -x))
            if r <= tol:
                info(f"Paar geraden Grades nach {evaluations} Simplexpaaren")
                return CoincidencePair(x, -x, metrics.distance(space, x, -x), r, "simplex-pair-solve", evaluations)
    raise BudgetExhausted(best[0], best[1], evaluations)


def _antipodal_solutions(A, Bm, kind, tol):
    """Baryzentrische lam >= 0 mit gleichem Bild auf sigma und -sigma"""
    out = []
    if kind == "sphere":
        w, V = eig(A.T, Bm.T)
        for t, vec in zip(w, V.T):
            if not np.isfinite(t) or abs(t.imag) > 1e-9 or t.real <= 0:
                continue
            vec = vec.real
            if abs(vec.sum()) < 1e-14:
                continue
            lam = vec / vec.sum()
            if lam.min() >= -tol and np.linalg.norm(lam @ A) > 1e-12:
                out.append(np.clip(lam, 0.0, None) / np.clip(lam, 0.0, None).sum())
        return out
    M = np.vstack([(A - Bm).T, np.ones(len(A))])
    rhs = np.zeros(len(M))
    rhs[-1] = 1.0
    lam, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.linalg.norm(M @ lam - rhs) <= 1e-9 and lam.min() >= -tol:
        out.append(np.clip(lam, 0.0, None) / np.clip(lam, 0.0, None).sum())
    return out
