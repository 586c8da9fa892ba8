"""
Nullzyklen mod 2, Fasergraph und Ereignisverfolgung

    cycle_map             f^c(y): Faserpunkte ungerader Vielfachheit
    canonical_class_eval  Zählt, wie oft ein generischer Punkt x0 in den Zyklen auftaucht
    contraction_homotopy  h_t(y): Kurzweg-Punkte zu t/2 über alle geordneten Paare, mod 2
    fiber_graph           G_y, Kanten zwischen Faserpunkten mit Abstand < delta
    track_events          Paar-Erzeugung und -Vernichtung entlang eines Zielpfads
    track_point           Grad eines wandernden Quellpunkts in G_f(x)
    parity_certificate    delta-Paar oder konstante Grad-Parität

Der Zyklenraum wird nur extensional dargestellt: endliche Träger an
abgefragten Werten.
"""

import json
import math
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

import coincidence
import complexes
import metrics
import plmaps
from plmaps import PLMap, UnionFind
from laborlog import (
    TOL, SEED, BudgetExhausted, DeltaOutOfRange, DeltaPairFound, InvariantViolation,
    NonGenericTarget, NonSimpleEvent, OddDegree, PreconditionViolated, info, warn, fail,
)

# Auflösung der Bisektion auf dem Pfadparameter
BISECT = 1e-10
# Paare so nahe an delta gelten als delta-Paar
DELTA_TOL = 1e-9
# x0 gilt als Faserpunkt, wenn näher als das
PROBE_TOL = 1e-7
# zulässige Bewegung zwischen zwei Stützstellen, relativ zum kleinsten Punktabstand
JUMP = 0.25
NUDGES = (0.0, 1e-3, -1e-3, 1e-2, -1e-2, 0.1, -0.1)

EVENT_KINDS = ("PairCreated", "PairAnnihilated", "VertexExchange")


# ----------- NULLZYKLEN -----------

@dataclass
class ZeroCycle:
    """Träger eines Nullzyklus mod 2 (nur Punkte mit Koeffizient 1)"""
    space: metrics.ModelSpace
    support: np.ndarray

    def __len__(self):
        return len(self.support)

    @property
    def is_empty(self) -> bool:
        return len(self.support) == 0

    def same_support(self, other: "ZeroCycle", tol: float = TOL) -> bool:
        if len(self) != len(other):
            return False
        if self.is_empty:
            return True
        C = metrics.distances(self.space, self.support[:, None, :], other.support[None, :, :])
        r, c = linear_sum_assignment(C)
        return bool(C[r, c].max() <= tol)

    def to_list(self) -> list:
        return self.support.tolist()


def reduce_mod2(space: metrics.ModelSpace, points, tol: float = TOL) -> ZeroCycle:
    """Fasst Punkte im Abstand <= tol zusammen und behält Gruppen ungerader Größe"""
    P = np.asarray(points, dtype=float).reshape(-1, space.ambient_dim)
    if len(P) == 0:
        return ZeroCycle(space, P)
    close = np.triu(metrics.pairwise(space, P) <= tol, 1)
    uf = UnionFind(len(P))
    for i, j in zip(*np.nonzero(close)):
        uf.union(int(i), int(j))
    keep = sorted(min(g) for g in uf.components() if len(g) % 2 == 1)
    return ZeroCycle(space, P[keep])


def cycle_map(f: PLMap, y, tol: float = TOL) -> ZeroCycle:
    """f^c(y); nur für Abbildungen geraden Grades wohldefiniert"""
    if plmaps.mod2_degree(f) != 0:
        raise OddDegree(f"{f.name}: f^c braucht geraden Grad")
    fib = f.fiber(y, tol)
    pts = [p.point for p in fib.points if p.weight % 2]
    return reduce_mod2(f.source.space, pts, tol)


def canonical_class_eval(f: PLMap, probes: int, rng=None, tol: float = TOL, points=None) -> int:
    """
    Auswertung der kanonischen Klasse auf f^c(Y).

    x0 liegt genau in der Faser über f(x0), mit Vielfachheit 1. Jeder
    Probepunkt muss deshalb Parität 1 liefern; kritische Probepunkte werden
    neu gezogen und protokolliert.

    Args:
        probes:  Anzahl der Probepunkte
        points:  optionale feste Probepunkte, werden zuerst verwendet
    """
    if plmaps.mod2_degree(f) != 0:
        raise OddDegree(f"{f.name}: kanonische Klasse braucht geraden Grad")
    rng = rng if rng is not None else np.random.default_rng(SEED)
    queue = [np.asarray(p, dtype=float) for p in (points if points is not None else [])]
    space = f.source.space
    parities = []
    resampled = 0
    while len(parities) < probes:
        x0 = queue.pop(0) if queue else f.random_source_points(1, rng)[0]
        try:
            cyc = cycle_map(f, f.evaluate(x0), tol)
        except NonGenericTarget as e:
            resampled += 1
            warn(f"Probepunkt {np.round(x0, 6).tolist()} kritisch ({e}); neu gezogen")
            if resampled > 10 * probes:
                raise
            continue
        count = int(np.sum(metrics.distances(space, cyc.support, x0) <= PROBE_TOL)) if len(cyc) else 0
        parities.append(count % 2)

    bad = [i for i, p in enumerate(parities) if p != 1]
    if bad:
        raise InvariantViolation(f"xi(f^c(Y)) != 1 an Probepunkt {bad[0]} von {f.name}")
    info(f"{f.name}: xi = 1 an {probes} Probepunkten ({resampled} neu gezogen)")
    return 1


def contraction_homotopy(f: PLMap, y, t: float, tol: float = TOL) -> ZeroCycle:
    """h_t(y) = Summe über x1 != x2 in f^c(y) von s(x1, x2)(t/2), mod 2"""
    if not 0.0 <= t <= 1.0:
        raise PreconditionViolated(f"t = {t} liegt nicht in [0, 1]")
    cyc = cycle_map(f, y, tol)
    space = f.source.space
    P = cyc.support
    out = [metrics.short_path(space, P[i], P[j], t / 2, tol)
           for i, j in itertools.permutations(range(len(P)), 2)]
    return reduce_mod2(space, out, tol)


# ----------- FASERGRAPH -----------

@dataclass
class FiberGraph:
    target_point: np.ndarray
    delta: float
    vertices: np.ndarray
    edges: set = field(default_factory=set)

    @property
    def adjacency(self) -> np.ndarray:
        A = np.zeros((len(self.vertices),) * 2, dtype=bool)
        for i, j in self.edges:
            A[i, j] = A[j, i] = True
        return A

    def neighbors(self, i: int) -> set:
        return {b if a == i else a for a, b in self.edges if i in (a, b)}

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def to_dict(self) -> dict:
        return {"target": self.target_point.tolist(), "delta": self.delta,
                "vertices": self.vertices.tolist(), "edges": sorted(self.edges)}


def fiber_graph(f: PLMap, y, delta: float, tol: float = TOL) -> FiberGraph:
    """
    G_y mit Kanten für Paare im Abstand < delta.

    Liegt ein Paar bis auf DELTA_TOL bei delta, wird DeltaPairFound mit
    diesem Paar geworfen.
    """
    space = f.source.space
    if not 0 < delta <= space.rho + tol:
        raise DeltaOutOfRange(f"delta = {delta} außerhalb von (0, {space.rho}]")
    y = np.asarray(y, dtype=float)
    fib = f.fiber(y, tol)
    V = fib.all_points()
    if len(V) == 0:
        return FiberGraph(y, delta, np.zeros((0, space.ambient_dim)))
    D = metrics.pairwise(space, V)
    iu, ju = np.triu_indices(len(V), 1)
    hit = np.flatnonzero(np.abs(D[iu, ju] - delta) <= DELTA_TOL)
    if len(hit):
        a, b = int(iu[hit[0]]), int(ju[hit[0]])
        raise DeltaPairFound(V[a], V[b], float(D[a, b]), delta)
    edges = {(int(a), int(b)) for a, b in zip(iu, ju) if D[a, b] < delta}
    return FiberGraph(y, delta, V, edges)


def odd_degree_vertices(G: FiberGraph) -> list[int]:
    A = G.adjacency
    return [int(i) for i in np.flatnonzero(A.sum(axis=1) % 2)]


def graph_filling_boundary(f: PLMap, y, tol: float = TOL) -> ZeroCycle:
    """
    Rand mod 2 der Kantenkette von G_y bei delta = rho.

    Auf der Sphäre ist G_y dann vollständig (bis auf Antipodenpaare); bei
    geradem Grad hat die Faser gerade Länge, jede Ecke ungeraden Grad und
    der Rand ist f^c(y).
    """
    space = f.source.space
    G = fiber_graph(f, y, space.rho - DELTA_TOL, tol)
    return ZeroCycle(space, G.vertices[odd_degree_vertices(G)])


# ----------- EREIGNISSE -----------

@dataclass
class EventRecord:
    kind: str
    param: float
    vertices: list
    parities: dict
    location: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "param": float(self.param), "vertices": list(self.vertices),
                "parities": {str(k): int(v) for k, v in self.parities.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class TrackResult:
    events: list
    parities: dict
    samples: int = 0

    def to_jsonl(self) -> str:
        return "\n".join(e.to_json() for e in self.events)


class _Polyline:
    """Pfad im Ziel, nach Bogenlänge auf [0, 1] parametrisiert"""

    def __init__(self, P: np.ndarray):
        self.P = P
        seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = float(self.cum[-1])

    def __call__(self, s: float) -> np.ndarray:
        if self.length == 0:
            return self.P[0].copy()
        u = s * self.length
        i = int(np.clip(np.searchsorted(self.cum, u, side="right") - 1, 0, len(self.P) - 2))
        h = self.cum[i + 1] - self.cum[i]
        w = 0.0 if h == 0 else (u - self.cum[i]) / h
        return (1 - w) * self.P[i] + w * self.P[i + 1]


@dataclass
class _Snapshot:
    s: float
    points: np.ndarray
    adj: np.ndarray


def _require_codim0_euclidean(f: PLMap):
    if f.codim != 0 or f.target_kind != "euclidean":
        raise PreconditionViolated("Verfolgung nur für Kodimension 0 mit euklidischem Ziel")
    if f.source.space_tag not in ("sphere", "torus"):
        raise PreconditionViolated("Verfolgung braucht eine geschlossene Quelle")


def _match(space, A, B):
    """Zuordnung minimaler Summe; (Paare, größter Einzelabstand)"""
    if len(A) == 0 or len(B) == 0:
        return [], 0.0
    C = metrics.distances(space, A[:, None, :], B[None, :, :])
    r, c = linear_sum_assignment(C)
    return list(zip(r.tolist(), c.tolist())), float(C[r, c].max())


def _separation(space, P) -> float:
    if len(P) < 2:
        return math.inf
    D = metrics.pairwise(space, P)
    return float(D[np.triu_indices(len(P), 1)].min())


class _EventTracker:
    def __init__(self, f: PLMap, walk: _Polyline, delta: float, tol: float):
        self.f = f
        self.walk = walk
        self.delta = delta
        self.tol = tol
        self.space = f.source.space
        self.scale = float(complexes.edge_lengths(f.source).max())
        self.events = []
        self.ids = []
        self.next_id = 0
        self.state = None

    def snapshot(self, s: float) -> _Snapshot:
        G = fiber_graph(self.f, self.walk(s), self.delta, self.tol)
        return _Snapshot(s, G.vertices, G.adjacency)

    def sample(self, s: float, lo: float, hi: float) -> _Snapshot | None:
        """Stützstelle bei s, bei kritischem Wert leicht verschoben innerhalb (lo, hi)"""
        for k in NUDGES:
            t = min(max(s + k * (hi - lo), lo), hi)
            try:
                return self.snapshot(t)
            except NonGenericTarget:
                continue
        return None

    def start(self, snap: _Snapshot):
        self.state = snap
        self.ids = list(range(len(snap.points)))
        self.next_id = len(snap.points)

    def parities(self, snap: _Snapshot | None = None) -> dict:
        snap = snap or self.state
        deg = snap.adj.sum(axis=1) if len(snap.points) else []
        return {self.ids[i]: int(d) % 2 for i, d in enumerate(deg)}

    def jump(self, a: _Snapshot, b: _Snapshot) -> float:
        return JUMP * min(_separation(self.space, a.points), _separation(self.space, b.points), self.scale)

    def advance(self, a: _Snapshot, b: _Snapshot):
        pairs, cost = _match(self.space, a.points, b.points)
        if len(a.points) == len(b.points) and cost <= self.jump(a, b):
            self.carry(a, b, pairs)
            return
        if b.s - a.s <= BISECT:
            self.event(a, b, pairs)
            return
        m = self.sample(0.5 * (a.s + b.s), a.s, b.s)
        if m is None or m.s in (a.s, b.s):
            self.event(a, b, pairs)
            return
        self.advance(a, m)
        self.advance(m, b)

    def carry(self, a: _Snapshot, b: _Snapshot, pairs):
        for (i1, j1), (i2, j2) in itertools.combinations(pairs, 2):
            if a.adj[i1, i2] != b.adj[j1, j2]:
                self.locate_flip(a, b, (i1, i2), (j1, j2))
        ids = [None] * len(b.points)
        for i, j in pairs:
            ids[j] = self.ids[i]
        self.ids = ids
        self.state = b

    def locate_flip(self, a, b, ia, jb):
        """Kante wechselt zwischen a und b: Bisektion bis das Paar bei delta liegt"""
        while b.s - a.s > BISECT:
            m = self.sample(0.5 * (a.s + b.s), a.s, b.s)
            if m is None or m.s in (a.s, b.s):
                break
            pairs = dict(_match(self.space, a.points, m.points)[0])
            im = (pairs[ia[0]], pairs[ia[1]])
            if m.adj[im] == a.adj[ia]:
                a, ia = m, im
            else:
                back = dict(_match(self.space, b.points, m.points)[0])
                b, jb = m, (back[jb[0]], back[jb[1]])
        p, q = b.points[jb[0]], b.points[jb[1]]
        raise DeltaPairFound(p, q, float(metrics.distances(self.space, p, q)), self.delta)

    def event(self, a: _Snapshot, b: _Snapshot, pairs):
        ka, kb = len(a.points), len(b.points)
        if ka == kb:
            self.carry(a, b, pairs)
            return
        if abs(ka - kb) != 2:
            raise NonSimpleEvent(f"{ka} -> {kb} Faserpunkte bei s = {b.s:.12f}")
        created = kb > ka
        big = b if created else a
        matched = {j if created else i for i, j in pairs}
        x1, x2 = [k for k in range(len(big.points)) if k not in matched]
        if not big.adj[x1, x2]:
            raise NonSimpleEvent(f"Paar bei s = {b.s:.12f} ist nicht verbunden")
        n1 = set(np.flatnonzero(big.adj[x1]).tolist()) - {x2}
        n2 = set(np.flatnonzero(big.adj[x2]).tolist()) - {x1}
        if n1 != n2:
            raise NonSimpleEvent(f"Paar bei s = {b.s:.12f} hat verschiedene Nachbarn")

        before = self.parities(a)
        ids = [None] * kb
        for i, j in pairs:
            ids[j] = self.ids[i]
        if created:
            born = []
            for k in (x1, x2):
                ids[k] = self.next_id
                born.append(self.next_id)
                self.next_id += 1
            involved = born
        else:
            involved = [self.ids[x1], self.ids[x2]]
        self.ids = ids
        self.state = b
        after = self.parities(b)
        for vid, p in after.items():
            if vid in before and before[vid] != p:
                raise NonSimpleEvent(f"Parität von Ecke {vid} springt bei s = {b.s:.12f}")
        kind = "PairCreated" if created else "PairAnnihilated"
        self.events.append(EventRecord(kind, b.s, involved, after, self.walk(b.s).tolist()))


def track_events(f: PLMap, path, delta: float, samples: int = 64, tol: float = TOL) -> TrackResult:
    """
    Verfolgt G_y entlang eines Zielpfads.

    Zwischen Stützstellen werden Faserpunkte per Zuordnung weitergereicht;
    ändert sich die Anzahl oder springt die Zuordnung, wird auf dem
    Pfadparameter bis BISECT halbiert. Eine Kante, die unterwegs wechselt,
    ergibt DeltaPairFound.

    Args:
        path:     Ecken eines Polygonzugs im Ziel (k, m)
        samples:  Stützstellen vor der Verfeinerung
    """
    _require_codim0_euclidean(f)
    P = np.atleast_2d(np.asarray(path, dtype=float))
    if P.shape[1] != f.target_dim or len(P) < 2:
        raise PreconditionViolated(f"Pfad muss aus mindestens zwei Punkten in R^{f.target_dim} bestehen")
    walk = _Polyline(P)
    tr = _EventTracker(f, walk, delta, tol)
    tr.start(tr.snapshot(0.0))
    grid = np.linspace(0.0, 1.0, samples + 1)
    for lo, s, hi in zip(grid[:-1], grid[1:], np.append(grid[2:], 1.0)):
        nxt = tr.snapshot(1.0) if s == 1.0 else tr.sample(s, lo, hi)
        if nxt is None:
            raise NonSimpleEvent(f"keine generische Stützstelle nahe s = {s}")
        tr.advance(tr.state, nxt)
    return TrackResult(tr.events, tr.parities(), samples)


# ----------- WANDERNDER PUNKT -----------

def vertex_degree(f: PLMap, x, delta: float, tol: float = TOL) -> tuple[int, FiberGraph, int]:
    """Grad von x in G_f(x): (Grad, Graph, Index von x)"""
    G = fiber_graph(f, f.evaluate(x), delta, tol)
    if len(G.vertices) == 0:
        raise NonGenericTarget(f.evaluate(x), "x fehlt in seiner eigenen Faser")
    d = metrics.distances(f.source.space, G.vertices, x)
    i = int(np.argmin(d))
    if d[i] > PROBE_TOL:
        raise NonGenericTarget(f.evaluate(x), "x fehlt in seiner eigenen Faser")
    return G.degree(i), G, i


class _SourceWalk:
    """Geodätischer Polygonzug in der Quelle, nach Bogenlänge auf [0, 1]"""

    def __init__(self, space, P, tol):
        self.space = space
        self.P = P
        self.tol = tol
        seg = metrics.distances(space, P[:-1], P[1:])
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = float(self.cum[-1])

    def __call__(self, s: float) -> np.ndarray:
        u = s * self.length
        i = int(np.clip(np.searchsorted(self.cum, u, side="right") - 1, 0, len(self.P) - 2))
        h = self.cum[i + 1] - self.cum[i]
        w = 0.0 if h == 0 else min(max((u - self.cum[i]) / h, 0.0), 1.0)
        return metrics.short_path(self.space, self.P[i], self.P[i + 1], w, self.tol)


def track_point(f: PLMap, path, delta: float, samples: int = 64, tol: float = TOL) -> TrackResult:
    """
    Parität des Grades von x(s) in G_f(x(s)) entlang eines Quellpfads.

    Überquert x eine Falte, kollidiert es mit einem Partner und tauscht die
    Rolle (VertexExchange, Grad bleibt gleich). Paarereignisse anderer
    Faserpunkte ändern den Grad um 2. Ein Paritätswechsel heißt, dass ein
    Nachbar genau durch den Abstand delta gelaufen ist: DeltaPairFound.
    """
    _require_codim0_euclidean(f)
    space = f.source.space
    P = np.atleast_2d(np.asarray(path, dtype=float))
    walk = _SourceWalk(space, P, tol)
    sign = f.orientation()

    def state(s):
        x = walk(s)
        deg, G, i = vertex_degree(f, x, delta, tol)
        idx, _ = f.locate(x)
        return s, int(sign[idx[0]]), deg, G, i

    def probe(s, lo, hi):
        for k in NUDGES:
            t = min(max(s + k * (hi - lo), lo), hi)
            try:
                return state(t)
            except NonGenericTarget:
                continue
        return None

    events = []

    def refine(a, b):
        if a[1] == b[1] and a[2] % 2 == b[2] % 2:
            return
        if b[0] - a[0] > BISECT:
            m = probe(0.5 * (a[0] + b[0]), a[0], b[0])
            if m is not None and m[0] not in (a[0], b[0]):
                refine(a, m)
                refine(m, b)
                return
        folded = a[1] != b[1]
        flipped = a[2] % 2 != b[2] % 2
        if folded and flipped:
            raise NonSimpleEvent(f"Falte und Kantenwechsel zugleich bei s = {b[0]:.12f}")
        if folded:
            if a[2] != b[2]:
                raise NonSimpleEvent(f"Grad ändert sich beim Tausch bei s = {b[0]:.12f}")
            events.append(EventRecord("VertexExchange", b[0], ["x"], {"x": b[2] % 2}, walk(b[0]).tolist()))
            return
        _, G, i = b[2], b[3], b[4]
        d = metrics.distances(space, G.vertices, G.vertices[i])
        d[i] = math.inf
        j = int(np.argmin(np.abs(d - delta)))
        raise DeltaPairFound(G.vertices[i], G.vertices[j], float(d[j]), delta)

    grid = np.linspace(0.0, 1.0, samples + 1)
    cur = probe(0.0, 0.0, grid[1])
    if cur is None:
        raise NonSimpleEvent("Startpunkt des Pfads ist nicht generisch")
    for lo, s, hi in zip(grid[:-1], grid[1:], np.append(grid[2:], 1.0)):
        nxt = probe(s, lo, hi) if s < 1.0 else probe(1.0, lo, 1.0)
        if nxt is None:
            raise NonSimpleEvent(f"keine generische Stützstelle nahe s = {s}")
        refine(cur, nxt)
        cur = nxt
    return TrackResult(events, {"x": cur[2] % 2}, samples)


# ----------- PARITÄTSZERTIFIKAT -----------

@dataclass
class ParityCertificate:
    kind: str
    delta: float
    odd: int
    even: int
    pair: tuple | None = None
    distance: float | None = None
    method: str = ""

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "delta": self.delta, "odd": self.odd, "even": self.even,
               "method": self.method}
        if self.pair is not None:
            out["pair"] = [np.asarray(p).tolist() for p in self.pair]
            out["distance"] = self.distance
        return out


def parity_certificate(f: PLMap, delta: float, samples: int = 200, seed: int = SEED,
                       tol: float = TOL) -> ParityCertificate:
    """
    Grad-Parität generischer Punkte in ihrem Fasergraphen.

    Gemischte Paritäten werden entlang einer kurzen Geodäte zwischen einem
    ungeraden und einem geraden Punkt aufgelöst. Bei konstanter Parität
    sucht coincidence direkt nach einem delta-Paar. ConstantOddParity bei
    geschlossener Quelle und offenem Ziel ist der Widerspruchszustand.
    """
    _require_codim0_euclidean(f)
    space = f.source.space
    if not 0 < delta <= space.rho + tol:
        raise DeltaOutOfRange(f"delta = {delta} außerhalb von (0, {space.rho}]")
    rng = np.random.default_rng(seed)

    def found(p, q, d, method, odd=0, even=0):
        info(f"{f.name}: delta-Paar im Abstand {d:.9f} ({method})")
        return ParityCertificate("DeltaPairFound", delta, odd, even, (p, q), d, method)

    if f.is_constant:
        x = f.source.vertices[0]
        v = metrics.random_tangent(space, x, rng)
        q = metrics.geodesic_shoot(space, x, v, delta)
        return found(x.copy(), q, metrics.distance(space, x, q), "constant-map")

    odd, even = [], []
    for _ in range(samples):
        x = f.random_source_points(1, rng)[0]
        try:
            deg, _, _ = vertex_degree(f, x, delta, tol)
        except NonGenericTarget as e:
            warn(f"{f.name}: Stichprobe verworfen ({e})")
            continue
        except DeltaPairFound as e:
            return found(*e.pair, e.distance, "fiber-graph", len(odd), len(even))
        (odd if deg % 2 else even).append(x)

    if odd and even:
        A, B = np.array(odd), np.array(even)
        D = metrics.distances(space, A[:, None, :], B[None, :, :])
        D[D >= space.rho - 1e-6] = math.inf
        i, j = np.unravel_index(np.argmin(D), D.shape)
        if np.isfinite(D[i, j]):
            try:
                track_point(f, np.array([A[i], B[j]]), delta, tol=tol)
            except DeltaPairFound as e:
                return found(*e.pair, e.distance, "parity-bisection", len(odd), len(even))
            except NonSimpleEvent as e:
                warn(f"{f.name}: Paritätsverfolgung gestört ({e})")

    try:
        if space.kind == "sphere" and delta >= space.rho - tol:
            pair = coincidence.borsuk_ulam_pair(f, space.n, tol=tol, seed=seed)
        else:
            pair = coincidence.hopf_pair(f, space, delta, tol=max(tol, 1e-9), seed=seed)
        return found(pair.x, pair.y, pair.distance, pair.method, len(odd), len(even))
    except BudgetExhausted as e:
        warn(f"{f.name}: Suche nach delta-Paar erfolglos ({e})")

    if odd and even:
        raise InvariantViolation(f"{f.name}: Paritätswechsel ohne delta-Paar")
    if odd:
        fail(f"{f.name}: konstant ungerade Parität bei offenem Ziel (Widerspruchszustand)")
        return ParityCertificate("ConstantOddParity", delta, len(odd), 0, method="sampling")
    return ParityCertificate("ConstantEvenParity", delta, 0, len(even), method="sampling")
