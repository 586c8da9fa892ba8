"""
Taillen in Kodimension 1: Faserlängen gegen die Schranken pi, 2 kappa, 2 pi

    waist_check          sup der Faserlänge über Stichproben, Vergleich mit der Schranke
    crofton_probability  Monte-Carlo über Großkreise: Trefferwahrscheinlichkeit und
                         mittlere Schnittzahl einer sphärischen Kurve
    connected_fiber_map  Zusammenhangskomponenten einer Faser mit Länge und Kappe
    conjecture_probe     Suche nach einer Komponente, die keine offene Halbsphäre trifft
"""

import math
from dataclasses import dataclass, field

import numpy as np

import complexes
import metrics
import plmaps
import widths
from plmaps import PLMap
from laborlog import (
    TOL, SEED, SAMPLES, UnsupportedDimension, WrongCodimension, PreconditionViolated, LaborError,
    info, warn, fail,
)

FLOOR_KINDS = ("pi_polyhedral", "two_kappa", "two_pi_manifold")
MESH_TOLERANCE = 0.05
REFINE_ROUNDS = 3
# Normalen je Block bei der Monte-Carlo-Schätzung
CROFTON_CHUNK = 20_000


@dataclass
class ComponentInfo:
    points: np.ndarray
    closed: bool
    length: float
    cap: metrics.Cap | None

    def to_dict(self) -> dict:
        return {"closed": self.closed, "length": self.length, "points": len(self.points),
                "cap": self.cap.to_dict() if self.cap is not None else None}


@dataclass
class WaistReport:
    map_id: str
    floor_kind: str
    floor: float
    max_total_length: float
    total_witness: np.ndarray
    max_component_length: float
    component_witness: np.ndarray
    witness_component_cap: metrics.Cap | None
    passed: bool
    samples: int
    seed: int
    offsets: list = field(default_factory=list)

    @property
    def sup_length(self) -> float:
        """Statistik, die mit der Schranke verglichen wird"""
        return self.max_component_length if self.floor_kind == "two_pi_manifold" else self.max_total_length

    def to_dict(self) -> dict:
        cap = self.witness_component_cap
        return {
            "map_id": self.map_id,
            "floor_kind": self.floor_kind,
            "floor": self.floor,
            "max_total_length": self.max_total_length,
            "total_witness": np.atleast_1d(self.total_witness).tolist(),
            "max_component_length": self.max_component_length,
            "component_witness": np.atleast_1d(self.component_witness).tolist(),
            "witness_component_cap": cap.to_dict() if cap is not None else None,
            "pass": self.passed,
            "samples": self.samples,
            "seed": self.seed,
            "perturbed": len(self.offsets),
        }


def floor_value(f: PLMap, floor_kind: str) -> float:
    """
    Schranke passend zu Quelle und Ziel.

        pi_polyhedral    Sphäre -> Polyeder oder R^m
        two_kappa        jede geschlossene Quelle
        two_pi_manifold  Sphäre -> Mannigfaltigkeit R^m
    """
    if floor_kind not in FLOOR_KINDS:
        raise LaborError(f"Unbekannte Schranke: {floor_kind}")
    if not complexes.is_closed_manifold(f.source):
        raise PreconditionViolated(f"{f.name}: Quelle {f.source.space_tag} ist nicht geschlossen")
    sphere = f.source.space_tag == "sphere"
    if floor_kind == "pi_polyhedral":
        if not sphere or f.target_kind == "sphere":
            raise PreconditionViolated(f"{f.name}: pi_polyhedral verlangt Sphäre -> Polyeder")
        return math.pi
    if floor_kind == "two_pi_manifold":
        if not sphere or f.target_kind != "euclidean":
            raise PreconditionViolated(f"{f.name}: two_pi_manifold verlangt Sphäre -> R^m")
        return 2.0 * math.pi
    return 2.0 * f.source.space.kappa


def _cap(f: PLMap, P: np.ndarray) -> metrics.Cap | None:
    if f.source.space_tag != "sphere" or f.source.dimension != 2 or not len(P):
        return None
    return metrics.smallest_enclosing_cap(P)


# ----------- KOMPONENTEN -----------

def connected_fiber_map(f: PLMap, y, tol: float = TOL) -> list[ComponentInfo]:
    """Komponenten der Faser über y, mit Länge und kleinster umfassender Kappe"""
    if f.codim != 1:
        raise WrongCodimension(f"Komponenten nur in Kodimension 1, nicht {f.codim}")
    fib = f.fiber(y, tol)
    return [ComponentInfo(c.points, c.closed, c.length, _cap(f, c.points)) for c in fib.components]


# ----------- TAILLE -----------

def waist_check(f: PLMap, floor_kind: str, samples: int = SAMPLES, seed: int = SEED,
                mesh_tolerance: float = MESH_TOLERANCE, refine_rounds: int = REFINE_ROUNDS,
                tol: float = TOL) -> WaistReport:
    """
    Vergleicht sup_y der Faserlänge mit der gewählten Schranke.

    pi_polyhedral und two_kappa messen die Gesamtlänge der Faser,
    two_pi_manifold die längste geschlossene Schleife. Offene Polylinien
    sind dort nicht generisch und werden verworfen.
    """
    if f.codim != 1:
        raise WrongCodimension(f"Taille nur in Kodimension 1, nicht {f.codim}")
    floor = floor_value(f, floor_kind)
    rng = np.random.default_rng(seed)
    loops_only = floor_kind == "two_pi_manifold"

    best_total = (0.0, None)
    best_comp = (0.0, None, None)
    offsets = []
    count = 0

    def visit(y):
        nonlocal best_total, best_comp, count
        try:
            fib = plmaps.regular_fiber(f, y, rng, tol)
        except LaborError as e:
            warn(f"{f.name}: Zielpunkt verworfen ({e})")
            return 0.0
        count += 1
        if fib.offset is not None:
            offsets.append(float(np.linalg.norm(fib.offset)))
        comps = fib.components
        if loops_only:
            opened = [c for c in comps if not c.closed]
            if opened:
                warn(f"{f.name}: offene Faserkomponente über {np.round(y, 6).tolist()} verworfen")
            comps = [c for c in comps if c.closed]
        total = float(sum(c.length for c in comps))
        if total > best_total[0]:
            best_total = (total, fib.target_point)
        for c in comps:
            if c.length > best_comp[0]:
                best_comp = (c.length, fib.target_point, c.points)
        return comps[0].length if loops_only and comps else total

    scored = []
    for y in widths.target_samples(f, samples, rng):
        scored.append((visit(y), y))

    # Verfeinerung um die längsten Fasern
    spread = float(np.ptp(f.images, axis=0).max(initial=0.0))
    for r in range(refine_rounds):
        scored.sort(key=lambda t: -t[0])
        for _, y0 in scored[:widths.REFINE_KEEP]:
            step = spread / max(samples, 1) * 2.0 ** (-r)
            for y in y0 + step * rng.standard_normal((8, len(y0))):
                y = f.project_to_target(y)
                scored.append((visit(y), y))

    stat = best_comp[0] if loops_only else best_total[0]
    passed = stat >= floor - mesh_tolerance
    cap = _cap(f, best_comp[2]) if best_comp[2] is not None else None
    if passed:
        info(f"{f.name}: sup Länge {stat:.6f} >= {floor:.6f} - {mesh_tolerance}")
    else:
        fail(f"{f.name}: sup Länge {stat:.6f} unter der Schranke {floor:.6f} (Harness- oder Gitterfehler)")
    empty = np.full(f.images.shape[1], np.nan)
    return WaistReport(
        f.name, floor_kind, floor,
        best_total[0], best_total[1] if best_total[1] is not None else empty,
        best_comp[0], best_comp[1] if best_comp[1] is not None else empty,
        cap, bool(passed), count, seed, offsets,
    )


# ----------- CROFTON -----------

@dataclass
class CroftonEstimate:
    p_hat: float
    e_hat: float
    sigma_p: float
    sigma_e: float
    length: float
    trials: int
    seed: int

    def within_bound(self) -> bool:
        """p_hat <= min(1, L/pi) + 3 sigma"""
        return self.p_hat <= min(1.0, self.length / math.pi) + 3 * self.sigma_p

    def to_dict(self) -> dict:
        return {"p_hat": self.p_hat, "e_hat": self.e_hat, "sigma_p": self.sigma_p,
                "sigma_e": self.sigma_e, "length": self.length, "trials": self.trials, "seed": self.seed}


def crofton_probability(curve, trials: int = 10_000, seed: int = SEED, closed: bool = False) -> CroftonEstimate:
    """
    Schnitte eines sphärischen Polygonzugs mit zufälligen Großkreisen.

    Großkreise über normierte Gauß-Normalen. Ein geodätisches Segment
    kürzer als pi schneidet einen Großkreis genau dann, wenn seine Enden
    auf verschiedenen Seiten liegen.
    """
    P = np.atleast_2d(np.asarray(curve, dtype=float))
    space = metrics.RoundSphere(P.shape[1] - 1)
    P = metrics.check_point(space, P)
    if closed:
        P = np.vstack([P, P[:1]])
    length = float(metrics.distances(space, P[:-1], P[1:]).sum())
    rng = np.random.default_rng(seed)

    counts = np.empty(trials, dtype=int)
    for a in range(0, trials, CROFTON_CHUNK):
        b = min(trials, a + CROFTON_CHUNK)
        N = metrics._normalize(rng.standard_normal((b - a, P.shape[1])))
        side = np.sign(P @ N.T)
        counts[a:b] = np.sum(side[:-1] != side[1:], axis=0)

    hit = counts > 0
    p_hat = float(hit.mean())
    e_hat = float(counts.mean())
    sigma_p = math.sqrt(max(p_hat * (1 - p_hat), 0.0) / trials)
    sigma_e = float(counts.std(ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
    return CroftonEstimate(p_hat, e_hat, sigma_p, sigma_e, length, trials, seed)


# ----------- VERMUTUNG -----------

@dataclass
class ProbeReport:
    map_id: str
    best_radius: float
    witness_target: np.ndarray | None
    component: ComponentInfo | None
    holds: bool
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "map_id": self.map_id,
            "best_radius": self.best_radius,
            "witness_target": None if self.witness_target is None else np.atleast_1d(self.witness_target).tolist(),
            "component": None if self.component is None else self.component.to_dict(),
            "holds": self.holds,
            "samples": self.samples,
            "seed": self.seed,
            "evidence_only": True,
        }


def conjecture_probe(f: PLMap, samples: int = SAMPLES, seed: int = SEED, slack: float = MESH_TOLERANCE,
                     tol: float = TOL) -> ProbeReport:
    """
    Sucht eine Faserkomponente mit Kappenradius >= pi/2 - slack.

    Eine solche Komponente liegt in keiner offenen Halbsphäre und trifft
    damit jede äquatoriale Untersphäre. Das Ergebnis ist Evidenz, kein Beweis.
    """
    if f.codim != 1:
        raise WrongCodimension(f"Probe nur in Kodimension 1, nicht {f.codim}")
    if f.source.space_tag != "sphere" or f.n not in (2, 3):
        raise UnsupportedDimension("Probe nur für S^2 und S^3 als Quelle")
    rng = np.random.default_rng(seed)
    best = (-1.0, None, None)

    def visit(y):
        nonlocal best
        try:
            fib = plmaps.regular_fiber(f, y, rng, tol)
        except LaborError:
            return -1.0
        top = -1.0
        for c in fib.components:
            cap = metrics.smallest_enclosing_cap(c.points)
            top = max(top, cap.radius)
            if cap.radius > best[0]:
                best = (cap.radius, fib.target_point, ComponentInfo(c.points, c.closed, c.length, cap))
        return top

    scored = [(visit(y), y) for y in widths.target_samples(f, samples, rng)]
    spread = float(np.ptp(f.images, axis=0).max(initial=0.0))
    for r in range(REFINE_ROUNDS):
        if best[0] >= math.pi / 2 - tol:
            break
        scored.sort(key=lambda t: -t[0])
        for _, y0 in scored[:widths.REFINE_KEEP]:
            step = spread / max(samples, 1) * 2.0 ** (-r)
            for y in y0 + step * rng.standard_normal((8, len(y0))):
                y = f.project_to_target(y)
                scored.append((visit(y), y))

    holds = best[0] >= math.pi / 2 - slack
    info(f"{f.name}: größter Kappenradius {best[0]:.6f} (Evidenz, Seed {seed})")
    return ProbeReport(f.name, float(best[0]), best[1], best[2], bool(holds), samples, seed)
