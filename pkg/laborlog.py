"""
Gemeinsame Basis für das Topologie-Labor

Statusausgaben im Stil ✓ / ⚠ / ✗, die Fehlerhierarchie aller Module
und die RunConfig, die jeder Report vollständig mitschreibt.

Ausgaben gehen auf stderr, damit JSON/CSV auf stdout sauber bleiben.
Jede Störung eines nicht-generischen Zielpunkts landet zusätzlich in
WARNINGS und damit im "warnings"-Feld des Reports.
"""

import sys
import json
from dataclasses import dataclass, field, asdict, fields

SCHEMA_VERSION = "1.0.0"

# ----------- DEFAULTS -----------
TOL = 1e-9
PERTURB = 1e-7
SEED = 7
MESH_LEVEL = 4
SAMPLES = 2000

WARNINGS: list[str] = []
_quiet = False


def set_quiet(quiet: bool = True):
    global _quiet
    _quiet = quiet


def reset_warnings():
    WARNINGS.clear()


def info(msg: str):
    if not _quiet:
        print(f"✓ {msg}", file=sys.stderr, flush=True)


def warn(msg: str):
    WARNINGS.append(msg)
    if not _quiet:
        print(f"⚠ {msg}", file=sys.stderr, flush=True)


def fail(msg: str):
    if not _quiet:
        print(f"✗ {msg}", file=sys.stderr, flush=True)


def report_schema_version() -> str:
    return SCHEMA_VERSION


# ----------- FEHLER -----------

class LaborError(Exception):
    """Basisklasse aller Laborfehler"""


class UnsupportedDimension(LaborError):
    pass


class NotClosedManifold(LaborError):
    pass


class InvalidComplex(LaborError):
    """Fehlerhafte Komplex-Daten; path zeigt auf die Stelle im JSON"""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class InvalidPoint(LaborError):
    pass


class InvalidTangent(LaborError):
    pass


class OutsideShortPathDomain(LaborError):
    """Paar außerhalb von D(s); das Paar selbst wird mitgeliefert"""

    def __init__(self, p, q, distance: float):
        super().__init__(f"Paar im Abstand {distance:.12g} liegt außerhalb des Kurzweg-Bereichs")
        self.pair = (p, q)
        self.distance = distance


class EmptySet(LaborError):
    pass


class InvalidImage(LaborError):
    pass


class NonGenericTarget(LaborError):
    def __init__(self, target, reason: str = "kritischer Bildwert"):
        super().__init__(f"Zielpunkt {list(map(float, target))} nicht generisch: {reason}")
        self.target = target


class DimensionMismatch(LaborError):
    pass


class OddDegree(LaborError):
    pass


class DeltaPairFound(LaborError):
    """Erfolg durch Widerspruch: ein Paar mit Abstand genau delta"""

    def __init__(self, x, y, distance: float, delta: float):
        super().__init__(f"delta-Paar gefunden: Abstand {distance:.12g} (delta = {delta:.12g})")
        self.pair = (x, y)
        self.distance = distance
        self.delta = delta


class NonSimpleEvent(LaborError):
    pass


class BudgetExhausted(LaborError):
    """Suche abgebrochen; Existenz ist garantiert, nur das Budget war zu klein"""

    def __init__(self, best_residual: float, best_pair=None, evaluations: int = 0):
        super().__init__(f"Budget erschöpft nach {evaluations} Auswertungen, bestes Residuum {best_residual:.3e}")
        self.best_residual = best_residual
        self.best_pair = best_pair
        self.evaluations = evaluations


class DeltaOutOfRange(LaborError):
    pass


class WrongCodimension(LaborError):
    pass


class NotClosed(LaborError):
    pass


class PreconditionViolated(LaborError):
    pass


class InvariantViolation(LaborError):
    """Ein Satz-Schranke wurde gerissen: Harness- oder Gitterfehler"""


# ----------- KONFIGURATION -----------

@dataclass
class RunConfig:
    """Vollständig aufgelöste Konfiguration eines Laufs"""
    command: str = ""
    seed: int = SEED
    tol: float = TOL
    mesh_level: int = MESH_LEVEL
    samples: int = SAMPLES
    trials: int = 10_000
    refine_rounds: int = 3
    n: int = 2
    delta: float | None = None
    family: str = "projection"
    map: str | None = None
    maps: int = 20
    complex: str = "sphere"
    bound: str | None = None
    floor: str | None = None
    mesh_tolerance: float | None = None
    lemmas: list[str] = field(default_factory=list)
    json_path: str | None = None
    csv_path: str | None = None
    plot_path: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise LaborError(f"Unbekannte Konfigurationsfelder: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)
