"""Error classes and the run-time event log.

Every warning or error that can surface to a user carries a stable,
machine-readable code. The CLI prints the code and uses it to choose the
exit status.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

logger = logging.getLogger("bb2rom")

# Stable codes. Never renumber; append only.
CODES = {
    "E_CONFIG": "invalid configuration",
    "E_SCHEMA": "schema violation in input document",
    "E_MESH_OPEN": "mesh is not a closed surface",
    "E_MESH_INDEX": "mesh index out of range or degenerate element",
    "E_EMERGED": "hull point above the calm-water surface",
    "E_SINGULAR": "Euler-angle kinematic singularity",
    "E_DIVERGED": "non-finite value during integration",
    "E_DESIGN": "infeasible controller design",
    "E_DEGENERATE_PATH": "path speed too small to define a frame",
    "E_TRIM": "trim solve failed to bracket a root",
    "E_TABLE": "invalid coefficient table",
    "W_OUT_OF_RANGE": "query outside the range of the model",
    "W_SHALLOW": "sail-top depth below the shallowest tabulated depth",
    "W_ANGLE_CLAMP": "flow angle clamped to the tabulated range",
    "W_DEFLECTION_SAT": "control-plane deflection saturated at the hard stop",
    "W_J_CLAMP": "advance coefficient clamped to the fitted interval",
    "W_GAMMA_CLAMP": "virtual time clamped to the path domain",
    "W_RATE_SAT": "rate command saturated",
    "W_AIM_FALLBACK": "aim point coincident with vehicle, tangent used",
    "W_DEFAULTED": "coefficients defaulted to zero",
    "W_DISPERSION": "wave dispersion relation overridden",
    "W_NORMAL_MISMATCH": "facet normal disagrees with winding",
    "W_COLLISION": "terrain clearance below threshold",
    "W_PARTIAL_METRICS": "insufficient data for some metrics",
}


class Bb2RomError(Exception):
    """Base error; ``code`` is one of :data:`CODES`."""

    code = "E_CONFIG"

    def __init__(self, message: str, code: str | None = None, context: dict | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.context = dict(context or {})

    def __str__(self) -> str:
        return f"[{self.code}] {self.args[0]}"


class ConfigurationError(Bb2RomError):
    code = "E_CONFIG"


class SchemaError(Bb2RomError):
    code = "E_SCHEMA"


class MeshError(Bb2RomError):
    code = "E_MESH_OPEN"


class EmergenceError(Bb2RomError):
    code = "E_EMERGED"


class SingularityError(Bb2RomError):
    code = "E_SINGULAR"


class DivergenceError(Bb2RomError):
    code = "E_DIVERGED"


class DesignError(Bb2RomError):
    code = "E_DESIGN"


class DegeneratePathError(Bb2RomError):
    code = "E_DEGENERATE_PATH"


class TrimError(Bb2RomError):
    code = "E_TRIM"


class TableError(Bb2RomError):
    code = "E_TABLE"


@dataclass
class Event:
    code: str
    message: str
    time: float | None = None


@dataclass
class EventLog:
    """Collects warnings raised during evaluation.

    Repeated events with the same code are counted rather than stored, so
    a clamp that is active for a whole run does not flood the log.
    """

    events: list[Event] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)
    time: float | None = None

    def record(self, code: str, message: str) -> None:
        if code not in CODES:
            raise KeyError(f"unknown event code {code}")
        n = self.counts.get(code, 0)
        self.counts[code] = n + 1
        if n == 0:
            self.events.append(Event(code, message, self.time))
            logger.warning("[%s] %s", code, message)

    def has(self, code: str) -> bool:
        return self.counts.get(code, 0) > 0

    def codes(self) -> list[str]:
        return sorted(self.counts)

    def to_list(self) -> list[dict]:
        return [
            {"code": e.code, "message": e.message, "time": e.time, "count": self.counts[e.code]}
            for e in self.events
        ]


def record(log: EventLog | None, code: str, message: str) -> None:
    if log is not None:
        log.record(code, message)
