"""Reduced-order 6DoF maneuvering model of a generic submarine.

Tabulated hull and control-surface coefficients, an exact pressure
integration over a hull mesh for buoyancy and linear waves, a path-following
outer loop on Bernstein polynomial paths, and an optional L1 adaptive
augmentation of the pitch and yaw rate loops.
"""

from .events import Bb2RomError, EventLog
from .simulator import Plant, SimConfig, TrajectoryLog, follow, roll_decay, trim, turn, zigzag

__version__ = "0.1.0"

__all__ = [
    "Bb2RomError",
    "EventLog",
    "Plant",
    "SimConfig",
    "TrajectoryLog",
    "follow",
    "roll_decay",
    "trim",
    "turn",
    "zigzag",
]
