"""Main particulars of the generic submarine and the mass-property builder.

Body origin sits on the shaft axis at the longitudinal centre of gravity,
so ``x_G = 0``; the centre of gravity lies ``Z_G`` below the axis.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .rigid_body import G_STANDARD, MassProperties


@dataclass(frozen=True)
class Particulars:
    length: float  # m
    beam: float  # m
    depth_to_sail_top: float  # keel to top of sail, m
    displacement: float  # kg
    xg_from_nose: float  # m
    zg_below_axis: float  # m
    radii: tuple  # roll, pitch, yaw gyration radii, m

    def __post_init__(self):
        if not (self.length > 0 and self.beam > 0 and self.displacement > 0):
            raise ValueError("length, beam and displacement must be positive")
        if len(self.radii) != 3 or min(self.radii) <= 0:
            raise ValueError("three positive gyration radii required")

    @property
    def sail_height_above_axis(self) -> float:
        return self.depth_to_sail_top - 0.5 * self.beam

    def sail_top_depth(self, z: float) -> float:
        """Sail-top depth ``D0`` for a body-origin depth ``z`` at even keel."""
        return z - self.sail_height_above_axis

    def origin_depth(self, D0: float) -> float:
        return D0 + self.sail_height_above_axis

    def mass_properties(self, g: float = G_STANDARD, W=None, B=None, cb=None) -> MassProperties:
        """Neutrally buoyant by default, buoyancy centred on the axis at the origin."""
        return MassProperties.from_gyration(
            self.displacement, (0.0, 0.0, self.zg_below_axis), self.radii,
            cb=cb, W=W, B=B, g=g)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["radii"] = list(self.radii)
        return d


FULL_SCALE = Particulars(
    length=70.2, beam=9.6, depth_to_sail_top=16.2, displacement=4440.0e3,
    xg_from_nose=32.31, zg_below_axis=0.0443, radii=(3.433, 17.6, 17.522))

MODEL_SCALE = Particulars(
    length=3.16, beam=0.5232, depth_to_sail_top=0.8829, displacement=701.2,
    xg_from_nose=1.761, zg_below_axis=0.0024, radii=(0.1871, 0.9592, 0.955))
