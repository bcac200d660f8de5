"""Error taxonomy shared across the quadcone modules.

Every domain failure raises a named subclass of QuadconeError so callers (and
the CLI, which maps them to exit code 1) can match on the variant by name.
"""


class QuadconeError(Exception):
    """Base class for all domain errors raised by this package."""


# ---- shape construction / membership ----

class NonPositiveAxis(QuadconeError):
    """A semi-axis length is zero or negative."""


class BadRotation(QuadconeError):
    """Orientation matrix is not a proper rotation."""


class MalformedComposite(QuadconeError):
    """Composite shape parameters are inconsistent (wrong quadric classes, etc.)."""


# ---- plane family / conic sections ----

class CoincidentCenters(QuadconeError):
    """Cannot build the plane family: the two centers coincide."""


class DegenerateConic(QuadconeError):
    """Conic matrix is singular (no dual exists)."""


class NumericalBreakdown(QuadconeError):
    """Eigen-decomposition or factorization failed beyond retry."""


# ---- tangent constructions ----

class NoRealIntersection(QuadconeError):
    """The two conics do not intersect in real points."""


class PointInsideEllipse(QuadconeError):
    """Tangents from a point require the point strictly outside the ellipse."""


class CornerFilterEmpty(QuadconeError):
    """No corner tangent passes both side filters."""


class CloudIntersectsEllipse(QuadconeError):
    """A point-cloud boundary point lies inside the agent's section."""


class SearchExhausted(QuadconeError):
    """Support-point search ran out of candidates before finding valid tangents."""


class ParallelTangents(QuadconeError):
    """The two tangent lines are parallel (no finite vertex)."""


# ---- cone evaluation ----

class ZeroRelativeSpeed(QuadconeError):
    """In-plane relative speed is zero; the planar cone test is undefined."""


class BodiesOverlap(QuadconeError):
    """The two bodies already interpenetrate at the current pose."""


# ---- kinematics ----

class GimbalSingularity(QuadconeError):
    """Relative elevation too close to +/- pi/2 for the spherical frame."""


class StepRejected(QuadconeError):
    """Integration step rejected (bodies would interpenetrate); retry with dt/2."""


# ---- guidance ----

class SingularInversion(QuadconeError):
    """Dynamic-inversion denominator vanished; hold the previous command."""


class NoValidPlane(QuadconeError):
    """Plane selection found no valid (non-skipped) plane."""


# ---- simulation / configuration ----

class CollisionOccurred(QuadconeError):
    """Bodies made contact during a run."""


class ConfigInvalid(QuadconeError):
    """Scenario or configuration file failed validation."""
