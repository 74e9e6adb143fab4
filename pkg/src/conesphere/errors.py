"""Exception types raised across the package.

Every failure mode maps to one of these classes so the CLI can translate
them into stable exit codes.
"""


class ConesphereError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class SurfaceError(ConesphereError):
    exit_code = 3


class DuplicatePuncture(SurfaceError):
    pass


class WeightOutOfRange(SurfaceError):
    pass


class Unstable(SurfaceError):
    pass


class BadNormalization(SurfaceError):
    pass


class AtlasError(ConesphereError):
    exit_code = 3


class PunctureOnSeam(AtlasError):
    pass


class QuadratureError(ConesphereError):
    exit_code = 3


class ResolutionTooCoarse(QuadratureError):
    pass


class SolverError(ConesphereError):
    exit_code = 4


class NewtonDiverged(SolverError):
    pass


class LinearSolveFailed(SolverError):
    pass


class EvaluationError(ConesphereError):
    exit_code = 4


class PointTooCloseToPuncture(EvaluationError):
    pass


class EvaluationAtPuncture(EvaluationError):
    pass


class MetricSurfaceMismatch(ConesphereError):
    exit_code = 3


class SingularGram(ConesphereError):
    exit_code = 4


class FamilyError(ConesphereError):
    exit_code = 4


class PunctureCollision(FamilyError):
    pass


class StencilIncomplete(FamilyError):
    pass


class DimensionTooSmall(FamilyError):
    pass


class DbarError(ConesphereError):
    exit_code = 4


class ExponentOutOfRange(DbarError):
    pass


class QuadratureDivergence(DbarError):
    pass


class ConfigError(ConesphereError):
    exit_code = 2
