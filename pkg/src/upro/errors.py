"""Exception taxonomy shared across the package."""


class UproError(Exception):
    """Base class for all package-specific errors."""


class OutOfDomain(UproError):
    """A point lies outside the grid's bounding box (beyond tolerance)."""


class UnsupportedScheme(UproError):
    """The requested partition scheme is undefined for this dimension."""


class DegenerateSimplex(UproError):
    """The affine system of a simplex is singular."""


class OutsideSimplex(UproError):
    """Barycentric weights came out negative beyond tolerance."""


class GridMismatch(UproError):
    """Two utilities do not share the same grid/partition."""


class NonFiniteValue(UproError):
    """An oracle or evaluator produced a non-finite value."""


class DegenerateRescale(UproError):
    """Affine normalization is impossible (equal corner values)."""


class OutcomeOffGrid(UproError):
    """A lottery outcome does not coincide with a gridpoint."""


class QuadratureFailure(UproError):
    """1-D quadrature did not reach the requested tolerance."""


class InfeasibleAmbiguity(UproError):
    """The assembled ambiguity polytope is empty."""


class RewardOutOfDomain(UproError):
    """A reward image falls outside the utility domain."""


class InfeasibleAtZ(UproError):
    """The expected-utility constraint cuts off the whole polytope at this z."""


class NonPositiveAlpha(UproError):
    """Error-bound formulas need a positive margin."""


class NonlinearReward(UproError):
    """The single mixed-integer reformulation needs rewards linear in z."""


class CurvatureUnsupported(UproError):
    """The single mixed-integer reformulation excludes curvature rows."""


class ShiftOutOfDomain(UproError):
    """A perturbed lottery outcome would leave the domain."""


class Exhausted(UproError):
    """No unasked gridpoints remain in the elicitation session."""


class InconsistentTranscript(UproError):
    """The recorded answers admit no piecewise-linear utility."""


class ContractViolation(UproError):
    """A solver backend disagreed with a certified fixture."""
