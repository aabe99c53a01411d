"""Exception types shared across the toolbox."""


class ResilnetError(Exception):
    """Base class for all toolbox errors."""


class DimensionMismatch(ResilnetError):
    """Matrix blocks with incompatible shapes; message names the block."""


class NotHurwitz(ResilnetError):
    """Raised when a matrix required to be Hurwitz has an eigenvalue with
    real part >= -1e-10."""


class NotFullRowRank(ResilnetError):
    """Raised when an input matrix required to have full row rank does not."""


class NotControllable(ResilnetError):
    """Raised when a matrix pair required to be controllable is not."""


class RiccatiFailure(ResilnetError):
    """No stabilizing Riccati solution could be isolated."""


class TooManyVertices(ResilnetError):
    """Hypercube vertex or face enumeration beyond the hard cap (20)."""


class EmptySetError(ResilnetError):
    """Query against an empty input set."""


class PolicyInfeasible(ResilnetError):
    """A control policy demanded an input outside its admissible hypercube."""


class ScenarioError(ResilnetError):
    """Scenario file parsing or validation failure."""
