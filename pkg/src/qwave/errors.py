"""Exception hierarchy for the simulator.

Everything raised by the physics layers derives from SimulationError so
callers (notably the CLI) can distinguish modeling errors from
configuration and I/O problems.
"""


class SimulationError(Exception):
    """Base class for all errors raised by the simulation layers."""


class DuplicateLabelError(SimulationError):
    """Two modes in one register share a label."""


class InvalidCutoffError(SimulationError):
    """Mode cutoff incompatible with its kind (fermion/two-level need 1)."""


class UnknownModeError(SimulationError):
    """Referenced mode label is not part of the register."""


class OccupationOutOfRangeError(SimulationError):
    """Occupation tuple has wrong length or exceeds a mode cutoff."""


class RegisterMismatchError(SimulationError):
    """Operands (states, operators, specs) belong to different registers."""


class KindMismatchError(SimulationError):
    """Operation requires a mode of a different kind."""


class SiteMismatchError(SimulationError):
    """Paired modes must be tagged with the same site."""


class NotHermitianError(SimulationError):
    """Operator expected to be hermitian is not."""


class TailBoundExceededError(SimulationError):
    """Coherent-state occupation tail above the cutoff exceeds its bound."""


class NonCommutingSpecsError(SimulationError):
    """Joint sampling requested for measurements with no joint distribution."""


class ImpossibleOutcomeError(SimulationError):
    """Post-selection on an outcome of (numerically) zero probability."""


class NTooLargeError(SimulationError):
    """Chain length out of the exhaustively enumerable range."""


class ConfigError(Exception):
    """Invalid run configuration (unknown experiment, bad parameter...)."""
