"""Exception types shared across the simulator."""


class TandemsimError(Exception):
    """Base class for all simulator errors."""


class ParseError(TandemsimError):
    """A file could not be parsed against its schema."""


class ValidationError(TandemsimError):
    """Parsed data violates an invariant. The message names the offender."""


class DegenerateGrid(TandemsimError):
    """An occupancy grid has too few free cells to be usable."""


class OffGrid(TandemsimError):
    """A query point could not be snapped to a free cell."""


class Unreachable(TandemsimError):
    """No navigable path exists between the queried points."""


class SizeMismatch(TandemsimError):
    """Array/pose sizes do not match the skeleton or mesh they are used with."""


class OutOfRange(TandemsimError):
    """A reach target lies outside the cached reachable region."""


class SpecError(TandemsimError):
    """An episode spec cannot be instantiated in its scene."""


class OutOfGrasp(TandemsimError):
    """Attach attempted with the hand too far from the object."""


class AlreadyHolding(TandemsimError):
    """Attach attempted while the agent already holds an object."""


class NotHolding(TandemsimError):
    """Detach attempted while the agent holds nothing."""


class ProtocolError(TandemsimError):
    """A message on an external policy or client connection was malformed."""


class BridgeTimeout(TandemsimError):
    """An external policy failed to answer within its step budget."""


class ModeUnavailable(TandemsimError):
    """A replay mode was requested that the recording does not support."""


class BindError(TandemsimError):
    """The HITL server could not bind its port."""
