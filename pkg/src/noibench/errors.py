"""Exception types raised across the workbench."""


class NoiError(Exception):
    """Base class for all workbench errors."""


# -- topology construction / editing --------------------------------------

class DegreeExceedsPortCap(NoiError):
    pass


class PlacementSizeMismatch(NoiError):
    pass


class DuplicateLink(NoiError):
    pass


class LinkAbsent(NoiError):
    pass


class WouldDisconnect(NoiError):
    pass


class PortCapExceeded(NoiError):
    pass


class InfeasibleAugmentation(NoiError):
    pass


# -- cut / path analysis ----------------------------------------------------

class EmptyMemorySet(NoiError):
    pass


class NoComputeNodes(NoiError):
    pass


class LOutOfRange(NoiError):
    pass


class Unreachable(NoiError):
    pass


# -- traffic ----------------------------------------------------------------

class UnplacedExpert(NoiError):
    pass


class EmptyDuration(NoiError):
    pass


class EmptyTrace(NoiError):
    pass


# -- queueing / simulation --------------------------------------------------

class UnstableQueue(NoiError):
    pass


class UnknownNode(NoiError):
    pass


class NonMonotoneTrace(NoiError):
    pass


class EmptySamples(NoiError):
    pass


# -- synthesis ----------------------------------------------------------------

class MaskedActionTaken(NoiError):
    pass
