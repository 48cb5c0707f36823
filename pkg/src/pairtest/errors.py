"""Exception hierarchy for pair-testing operations."""


class PairTestError(Exception):
    """Base class for every error raised by this package."""


class IndexOutOfRange(PairTestError, IndexError):
    pass


class DuplicateIndexInRound(PairTestError, ValueError):
    pass


class BinTooSmall(PairTestError, ValueError):
    pass


class ContradictionDetected(PairTestError):
    """Test outcomes (plus any prior knowledge) admit no status assignment."""


class NoConsistentAssignment(PairTestError):
    pass


class InstanceTooLarge(PairTestError, ValueError):
    pass


class EpsilonTooSmall(PairTestError, ValueError):
    pass


class EpsilonOutOfRange(PairTestError, ValueError):
    pass


class NotEnoughKnownSlackers(PairTestError):
    pass


class LayoutInfeasible(PairTestError):
    pass


class NoSlackersDetectable(PairTestError):
    """Raised when fewer than two slackers exist, so none can be told apart.

    The partial report is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DegenerateInputs(PairTestError, ValueError):
    pass


class DeltaTooLarge(PairTestError, ValueError):
    pass


class BracketViolation(PairTestError, ValueError):
    pass
