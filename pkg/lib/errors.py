"""
Exception hierarchy shared by the library, the jobs and the command line.

Every error carries the process exit code the command line maps it to:
2 for unreadable input, 3 for violated domain preconditions and 4 for
numerical failures at runtime.
"""

__all__ = [
    "DressingError",
    "FormatError",
    "PreconditionError",
    "LengthMismatch",
    "DegenerateTrajectory",
    "InconsistentStart",
    "StraightArm",
    "ArcTooLarge",
    "OutOfRange",
    "PathDoesNotCrossElbow",
    "InsufficientData",
    "NumericalError",
    "SingularPosture",
    "SingularJacobian",
    "UnreachableHand",
    "DegeneratePosture",
    "AmbiguousProjection",
    "DegenerateComponent",
    "NumericalUnderflow",
]


class DressingError(Exception):
    exit_code = 1


class FormatError(DressingError):
    exit_code = 2


class PreconditionError(DressingError):
    exit_code = 3


class LengthMismatch(PreconditionError):
    pass


class DegenerateTrajectory(PreconditionError):
    pass


class InconsistentStart(PreconditionError):
    pass


class StraightArm(PreconditionError):
    pass


class ArcTooLarge(PreconditionError):
    pass


class OutOfRange(PreconditionError):
    pass


class PathDoesNotCrossElbow(PreconditionError):
    pass


class InsufficientData(PreconditionError):
    pass


class NumericalError(DressingError):
    exit_code = 4


class SingularPosture(NumericalError):
    pass


class SingularJacobian(NumericalError):
    pass


class UnreachableHand(NumericalError):
    def __init__(self, message, row=None):
        """
        :param str message:
        :param int|None row: index of the offending sample in the input sequence
        """
        if row is not None:
            message = "row %d: %s" % (row, message)
        super().__init__(message)
        self.row = row


class DegeneratePosture(NumericalError):
    pass


class AmbiguousProjection(NumericalError):
    pass


class DegenerateComponent(NumericalError):
    pass


class NumericalUnderflow(NumericalError):
    pass
