"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 2), numerical
solver trouble from :class:`SolverError` (exit code 3).
"""


class IsogapError(Exception):
    """Base class for all package errors."""


class InputError(IsogapError, ValueError):
    pass


class SolverError(IsogapError, RuntimeError):
    pass


# kernel construction
class NegativeEntry(InputError):
    pass


class RowSumViolation(InputError):
    pass


class TooSmall(InputError):
    pass


class Reducible(InputError):
    pass


class ZeroMassState(InputError):
    pass


class NoDecay(IsogapError):
    """Total variation does not decay: periodic or reducible chain."""


# cuts and profiles
class DegenerateCut(InputError):
    pass


class TooLargeForExhaustive(InputError):
    pass


class EmptyCandidateSet(InputError):
    pass


class NotReversible(InputError):
    pass


class InexactProfile(InputError):
    pass


class HorizonTooShort(InputError):
    pass


class PremiseUnverifiable(InputError):
    pass


class EigenFailure(SolverError):
    pass


# models
class SubcriticalP(InputError):
    pass


class DimensionTooLarge(InputError):
    pass


class BadWeights(InputError):
    pass


class NotLumpable(InputError):
    pass
