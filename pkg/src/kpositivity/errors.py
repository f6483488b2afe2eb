"""Exception hierarchy.  Everything derives from :class:`KPositivityError`."""


class KPositivityError(Exception):
    pass


class DimensionMismatch(KPositivityError, ValueError):
    pass


class NonSquare(DimensionMismatch):
    pass


class NotHermitian(KPositivityError, ValueError):
    pass


class NumericalFailure(KPositivityError, ArithmeticError):
    pass


class KOutOfRange(KPositivityError, ValueError):
    pass


class NotAProjection(KPositivityError, ValueError):
    pass


class WrongRepresentation(KPositivityError, TypeError):
    pass


class EmptyPlusList(KPositivityError, ValueError):
    pass


class WrongCount(KPositivityError, ValueError):
    pass


class WrongSplit(KPositivityError, ValueError):
    pass


class BadNormalization(KPositivityError, ValueError):
    pass


class ZeroEntry(KPositivityError, ValueError):
    pass


class ZeroDiagonal(KPositivityError, ValueError):
    pass


class NegativeT(KPositivityError, ValueError):
    pass


class IdentityPermutation(KPositivityError, ValueError):
    pass


class NotDoublyStochasticScaled(KPositivityError, ValueError):
    pass


class BadWeights(KPositivityError, ValueError):
    pass


class NotInvolution(KPositivityError, ValueError):
    pass


class NotAPermutation(KPositivityError, ValueError):
    pass


class BadSpec(KPositivityError, ValueError):
    pass


class UnknownCriterion(KPositivityError, ValueError):
    pass


class UnknownSuite(KPositivityError, ValueError):
    pass
