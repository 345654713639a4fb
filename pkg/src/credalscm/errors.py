"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`CredalSCMError`,
so callers (and the CLI) can map families of failures to exit codes.
"""


class CredalSCMError(Exception):
    """Base class for all package errors."""


# -- models ---------------------------------------------------------------

class ModelError(CredalSCMError, ValueError):
    """A causal model violates a structural requirement."""


class CyclicGraph(ModelError):
    pass


class ExogenousWithParents(ModelError):
    pass


class MultipleExogenousParents(ModelError):
    """An endogenous variable does not have exactly one exogenous parent."""


class NonSurjectiveEquation(ModelError):
    pass


class CardinalityOverflow(ModelError):
    pass


class ParseError(CredalSCMError, ValueError):
    pass


# -- data -----------------------------------------------------------------

class DataError(CredalSCMError, ValueError):
    pass


class EmptyDataset(DataError):
    pass


class NonPositiveCell(DataError):
    pass


# -- identification -------------------------------------------------------

class IdentificationError(CredalSCMError):
    pass


class NotMarkovian(IdentificationError):
    pass


class NotQuasiMarkovian(IdentificationError):
    pass


class InfeasibleIdentification(IdentificationError):
    pass


# -- geometry -------------------------------------------------------------

class GeometryError(CredalSCMError):
    pass


class Infeasible(GeometryError):
    pass


class Unbounded(GeometryError):
    pass


class VertexExplosion(GeometryError):
    pass


class DenominatorVanishes(GeometryError):
    pass


# -- networks and inference -----------------------------------------------

class NetworkError(CredalSCMError, ValueError):
    pass


class MismatchedIdentification(NetworkError):
    pass


class InterveneExogenous(NetworkError):
    pass


class LikelihoodOutOfRange(NetworkError):
    pass


class InferenceError(CredalSCMError):
    pass


class ZeroEvidenceProbability(InferenceError):
    pass


class ZeroEvidenceEverywhere(InferenceError):
    pass


class EmptyRecords(CredalSCMError, ValueError):
    pass
