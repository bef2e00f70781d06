"""Exception hierarchy shared by every stage of the pipeline."""


class GeneAssocError(Exception):
    """Base class for all pipeline errors.

    ``code`` is the machine-readable name used in structured error JSON.
    """

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


class MalformedFile(GeneAssocError):
    pass


class InvalidRow(GeneAssocError):
    pass


class NoUsableColumn(GeneAssocError):
    pass


class AlignmentError(GeneAssocError):
    pass


class NoMappedGenes(GeneAssocError):
    pass


class NoCommonSamples(GeneAssocError):
    pass


class EmptyAfterFiltering(GeneAssocError):
    pass


class NoUsableCohort(GeneAssocError):
    pass


class TooFewSamples(GeneAssocError):
    pass


class SingularModel(GeneAssocError):
    pass


class NumericalError(GeneAssocError):
    pass


class NoCommonRegressors(GeneAssocError):
    pass


class InvalidInput(GeneAssocError, ValueError):
    pass


class DegenerateLabels(GeneAssocError, ValueError):
    pass


class InvalidConfig(GeneAssocError, ValueError):
    pass
