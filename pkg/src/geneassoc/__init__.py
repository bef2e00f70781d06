"""Gene-trait association: ingest raw cohorts, preprocess, select, regress, evaluate."""

from .errors import GeneAssocError

__version__ = "0.1.0"

__all__ = ["GeneAssocError", "__version__"]
