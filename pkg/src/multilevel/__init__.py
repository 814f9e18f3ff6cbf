"""Multi-level modelling engine.

An entity can simultaneously type other entities and be an instance of
others. Declarations carry potencies that count down through instantiation
chains; facts persist individually in a relational store and are served in
entity form over HTTP.
"""

from .kernel import ModelGraph
from .validation import validate, Violation
from .facets import facet_document, dumps_document

__version__ = "0.1.0"

__all__ = ["ModelGraph", "validate", "Violation", "facet_document",
           "dumps_document", "__version__"]
