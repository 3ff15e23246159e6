"""
RDF records, vocabularies and batches.
"""
from .batch import Batch, collate
from .rdf import KnowledgeBase, Record, Triple, linearize, parse_dataset
from .vocab import EncodedExample, Vocab
__all__ = [
    "Batch",
    "collate",
    "KnowledgeBase",
    "Record",
    "Triple",
    "linearize",
    "parse_dataset",
    "EncodedExample",
    "Vocab",
]
