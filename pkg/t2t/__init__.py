"""
T2T - sentence generation from RDF triples
Encoder-decoder generators trained by maximum likelihood or by inverse KL
against a learned judger, with the metrics and the divergence lab to compare them.
"""
__version__ = "0.1.0"
__author__ = "T2T"
__description__ = "Triple-to-text generation with inverse-KL training against a learned judger"
from .config import RunConfig
from .exceptions import T2TError, ConfigError, DatasetError, VocabError
__all__ = [
    "RunConfig",
    "T2TError",
    "ConfigError",
    "DatasetError",
    "VocabError",
    "__version__"
]
