"""
Record → EncodedExample pipeline: delexicalize, augment, linearize, tokenize, encode.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config import PipelineConfig
from ..exceptions import DatasetError
from .rdf import EntityMap, KnowledgeBase, Record, delexicalize, detokenize, linearize, permute_augment, relexicalize, tokenize
from .vocab import EncodedExample, Vocab, build_vocab, encode_pad

logger = logging.getLogger(__name__)


class Pipeline:
    """Turns dataset records into id sequences and generated ids back into text."""

    def __init__(self, config: PipelineConfig, max_src_len: int = 64, max_tgt_len: int = 100,
                 vocabs: Optional[Tuple[Vocab, Vocab]] = None):
        self.config = config.validate()
        self.max_src_len = max_src_len
        self.max_tgt_len = max_tgt_len
        self.vocabs = vocabs

    def delex(self, record: Record) -> Tuple[KnowledgeBase, str, EntityMap]:
        if not self.config.delexicalize:
            return record.kb, record.text, EntityMap()
        return delexicalize(record.kb, record.text, record.entities)

    @staticmethod
    def source_tokens(kb: KnowledgeBase) -> List[str]:
        return linearize(kb).split(" ")

    def target_tokens(self, sentence: str) -> List[str]:
        return tokenize(sentence, per_character=self.config.per_character)

    def fit_vocab(self, records: Sequence[Record]) -> Tuple[Vocab, Vocab]:
        corpus = []
        for record in records:
            kb, sentence, _ = self.delex(record)
            corpus.append((self.source_tokens(kb), self.target_tokens(sentence)))
        self.vocabs = build_vocab(corpus, self.config.min_freq)
        return self.vocabs

    def _require_vocabs(self) -> Tuple[Vocab, Vocab]:
        if self.vocabs is None:
            raise DatasetError("vocabularies have not been built")
        return self.vocabs

    def encode_source(self, kb: KnowledgeBase) -> List[int]:
        """Ids of an already delexicalized knowledge base."""
        ids = self._require_vocabs()[0].encode(self.source_tokens(kb))
        if len(ids) > self.max_src_len:
            logger.warning("Truncating source of %d tokens to %d", len(ids), self.max_src_len)
            ids = ids[: self.max_src_len]
        return ids

    def encode_record(self, record: Record, kb: Optional[KnowledgeBase] = None) -> EncodedExample:
        dkb, sentence, emap = self.delex(record)
        return encode_pad(
            self.source_tokens(dkb if kb is None else kb), self.target_tokens(sentence), self._require_vocabs(),
            self.max_src_len, self.max_tgt_len, emap, record.text,
        )

    def prepare(self, records: Sequence[Record], augment: bool = False,
                rng: Optional[np.random.Generator] = None) -> List[EncodedExample]:
        """Encode ``records``; with ``augment`` every record yields up to ``max_perms`` orderings."""
        out: List[EncodedExample] = []
        for record in records:
            dkb, _, _ = self.delex(record)
            orderings = permute_augment(dkb, self.config.max_perms, rng) if augment else [dkb]
            for kb in orderings:
                out.append(self.encode_record(record, kb))
        logger.info("Encoded %d examples from %d records", len(out), len(records))
        return out

    def decode_target(self, ids: Sequence[int], entity_map: EntityMap) -> str:
        """Generated ids → relexicalized sentence."""
        tokens = self._require_vocabs()[1].decode(ids)
        text = "".join(tokens) if self.config.per_character else detokenize(tokens)
        sentence, _ = relexicalize(text, entity_map)
        return sentence
