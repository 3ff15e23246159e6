"""
Token vocabularies and id-encoded examples.
"""
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ..core.storage import atomic_write_text, read_json
from ..exceptions import DatasetError, VocabError
from .batch import EOS, PAD, RESERVED, UNK, Batch, collate
from .rdf import EntityMap

logger = logging.getLogger(__name__)


class Vocab:
    """Bijection between kept tokens and ids; ids 0-3 are reserved."""

    def __init__(self, tokens: Sequence[str] = ()):
        self.itos: List[str] = list(RESERVED)
        self.stoi: Dict[str, int] = {tok: i for i, tok in enumerate(self.itos)}
        for tok in tokens:
            if tok in self.stoi:
                raise VocabError(f"duplicate token {tok!r}")
            self.stoi[tok] = len(self.itos)
            self.itos.append(tok)

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.stoi.get(tok, UNK) for tok in tokens]

    def decode(self, ids: Iterable[int], strip: bool = True) -> List[str]:
        out = []
        for i in ids:
            i = int(i)
            if not 0 <= i < len(self.itos):
                raise VocabError(f"id {i} out of range")
            if strip and i == EOS:
                break
            if strip and i == PAD:
                continue
            out.append(self.itos[i])
        return out

    def to_list(self) -> List[str]:
        return self.itos[len(RESERVED):]

    @classmethod
    def from_list(cls, tokens: Sequence[str]) -> "Vocab":
        return cls(tokens)


def count_tokens(sequences: Iterable[Sequence[str]]) -> Counter:
    counts: Counter = Counter()
    for seq in sequences:
        counts.update(seq)
    return counts


def vocab_from_counts(counts: Counter, min_freq: int = 1) -> Vocab:
    kept = [tok for tok, n in counts.items() if n >= min_freq and tok not in RESERVED]
    kept.sort(key=lambda tok: (-counts[tok], tok))
    return Vocab(kept)


def build_vocab(corpus: Sequence[Tuple[Sequence[str], Sequence[str]]], min_freq: int = 1) -> Tuple[Vocab, Vocab]:
    """Source and target vocabularies ordered by (-frequency, token)."""
    if not corpus:
        raise DatasetError("cannot build a vocabulary from an empty corpus")
    src = vocab_from_counts(count_tokens(s for s, _ in corpus), min_freq)
    tgt = vocab_from_counts(count_tokens(t for _, t in corpus), min_freq)
    logger.info("Vocabularies: %d source / %d target tokens", len(src), len(tgt))
    return src, tgt


@dataclass
class EncodedExample:
    """Source ids, target ids ending in EOS, and the entity map to undo delexicalization."""
    src: List[int]
    tgt: List[int]
    entity_map: EntityMap = field(default_factory=EntityMap)
    reference: str = ""

    def to_json(self) -> Dict:
        return {
            "src": self.src,
            "tgt": self.tgt,
            "entities": self.entity_map.to_dict(),
            "reference": self.reference,
        }

    @classmethod
    def from_json(cls, doc: Dict) -> "EncodedExample":
        return cls(list(doc["src"]), list(doc["tgt"]),
                   EntityMap.from_dict(doc.get("entities", {})), doc.get("reference", ""))


def encode_pad(src_tokens: Sequence[str], tgt_tokens: Sequence[str], vocabs: Tuple[Vocab, Vocab],
               max_src_len: int, max_tgt_len: int, entity_map: Optional[EntityMap] = None,
               reference: str = "") -> EncodedExample:
    """Map tokens to ids, append EOS, truncate over-length sequences with a warning.

    Padding to the batch maximum happens in ``collate``.
    """
    if not tgt_tokens:
        raise DatasetError("empty target sentence")
    if not src_tokens:
        raise DatasetError("empty source sequence")
    src_vocab, tgt_vocab = vocabs
    src = src_vocab.encode(src_tokens)
    tgt = tgt_vocab.encode(tgt_tokens)
    if len(src) > max_src_len:
        logger.warning("Truncating source of %d tokens to %d", len(src), max_src_len)
        src = src[:max_src_len]
    if len(tgt) + 1 > max_tgt_len:
        logger.warning("Truncating target of %d tokens to %d", len(tgt) + 1, max_tgt_len)
        tgt = tgt[: max_tgt_len - 1]
    return EncodedExample(src, tgt + [EOS], entity_map or EntityMap(), reference)


def to_batch(examples: Sequence[EncodedExample]) -> Batch:
    return collate([e.src for e in examples], [e.tgt for e in examples])


def save_vocabs(path: Union[str, Path], vocabs: Tuple[Vocab, Vocab]) -> None:
    doc = {"src": vocabs[0].to_list(), "tgt": vocabs[1].to_list()}
    atomic_write_text(path, json.dumps(doc, ensure_ascii=False) + "\n")


def load_vocabs(path: Union[str, Path]) -> Tuple[Vocab, Vocab]:
    doc = read_json(path)
    return Vocab.from_list(doc["src"]), Vocab.from_list(doc["tgt"])


def vocab_fingerprint(vocabs: Tuple[Vocab, Vocab]) -> str:
    import hashlib
    blob = json.dumps([vocabs[0].itos, vocabs[1].itos], ensure_ascii=False).encode("utf-8")
    return hashlib.sha1(blob).hexdigest()


def save_encoded(path: Union[str, Path], examples: Sequence[EncodedExample],
                 vocabs: Tuple[Vocab, Vocab]) -> None:
    """JSON-lines cache: a header line with the vocabulary fingerprint, then one example per line."""
    lines = [json.dumps({"vocab": vocab_fingerprint(vocabs), "count": len(examples)})]
    lines += [json.dumps(e.to_json(), ensure_ascii=False) for e in examples]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_encoded(path: Union[str, Path], vocabs: Optional[Tuple[Vocab, Vocab]] = None) -> List[EncodedExample]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"encoded cache {path} not found")
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f if line.strip()]
    if not lines:
        raise DatasetError(f"{path} is empty")
    header = json.loads(lines[0])
    if vocabs is not None and header.get("vocab") != vocab_fingerprint(vocabs):
        raise VocabError(f"{path} was encoded with a different vocabulary")
    return [EncodedExample.from_json(json.loads(line)) for line in lines[1:]]
