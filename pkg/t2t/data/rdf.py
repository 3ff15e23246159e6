"""
RDF records: parsing, delexicalization, permutation augmentation,
linearization and relexicalization.
"""
import itertools
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import DatasetError

logger = logging.getLogger(__name__)

MAX_TRIPLES = 7
TRIPLE_SEP = ";"
ELEMENT_SEP = ","

_WORD_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

# Scripts written without spaces: a character of these never glues to its
# neighbours into one word.
_UNSPACED = "\u3040-\u30ff\u3400-\u4dbf\u4e00-\u9fff\uac00-\ud7af\uf900-\ufaff\uff00-\uffef"
_UNSPACED_CHAR_RE = re.compile(f"[{_UNSPACED}]")
_NO_WORD_BEFORE = f"(?<![^\\W{_UNSPACED}])"
_NO_WORD_AFTER = f"(?![^\\W{_UNSPACED}])"

_PLACEHOLDER_TOKEN_RE = re.compile(f"{_NO_WORD_BEFORE}[A-Z][A-Z0-9]*(?:_\\d+)?{_NO_WORD_AFTER}")
_CHARACTER_TOKEN_RE = re.compile(f"{_PLACEHOLDER_TOKEN_RE.pattern}|\\S")


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        for name in ("subject", "predicate", "object"):
            if not isinstance(getattr(self, name), str) or not getattr(self, name).strip():
                raise DatasetError(f"triple {name} must be a non-empty string")

    def as_list(self) -> List[str]:
        return [self.subject, self.predicate, self.object]


@dataclass(frozen=True)
class KnowledgeBase:
    triples: Tuple[Triple, ...]

    def __post_init__(self):
        if not 1 <= len(self.triples) <= MAX_TRIPLES:
            raise DatasetError(f"a knowledge base holds 1-{MAX_TRIPLES} triples, got {len(self.triples)}")
        if len(set(self.triples)) != len(self.triples):
            raise DatasetError("duplicate triple in knowledge base")

    @classmethod
    def of(cls, triples: Iterable[Sequence[str]]) -> "KnowledgeBase":
        return cls(tuple(t if isinstance(t, Triple) else Triple(*t) for t in triples))

    def __len__(self) -> int:
        return len(self.triples)

    def predicates(self) -> List[str]:
        return [t.predicate for t in self.triples]


@dataclass
class EntityMap:
    """Reversible surface-string <-> placeholder mapping of one example."""
    to_placeholder: Dict[str, str] = field(default_factory=dict)

    @property
    def to_surface(self) -> Dict[str, str]:
        return {p: s for s, p in self.to_placeholder.items() if p != s}

    def to_dict(self) -> Dict[str, str]:
        return dict(self.to_placeholder)

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "EntityMap":
        return cls(dict(data))


@dataclass
class Record:
    """One (knowledge base, sentence, entity types) dataset line."""
    kb: KnowledgeBase
    text: str
    entities: Dict[str, str] = field(default_factory=dict)

    def to_json(self) -> Dict:
        doc = {"triples": [t.as_list() for t in self.kb.triples], "text": self.text}
        if self.entities:
            doc["entities"] = dict(self.entities)
        return doc


def parse_record(obj: Dict, line: Optional[int] = None) -> Record:
    if not isinstance(obj, dict):
        raise DatasetError("expected a JSON object", line)
    if "triples" not in obj:
        raise DatasetError("missing field 'triples'", line)
    if "text" not in obj:
        raise DatasetError("missing field 'text'", line)
    triples = obj["triples"]
    if not isinstance(triples, list) or not triples:
        raise DatasetError("'triples' must be a non-empty array", line)
    if not isinstance(obj["text"], str) or not obj["text"].strip():
        raise DatasetError("'text' must be a non-empty string", line)
    entities = obj.get("entities") or {}
    if not isinstance(entities, dict):
        raise DatasetError("'entities' must be an object", line)
    try:
        if any(not isinstance(t, list) or len(t) != 3 for t in triples):
            raise DatasetError("each triple must be [subject, predicate, object]")
        kb = KnowledgeBase.of(triples)
    except DatasetError as e:
        raise DatasetError(str(e), line)
    return Record(kb, obj["text"], {str(k): str(v) for k, v in entities.items()})


def parse_dataset(path: Union[str, Path]) -> List[Record]:
    """Read a JSON-lines dataset; errors name the 1-based line number."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset {path} not found")
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as e:
                raise DatasetError(f"invalid JSON ({e.msg})", number)
            records.append(parse_record(obj, number))
    logger.info("Parsed %d records from %s", len(records), path)
    return records


def write_dataset(path: Union[str, Path], records: Iterable[Record]) -> None:
    from ..core.storage import atomic_write_text
    lines = [json.dumps(r.to_json(), ensure_ascii=False) for r in records]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


# -- tokenization -----------------------------------------------------------

def tokenize(text: str, per_character: bool = False) -> List[str]:
    """Whitespace + punctuation split, or one token per non-space character.

    Per character, placeholders such as ``PERSON`` or ``CITY_2`` stay whole.
    """
    if per_character:
        return _CHARACTER_TOKEN_RE.findall(text)
    return _WORD_RE.findall(text)


def detokenize(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


# -- delexicalization -------------------------------------------------------

def _surface_pattern(surfaces: Iterable[str]) -> Optional[re.Pattern]:
    ordered = sorted(set(surfaces), key=lambda s: (-len(s), s))
    if not ordered:
        return None
    alternatives = []
    for s in ordered:
        before = "" if _UNSPACED_CHAR_RE.match(s[0]) else _NO_WORD_BEFORE
        after = "" if _UNSPACED_CHAR_RE.match(s[-1]) else _NO_WORD_AFTER
        alternatives.append(f"{before}{re.escape(s)}{after}")
    return re.compile("|".join(alternatives))


def build_entity_map(kb: KnowledgeBase, entities: Dict[str, str]) -> EntityMap:
    """Assign placeholders; types shared by several surfaces get _1, _2 suffixes."""
    surfaces: List[str] = []
    for triple in kb.triples:
        for s in (triple.subject, triple.object):
            if s not in surfaces:
                surfaces.append(s)
    for s in entities:
        if s not in surfaces:
            surfaces.append(s)
    by_type: Dict[str, List[str]] = {}
    for s in surfaces:
        if s in entities:
            by_type.setdefault(entities[s], []).append(s)
    mapping: Dict[str, str] = {}
    for s in surfaces:
        if s not in entities:
            mapping[s] = s
            continue
        group = by_type[entities[s]]
        mapping[s] = entities[s] if len(group) == 1 else f"{entities[s]}_{group.index(s) + 1}"
    return EntityMap(mapping)


def replace_surfaces(text: str, mapping: Dict[str, str]) -> str:
    """Replace every mapped surface, longest match first, in one pass."""
    active = {s: p for s, p in mapping.items() if s != p}
    pattern = _surface_pattern(active)
    if pattern is None:
        return text
    return pattern.sub(lambda m: active[m.group(0)], text)


def delexicalize(kb: KnowledgeBase, sentence: str,
                 entities: Optional[Dict[str, str]] = None) -> Tuple[KnowledgeBase, str, EntityMap]:
    """Substitute typed entity surfaces by placeholders in triples and sentence.

    Without entity types the mapping is the identity on every subject and
    object, so the output equals the input.
    """
    emap = build_entity_map(kb, entities or {})
    mapping = emap.to_placeholder
    triples = [
        Triple(replace_surfaces(t.subject, mapping), t.predicate, replace_surfaces(t.object, mapping))
        for t in kb.triples
    ]
    return KnowledgeBase(tuple(triples)), replace_surfaces(sentence, mapping), emap


def relexicalize(sentence: str, emap: EntityMap) -> Tuple[str, int]:
    """Restore surfaces; returns the sentence and the number of unknown placeholders.

    A placeholder is unknown when the map has no surface for it. Untyped
    surfaces kept verbatim are not placeholders.
    """
    reverse = emap.to_surface
    pattern = _surface_pattern(reverse)
    restored = sentence if pattern is None else pattern.sub(lambda m: reverse[m.group(0)], sentence)
    verbatim = {s for s, p in emap.to_placeholder.items() if s == p}
    unknown = sum(
        1 for tok in _PLACEHOLDER_TOKEN_RE.findall(sentence)
        if len(tok) > 1 and tok not in reverse and tok not in verbatim
    )
    if unknown:
        logger.debug("%d unknown placeholder(s) left in %r", unknown, restored)
    return restored, unknown


# -- augmentation and linearization ------------------------------------------

def permute_augment(kb: KnowledgeBase, max_perms: int = 3,
                    rng: Optional[np.random.Generator] = None) -> List[KnowledgeBase]:
    """The original order first, then distinct reorderings drawn without replacement."""
    if max_perms < 1:
        raise ValueError("max_perms must be >= 1")
    out = [kb]
    if len(kb) == 1 or max_perms == 1:
        return out
    rng = rng if rng is not None else np.random.default_rng(0)
    others = [p for p in itertools.permutations(range(len(kb))) if p != tuple(range(len(kb)))]
    for idx in rng.permutation(len(others))[: max_perms - 1]:
        out.append(KnowledgeBase(tuple(kb.triples[i] for i in others[idx])))
    return out


def linearize(kb: KnowledgeBase) -> str:
    """``s , p , o ; s , p , o`` with every element split on whitespace."""
    parts = []
    for t in kb.triples:
        parts.append(f" {ELEMENT_SEP} ".join(" ".join(e.split()) for e in t.as_list()))
    return f" {TRIPLE_SEP} ".join(parts)


def parse_linearized(text: str) -> List[Tuple[str, str, str]]:
    """Inverse of ``linearize`` for elements that contain no separators."""
    triples = []
    for chunk in text.split(f" {TRIPLE_SEP} "):
        elements = [e.strip() for e in chunk.split(f" {ELEMENT_SEP} ")]
        if len(elements) != 3:
            raise DatasetError(f"cannot parse triple from {chunk!r}")
        triples.append(tuple(elements))
    return triples
