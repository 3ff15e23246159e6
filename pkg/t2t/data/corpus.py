"""
Synthetic (knowledge base, sentence) corpora built from sentence templates.

Each predicate has a subject type, an object type and one or more clause
templates; entities come from typed pools whose surfaces never overlap, so
every generated sentence survives delexicalization and relexicalization.
"""
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import section_from_dict
from ..core.rng import stream_seed
from ..exceptions import ConfigError
from .rdf import KnowledgeBase, Record, Triple, write_dataset

logger = logging.getLogger(__name__)


@dataclass
class PredicateRule:
    name: str
    subject_type: str
    object_type: str
    templates: List[str]

    def clause(self, subject: str, obj: str, rng: np.random.Generator) -> str:
        template = self.templates[int(rng.integers(len(self.templates)))]
        return template.format(s=subject, o=obj)


DEFAULT_ENTITIES: Dict[str, List[str]] = {
    "PERSON": [
        "Alan Bean", "Ada Lovelace", "Bill Gates", "Grace Hopper", "Marie Curie", "Nikola Tesla",
        "Rosalind Franklin", "Alan Turing", "Edsger Dijkstra", "Barbara Liskov", "Claude Shannon",
        "Hedy Lamarr", "John McCarthy", "Katherine Johnson", "Linus Torvalds", "Margaret Hamilton",
        "Niklaus Wirth", "Frances Allen", "Dennis Ritchie", "Ken Thompson", "Donald Knuth",
        "Sophie Wilson", "Tim Berners Lee", "Radia Perlman",
    ],
    "CITY": [
        "Wheeler", "Lyon", "Porto", "Kyoto", "Bergen", "Tampere", "Graz", "Utrecht", "Leipzig",
        "Valencia", "Bologna", "Gdansk", "Cork", "Aarhus", "Ghent", "Brno", "Lausanne", "Tartu",
    ],
    "COUNTRY": [
        "France", "Portugal", "Japan", "Norway", "Finland", "Austria", "Netherlands", "Germany",
        "Spain", "Italy", "Poland", "Ireland", "Denmark", "Belgium",
    ],
    "CORPORATION": [
        "Microsoft", "Acme Robotics", "Initech", "Globex", "Umbrella Labs", "Hooli", "Vandelay Industries",
        "Cyberdyne", "Soylent", "Wonka Foods", "Stark Works", "Tyrell Systems",
    ],
    "DATE": [
        "1931", "1947", "1952", "1968", "1975", "1983", "1990", "1996", "2001", "2008", "2013", "2019",
    ],
}

DEFAULT_PREDICATES: List[PredicateRule] = [
    PredicateRule("birthPlace", "PERSON", "CITY", ["{s} was born in {o}", "{s} is a native of {o}"]),
    PredicateRule("birthDate", "PERSON", "DATE", ["{s} was born in the year {o}"]),
    PredicateRule("founder", "PERSON", "CORPORATION", ["{s} founded {o}", "{s} is the founder of {o}"]),
    PredicateRule("employer", "PERSON", "CORPORATION", ["{s} works for {o}", "{s} is employed by {o}"]),
    PredicateRule("nationality", "PERSON", "COUNTRY", ["{s} is a citizen of {o}"]),
    PredicateRule("spouse", "PERSON", "PERSON", ["{s} is married to {o}"]),
    PredicateRule("startDate", "CORPORATION", "DATE", ["{s} was established in {o}", "{s} started in {o}"]),
    PredicateRule("headquarters", "CORPORATION", "CITY", ["{s} is based in {o}", "{s} has its head office in {o}"]),
    PredicateRule("country", "CITY", "COUNTRY", ["{s} is located in {o}", "{s} lies in {o}"]),
    PredicateRule("leader", "COUNTRY", "PERSON", ["{s} is led by {o}"]),
]


@dataclass
class MiniCorpusSpec:
    """Template grammar, entity pools and split sizes of a synthetic corpus."""
    predicates: List[PredicateRule] = field(default_factory=lambda: list(DEFAULT_PREDICATES))
    entities: Dict[str, List[str]] = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_ENTITIES.items()})
    train: int = 500
    valid: int = 0
    test: int = 100
    min_triples: int = 1
    max_triples: int = 3
    min_predicate_count: int = 20

    def validate(self, prefix: str = "corpus") -> "MiniCorpusSpec":
        for name in ("train", "min_triples", "max_triples"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{prefix}.{name}", f"must be an integer >= 1, got {value!r}")
        for name in ("valid", "test", "min_predicate_count"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ConfigError(f"{prefix}.{name}", f"must be an integer >= 0, got {value!r}")
        if self.min_triples > self.max_triples:
            raise ConfigError(f"{prefix}.min_triples", "must not exceed max_triples")
        if not self.predicates:
            raise ConfigError(f"{prefix}.predicates", "at least one predicate rule is required")
        if len(self.predicates) < self.max_triples:
            raise ConfigError(f"{prefix}.max_triples", "cannot exceed the number of predicates")
        names = [p.name for p in self.predicates]
        if len(set(names)) != len(names):
            raise ConfigError(f"{prefix}.predicates", "predicate names must be unique")
        for rule in self.predicates:
            for kind in (rule.subject_type, rule.object_type):
                if kind not in self.entities or not self.entities[kind]:
                    raise ConfigError(f"{prefix}.entities.{kind}", f"no pool for type used by {rule.name}")
            if rule.subject_type == rule.object_type and len(self.entities[rule.subject_type]) < 2:
                raise ConfigError(f"{prefix}.entities.{rule.subject_type}", f"{rule.name} needs two distinct entities")
            if not rule.templates or any("{s}" not in t or "{o}" not in t for t in rule.templates):
                raise ConfigError(f"{prefix}.predicates.{rule.name}", "templates must mention {s} and {o}")
        owner: Dict[str, str] = {}
        for kind, pool in self.entities.items():
            for surface in pool:
                if surface in owner:
                    raise ConfigError(f"{prefix}.entities.{kind}", f"surface {surface!r} also belongs to {owner[surface]}")
                owner[surface] = kind
        for surface in owner:
            for other in owner:
                if surface != other and f" {surface} " in f" {other} ":
                    raise ConfigError(f"{prefix}.entities", f"surface {surface!r} is part of {other!r}")
        if self.train * self.min_triples < self.min_predicate_count * len(self.predicates):
            raise ConfigError(f"{prefix}.train", "too few records for every predicate to reach min_predicate_count")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MiniCorpusSpec":
        data = dict(data)
        if "predicates" in data:
            data["predicates"] = [section_from_dict(PredicateRule, p, "corpus.predicates") for p in data["predicates"]]
        return section_from_dict(cls, data, "corpus").validate()


def separable_spec(train: int = 500, test: int = 100) -> MiniCorpusSpec:
    """Five predicates, one triple per record, one template per predicate."""
    rules = [
        PredicateRule("birthPlace", "PERSON", "CITY", ["{s} was born in {o}"]),
        PredicateRule("employer", "PERSON", "CORPORATION", ["{s} works for {o}"]),
        PredicateRule("spouse", "PERSON", "PERSON", ["{s} is married to {o}"]),
        PredicateRule("startDate", "CORPORATION", "DATE", ["{s} was established in {o}"]),
        PredicateRule("country", "CITY", "COUNTRY", ["{s} is located in {o}"]),
    ]
    return MiniCorpusSpec(predicates=rules, train=train, test=test, min_triples=1, max_triples=1)


def _sentence(clauses: Sequence[str]) -> str:
    body = clauses[0] if len(clauses) == 1 else ", ".join(clauses[:-1]) + " and " + clauses[-1]
    return body[0].upper() + body[1:] + "."


class _Generator:
    """Draws records; predicates are dealt round-robin over a shuffled order."""

    def __init__(self, spec: MiniCorpusSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.order = [int(i) for i in rng.permutation(len(spec.predicates))]
        self.cursor = 0

    def _entity(self, kind: str, exclude: Sequence[str] = ()) -> str:
        pool = [s for s in self.spec.entities[kind] if s not in exclude]
        return pool[int(self.rng.integers(len(pool)))]

    def _next_rules(self, count: int) -> List[PredicateRule]:
        rules = []
        while len(rules) < count:
            rule = self.spec.predicates[self.order[self.cursor % len(self.order)]]
            self.cursor += 1
            if rule not in rules:
                rules.append(rule)
        return rules

    def record(self) -> Record:
        count = int(self.rng.integers(self.spec.min_triples, self.spec.max_triples + 1))
        triples: List[Triple] = []
        clauses: List[str] = []
        entities: Dict[str, str] = {}
        topic: Optional[Tuple[str, str]] = None
        for rule in self._next_rules(count):
            if topic is not None and topic[1] == rule.subject_type:
                subject = topic[0]
            else:
                subject = self._entity(rule.subject_type)
            obj = self._entity(rule.object_type, exclude=(subject,))
            if topic is None:
                topic = (subject, rule.subject_type)
            triples.append(Triple(subject, rule.name, obj))
            clauses.append(rule.clause(subject, obj, self.rng))
            entities[subject] = rule.subject_type
            entities[obj] = rule.object_type
        return Record(KnowledgeBase(tuple(triples)), _sentence(clauses), entities)


def make_mini_corpus(spec: Optional[MiniCorpusSpec] = None, seed: int = 0) -> Dict[str, List[Record]]:
    """Deterministic ``train``/``valid``/``test`` splits for ``seed``."""
    spec = (spec or MiniCorpusSpec()).validate()
    gen = _Generator(spec, np.random.default_rng(stream_seed(seed, "corpus")))
    splits = {name: [gen.record() for _ in range(getattr(spec, name))] for name in ("train", "valid", "test")}
    counts = predicate_counts(splits["train"])
    short = [p.name for p in spec.predicates if counts.get(p.name, 0) < spec.min_predicate_count]
    if short:
        # round-robin dealing makes this unreachable once validate() has passed
        raise ConfigError("corpus.train", f"predicates below min_predicate_count: {short}")
    logger.info("Generated %s records", ", ".join(f"{len(v)} {k}" for k, v in splits.items()))
    return splits


def predicate_counts(records: Sequence[Record]) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for record in records:
        for predicate in record.kb.predicates():
            counts[predicate] = counts.get(predicate, 0) + 1
    return counts


def write_mini_corpus(out_dir: Union[str, Path], splits: Dict[str, List[Record]]) -> List[Path]:
    """One ``<split>.jsonl`` per non-empty split."""
    out_dir = Path(out_dir)
    written = []
    for name, records in splits.items():
        if not records:
            continue
        path = out_dir / f"{name}.jsonl"
        write_dataset(path, records)
        written.append(path)
    return written
