"""
Best-effort WebNLG XML to JSON-lines conversion.
"""
import logging
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union
from xml.parsers.expat import ExpatError

import xmltodict

from ..exceptions import DatasetError
from .rdf import MAX_TRIPLES, KnowledgeBase, Record

logger = logging.getLogger(__name__)


def _as_list(obj: Any, key: str) -> List[Any]:
    """xmltodict yields a dict for one child and a list for several."""
    if obj is None:
        return []
    if isinstance(obj, list):
        out = []
        for o in obj:
            out.extend(_as_list(o, key))
        return out
    value = obj.get(key) if isinstance(obj, dict) else None
    if value is None:
        return []
    return value if isinstance(value, list) else [value]


def _text(node: Any) -> str:
    if isinstance(node, dict):
        return str(node.get("#text", "") or "")
    return str(node or "")


def _surface(term: str) -> str:
    return " ".join(term.strip().strip('"').replace("_", " ").split())


def _entity_type(label: str) -> str:
    head = label.strip().split("-")[0]
    return re.sub(r"[^A-Z0-9]", "", head.upper()) or "ENTITY"


def records_from_entry(entry: Dict[str, Any]) -> List[Record]:
    triples = []
    for raw in _as_list(entry.get("modifiedtripleset"), "mtriple"):
        parts = [p.strip() for p in _text(raw).split("|")]
        if len(parts) != 3:
            continue
        triple = (_surface(parts[0]), parts[1], _surface(parts[2]))
        if triple not in triples:
            triples.append(triple)
    if not triples or len(triples) > MAX_TRIPLES:
        return []
    entities: Dict[str, str] = {}
    for raw in _as_list(entry.get("entitymap"), "entity"):
        parts = [p.strip() for p in _text(raw).split("|")]
        if len(parts) == 2:
            entities[_surface(parts[1])] = _entity_type(parts[0])
    kb = KnowledgeBase.of(triples)
    records = []
    for lex in entry.get("lex") if isinstance(entry.get("lex"), list) else [entry.get("lex")]:
        text = _text(lex.get("text") if isinstance(lex, dict) and "text" in lex else lex)
        text = " ".join(text.split())
        if text:
            records.append(Record(kb, text, dict(entities)))
    return records


def read_webnlg(paths: Iterable[Union[str, Path]]) -> List[Record]:
    """Parse WebNLG benchmark XML files; entries that do not fit are skipped."""
    records: List[Record] = []
    skipped = 0
    for path in paths:
        path = Path(path)
        files = sorted(path.rglob("*.xml")) if path.is_dir() else [path]
        for file in files:
            try:
                with open(file, "r", encoding="utf-8") as f:
                    structure = xmltodict.parse(f.read())
            except (OSError, ExpatError) as e:
                raise DatasetError(f"cannot parse {file}: {e}")
            entries = _as_list((structure.get("benchmark") or {}).get("entries"), "entry")
            for entry in entries:
                found = records_from_entry(entry)
                if not found:
                    skipped += 1
                records.extend(found)
    logger.info("Read %d WebNLG records (%d entries skipped)", len(records), skipped)
    return records
