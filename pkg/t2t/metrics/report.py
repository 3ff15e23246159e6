"""
Corpus evaluation: decode a split, relexicalize, score, write report files.
"""
import csv
import io
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import EvalConfig
from ..core.storage import atomic_write_text, write_json
from ..data.batch import collate
from ..data.pipeline import Pipeline
from ..data.rdf import Record, Triple
from ..data.vocab import EncodedExample
from ..exceptions import MetricError
from ..model.decoding import ConditionalLM, greedy_decode, sample_sequence
from .bleu import bleu_n
from .likelihood import EvalLM, corpus_perplexity, forward_perplexity, predicate_accuracy
from .meteor import corpus_meteor
from .ter import corpus_ter

logger = logging.getLogger(__name__)


@dataclass
class MetricReport:
    bleu3: float
    bleu4: float
    ter: float
    meteor: float
    pairs: int
    decode: str = "greedy"
    seed: Optional[int] = None
    temperature: Optional[float] = None
    fppl: Optional[float] = None
    judger_ppl: Optional[float] = None
    predicate_accuracy: Optional[float] = None
    predicate_pairs: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def rows(self) -> List[Tuple[str, Any]]:
        return [(k, v) for k, v in self.to_dict().items() if v is not None]

    def write(self, out_dir: Union[str, Path]) -> None:
        out_dir = Path(out_dir)
        write_json(out_dir / "report.json", self.to_dict(), pretty=True)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "value"])
        writer.writerows(self.rows())
        atomic_write_text(out_dir / "report.csv", buf.getvalue())


def decode_split(generator: ConditionalLM, examples: Sequence[EncodedExample], decode: str = "greedy",
                 temperature: float = 1.0, seed: Optional[int] = 0, max_len: Optional[int] = None,
                 batch_size: int = 64) -> List[List[int]]:
    """Generated id sequences aligned with ``examples``."""
    limit = getattr(generator, "max_len", 100) if max_len is None else max_len
    rng = np.random.default_rng(seed)
    out: List[List[int]] = []
    for start in range(0, len(examples), batch_size):
        batch = collate([e.src for e in examples[start:start + batch_size]])
        if decode == "greedy":
            out.extend(greedy_decode(generator, batch.src, batch.src_mask, limit))
        elif decode == "sample":
            out.extend(sample_sequence(generator, batch.src, batch.src_mask, temperature, limit, rng))
        else:
            raise MetricError(f"unknown decode mode '{decode}'")
    return out


def score_outputs(candidates: Sequence[Sequence[str]], references: Sequence[Sequence[str]],
                  smoothing: bool = True) -> Dict[str, float]:
    """The text-overlap metrics of token lists."""
    return {
        "bleu3": bleu_n(candidates, references, 3, smoothing),
        "bleu4": bleu_n(candidates, references, 4, smoothing),
        "ter": corpus_ter(candidates, references),
        "meteor": corpus_meteor(candidates, references),
    }


def predicate_items(records: Sequence[Record], pipeline: Pipeline) -> List[Tuple[Triple, List[int]]]:
    """Delexicalized single-triple records paired with their encoded targets."""
    items = []
    for record in records:
        if len(record.kb) != 1:
            continue
        kb, _, _ = pipeline.delex(record)
        items.append((kb.triples[0], pipeline.encode_record(record).tgt))
    return items


def corpus_evaluate(generator: ConditionalLM, examples: Sequence[EncodedExample], pipeline: Pipeline,
                    config: Optional[EvalConfig] = None, judger: Optional[ConditionalLM] = None,
                    eval_lm: Optional[EvalLM] = None, records: Optional[Sequence[Record]] = None,
                    out_dir: Optional[Union[str, Path]] = None) -> MetricReport:
    """Run every metric on one split; ``judger``, ``eval_lm`` and ``records`` enable optional parts."""
    config = (config or EvalConfig()).validate()
    if not examples:
        raise MetricError("evaluation split is empty")
    seed = config.seed if config.seed is not None else 0
    generated = decode_split(generator, examples, config.decode, config.temperature, seed)
    outputs = [pipeline.decode_target(ids, e.entity_map) for ids, e in zip(generated, examples)]
    candidates = [pipeline.target_tokens(o) for o in outputs]
    references = [pipeline.target_tokens(e.reference) for e in examples]
    scores = score_outputs(candidates, references, config.bleu_smoothing)
    report = MetricReport(
        pairs=len(examples), decode=config.decode, seed=seed,
        temperature=config.temperature if config.decode == "sample" else None, **scores,
    )
    sources = [e.src for e in examples]
    if eval_lm is not None:
        report.fppl = forward_perplexity(eval_lm, generator, sources, config.samples_per_context, seed,
                                         config.temperature)
    if judger is not None:
        report.judger_ppl = corpus_perplexity(judger, sources, generated)
    if records is not None:
        items = predicate_items(records, pipeline)
        predicates = sorted({t.predicate for t, _ in items})
        if len(predicates) >= 2:
            report.predicate_accuracy = predicate_accuracy(generator, items, predicates, pipeline.encode_source)
            report.predicate_pairs = len(items)
        else:
            logger.warning("Skipping predicate accuracy: fewer than two predicates among single-triple records")
    logger.info("BLEU-4 %.2f, TER %.3f, METEOR %.3f over %d pairs",
                report.bleu4, report.ter, report.meteor, report.pairs)
    if out_dir is not None:
        report.write(out_dir)
        atomic_write_text(Path(out_dir) / "outputs.txt", "".join(o + "\n" for o in outputs))
    return report
