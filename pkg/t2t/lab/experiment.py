"""
Lab experiments: several objectives, several seeds, one planted target.
"""
import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..config import section_from_dict
from ..core.storage import atomic_write_text, read_json, write_json
from ..exceptions import CheckpointError, ConfigError
from .fit import OBJECTIVES, Capacity, fit_tabular, planted_target, summarize_fit
from .plot import plot_curves
from .tabular import CONTEXTS, MAX_SEQUENCES

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ("objective", "seed", "step", "forward_kl", "inverse_kl", "jsd", "objective_value")


@dataclass
class LabSpec:
    vocab: int = 4
    length: int = 3
    clusters: List[List[int]] = field(default_factory=lambda: [[0, 1], [2, 3]])
    target_seed: Optional[int] = None
    floor: float = 1e-3
    junk_threshold: float = 1e-4
    capacity: Dict[str, Any] = field(default_factory=lambda: {"context": "none"})
    objectives: List[str] = field(default_factory=lambda: list(OBJECTIVES))
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    steps: int = 500
    lr: float = 0.05
    judger_samples: int = 10000
    judger_smoothing: float = 1e-3
    record_every: int = 10
    coverage: float = 0.1
    workers: int = 1

    def validate(self) -> "LabSpec":
        for name in ("vocab", "length", "steps", "judger_samples", "record_every", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"lab.{name}", f"must be an integer >= 1, got {value!r}")
        if self.vocab ** self.length > MAX_SEQUENCES:
            raise ConfigError("lab.length", f"V^T must not exceed {MAX_SEQUENCES}")
        if not 0 < self.floor < 1:
            raise ConfigError("lab.floor", "must lie in (0, 1)")
        if not self.lr > 0:
            raise ConfigError("lab.lr", "must be positive")
        if not self.objectives or any(o not in OBJECTIVES for o in self.objectives):
            raise ConfigError("lab.objectives", f"must be a non-empty subset of {OBJECTIVES}")
        if not self.seeds:
            raise ConfigError("lab.seeds", "must list at least one seed")
        if not self.clusters or any(not c for c in self.clusters):
            raise ConfigError("lab.clusters", "must be non-empty token lists")
        unknown = set(self.capacity) - {"context", "rank", "tied"}
        if unknown:
            raise ConfigError(f"lab.capacity.{sorted(unknown)[0]}", "unknown field")
        if self.capacity.get("context", "none") not in CONTEXTS:
            raise ConfigError("lab.capacity.context", f"must be one of {CONTEXTS}")
        return self

    def capacity_spec(self) -> Capacity:
        return Capacity(**self.capacity)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "LabSpec":
        try:
            data = read_json(path)
        except CheckpointError as e:
            raise ConfigError("lab", str(e))
        return section_from_dict(cls, data, "lab").validate()


@dataclass
class LabReport:
    spec: Dict[str, Any]
    rows: List[Dict[str, Any]]
    comparisons: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _target(spec: LabSpec):
    rng = np.random.default_rng(spec.target_seed) if spec.target_seed is not None else None
    return planted_target(spec.vocab, spec.length, spec.clusters, spec.floor, spec.junk_threshold, rng)


def run_single(spec: LabSpec, objective: str, seed: int) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    """One fit; returns its summary row and its curve rows."""
    target = _target(spec)
    result = fit_tabular(
        objective, target.model, spec.capacity_spec(), spec.steps, seed, spec.lr,
        judger_samples=spec.judger_samples, judger_smoothing=spec.judger_smoothing,
        record_every=spec.record_every,
    )
    curve = [dict(objective=objective, seed=seed, **asdict(p)) for p in result.curve]
    return summarize_fit(result, target, spec.coverage), curve


def _run_job(job: Tuple[Dict[str, Any], str, int]):
    spec_dict, objective, seed = job
    return run_single(LabSpec(**spec_dict), objective, seed)


def compare(rows: List[Dict[str, Any]]) -> Dict[str, Any]:
    """Per-seed wins of the inverse-KL fit over the forward-KL fit."""
    by_key = {(r["objective"], r["seed"]): r for r in rows}
    seeds = sorted({r["seed"] for r in rows})
    pairs = [(by_key.get(("forward_kl_mle", s)), by_key.get(("inverse_kl_vs_judger", s))) for s in seeds]
    pairs = [(f, i) for f, i in pairs if f is not None and i is not None]
    if not pairs:
        return {}
    return {
        "seeds": len(pairs),
        "inverse_lower_junk": sum(i["junk_mass"] < f["junk_mass"] for f, i in pairs),
        "inverse_lower_inverse_kl": sum(i["inverse_kl"] < f["inverse_kl"] for f, i in pairs),
        "forward_lower_forward_kl": sum(f["forward_kl"] < i["forward_kl"] for f, i in pairs),
        "forward_covers_all": sum(f["clusters_covered"] == len(f["cluster_mass"]) for f, _ in pairs),
        "inverse_concentrated": sum(i["max_cluster_mass"] >= 0.8 for _, i in pairs),
    }


def write_curves(path: Union[str, Path], curves: List[Dict[str, Any]]) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CURVE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in curves:
        writer.writerow({k: row[k] for k in CURVE_COLUMNS})
    atomic_write_text(path, buf.getvalue())


def run_lab_experiment(spec: Union[LabSpec, str, Path], out_dir: Optional[Union[str, Path]] = None,
                       plots: bool = True) -> LabReport:
    """Fit every objective for every seed; write the report, curves and charts to ``out_dir``."""
    spec = spec if isinstance(spec, LabSpec) else LabSpec.load(spec)
    spec.validate()
    jobs = [(asdict(spec), objective, seed) for objective in spec.objectives for seed in spec.seeds]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(job) for job in jobs]
    rows = [summary for summary, _ in results]
    curves = [point for _, curve in results for point in curve]
    report = LabReport(asdict(spec), rows, compare(rows))
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_json(out_dir / "lab_report.json", _finite(report.to_dict()), pretty=True)
        write_curves(out_dir / "curves.csv", curves)
        if plots:
            for objective in spec.objectives:
                plot_curves(curves, objective, out_dir / f"curves_{objective}.svg")
    return report


def _finite(obj: Any) -> Any:
    """JSON has no infinity; divergences that diverge are written as the string "inf"."""
    if isinstance(obj, float) and not np.isfinite(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj
