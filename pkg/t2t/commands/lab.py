"""
Lab command implementation.
"""
from argparse import ArgumentParser, _SubParsersAction
from typing import Any, Dict, List, Optional

import numpy as np

from ..lab.experiment import LabReport, LabSpec, run_lab_experiment
from .base import BaseCommand, common_options

SUMMARY_FIELDS = ("forward_kl", "inverse_kl", "jsd", "junk_mass", "max_cluster_mass")


def summarize(rows: List[Dict[str, Any]]) -> Dict[str, Dict[str, float]]:
    """Per-objective means over seeds."""
    out: Dict[str, Dict[str, float]] = {}
    for objective in dict.fromkeys(r["objective"] for r in rows):
        chosen = [r for r in rows if r["objective"] == objective]
        out[objective] = {k: float(np.mean([r[k] for r in chosen])) for k in SUMMARY_FIELDS}
    return out


class LabCommand(BaseCommand):
    """Fit tabular models under several divergences and compare them exactly."""

    @classmethod
    def register_parser(cls, subparsers: _SubParsersAction) -> ArgumentParser:
        """Register lab command parser."""
        parser = subparsers.add_parser("lab", parents=[common_options()],
                                       help="Run a tabular divergence experiment")
        parser.add_argument("spec", nargs="?", help="JSON lab specification (default: the planted bimodal target)")
        parser.add_argument("--seeds", type=int, nargs="+", help="Fit seeds")
        parser.add_argument("--steps", type=int, help="Adam steps per fit")
        parser.add_argument("--workers", type=int, help="Parallel worker processes")
        parser.add_argument("--no-plots", action="store_true", help="Skip the SVG charts")
        parser.add_argument("--out", help="Output directory (default: a new run directory)")
        return parser

    def execute_from_args(self, args: Any) -> None:
        """Execute lab command from parsed arguments."""
        spec = LabSpec.load(args.spec) if args.spec else LabSpec()
        for name in ("seeds", "steps", "workers"):
            if getattr(args, name) is not None:
                setattr(spec, name, getattr(args, name))
        self.execute(spec, args.out, plots=not args.no_plots)

    def execute(self, spec: LabSpec, out: Optional[str] = None, plots: bool = True) -> LabReport:
        spec.validate()
        target = self._output_dir("lab", out)
        report = run_lab_experiment(spec, target.path, plots)
        for objective, means in summarize(report.rows).items():
            cells = "  ".join(f"{k}={v:.4f}" for k, v in means.items())
            print(f"{objective:22s} {cells}")
        if report.comparisons:
            print("inverse vs forward: " + ", ".join(f"{k}={v}" for k, v in report.comparisons.items()))
        print(f"Wrote lab report to {target.path / 'lab_report.json'}")
        return report
