"""
Run directories: where every command writes its configuration, version
stamp, vocabularies, checkpoints and reports.
"""
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from ..exceptions import CheckpointError
from .storage import atomic_write_text, read_json, write_json

logger = logging.getLogger(__name__)


class RunDir:
    """One output directory and the well-known files inside it."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path).resolve()
        self.config_file = self.path / "config.json"
        self.version_file = self.path / "VERSION"
        self.model_file = self.path / "model.json"
        self.vocab_file = self.path / "vocab.json"
        self.metrics_file = self.path / "metrics.csv"
        self.checkpoints_dir = self.path / "checkpoints"
        self.cache_dir = self.path / "cache"

    def __str__(self) -> str:
        return str(self.path)

    @property
    def generator_checkpoint(self) -> Path:
        return self.checkpoints_dir / "generator.json"

    @property
    def judger_checkpoint(self) -> Path:
        return self.checkpoints_dir / "judger.json"

    @property
    def eval_lm_checkpoint(self) -> Path:
        return self.checkpoints_dir / "eval_lm.json"

    def cache_file(self, split: str) -> Path:
        return self.cache_dir / f"{split}.jsonl"

    @classmethod
    def create(cls, runs_root: Union[str, Path], command: str,
               run_dir: Optional[Union[str, Path]] = None) -> "RunDir":
        """``run_dir`` if given, else a fresh ``<runs_root>/<command>-<timestamp>`` directory."""
        if run_dir is not None:
            path = Path(run_dir)
        else:
            stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
            path = Path(runs_root) / f"{command}-{stamp}"
            suffix = 1
            while path.exists():
                suffix += 1
                path = Path(runs_root) / f"{command}-{stamp}-{suffix}"
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise CheckpointError(f"cannot create run directory {path}: {e}")
        return cls(path)

    def ensure_exists(self) -> "RunDir":
        if not self.config_file.exists():
            raise CheckpointError(f"{self.path} is not a run directory (no config.json)")
        return self

    def init(self, config: Dict[str, Any]) -> "RunDir":
        """Write the merged configuration and the version stamp."""
        from .. import __version__
        write_json(self.config_file, config, pretty=True)
        atomic_write_text(self.version_file, f"t2t {__version__}\n")
        logger.info("Run directory %s", self.path)
        return self

    def read_config(self) -> Dict[str, Any]:
        return read_json(self.ensure_exists().config_file)

    def save_vocabs(self, vocabs: Tuple[Any, Any]) -> None:
        from ..data.vocab import save_vocabs
        save_vocabs(self.vocab_file, vocabs)

    def load_vocabs(self) -> Tuple[Any, Any]:
        from ..data.vocab import load_vocabs
        if not self.vocab_file.exists():
            raise CheckpointError(f"{self.path} has no vocab.json")
        return load_vocabs(self.vocab_file)
