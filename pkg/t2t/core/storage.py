"""
Small file helpers shared by checkpoints, caches and reports.
"""
import json
from pathlib import Path
from typing import Any, Union

from ..exceptions import CheckpointError

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(temp_file, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        temp_file.replace(path)
    except OSError as e:
        if temp_file.exists():
            temp_file.unlink()
        raise CheckpointError(f"Failed to write {path}: {e}")


def dump_json(obj: Any) -> str:
    """Deterministic JSON text; floats use Python's shortest round-trip repr."""
    return json.dumps(obj, indent=None, separators=(",", ":"), allow_nan=False) + "\n"


def write_json(path: PathLike, obj: Any, pretty: bool = False) -> None:
    text = json.dumps(obj, indent=2) + "\n" if pretty else dump_json(obj)
    atomic_write_text(path, text)


def read_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"{path} not found")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"Failed to read {path}: {e}")
