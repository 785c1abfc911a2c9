import json
import os
import tempfile
from typing import Any, Dict, Iterable, List, Sequence

from .types import ExperimentManifest


def format_value(value: Any) -> str:
    """CSV cell text; floats round-trip exactly so reruns are byte-identical."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def atomic_write_bytes(path: str, data: bytes) -> None:
    """
    Writes `data` to a temp file beside `path`, then renames it into place.

    Args:
        path (str): Destination file.
        data (bytes): Full file contents.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    atomic_write_bytes(path, csv_text(header, rows).encode("utf-8"))
    return path


def _plain(value: Any) -> Any:
    """numpy scalars and Fractions into JSON-friendly values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "item") and callable(value.item):
        return value.item()
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def manifest_json(manifest: ExperimentManifest) -> str:
    return json.dumps(_plain(dict(manifest)), indent=2, sort_keys=True) + "\n"


def write_manifest(path: str, manifest: ExperimentManifest) -> str:
    atomic_write_bytes(path, manifest_json(manifest).encode("utf-8"))
    return path


def remove_outputs(paths: List[str]) -> List[str]:
    """Deletes whatever of `paths` exists; returns the removed paths."""
    removed = []
    for path in paths:
        if os.path.exists(path):
            os.remove(path)
            removed.append(path)
    return removed
