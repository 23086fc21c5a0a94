"""
JSON and CSV report writers.

The JSON report holds only what the configuration and seed determine, so two
runs of the same configuration produce the same bytes; wall-clock times and
host details go to a ``.meta.json`` sidecar.
"""

import csv
import json
import logging
import math
import platform
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import django
import numpy as np

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass
class Table:
    fieldnames: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)


def _key(key) -> str:
    if isinstance(key, tuple):
        return "|".join(_key(part) for part in key)
    return str(key)


def _number(value: float):
    if math.isfinite(value):
        return value
    return str(value)


def to_jsonable(value):
    """
    Plain JSON types: complex numbers become [re, im], arrays become lists,
    tuple keys are joined with '|' and non-finite floats become strings.
    """
    if hasattr(value, "as_dict"):
        return to_jsonable(value.as_dict())
    if isinstance(value, dict):
        return {_key(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, (set, frozenset)):
        return sorted(to_jsonable(item) for item in value)
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, (float, Fraction)):
        return _number(float(value))
    if isinstance(value, complex):
        return [_number(value.real), _number(value.imag)]
    if isinstance(value, Path):
        return str(value)
    return str(value)


def build_report(command: str, passed: bool, parameters: dict, results: dict) -> dict:
    return to_jsonable(
        {
            "schema": SCHEMA_VERSION,
            "command": command,
            "passed": bool(passed),
            "parameters": parameters,
            "results": results,
        }
    )


def render_report(document: dict) -> str:
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def meta_path(path: Path) -> Path:
    return Path(path).with_suffix(".meta.json")


def host_details() -> dict:
    return {
        "host": platform.node(),
        "platform": platform.platform(),
        "python_version": platform.python_version(),
        "django_version": django.get_version(),
        "numpy_version": np.__version__,
    }


def write_report(path: Path, document: dict, meta: Optional[dict] = None) -> Path:
    """Write the report and, when given, its sidecar of run metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(document), encoding="utf-8")
    if meta is not None:
        sidecar = {**host_details(), **meta}
        meta_path(path).write_text(json.dumps(to_jsonable(sidecar), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote {document['command']} report to {path}")
    return path


def _cell(value):
    value = to_jsonable(value)
    if isinstance(value, list):
        return json.dumps(value)
    return value


def write_table(path: Path, fieldnames: Sequence[str], rows: Sequence[Dict[str, Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({name: _cell(row.get(name)) for name in fieldnames})
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path
