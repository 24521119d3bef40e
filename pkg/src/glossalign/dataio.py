"""JSON-Lines pair datasets and atomic output writes."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .pipeline import PairRecord
from .seqcore import AlignmentError


class DatasetError(AlignmentError):
    """Malformed dataset file; the message carries the offending line number."""


def parse_pairs(lines, source_name: str = "<input>") -> list[PairRecord]:
    records: list[PairRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        where = f"{source_name}:{lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{where}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise DatasetError(f"{where}: each line must be a JSON object")
        for key in ("id", "source", "summary"):
            if key not in obj:
                raise DatasetError(f"{where}: missing field {key!r}")
        if not isinstance(obj["id"], str) or not obj["id"]:
            raise DatasetError(f"{where}: id must be a non-empty string")
        gloss = obj.get("gloss")
        if gloss is not None and (not isinstance(gloss, list)
                                  or not all(isinstance(g, int) and not isinstance(g, bool) for g in gloss)):
            raise DatasetError(f"{where}: gloss must be a list of integers")
        if obj["id"] in seen:
            raise DatasetError(f"{where}: duplicate id {obj['id']!r}")
        try:
            rec = PairRecord.of(obj["id"], obj["source"], obj["summary"], gloss)
        except (AlignmentError, TypeError) as exc:
            raise DatasetError(f"{where}: {exc}") from None
        seen.add(rec.id)
        records.append(rec)
    return records


def read_pairs(path) -> list[PairRecord]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        return parse_pairs(fh, str(path))


def dumps_line(obj) -> str:
    return json.dumps(obj, separators=(", ", ": "), allow_nan=False)


def format_pairs(records) -> str:
    return "".join(dumps_line(r.to_json()) + "\n" for r in records)


def write_atomic(path, text: str) -> None:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_pairs(path, records) -> None:
    write_atomic(path, format_pairs(records))


def write_json(path, obj) -> None:
    write_atomic(path, json.dumps(obj, indent=2, allow_nan=False) + "\n")
