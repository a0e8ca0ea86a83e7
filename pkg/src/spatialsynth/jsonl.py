"""Line-delimited JSON helpers with thread-safe, flush-on-write appends."""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any, Iterator


def dumps_canonical(obj: Any) -> str:
    """Deterministic single-line encoding (sorted keys, no float mangling)."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ": "))


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


class JsonlWriter:
    """Append-only JSONL writer; each record lands in one atomic, flushed write."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = dumps_canonical(record) + "\n"
        with self._lock:
            self._fh.write(line)
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.close()

    def __enter__(self) -> "JsonlWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
