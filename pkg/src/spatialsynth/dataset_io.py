"""Final dataset assembly: line-delimited export, MC conversion, statistics."""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .gateway import ChatRequest, render_prompt
from .jsonl import dumps_canonical, read_jsonl
from .scene_model import SceneMeta


class ExportError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    scene_id: str
    media: tuple[str, ...]
    modality: str  # "image" | "video"
    question: str
    answer: str
    category: str
    provenance: str
    objects: tuple[str, ...] = ()
    parents: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "scene_id": self.scene_id,
            "media": list(self.media),
            "modality": self.modality,
            "question": self.question,
            "answer": self.answer,
            "category": self.category,
            "provenance": self.provenance,
            "objects": list(self.objects),
        }
        if self.parents:
            out["parents"] = list(self.parents)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "DatasetRecord":
        return cls(
            id=raw["id"],
            scene_id=raw.get("scene_id", ""),
            media=tuple(raw.get("media", [])),
            modality=raw.get("modality", "image"),
            question=raw["question"],
            answer=raw["answer"],
            category=raw.get("category", ""),
            provenance=raw.get("provenance", ""),
            objects=tuple(raw.get("objects", [])),
            parents=tuple(raw.get("parents", [])),
        )


@dataclass(frozen=True)
class McRecord:
    record: DatasetRecord
    options: tuple[str, str, str, str]
    answer_letter: str

    def to_dict(self) -> dict:
        out = self.record.to_dict()
        out["options"] = list(self.options)
        out["answer_letter"] = self.answer_letter
        return out


def export(
    records: list[DatasetRecord],
    path: str | Path,
    *,
    seed: int = 0,
    config_hash: str = "",
    check_media: bool = True,
    media_root: str | Path | None = None,
) -> dict:
    """Write one JSON line per record (sorted by id) plus a manifest sidecar.

    Raises ExportError naming the offending record on invariant violations
    (empty answer, missing media file unless check_media=False).
    """
    path = Path(path)
    by_id: dict[str, DatasetRecord] = {}
    for rec in records:
        if not rec.answer.strip():
            raise ExportError(f"record '{rec.id}' has an empty answer")
        if not rec.question.strip():
            raise ExportError(f"record '{rec.id}' has an empty question")
        if check_media:
            root = Path(media_root) if media_root else Path(".")
            for m in rec.media:
                mp = Path(m) if Path(m).is_absolute() else root / m
                if not mp.exists():
                    raise ExportError(f"record '{rec.id}': media file not found: {mp}")
        by_id[rec.id] = rec

    ordered = [by_id[k] for k in sorted(by_id)]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in ordered:
            fh.write(dumps_canonical(rec.to_dict()) + "\n")

    manifest = {
        "total": len(ordered),
        "by_category": dict(sorted(Counter(r.category for r in ordered).items())),
        "by_modality": dict(sorted(Counter(r.modality for r in ordered).items())),
        "by_provenance": dict(sorted(Counter(r.provenance for r in ordered).items())),
        "seed": seed,
        "config_hash": config_hash,
    }
    manifest_path = Path(str(path) + ".manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_records(path: str | Path) -> list[DatasetRecord]:
    return [DatasetRecord.from_dict(raw) for raw in read_jsonl(path)]


# --- multiple-choice conversion ---------------------------------------------------------------

_NUMBER_RE = re.compile(r"(?<![\w.])(\d+(?:\.(\d+))?)(?![\w.])")
RULE_SCALES = (0.5, 1.5, 2.0)


def _numeric_distractors(answer: str) -> list[str]:
    m = _NUMBER_RE.search(answer)
    if not m:
        return []
    decimals = len(m.group(2) or "")
    value = float(m.group(1))
    out = []
    for scale in RULE_SCALES:
        scaled = value * scale
        rendered = f"{scaled:.{decimals}f}" if decimals else str(round(scaled))
        candidate = answer[: m.start(1)] + rendered + answer[m.end(1):]
        if candidate != answer:
            out.append(candidate)
    return out


def _object_swap_distractors(record: DatasetRecord, scene: SceneMeta | None, rng: random.Random) -> list[str]:
    if scene is None:
        return []
    present = [o.id for o in scene.objects if o.id in record.answer]
    if not present:
        return []
    chosen = max(present, key=len)
    siblings = [o.id for o in scene.objects if o.id != chosen and o.id not in record.answer]
    rng.shuffle(siblings)
    return [record.answer.replace(chosen, sib) for sib in siblings[:3]]


def to_multiple_choice(
    record: DatasetRecord,
    mode: str = "rule",
    seed: int = 0,
    scene: SceneMeta | None = None,
    gw=None,
    model_id: str = "",
) -> McRecord | None:
    """4-option MC conversion; None when 3 distinct distractors cannot be built."""
    rng = random.Random((seed, record.id).__repr__())
    if mode == "rule":
        distractors = _numeric_distractors(record.answer)
        if not distractors:
            distractors = _object_swap_distractors(record, scene, rng)
    elif mode == "llm":
        if gw is None:
            raise ValueError("llm mode needs a gateway")
        context = {
            "question": record.question,
            "answer": record.answer,
            "objects": "\n".join(record.objects),
        }
        resp = gw.complete(
            ChatRequest(model_id=model_id, messages=tuple(render_prompt("mc_distractors", context)), temperature=0.7, tag="mc_distractors")
        )
        distractors = [line.strip() for line in resp.text.splitlines() if line.strip()]
    else:
        raise ValueError(f"unknown mc mode {mode!r}")

    unique = []
    for d in distractors:
        if d != record.answer and d not in unique:
            unique.append(d)
    if len(unique) < 3:
        return None
    options = [record.answer] + unique[:3]
    rng.shuffle(options)
    letter = "ABCD"[options.index(record.answer)]
    return McRecord(record=record, options=tuple(options), answer_letter=letter)


# --- statistics --------------------------------------------------------------------------------


@dataclass
class DatasetStats:
    total: int = 0
    by_category: dict = field(default_factory=dict)
    by_modality: dict = field(default_factory=dict)
    by_provenance: dict = field(default_factory=dict)
    rejections: dict = field(default_factory=dict)

    def render_table(self) -> str:
        lines = [f"total records: {self.total}"]
        for title, counts in (
            ("by category", self.by_category),
            ("by modality", self.by_modality),
            ("by provenance", self.by_provenance),
            ("rejections", self.rejections),
        ):
            lines.append(f"-- {title} --")
            if not counts:
                lines.append("  (none)")
            for key in sorted(counts):
                lines.append(f"  {key:40s} {counts[key]}")
        return "\n".join(lines)


def stats(dataset_path: str | Path, run_log_path: str | Path | None = None) -> DatasetStats:
    out = DatasetStats()
    dataset_path = Path(dataset_path)
    if dataset_path.exists():
        for raw in read_jsonl(dataset_path):
            out.total += 1
            out.by_category[raw.get("category", "?")] = out.by_category.get(raw.get("category", "?"), 0) + 1
            out.by_modality[raw.get("modality", "?")] = out.by_modality.get(raw.get("modality", "?"), 0) + 1
            out.by_provenance[raw.get("provenance", "?")] = out.by_provenance.get(raw.get("provenance", "?"), 0) + 1
    else:
        raise FileNotFoundError(dataset_path)
    if run_log_path and Path(run_log_path).exists():
        for raw in read_jsonl(run_log_path):
            if raw.get("event") == "rejected":
                reason = raw.get("reason", "?")
                out.rejections[reason] = out.rejections.get(reason, 0) + 1
    return out
