"""Resumable stage orchestration over a scene directory.

Stages: questions -> truth -> compound -> navigation (+ the explicit template
baseline). Work is keyed by (scene_id, stage, question_id) in an append-only
state file, so an interrupted run resumes without duplicating records; any
artifact lines from a half-finished unit are deduplicated by id on load (the
regeneration is deterministic, so duplicates are byte-identical).
"""

from __future__ import annotations

import hashlib
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import dataset_io, sampling, synthesis, verification
from .config import PipelineConfig
from .gateway import GatewayError, HttpGateway, Transcript
from .geometry import GeometryError
from .jsonl import JsonlWriter, read_jsonl
from .mock_llm import MockGateway
from .scene_model import SceneKind, SceneMeta, load_scene
from .synthesis import QuestionRecord

MAIN_STAGES = ("questions", "truth", "compound", "navigation")
ALL_STAGES = MAIN_STAGES + ("template",)


class StageOrderError(RuntimeError):
    pass


def _derive_rng(seed: int, *parts: str) -> random.Random:
    digest = hashlib.sha256(":".join([str(seed), *parts]).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _dedupe(rows: list[dict], key: str) -> list[dict]:
    seen: set = set()
    out = []
    for row in rows:
        k = row.get(key)
        if k in seen:
            continue
        seen.add(k)
        out.append(row)
    return out


class PipelineRun:
    def __init__(self, config: PipelineConfig):
        config.validate()
        self.config = config
        self.scene_dir = Path(config.scene_dir)
        self.out_dir = Path(config.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

        self._state_path = self.out_dir / "state.jsonl"
        self._done: set[str] = set()
        if self._state_path.exists():
            for row in read_jsonl(self._state_path):
                self._done.add(row["key"])
        self._state = JsonlWriter(self._state_path)
        self._run_log = JsonlWriter(self.out_dir / "run_log.jsonl")
        self.transcript = Transcript(self.out_dir / "transcripts.jsonl")

        if config.offline:
            self.gateway = MockGateway(seed=config.seed, transcript=self.transcript)
        else:
            self.gateway = HttpGateway(
                base_url=config.provider.base_url,
                model_id=config.provider.question_model,
                api_key_env=config.provider.api_key_env,
                max_attempts=config.provider.max_attempts,
                backoff_s=config.provider.backoff_s,
                max_concurrent=config.provider.max_concurrent,
                request_timeout_s=config.provider.request_timeout_s,
                transcript=self.transcript,
            )
        if config.runner_cmd:
            self.runner = verification.SubprocessRunner(list(config.runner_cmd))
        else:
            self.runner = verification.InProcessRunner()
        self.fatal_errors = 0

    # -- bookkeeping ---------------------------------------------------------------

    def _key(self, scene_id: str, stage: str, question_id: str = "*") -> str:
        return f"{scene_id}|{stage}|{question_id}"

    def _is_done(self, key: str) -> bool:
        return key in self._done

    def _mark_done(self, key: str) -> None:
        self._done.add(key)
        self._state.append({"key": key})

    def log(self, event: str, **fields) -> None:
        self._run_log.append({"event": event, **fields})

    def scenes(self) -> list[SceneMeta]:
        out = []
        for path in sorted(self.scene_dir.glob("*.json")):
            out.append(load_scene(path))
        return out

    def _writer(self, name: str) -> JsonlWriter:
        return JsonlWriter(self.out_dir / name)

    def _load_questions(self) -> list[QuestionRecord]:
        path = self.out_dir / "questions.jsonl"
        if not path.exists():
            raise StageOrderError("stage 'truth' needs the questions stage to have run first")
        rows = _dedupe(list(read_jsonl(path)), "question_id")
        return [QuestionRecord.from_dict(r) for r in rows]

    def _aliased_scene(self, scene: SceneMeta) -> SceneMeta:
        path = self.out_dir / "aliases.jsonl"
        if not path.exists():
            return scene
        for row in read_jsonl(path):
            if row["scene_id"] == scene.scene_id and row.get("mapping"):
                return synthesis.apply_aliases(scene, synthesis.AliasMap(row["mapping"]))
        return scene

    # -- questions stage ------------------------------------------------------------

    def _disambiguate_scene(self, scene: SceneMeta, aliases_out: JsonlWriter) -> SceneMeta:
        if not synthesis.duplicate_category_ids(scene):
            return scene
        legend_path = Path(scene.source_path or "").with_suffix(".legend.tsv") if scene.source_path else None
        if not legend_path or not legend_path.exists():
            self.log("disambiguation_skipped", scene_id=scene.scene_id, reason="no legend file")
            return scene
        try:
            legend = synthesis.load_legend(legend_path)
            media_root = Path(scene.source_path).parent
            annotated = [str(media_root / m) for m in scene.media]
            amap = synthesis.disambiguate(scene, annotated, legend, self.gateway, model_id=self.config.provider.question_model)
        except (synthesis.DisambiguationError, GatewayError, ValueError) as exc:
            self.log("disambiguation_failed", scene_id=scene.scene_id, reason=str(exc))
            return scene
        aliases_out.append({"scene_id": scene.scene_id, "mapping": amap.mapping})
        return synthesis.apply_aliases(scene, amap)

    def _stage_questions(self) -> int:
        produced = 0
        questions_out = self._writer("questions.jsonl")
        samples_out = self._writer("samples.jsonl")
        aliases_out = self._writer("aliases.jsonl")
        try:
            for scene in self.scenes():
                key = self._key(scene.scene_id, "questions")
                if self._is_done(key):
                    continue
                scene = self._disambiguate_scene(scene, aliases_out)
                if scene.kind is SceneKind.VIDEO:
                    plan = sampling.uniform_sample(scene.frame_count)
                    media = plan
                    samples_row = {
                        "scene_id": scene.scene_id,
                        "frame_plan": list(plan.indices),
                        "top_k_frames": [list(c.frame_indices) for c in sampling.top_k_frames(scene, self.config.top_k_frames)],
                        "multi_image_candidates": [
                            list(c.frame_indices)
                            for c in sampling.multi_image_candidates(scene, self.config.multi_image_k, self.config.seed)
                        ],
                    }
                    samples_out.append(samples_row)
                else:
                    media = sampling.ImageCandidate(frame_indices=tuple(range(len(scene.media))))
                diagnostics = []
                try:
                    records = synthesis.generate_questions(
                        scene,
                        media,
                        self.gateway,
                        model_id=self.config.provider.question_model,
                        diagnostics=diagnostics,
                    )
                except (synthesis.ZeroParseError, GatewayError) as exc:
                    self.fatal_errors += 1
                    self.log("stage_error", stage="questions", scene_id=scene.scene_id, reason=str(exc))
                    continue
                for diag in diagnostics:
                    self.log("question_dropped", scene_id=scene.scene_id, **diag.as_dict())
                for rec in records:
                    questions_out.append(rec.to_dict())
                produced += len(records)
                self._mark_done(key)
        finally:
            questions_out.close()
            samples_out.close()
            aliases_out.close()
        return produced

    # -- truth stage -------------------------------------------------------------------

    def _stage_truth(self) -> int:
        questions = self._load_questions()
        scenes = {s.scene_id: self._aliased_scene(s) for s in self.scenes()}
        accepted_out = self._writer("accepted.jsonl")
        outcomes_out = self._writer("outcomes.jsonl")
        accepted = 0
        count_lock = threading.Lock()

        def handle(q: QuestionRecord) -> None:
            nonlocal accepted
            scene = scenes.get(q.scene_id)
            if scene is None:
                self.log("rejected", question_id=q.question_id, reason="missing_scene")
                return
            ok, reason = verification.qc_filter(q, scene, self.config.tolerances.oracle_params())
            if not ok:
                self.log("rejected", question_id=q.question_id, reason=reason)
                return
            outcome = verification.acquire_truth(
                q,
                scene,
                self.gateway,
                self.runner,
                k=self.config.k_vote,
                model_id=self.config.provider.code_model,
                timeout_s=self.config.sandbox_timeout_s,
                tolerances=self.config.tolerances.oracle_params(),
                escalate_oracle_mismatch=self.config.escalate_oracle_mismatch,
            )
            outcomes_out.append(outcome.summary_dict())
            if outcome.decision == "accepted":
                with count_lock:
                    accepted += 1
                accepted_out.append(
                    {
                        "question_id": q.question_id,
                        "scene_id": q.scene_id,
                        "instruction": q.instruction,
                        "answer": outcome.accepted_answer,
                        "category": q.category,
                        "provenance": q.provenance,
                        "media": list(q.media),
                        "modality": "video" if scenes[q.scene_id].kind is SceneKind.VIDEO else "image",
                        "objects": list(q.objects),
                        "parents": list(q.parents),
                    }
                )
            else:
                self.log("rejected", question_id=q.question_id, reason=outcome.reject_reason or "unknown")

        try:
            pending = []
            for q in questions:
                key = self._key(q.scene_id, "truth", q.question_id)
                if self._is_done(key):
                    continue
                pending.append((key, q))
            if self.config.workers > 1:
                with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                    list(pool.map(lambda kq: handle(kq[1]), pending))
                for key, _q in pending:
                    self._mark_done(key)
            else:
                for key, q in pending:
                    handle(q)
                    self._mark_done(key)
        finally:
            accepted_out.close()
            outcomes_out.close()
        return accepted

    # -- compound stage -------------------------------------------------------------------

    def _load_accepted(self) -> list[dict]:
        path = self.out_dir / "accepted.jsonl"
        if not path.exists():
            raise StageOrderError("stage 'compound' needs the truth stage to have run first")
        return _dedupe(list(read_jsonl(path)), "question_id")

    def _stage_compound(self) -> int:
        accepted_rows = self._load_accepted()
        accepted_out = self._writer("accepted.jsonl")
        compound_out = self._writer("compound.jsonl")
        made = 0
        try:
            by_scene: dict[str, list[dict]] = {}
            for row in accepted_rows:
                if row["category"] in ("compound", "navigation"):
                    continue
                by_scene.setdefault(row["scene_id"], []).append(row)
            for scene_id in sorted(by_scene):
                # sort before shuffling so pairing is independent of artifact file order
                rows = sorted(by_scene[scene_id], key=lambda r: r["question_id"])
                rng = _derive_rng(self.config.seed, scene_id, "compound")
                rng.shuffle(rows)
                used: set[str] = set()
                pair_index = 0
                for i, row_a in enumerate(rows):
                    if row_a["question_id"] in used:
                        continue
                    partner = None
                    for row_b in rows[i + 1:]:
                        if row_b["question_id"] in used:
                            continue
                        if set(row_a["objects"]) & set(row_b["objects"]):
                            partner = row_b
                            break
                    if partner is None:
                        continue
                    used.add(row_a["question_id"])
                    used.add(partner["question_id"])
                    compound_id = f"{scene_id}:c{pair_index:03d}"
                    pair_index += 1
                    key = self._key(scene_id, "compound", compound_id)
                    if self._is_done(key):
                        continue
                    made += self._synthesize_compound(row_a, partner, compound_id, accepted_out, compound_out)
                    self._mark_done(key)
        finally:
            accepted_out.close()
            compound_out.close()
        return made

    def _synthesize_compound(self, row_a: dict, row_b: dict, compound_id: str, accepted_out, compound_out) -> int:
        rec_a = QuestionRecord(
            question_id=row_a["question_id"],
            instruction=row_a["instruction"],
            objects=tuple(row_a["objects"]),
            objects_category=(),
            category=row_a["category"],
            scene_id=row_a["scene_id"],
            media=tuple(row_a["media"]),
        )
        rec_b = QuestionRecord(
            question_id=row_b["question_id"],
            instruction=row_b["instruction"],
            objects=tuple(row_b["objects"]),
            objects_category=(),
            category=row_b["category"],
            scene_id=row_b["scene_id"],
            media=tuple(row_b["media"]),
        )
        try:
            record, answer = synthesis.compound_synthesize(
                (rec_a, row_a["answer"]),
                (rec_b, row_b["answer"]),
                self.gateway,
                model_id=self.config.provider.question_model,
                question_id=compound_id,
            )
        except (synthesis.SynthesisError, GatewayError, ValueError) as exc:
            self.log("rejected", question_id=compound_id, reason=f"compound_generation: {exc}")
            return 0
        ok = verification.compound_check(
            answer, (row_a["answer"], row_b["answer"]), self.gateway, model_id=self.config.provider.judge_model
        )
        if not ok:
            self.log("rejected", question_id=compound_id, reason="compound_implausible")
            return 0
        compound_out.append({"question_id": compound_id, "parents": list(record.parents), "instruction": record.instruction, "answer": answer})
        accepted_out.append(
            {
                "question_id": compound_id,
                "scene_id": row_a["scene_id"],
                "instruction": record.instruction,
                "answer": answer,
                "category": "compound",
                "provenance": "compound",
                "media": row_a["media"],
                "modality": row_a["modality"],
                "objects": list(record.objects),
                "parents": list(record.parents),
            }
        )
        return 1

    # -- navigation stage ---------------------------------------------------------------

    def _stage_navigation(self) -> int:
        made = 0
        accepted_out = self._writer("accepted.jsonl")
        nav_out = self._writer("navigation.jsonl")
        try:
            for scene in self.scenes():
                if scene.kind is not SceneKind.VIDEO or len(scene.trajectory) < 2:
                    continue
                nav_id = f"{scene.scene_id}:nav000"
                key = self._key(scene.scene_id, "navigation", nav_id)
                if self._is_done(key):
                    continue
                try:
                    nav = synthesis.navigation_describe(
                        list(scene.trajectory),
                        gw=None if self.config.offline else self.gateway,
                        model_id=self.config.provider.question_model,
                        turn_threshold_deg=self.config.turn_threshold_deg,
                        min_move_m=self.config.min_move_m,
                    )
                except (GeometryError, ValueError) as exc:
                    self.log("rejected", question_id=nav_id, reason=f"navigation: {exc}")
                    self._mark_done(key)
                    continue
                nav_out.append({"scene_id": scene.scene_id, "segments": [s.to_dict() for s in nav.segments], "text": nav.text})
                accepted_out.append(
                    {
                        "question_id": nav_id,
                        "scene_id": scene.scene_id,
                        "instruction": "Describe how the camera moves through the scene in this first-person video.",
                        "answer": nav.text,
                        "category": "navigation",
                        "provenance": "navigation",
                        "media": list(scene.media),
                        "modality": "video",
                        "objects": [],
                        "parents": [],
                    }
                )
                made += 1
                self._mark_done(key)
        finally:
            accepted_out.close()
            nav_out.close()
        return made

    # -- template stage -------------------------------------------------------------------

    def _stage_template(self) -> int:
        from . import task_oracle

        made = 0
        accepted_out = self._writer("accepted.jsonl")
        try:
            for scene in self.scenes():
                scene = self._aliased_scene(scene)
                for task in task_oracle.supported_tasks(scene.kind):
                    tmpl_id = f"{scene.scene_id}:t:{task.name}"
                    key = self._key(scene.scene_id, "template", tmpl_id)
                    if self._is_done(key):
                        continue
                    try:
                        record, result = synthesis.template_generate(
                            scene,
                            task,
                            rng_seed=self.config.seed,
                            nearby_radius_m=self.config.nearby_radius_m,
                            question_id=tmpl_id,
                        )
                    except synthesis.UnsatisfiableTaskError as exc:
                        self.log("template_skipped", scene_id=scene.scene_id, task=task.name, reason=str(exc))
                        self._mark_done(key)
                        continue
                    accepted_out.append(
                        {
                            "question_id": tmpl_id,
                            "scene_id": scene.scene_id,
                            "instruction": record.instruction,
                            "answer": result.text,
                            "category": task.name,
                            "provenance": "template",
                            "media": list(record.media),
                            "modality": "video" if scene.kind is SceneKind.VIDEO else "image",
                            "objects": list(record.objects),
                            "parents": [],
                        }
                    )
                    made += 1
                    self._mark_done(key)
        finally:
            accepted_out.close()
        return made

    # -- entry points --------------------------------------------------------------------

    def run_stage(self, stage: str) -> dict:
        runners = {
            "questions": self._stage_questions,
            "truth": self._stage_truth,
            "compound": self._stage_compound,
            "navigation": self._stage_navigation,
            "template": self._stage_template,
        }
        if stage == "all":
            summary = {}
            for name in MAIN_STAGES:
                summary[name] = runners[name]()
            return summary
        if stage not in runners:
            raise ValueError(f"unknown stage '{stage}'")
        return {stage: runners[stage]()}

    def dataset_records(self) -> list[dataset_io.DatasetRecord]:
        rows = _dedupe(list(read_jsonl(self.out_dir / "accepted.jsonl")), "question_id")
        return [
            dataset_io.DatasetRecord(
                id=row["question_id"],
                scene_id=row["scene_id"],
                media=tuple(row.get("media", [])),
                modality=row.get("modality", "image"),
                question=row["instruction"],
                answer=row["answer"],
                category=row["category"],
                provenance=row.get("provenance", ""),
                objects=tuple(row.get("objects", [])),
                parents=tuple(row.get("parents", [])),
            )
            for row in rows
        ]

    def close(self) -> None:
        self._state.close()
        self._run_log.close()
        self.transcript.close()
