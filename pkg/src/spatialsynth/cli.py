"""Operator entry point: validate / generate / export / stats / mc-convert."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset_io
from .config import load_config
from .pipeline import ALL_STAGES, PipelineRun, StageOrderError
from .scene_model import SceneParseError, SceneValidationError, load_scene, load_scene_dir


def _cmd_validate(args) -> int:
    paths: list[Path] = []
    for target in args.scenes:
        target = Path(target)
        if target.is_dir():
            paths.extend(sorted(target.glob("*.json")))
        else:
            paths.append(target)
    if not paths:
        print("warning: no scene files found", file=sys.stderr)
        return 0
    failures = 0
    for path in paths:
        diagnostics = []
        try:
            scene = load_scene(path, diagnostics)
        except (SceneParseError, SceneValidationError) as exc:
            failures += 1
            print(f"FAIL {path}: {exc}")
            continue
        note = f" ({len(diagnostics)} repaired)" if diagnostics else ""
        print(f"ok   {path}: {len(scene.objects)} objects, kind={scene.kind.value}{note}")
    return 1 if failures else 0


def _cmd_generate(args) -> int:
    cfg = load_config(
        args.config,
        scene_dir=str(args.scenes),
        out_dir=str(args.out),
        seed=args.seed,
        offline=None if args.offline is None else args.offline,
        k_vote=args.k_vote,
        workers=args.workers,
    )
    run = PipelineRun(cfg)
    try:
        summary = run.run_stage(args.stage)
    except (StageOrderError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        run.close()
    for stage, count in summary.items():
        print(f"{stage}: {count} records")
    return 1 if run.fatal_errors else 0


def _cmd_export(args) -> int:
    cfg = load_config(args.config, scene_dir=str(args.scenes) if args.scenes else None, out_dir=str(args.run_dir))
    run = PipelineRun(cfg)
    try:
        records = run.dataset_records()
    finally:
        run.close()
    media_root = Path(args.scenes) if args.scenes else Path(args.run_dir)
    try:
        manifest = dataset_io.export(
            records,
            args.out,
            seed=cfg.seed,
            config_hash=cfg.config_hash(),
            check_media=not args.no_media_check,
            media_root=media_root,
        )
    except dataset_io.ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {manifest['total']} records to {args.out}")
    return 0


def _cmd_stats(args) -> int:
    try:
        result = dataset_io.stats(args.dataset, args.run_log)
    except FileNotFoundError as exc:
        print(f"error: no such dataset file: {exc}", file=sys.stderr)
        return 1
    print(result.render_table())
    return 0


def _cmd_mc_convert(args) -> int:
    records = dataset_io.load_records(args.dataset)
    scenes = {}
    if args.scenes:
        for scene in load_scene_dir(args.scenes):
            scenes[scene.scene_id] = scene
    converted = 0
    skipped = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for rec in records:
            mc = dataset_io.to_multiple_choice(rec, mode=args.mode, seed=args.seed, scene=scenes.get(rec.scene_id))
            if mc is None:
                skipped += 1
                continue
            fh.write(json.dumps(mc.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
            converted += 1
    print(f"converted {converted} records ({skipped} skipped) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spatialsynth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check scene files against the schema invariants")
    p.add_argument("scenes", nargs="+", help="scene files or directories")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("generate", help="run pipeline stages over a scene directory")
    p.add_argument("scenes", help="directory of scene JSON files")
    p.add_argument("--out", required=True, help="run directory for artifacts and state")
    p.add_argument("--stage", default="all", choices=("all",) + ALL_STAGES)
    p.add_argument("--config", default=None, help="pipeline config JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k-vote", dest="k_vote", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--offline", dest="offline", action="store_true", default=None)
    mode.add_argument("--live", dest="offline", action="store_false")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("export", help="assemble the accepted records into a dataset file")
    p.add_argument("run_dir", help="run directory produced by generate")
    p.add_argument("--out", required=True, help="dataset .jsonl path")
    p.add_argument("--scenes", default=None, help="scene directory (for media path resolution)")
    p.add_argument("--config", default=None)
    p.add_argument("--no-media-check", action="store_true")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("stats", help="summarize a dataset file")
    p.add_argument("dataset")
    p.add_argument("--run-log", default=None, help="run_log.jsonl for the rejection histogram")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("mc-convert", help="convert records to multiple choice")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", default="rule", choices=("rule", "llm"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenes", default=None, help="scene directory for sibling-object distractors")
    p.set_defaults(func=_cmd_mc_convert)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
