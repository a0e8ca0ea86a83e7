"""Pipeline configuration: one structured JSON config, env vars only for secrets."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = ""
    api_key_env: str = "SPRITE_API_KEY"
    question_model: str = ""
    code_model: str = ""
    judge_model: str = ""
    max_attempts: int = 3
    backoff_s: float = 0.5
    max_concurrent: int = 4
    request_timeout_s: float = 60.0


@dataclass(frozen=True)
class Tolerances:
    direction_deg: float = 5.0
    elevation_m: float = 0.05
    consistency_pct: float = 5.0

    def oracle_params(self) -> dict:
        return {"direction_tol_deg": self.direction_deg, "elevation_tol_m": self.elevation_m}


@dataclass(frozen=True)
class PipelineConfig:
    scene_dir: str = ""
    out_dir: str = ""
    offline: bool = True
    seed: int = 0
    k_vote: int = 3
    top_k_frames: int = 3
    multi_image_k: int = 3
    nearby_radius_m: float = 5.0
    turn_threshold_deg: float = 15.0
    min_move_m: float = 0.2
    sandbox_timeout_s: float = 10.0
    workers: int = 1
    camera_forward: str = "-z"
    escalate_oracle_mismatch: bool = False
    runner_cmd: tuple[str, ...] | None = None
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)

    def validate(self) -> None:
        if self.k_vote < 2:
            raise ValueError("k_vote must be >= 2")
        if min(self.tolerances.direction_deg, self.tolerances.elevation_m, self.tolerances.consistency_pct) <= 0:
            raise ValueError("tolerances must be positive")
        if self.sandbox_timeout_s <= 0:
            raise ValueError("sandbox_timeout_s must be positive")
        if not self.offline and not self.provider.base_url:
            raise ValueError("live mode needs provider.base_url (or set offline=true)")

    def config_hash(self) -> str:
        """Stable digest of everything that influences the generated data.

        Paths (scene_dir, out_dir) are excluded so identical runs into
        different directories produce identical manifests.
        """
        payload = asdict(self)
        payload.pop("scene_dir", None)
        payload.pop("out_dir", None)
        canon = json.dumps(payload, sort_keys=True, default=list)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def load_config(path: str | Path | None, **overrides) -> PipelineConfig:
    """Config from a JSON file with keyword overrides (CLI flags win)."""
    raw: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    provider = ProviderConfig(**raw.pop("provider", {}))
    tolerances = Tolerances(**raw.pop("tolerances", {}))
    if "runner_cmd" in raw and raw["runner_cmd"] is not None:
        raw["runner_cmd"] = tuple(raw["runner_cmd"])
    cfg = PipelineConfig(provider=provider, tolerances=tolerances, **raw)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg
