"""spatialsynth: simulator scene metadata -> verified spatial-reasoning QA datasets."""

from .scene_model import (
    CameraPose,
    Obb,
    ObjectRecord,
    SceneKind,
    SceneMeta,
    UnitQuaternion,
    Vec3,
    load_scene,
    save_scene,
    validate_scene,
)
from .task_oracle import OracleAnswer, TaskType, answer, supported_tasks

__version__ = "0.1.0"

__all__ = [
    "CameraPose",
    "Obb",
    "ObjectRecord",
    "OracleAnswer",
    "SceneKind",
    "SceneMeta",
    "TaskType",
    "UnitQuaternion",
    "Vec3",
    "answer",
    "load_scene",
    "save_scene",
    "supported_tasks",
    "validate_scene",
    "__version__",
]
