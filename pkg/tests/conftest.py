from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS_DIR))  # makes `import bruteforce` work from any cwd

from spatialsynth.scene_model import load_scene

FIXTURE_SCENES = TESTS_DIR.parent / "src/spatialsynth/data/fixtures/scenes"
GOLDEN_DIR = TESTS_DIR / "golden"


@pytest.fixture(scope="session")
def fixture_scene_dir() -> Path:
    return FIXTURE_SCENES


@pytest.fixture(scope="session")
def studio_scene():
    return load_scene(FIXTURE_SCENES / "studio_image.json")


@pytest.fixture(scope="session")
def loft_scene():
    return load_scene(FIXTURE_SCENES / "loft_video.json")


@pytest.fixture(scope="session")
def office_scene():
    return load_scene(FIXTURE_SCENES / "office_multi.json")
