import json
from pathlib import Path

import pytest

from tandemsim.fixtures import fixture_scene
from tandemsim.kinematics.assets import default_assets

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "tandemsim" / "data"


@pytest.fixture(scope="session")
def assets():
    return default_assets()


@pytest.fixture(scope="session")
def small_scene():
    scene = fixture_scene("small_f")
    scene.grid(0.10, 0.30).csr_graph()
    return scene


@pytest.fixture(scope="session")
def small_scene_b():
    scene = fixture_scene("small_g")
    scene.grid(0.10, 0.30).csr_graph()
    return scene


@pytest.fixture()
def tmp_scene_file(tmp_path):
    def write(doc: dict, name="scene.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return p

    return write


def minimal_scene_dict(**overrides) -> dict:
    doc = {
        "schema": "scene/1",
        "id": "mini",
        "size_class": "small",
        "bounds": [0.0, 0.0, 9.9, 9.9],
        "walls": [],
        "receptacles": [
            {"name": "t0", "rect": [4.0, 4.0, 5.0, 4.5], "height": 0.9, "open": True}
        ],
        "spawn_regions": [[1.0, 1.0, 9.0, 9.0]],
    }
    doc.update(overrides)
    return doc
