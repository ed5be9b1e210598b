"""Regenerate the packaged scene fixtures and default embodiment assets.

Writes JSON files under src/tandemsim/data/. Run after changing the fixture
builders or the default skeleton/clip/cache/robot parameters.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from tandemsim.fixtures import ALL_SCENE_IDS, fixture_scene_dict  # noqa: E402
from tandemsim.kinematics.assets import write_default_assets  # noqa: E402


def main() -> int:
    data = Path(__file__).resolve().parent.parent / "src" / "tandemsim" / "data"
    scenes_dir = data / "scenes"
    scenes_dir.mkdir(parents=True, exist_ok=True)
    for sid in ALL_SCENE_IDS:
        path = scenes_dir / f"{sid}.json"
        with open(path, "w") as f:
            json.dump(fixture_scene_dict(sid), f, indent=1)
            f.write("\n")
        print(f"wrote {path}")
    for name in write_default_assets(data / "assets"):
        print(f"wrote {data / 'assets' / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
