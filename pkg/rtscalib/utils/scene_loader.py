"""Load synthetic scenes from YAML files."""

import logging
from pathlib import Path
from typing import Dict, List

from ..config import SceneSettings, parse_scene, read_yaml
from ..exceptions import ConfigError

logger = logging.getLogger(__name__)

SCENES_DIR = Path(__file__).resolve().parent.parent / "scenes"


def list_scenes(scenes_dir: str | Path = SCENES_DIR) -> List[str]:
    """Names of the bundled scene presets."""
    return sorted(p.stem for p in Path(scenes_dir).glob("*.yaml"))


def load_scene(scene: str | Path) -> SceneSettings:
    """
    Load a scene from a YAML file or a bundled preset name.

    Args:
        scene: Path to a scene YAML file, or the name of a preset in ``rtscalib/scenes``

    Returns:
        Validated SceneSettings
    """
    scene_path = Path(scene)

    if not scene_path.exists() and scene_path.suffix == "":
        preset = SCENES_DIR / f"{scene}.yaml"
        if preset.exists():
            scene_path = preset

    if not scene_path.exists():
        raise ConfigError(
            f"Scene file not found: {scene} (presets: {', '.join(list_scenes())})"
        )

    return parse_scene(read_yaml(scene_path))


def load_all_scenes(scenes_dir: str | Path = SCENES_DIR) -> Dict[str, SceneSettings]:
    """
    Load every scene of a directory.

    Args:
        scenes_dir: Directory containing scene files

    Returns:
        Scene name -> settings; files that fail validation are skipped with a warning
    """
    scenes_dir = Path(scenes_dir)

    if not scenes_dir.exists():
        raise ConfigError(f"Scenes directory not found: {scenes_dir}")

    scenes = {}
    for yaml_file in sorted(scenes_dir.glob("*.yaml")):
        try:
            scenes[yaml_file.stem] = load_scene(yaml_file)
        except ConfigError as e:
            logger.warning("Failed to load %s: %s", yaml_file, e)

    return scenes
