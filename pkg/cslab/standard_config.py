"""Standard Config.
A module to load cslab run configs from a users project space.

A run config is usually one JSON file handed to a command with `--config`.
When no file is given the project directory is searched for the first of the
local files below.  Values given on the command line are merged over the
file.

## Usage:

``` python
from cslab import standard_config

# Retrieve any overrides from the user
overrides = {"grid": {"level": 64}}
config = standard_config.load("lg-b.json", overrides)
```

## Resolution Order

* The file passed with `--config`, or the first local file with a cslab key
* Environment variables prefixed with `CSLAB_` (applied by the settings model)
* Overrides

### local files to consider

* <project_home>/cslab.json
* <project_home>/.cslab.json
* <project_home>/cslab.toml
* <project_home>/cslab.yml
* <project_home>/pyproject.toml, under `[tool.cslab]`

"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import anyconfig
from deepmerge import always_merger

from cslab.errors import ConfigError

logger = logging.getLogger(__name__)

path_spec_type = List

PARSERS = {
    ".json": "json",
    ".toml": "toml",
    ".yml": "yaml",
    ".yaml": "yaml",
    ".ini": "ini",
}


def _get_local_path_specs(project_home: Union[str, Path]) -> path_spec_type:
    """
    Generate a list of standard pathspecs for local, project directory config files.
    """
    home = Path(project_home)
    return [
        {"path_specs": home / "cslab.json", "ac_parser": "json", "keys": []},
        {"path_specs": home / ".cslab.json", "ac_parser": "json", "keys": []},
        {"path_specs": home / "cslab.toml", "ac_parser": "toml", "keys": []},
        {"path_specs": home / "cslab.yml", "ac_parser": "yaml", "keys": []},
        {"path_specs": home / "pyproject.toml", "ac_parser": "toml", "keys": ["tool", "cslab"]},
    ]


def _get_attrs(attrs: list, config: Dict) -> Dict:
    """Get nested config data from a list of keys.

    specifically written for pyproject.toml which needs to get `tool` then `cslab`
    """
    for attr in attrs:
        config = config[attr]
    return config


def _parse(path: Path, parser: Optional[str] = None) -> Dict:
    "read one config file, turning syntax errors into a ConfigError with a position"
    parser = parser or PARSERS.get(path.suffix.lower(), "json")
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        data = anyconfig.load(path, ac_parser=parser)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path} is not UTF-8: {e}") from e
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold an object at the top level")
    return dict(data)


def _load_files(config_path_specs: path_spec_type) -> Dict:
    """Use anyconfig to load config files stopping at the first one that exists.

    config_path_specs (list): a list of pathspecs and keys to load
    """
    for file in config_path_specs:
        if not file["path_specs"].exists():
            # ignore missing files
            continue
        config = _parse(file["path_specs"], file["ac_parser"])

        try:
            return _get_attrs(file["keys"], config)
        except KeyError:
            # ignore incorrect keys
            continue

    return {}


def merge(base: Dict, overrides: Dict) -> Dict:
    "deep merge overrides into a copy of base, dropping None overrides"
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return always_merger.merge(json.loads(json.dumps(base)), overrides)


def load(
    path: Optional[Union[Path, str]] = None,
    overrides: Optional[Dict] = None,
    project_home: Union[Path, str] = ".",
) -> Dict:
    """Load a run config.

    Args:
        path: explicit config file, searched for in project_home when None
        overrides: nested values merged over the file
    """
    if path is not None:
        config = _parse(Path(path))
    else:
        config = _load_files(_get_local_path_specs(project_home))
    return merge(config, overrides or {})


def read_hooks(path: Union[Path, str]) -> Dict:
    "the hooks and disabled_hooks keys of a config file, if it can be read"
    try:
        config = _parse(Path(path))
    except ConfigError:
        # reported properly by load_config
        return {}
    return {k: config[k] for k in ("hooks", "disabled_hooks") if k in config}


def line_of(path: Optional[Union[Path, str]], key: str) -> Optional[int]:
    "first line of a config file mentioning a quoted key"
    if path is None or not Path(path).exists():
        return None
    needle = f'"{key}"'
    for number, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if needle in line:
            return number
    return None
