"""
The core run config.  Every other plugin adds its own section to the final
`Config` through the `config_model` hook, and `create_models` joins them.

``` json
{
  "model": {"type": "leslie_gower",
            "lambda": [3, 3, 3],
            "a": [[1, 0.5, 0.5], [0.5, 1, 0.5], [0.5, 0.5, 1]]},
  "seed": 0,
  "output_dir": "cslab-out"
}
```

Unknown keys are rejected, and a close match is suggested when there is one.
`CSLAB_WORKERS` and the other `CSLAB_` variables are read from the
environment and win over the file.
"""

import difflib
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any, Dict, List, Optional, Tuple, Type, Union

import pydantic
from pydantic import ConfigDict, Field, PositiveInt
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource
from rich.jupyter import JupyterMixin
from rich.pretty import Pretty

from cslab import standard_config
from cslab.errors import ConfigError
from cslab.hookspec import hook_impl, register_attr
from cslab.models import ModelSpec

if TYPE_CHECKING:
    from cslab import Cslab


class Config(BaseSettings, JupyterMixin):
    model: Optional[Annotated[ModelSpec, Field(discriminator="type")]] = None
    seed: int = 0
    output_dir: Path = Path("cslab-out")
    workers: PositiveInt = 1
    cache: bool = True
    cache_expire: PositiveInt = 3600
    hooks: List[str] = ["default"]
    disabled_hooks: List[str] = []
    model_config = ConfigDict(env_prefix="cslab_", extra="forbid")

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return env_settings, init_settings

    @property
    def __rich__(self) -> Pretty:
        return lambda: Pretty(self)


@hook_impl(tryfirst=True)
@register_attr("config_models")
def config_model(cslab: "Cslab") -> None:
    cslab.config_models.append(Config)


def _known_keys(model: Any, loc: Tuple[Union[str, int], ...]) -> List[str]:
    "field names (and aliases) of the nested model a validation error points into"
    for part in loc:
        if not isinstance(part, str) or not hasattr(model, "model_fields"):
            return []
        field = model.model_fields.get(part)
        if field is None:
            return []
        model = field.annotation
        if not hasattr(model, "model_fields"):
            args = [a for a in getattr(model, "__args__", ()) if hasattr(a, "model_fields")]
            model = args[0] if len(args) == 1 else None
    if model is None or not hasattr(model, "model_fields"):
        return []
    return [field.alias or name for name, field in model.model_fields.items()]


def describe_errors(
    error: pydantic.ValidationError, model: Any, path: Optional[Path] = None
) -> str:
    """
    One line per schema violation, naming the field path, the config file
    line when it can be found and a suggestion for misspelled keys.
    """
    lines = []
    for err in error.errors():
        loc = tuple(err["loc"])
        field = ".".join(str(part) for part in loc) or "<root>"
        message = err["msg"]
        if err["type"] == "extra_forbidden" and loc:
            message = f"unknown key {loc[-1]!r}"
            matches = difflib.get_close_matches(str(loc[-1]), _known_keys(model, loc[:-1]), n=1)
            if matches:
                message += f", did you mean {matches[0]!r}?"
        where = f"{path}" if path is not None else "config"
        line = standard_config.line_of(path, str(loc[-1])) if loc else None
        if line is not None:
            where = f"{where}:{line}"
        lines.append(f"{where}: {field}: {message}")
    return "\n".join(lines)


def parse_config(
    cslab_or_model: Any,
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> Any:
    """
    Read and validate a run config, raising ConfigError with a diagnostic
    for every violation.
    """
    model = getattr(cslab_or_model, "Config", cslab_or_model)
    data = standard_config.load(path, overrides)
    try:
        return model(**data)
    except pydantic.ValidationError as e:
        raise ConfigError(
            describe_errors(e, model, Path(path) if path is not None else None)
        ) from e


@hook_impl(tryfirst=True)
@register_attr("config")
def load_config(cslab: "Cslab") -> None:
    if "config" not in cslab.__dict__.keys():
        cslab.config = parse_config(cslab, cslab.config_path, cslab.overrides)
