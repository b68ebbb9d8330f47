"""
cslab plugin to create a pyinstrument profile if pyinstrument is installed.

The profile will be saved to <output_dir>/_profile/index.html

``` json
{"profiler": {"should_profile": false}}
```
"""

from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional

import pydantic
from pydantic import ConfigDict

from cslab.hookspec import hook_impl, register_attr

if TYPE_CHECKING:
    from cslab import Cslab

try:
    from pyinstrument import Profiler

    SHOULD_PROFILE = True
except ModuleNotFoundError:
    SHOULD_PROFILE = False
    "ignore if pyinstrument does not exist"
    ...


class ProfilerConfig(pydantic.BaseModel):
    should_profile: bool = False
    output_file: Optional[Path] = None
    profiler: Optional[Any] = pydantic.Field(None, exclude=True)
    model_config = ConfigDict(extra="forbid")


class Config(pydantic.BaseModel):
    profiler: ProfilerConfig = ProfilerConfig()


@hook_impl()
@register_attr("config_models")
def config_model(cslab: "Cslab") -> None:
    cslab.config_models.append(Config)


def output_file(cslab: "Cslab") -> Path:
    path = cslab.config.profiler.output_file or cslab.output_dir / "_profile" / "index.html"
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


@hook_impl
def configure(cslab: "Cslab") -> None:
    # profiler must exist in the same thread and cannot be configured through pydantic validation
    profiler = cslab.config.profiler
    if profiler.should_profile and not SHOULD_PROFILE:
        cslab.console.log(
            "[red]profiling was asked for but pyinstrument is not installed, "
            "pip install 'cslab\\[pyinstrument]'",
        )
        return
    if profiler.should_profile and profiler.profiler is None:
        profiler.profiler = Profiler()
        profiler.profiler.start()


@hook_impl(trylast=True)
def save(cslab: "Cslab") -> None:
    "stop the profiler and save as late as possible"
    profiler = cslab.config.profiler.profiler
    if profiler is not None and profiler.is_running:
        profiler.stop()
        output_file(cslab).write_text(profiler.output_html())
        cslab.console.print(profiler.output_text())


@hook_impl
def teardown(cslab: "Cslab") -> None:
    "stop the profiler on exit"
    if "config" not in cslab.__dict__:
        return
    profiler = cslab.config.profiler.profiler
    if profiler is not None and profiler.is_running:
        profiler.stop()
