from typing import TYPE_CHECKING

from more_itertools import unique_everseen
from pydantic import create_model

from cslab.hookspec import hook_impl, register_attr

if TYPE_CHECKING:
    from cslab import Cslab


@hook_impl
@register_attr("Config")
def create_models(cslab: "Cslab") -> None:
    "join every plugin's config section into one settings class"
    cslab.Config = create_model(
        "Config",
        __base__=tuple(unique_everseen(cslab.config_models)),
    )
