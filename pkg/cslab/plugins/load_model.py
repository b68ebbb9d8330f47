"""
Builds the map model named by the config's `model` section.

``` json
{"model": {"type": "ricker", "r": [0.6, 0.6, 0.6], "a": [[1, 0.4, 0.4], [0.4, 1, 0.4], [0.4, 0.4, 1]]}}
```

Every command but `sweep` needs a model.  External models are started
lazily on first use and stopped on teardown.
"""

import logging
from typing import TYPE_CHECKING

from cslab.errors import ConfigError
from cslab.hookspec import hook_impl, register_attr
from cslab.models import MapModel

if TYPE_CHECKING:
    from cslab import Cslab

logger = logging.getLogger(__name__)


@hook_impl
def validate_config(cslab: "Cslab") -> None:
    needs_model = bool(cslab.stages_wanted - {"sweep"})
    if needs_model and cslab.config.model is None:
        raise ConfigError(f"{', '.join(cslab.targets)} needs a model section in the config")


@hook_impl
@register_attr("model")
def load(cslab: "Cslab") -> None:
    if cslab.config.model is None:
        return
    cslab.model = MapModel(params=cslab.config.model)
    logger.info("loaded %s model %s", cslab.model.kind.value, cslab.model.fingerprint())


@hook_impl
def teardown(cslab: "Cslab") -> None:
    model = cslab.__dict__.get("model")
    if model is not None:
        model.close()
