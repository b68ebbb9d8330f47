"""The LifeCycle is a core component for the internal workings of cslab.  It
sets forth the hooks available, the order they run in, and which analysis
stages each cli command needs.

### Usage

``` python
from cslab.lifecycle import LifeCycle

step = LifeCycle.surface
```

"""

from enum import Enum, auto
from functools import total_ordering
from typing import Dict, FrozenSet, Iterable, Set


@total_ordering
class LifeCycle(Enum):
    """
    LifeCycle currently supports the following steps.


    * config_model - plugins contribute config sections
    * create_models - assemble the config class
    * load_config - read and validate the run config
    * configure - logging, profiling, cache
    * validate_config - command specific checks
    * load - build the map model
    * hypotheses - sampled (H2), (H3'), (H4'), (H6) checks
    * fixed_points - axial, planar and interior fixed points
    * surface - face curves and the carrying simplex surface
    * classify - boundary spectra and the neat embedding criterion
    * convexity - midpoint and hull convexity tests
    * cone - tangent cone estimates at planar fixed points
    * separation - exponential separation along a face orbit
    * sweep - parameter sweeps
    * save - store reports and artifacts to disk
    * teardown - runs on exit

    """

    config_model = auto()
    create_models = auto()
    load_config = auto()
    configure = auto()
    validate_config = auto()
    load = auto()
    hypotheses = auto()
    fixed_points = auto()
    surface = auto()
    classify = auto()
    convexity = auto()
    cone = auto()
    separation = auto()
    sweep = auto()
    save = auto()
    teardown = auto()

    def __lt__(self, other: object) -> bool:
        """
        Determine whether other is less than this instance.
        """
        if isinstance(other, LifeCycle):
            return self.value < other.value
        if isinstance(other, int):
            return self.value < other
        return NotImplemented

    def __eq__(self, other: object) -> bool:
        """
        Determine whether other is equal to this instance.
        """
        if isinstance(other, LifeCycle):
            return self.value == other.value
        if isinstance(other, int):
            return self.value == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.value)


REQUIRES: Dict[str, FrozenSet[str]] = {
    "hypotheses": frozenset({"hypotheses"}),
    "fixed-points": frozenset({"fixed_points"}),
    "simplex": frozenset({"surface"}),
    "classify": frozenset({"fixed_points", "classify"}),
    "convexity": frozenset({"surface", "convexity"}),
    "cone": frozenset({"fixed_points", "classify", "surface", "cone"}),
    "separation": frozenset({"fixed_points", "surface", "separation"}),
    "sweep": frozenset({"sweep"}),
}

COMMANDS = tuple(REQUIRES)


def stages_for(commands: Iterable[str]) -> Set[str]:
    "union of the analysis stages needed by the given cli commands"
    stages: Set[str] = set()
    for command in commands:
        stages |= REQUIRES[command]
    return stages
