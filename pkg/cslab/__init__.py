"""cslab computes carrying simplices of three dimensional competitive maps.

The `Cslab` class runs a pluggy lifecycle the same way for every cli command.
Plugins contribute config sections, produce results onto the instance and
register reports and artifacts for the `save` stage.

``` python
from cslab import Cslab

m = Cslab(config_path="lg-b.json", targets=["classify"])
m.run()
m.classification.verdict
```
"""

# annotations needed to return self
from __future__ import annotations

import atexit
import importlib
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional

import pluggy
import pydantic
from diskcache import Cache
from rich.console import Console
from rich.table import Table

from cslab import hookspec, standard_config
from cslab.__about__ import __version__
from cslab.lifecycle import COMMANDS, LifeCycle, stages_for

logger = logging.getLogger("cslab")

DEFAULT_HOOKS = [
    "cslab.plugins.config_model",
    "cslab.plugins.create_models",
    "cslab.plugins.setup_logging",
    "cslab.plugins.pyinstrument",
    "cslab.plugins.load_model",
    "cslab.plugins.hypotheses",
    "cslab.plugins.fixed_points",
    "cslab.plugins.surface",
    "cslab.plugins.classify",
    "cslab.plugins.convexity",
    "cslab.plugins.cone",
    "cslab.plugins.separation",
    "cslab.plugins.sweep",
    "cslab.plugins.reports",
    "cslab.plugins.manifest",
    "cslab.plugins.base_cli",
]

CACHE_DIR = Path(".cslab.cache")


class HooksConfig(pydantic.BaseModel):
    hooks: list = ["default"]
    disabled_hooks: list = []

    def expanded(self) -> List[str]:
        "the hook list with `default` replaced by the default hooks"
        try:
            default_index = self.hooks.index("default")
        except ValueError:
            # 'default' is not in hooks , do not replace with default_hooks
            return [hook for hook in self.hooks if hook not in self.disabled_hooks]
        hooks = [
            *self.hooks[:default_index],
            *DEFAULT_HOOKS,
            *self.hooks[default_index + 1 :],
        ]
        return [hook for hook in hooks if hook not in self.disabled_hooks]


class Cslab:
    def __init__(
        self: "Cslab",
        console: Optional[Console] = None,
        config_path: Optional[Path] = None,
        overrides: Optional[Dict[str, Any]] = None,
        targets: Optional[Iterable[str]] = None,
    ) -> None:
        self.__version__ = __version__
        self.stages_ran: set = set()
        self.config_path = Path(config_path) if config_path is not None else None
        self.overrides = dict(overrides or {})
        self.targets = list(targets or [])
        unknown = [target for target in self.targets if target not in COMMANDS]
        if unknown:
            raise ValueError(f"unknown commands {unknown}, expected one of {COMMANDS}")
        self.stages_wanted = stages_for(self.targets)
        self._cache: Optional[Cache] = None
        self._pm = pluggy.PluginManager(hookspec.HOOK_NAMESPACE)
        self._pm.add_hookspecs(hookspec.CslabSpecs)
        self.registered_attrs = hookspec.registered_attrs
        self.config_models: List[type] = []
        self.reports: Dict[str, pydantic.BaseModel] = {}
        self.writers: Dict[str, Callable[[Path], Path]] = {}
        self.written: List[Path] = []
        self.deferred: List[Exception] = []
        self.timings: Dict[str, float] = {}

        raw_hooks = (
            standard_config.read_hooks(self.config_path) if self.config_path is not None else {}
        )
        self.hooks_conf = HooksConfig.model_validate(raw_hooks)
        self.hooks_conf.hooks = self.hooks_conf.expanded()
        self._register_hooks()
        if console is not None:
            self._console = console
        atexit.register(self.teardown)

    @property
    def cache(self: "Cslab") -> Cache:
        if self._cache is not None:
            return self._cache
        CACHE_DIR.mkdir(exist_ok=True)
        self._cache = Cache(CACHE_DIR, statistics=True)
        with self._cache as cache:
            self.init_cache_stats = cache.stats()
        return self._cache

    def __getattr__(self: "Cslab", item: str) -> Any:
        if item.startswith("_"):
            raise AttributeError(f"'Cslab' object has no attribute '{item}'")

        if item in self._pm.hook.__dict__:
            # item is a hook, return a callable function
            return lambda: self.run(item)

        if item in self.registered_attrs:
            # item is created by a plugin, run it
            stage_to_run_to = max(
                [attr["lifecycle"] for attr in self.registered_attrs[item]],
            ).name
            if stage_to_run_to not in self.stages_ran:
                self.console.log(
                    f"Running to [purple]{stage_to_run_to}[/] to retrieve [purple]{item}[/]"
                )
                self.run(stage_to_run_to)
            if item in self.__dict__:
                return self.__dict__[item]
            raise AttributeError(f"{item} was not produced by this run of cslab")

        # cslab does not know what this is, raise
        raise AttributeError(f"'Cslab' object has no attribute '{item}'")

    def __rich__(self: "Cslab") -> Table:
        grid = Table.grid()
        grid.add_column("label")
        grid.add_column("value")

        for label, value in self.describe().items():
            grid.add_row(label, value)

        return grid

    def wants(self: "Cslab", stage: str) -> bool:
        "whether the commands this run serves need an analysis stage"
        return stage in self.stages_wanted

    def bust_cache(self: "Cslab") -> Cslab:
        with self.cache as cache:
            cache.clear()
        return self

    def close_cache(self: "Cslab") -> None:
        if self._cache is not None:
            self._cache.close()
            self._cache = None

    def make_hash(self, *keys: Any) -> str:
        import xxhash

        str_keys = [str(key) for key in keys]
        hash = xxhash.xxh64("".join(str_keys).encode("utf-8")).hexdigest()
        return hash

    def cached(self: "Cslab", key: str, compute: Callable[[], Any], enabled: bool = True) -> Any:
        """
        Return the value stored under key, computing and storing it on a miss.
        """
        if not enabled:
            return compute()
        value = self.cache.get(key)
        if value is not None:
            logger.info("cache hit %s", key)
            return value
        value = compute()
        self.cache.set(key, value, expire=self.config.cache_expire)
        return value

    @property
    def console(self: "Cslab") -> Console:
        try:
            return self._console
        except AttributeError:
            self._console = Console()
            return self._console

    @property
    def output_dir(self: "Cslab") -> Path:
        path = Path(self.config.output_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def add_report(self: "Cslab", name: str, report: pydantic.BaseModel) -> None:
        self.reports[name] = report

    def add_artifact(self: "Cslab", filename: str, writer: Callable[[Path], Path]) -> None:
        self.writers[filename] = writer

    def describe(self: "Cslab") -> dict[str, str]:
        return {
            "version": __version__,
            "targets": ", ".join(self.targets) or "none",
            "stages ran": ", ".join(
                stage for stage in LifeCycle._member_map_ if stage in self.stages_ran
            ),
        }

    def _register_hooks(self: "Cslab") -> None:
        sys.path.append(os.getcwd())
        for hook in self.hooks_conf.hooks:
            try:
                # module style plugins
                plugin = importlib.import_module(hook)
            except ModuleNotFoundError as e:
                # class style plugins
                if "." in hook:
                    try:
                        mod = importlib.import_module(".".join(hook.split(".")[:-1]))
                        plugin = getattr(mod, hook.split(".")[-1])
                    except ModuleNotFoundError as e:
                        raise ModuleNotFoundError(f"module {hook} not found\n{sys.path}") from e
                else:
                    raise e

            self._pm.register(plugin)

    def teardown(self: "Cslab") -> Cslab:
        """give special access to the teardown lifecycle method"""
        if "teardown" in self.stages_ran:
            return self
        self._pm.hook.teardown(cslab=self)
        self.stages_ran.add("teardown")
        self.close_cache()
        return self

    def run(self: "Cslab", lifecycle: Optional[LifeCycle] = None) -> Cslab:
        if lifecycle is None:
            lifecycle = LifeCycle.save

        if isinstance(lifecycle, str):
            lifecycle = LifeCycle[lifecycle]

        stages_to_run = [
            m
            for m in LifeCycle._member_map_
            if (LifeCycle[m] <= lifecycle) and (m not in self.stages_ran) and m != "teardown"
        ]

        if not stages_to_run:
            self.console.log(f"{lifecycle.name} already ran")
            return self

        self.console.log(f"running {stages_to_run}")
        for stage in stages_to_run:
            self.console.log(f"{stage} running")
            start = time.perf_counter()
            getattr(self._pm.hook, stage)(cslab=self)
            self.timings[stage] = round(time.perf_counter() - start, 6)
            self.stages_ran.add(stage)
            self.console.log(f"{stage} complete")

        if self._cache is None:
            return self

        with self.cache as cache:
            hits, misses = cache.stats()

        hits -= self.init_cache_stats[0]
        misses -= self.init_cache_stats[1]

        if hits + misses > 0:
            self.console.log(
                f"run cache hit rate {round(hits / (hits + misses) * 100, 2)}%",
            )
            self.console.log(f"run cache hits/misses {hits}/{misses}")

        return self


def parse_config(
    path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None
) -> Any:
    "the validated run config, with every plugin section and default filled in"
    m = Cslab(config_path=path, overrides=overrides)
    m.run(LifeCycle.load_config)
    return m.config


def run_command(
    command: str,
    config_path: Optional[Path] = None,
    overrides: Optional[Dict[str, Any]] = None,
    console: Optional[Console] = None,
) -> int:
    """
    Run one cli command without the cli, returning its exit code.  Reports
    and artifacts land in the configured output directory.
    """
    from cslab.plugins.base_cli import execute

    m = Cslab(console=console, config_path=config_path, overrides=overrides, targets=[command])
    return execute(m, quiet=True)


__all__ = ["Cslab", "DEFAULT_HOOKS", "HooksConfig", "__version__", "parse_config", "run_command"]
