"""Define hook specs."""

import functools
from typing import TYPE_CHECKING, Any, Callable, Dict, List

import pluggy

from cslab.lifecycle import LifeCycle

if TYPE_CHECKING:
    import typer

    from cslab import Cslab

HOOK_NAMESPACE = "cslab"
hook_spec = pluggy.HookspecMarker(HOOK_NAMESPACE)
hook_impl = pluggy.HookimplMarker(HOOK_NAMESPACE)


class CslabSpecs:
    """
    Namespace that defines all specifications for cslab hooks.

    config_model -> load_config -> load -> <analysis stages> -> save
    """


@hook_spec
def generic_lifecycle_method(
    cslab: "Cslab",
) -> Any: ...


@hook_spec
def cli(cslab: "Cslab", app: "typer.Typer") -> Any:
    "A hook that lets plugins add commands to the typer app"


for method in LifeCycle._member_map_:
    setattr(CslabSpecs, method, generic_lifecycle_method)
CslabSpecs.cli = cli

registered_attrs: Dict[str, List[Dict[str, Any]]] = {}


def register_attr(*attrs: Any) -> Callable:
    def decorator_register(
        func: Callable,
    ) -> Callable:
        for attr in attrs:
            if attr not in registered_attrs:
                registered_attrs[attr] = []
            registered_attrs[attr].append(
                {
                    "func": func,
                    "funcname": func.__code__.co_name,
                    "lifecycle": getattr(LifeCycle, func.__code__.co_name),
                },
            )

        @functools.wraps(func)
        def wrapper_register(cslab: "Cslab", *args: Any, **kwargs: Any) -> Any:
            return func(cslab, *args, **kwargs)

        return wrapper_register

    return decorator_register
