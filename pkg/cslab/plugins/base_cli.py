"""
cslab's command line.

Every analysis command reads a run config, runs the lifecycle stages it
needs and writes its reports to the output directory.

``` bash
cslab hypotheses --config lg-b.json
cslab simplex --config lg-a.json --level 32
cslab fixed-points --config lg-b.json
cslab classify --config lg-b.json
cslab convexity --config lg-c.json --level 64
cslab cone --config lg-b.json
cslab separation --config lg-b.json
cslab sweep --config sweep.json
```

`--out`, `--level` and `--seed` override the config file.  The exit code is
0 on success, 1 for a config error, 2 for a numerical failure and 3 when a
hypothesis check fails.  On failure `error.json` names the error.

``` bash
# show the validated config with every default filled in
cslab config show --config lg-b.json

# remove the output directory and the surface cache
cslab clean --dry-run
```
"""

import json
import logging
import shutil
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional

import typer
from rich import print as rich_print

from cslab.errors import CslabError
from cslab.hookspec import hook_impl
from cslab.lifecycle import COMMANDS, LifeCycle
from cslab.plugins.manifest import write_manifest

if TYPE_CHECKING:
    from cslab import Cslab

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_DIR = Path("cslab-out")

HELP = {
    "hypotheses": "Sample the standing hypotheses, exit 3 when one fails.",
    "fixed-points": "Locate axial, planar and interior fixed points.",
    "simplex": "Compute the carrying simplex surface, its face curves and checks.",
    "classify": "Apply the eigenvalue criterion at every boundary fixed point.",
    "convexity": "Test convexity of the global attractor with both methods.",
    "cone": "Estimate tangent cones at planar fixed points and check the lemmas.",
    "separation": "Measure exponential separation along a face orbit.",
    "sweep": "Sweep Leslie-Gower parameters and tally the implication.",
}


def make_pretty() -> None:
    """
    This is a helper function that enables suppresses tracebacks from
    frameworks like `click` that can make your traceback long and hard
    to follow.  It also makes evrerything more colorful and easier to
    follow.
    """
    import click
    import pluggy
    import typer
    from rich import pretty as _pretty
    from rich import traceback

    _pretty.install()
    traceback.install(
        show_locals=False,
        suppress=[
            pluggy,
            click,
            typer,
        ],
    )


def overrides(
    out: Optional[Path] = None, level: Optional[int] = None, seed: Optional[int] = None
) -> Dict[str, Any]:
    "nested config values from the command line flags that were given"
    values: Dict[str, Any] = {}
    if out is not None:
        values["output_dir"] = str(out)
    if level is not None:
        values["grid"] = {"level": level}
    if seed is not None:
        values["seed"] = seed
    return values


def error_dir(runner: "Cslab") -> Path:
    config = runner.__dict__.get("config")
    if config is not None:
        return Path(config.output_dir)
    return Path(runner.overrides.get("output_dir", DEFAULT_OUTPUT_DIR))


def write_error(runner: "Cslab", error: CslabError) -> Path:
    "error.json and the manifest for a run that stopped on an error"
    output_dir = error_dir(runner)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / "error.json"
    path.write_text(
        json.dumps(
            {
                "type": type(error).__name__,
                "message": str(error),
                "exit_code": error.exit_code,
            },
            indent=2,
        )
        + "\n"
    )
    runner.written.append(path)
    write_manifest(runner, output_dir, status=type(error).__name__)
    return path


def execute(runner: "Cslab", quiet: bool = False) -> int:
    """
    Run a configured cslab through save, returning the exit code.
    """
    from cslab.cli.summary import Summary

    try:
        runner.run(LifeCycle.save)
        if runner.deferred:
            raise runner.deferred[0]
    except CslabError as e:
        logger.error("%s: %s", type(e).__name__, e)
        write_error(runner, e)
        return e.exit_code
    finally:
        runner.teardown()
    if not quiet:
        rich_print(Summary(runner))
    return 0


@hook_impl()
def cli(app: typer.Typer, cslab: "Cslab") -> None:
    """
    cslab hook to implement base cli commands.
    """

    def register(name: str) -> None:
        def command(
            config: Optional[Path] = typer.Option(
                None, "--config", "-c", help="run config, JSON, TOML or YAML"
            ),
            out: Optional[Path] = typer.Option(None, "--out", "-o", help="output directory"),
            level: Optional[int] = typer.Option(None, "--level", help="grid level"),
            seed: Optional[int] = typer.Option(None, "--seed", help="random seed"),
            quiet: bool = typer.Option(False, "--quiet", "-q"),
            pretty: bool = True,
        ) -> None:
            if pretty:
                make_pretty()
            cslab.console.quiet = quiet
            try:
                runner = type(cslab)(
                    console=cslab.console,
                    config_path=config,
                    overrides=overrides(out, level, seed),
                    targets=[name],
                )
            except CslabError as e:
                typer.echo(f"{type(e).__name__}: {e}", err=True)
                raise typer.Exit(e.exit_code)
            code = execute(runner, quiet)
            if code:
                raise typer.Exit(code)

        command.__doc__ = HELP[name]
        app.command(name)(command)

    for name in COMMANDS:
        register(name)

    config_app = typer.Typer()
    app.add_typer(config_app, name="config")

    @config_app.callback()
    def config() -> None:
        "configuration management"

    @config_app.command()
    def show(
        config: Optional[Path] = typer.Option(None, "--config", "-c"),
        out: Optional[Path] = typer.Option(None, "--out", "-o"),
        level: Optional[int] = typer.Option(None, "--level"),
        seed: Optional[int] = typer.Option(None, "--seed"),
    ) -> None:
        "print the validated config with defaults filled in"
        cslab.console.quiet = True
        runner = type(cslab)(
            console=cslab.console,
            config_path=config,
            overrides=overrides(out, level, seed),
        )
        try:
            runner.run(LifeCycle.load_config)
        except CslabError as e:
            typer.echo(f"{type(e).__name__}: {e}", err=True)
            raise typer.Exit(e.exit_code)
        rich_print(runner.config)

    @app.command()
    def clean(
        config: Optional[Path] = typer.Option(None, "--config", "-c"),
        out: Optional[Path] = typer.Option(None, "--out", "-o"),
        quiet: bool = typer.Option(False, "--quiet", "-q"),
        dry_run: bool = typer.Option(False, "--dry-run"),
    ) -> None:
        "remove the output directory and the surface cache"
        from cslab import CACHE_DIR

        cslab.console.quiet = True
        runner = type(cslab)(console=cslab.console, config_path=config, overrides=overrides(out))
        try:
            runner.run(LifeCycle.load_config)
            output_dir = Path(runner.config.output_dir)
        except CslabError:
            output_dir = Path(out or DEFAULT_OUTPUT_DIR)
        cslab.close_cache()
        targets: List[Path] = [p for p in (output_dir, CACHE_DIR) if p.exists()]
        for path in targets:
            if not quiet:
                typer.echo(f"{'would remove' if dry_run else 'removing'} {path}")
            if not dry_run:
                shutil.rmtree(path)
