import typer


def version_callback(value: bool) -> None:
    if value:
        from cslab import __version__

        typer.echo(f"cslab CLI Version: {__version__}")
        raise typer.Exit


app = typer.Typer(
    name="cslab",
    help="Carrying simplices of three dimensional competitive maps.",
    no_args_is_help=True,
)


@app.callback()
def main(
    version: bool = typer.Option(
        None,
        "--version",
        callback=version_callback,
        is_eager=True,
    ),
) -> None:
    # Do other global stuff, handle other global options here
    return


def cli() -> None:
    from cslab import Cslab

    m = Cslab()
    m._pm.hook.cli(cslab=m, app=app)
    app()


if __name__ == "__main__":
    cli()
