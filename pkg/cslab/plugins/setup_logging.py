"""
Setup Logging hook sets up the RichHandler for pretty console logs, and file
logs to the configured `log_dir`, or `output_dir/_logs` if `log_dir` is not
configured.  The log file will be named after the `<levelname>.log`

# The log files

```
cslab-out/_logs
├── debug.log
├── info.log
└── warning.log
```

# Configuration

``` json
{"logging": {"log_dir": "logs", "level": "DEBUG"}}
```

`level` sets the console level, the files always get all three levels.

# Disable Logging

If you do not want log files, disable the hook.

``` json
{"disabled_hooks": ["cslab.plugins.setup_logging"]}
```

"""

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Literal, Optional

import pydantic
from pydantic import ConfigDict
from rich.logging import RichHandler

from cslab.hookspec import hook_impl, register_attr

if TYPE_CHECKING:
    from cslab import Cslab


def has_rich_handler() -> bool:
    """
    Returns a boolean whether or not there is a RichHandler attached to the
    root logger.
    """

    logger = logging.getLogger()
    return bool([h for h in logger.handlers if isinstance(h, RichHandler)])


def has_file_handler(log_file: Path) -> bool:
    logger = logging.getLogger()
    existing_logger_files = [
        handler.baseFilename
        for handler in logger.handlers
        if isinstance(handler, logging.FileHandler)
    ]
    return str(log_file.absolute()) in existing_logger_files


class LoggingConfig(pydantic.BaseModel):
    log_dir: Optional[Path] = None
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    model_config = ConfigDict(extra="forbid")


class Config(pydantic.BaseModel):
    logging: LoggingConfig = LoggingConfig()


@hook_impl()
@register_attr("config_models")
def config_model(cslab: "Cslab") -> None:
    cslab.config_models.append(Config)


def log_dir(cslab: "Cslab") -> Path:
    return cslab.config.logging.log_dir or Path(cslab.config.output_dir) / "_logs"


def setup_text_log(cslab: "Cslab", level: int = logging.INFO) -> Path:
    """
    sets up a plain text log in the configured `log_dir`, or
    `output_dir/_logs` if `log_dir` is not configured.  The log file will be
    named after the `<levelname>.log`
    """
    log_file = log_dir(cslab) / (logging.getLevelName(level).lower() + ".log")

    if has_file_handler(log_file):
        return log_file

    log_file.parent.mkdir(parents=True, exist_ok=True)
    fh = logging.FileHandler(log_file)
    fh.setLevel(level)
    fh_formatter = logging.Formatter(
        "%(asctime)s %(name)-12s %(levelname)-8s %(message)s",
    )
    fh.setFormatter(fh_formatter)
    logging.getLogger("").addHandler(fh)

    return log_file


@hook_impl(tryfirst=True)
def configure(cslab: "Cslab") -> None:
    root = logging.getLogger("")
    root.setLevel(logging.DEBUG)
    setup_text_log(cslab, logging.DEBUG)
    setup_text_log(cslab, logging.INFO)
    setup_text_log(cslab, logging.WARNING)

    if not has_rich_handler():
        console = RichHandler(
            rich_tracebacks=True,
            console=cslab.console,
        )
        console.setLevel(cslab.config.logging.level)
        formatter = logging.Formatter("%(message)s")
        console.setFormatter(formatter)
        root.addHandler(console)


@hook_impl
def teardown(cslab: "Cslab") -> None:
    "close the file handlers opened for this run's log_dir"
    if "config" not in cslab.__dict__:
        return
    directory = str(log_dir(cslab).absolute())
    root = logging.getLogger("")
    for handler in list(root.handlers):
        if isinstance(handler, logging.FileHandler) and handler.baseFilename.startswith(
            directory
        ):
            root.removeHandler(handler)
            handler.close()
