"""
Writes every report a run produced as `<name>.json` and every artifact a
plugin registered, into `output_dir`.

Reports carry no timestamps, so two runs of one config write identical
files.
"""

import logging
from typing import TYPE_CHECKING

from cslab.hookspec import hook_impl

if TYPE_CHECKING:
    from cslab import Cslab

logger = logging.getLogger(__name__)


@hook_impl
def save(cslab: "Cslab") -> None:
    output_dir = cslab.output_dir
    for name, report in sorted(cslab.reports.items()):
        path = output_dir / f"{name}.json"
        path.write_text(report.model_dump_json(indent=2) + "\n")
        cslab.written.append(path)
        logger.debug("wrote %s", path)
    for filename, writer in sorted(cslab.writers.items()):
        path = writer(output_dir / filename)
        cslab.written.append(path)
        logger.debug("wrote %s", path)
    cslab.console.log(f"wrote {len(cslab.written)} files to {output_dir}")
