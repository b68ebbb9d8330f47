"""
A rich panel summarising the verdicts of the reports a run produced.

``` bash
cslab classify --config lg-b.json
```

```
╭─ cslab ─────────────────────────────╮
│ classify  NeatlyEmbeddedPredicted   │
│ wrote     classify.json             │
╰─────────────────────────────────────╯
```
"""

from typing import TYPE_CHECKING, Any, Optional, Union

from rich.panel import Panel
from rich.table import Table

if TYPE_CHECKING:
    from cslab import Cslab

COLORS = {
    "Pass": "green1",
    "Convex": "green1",
    "NeatlyEmbeddedPredicted": "green1",
    "NotTangent": "green1",
    "Fail": "red",
    "Nonconvex": "red",
    "CriterionFails": "red",
    "Tangent": "red",
}


def headline(report: Any) -> Optional[str]:
    "the one value that best sums up a report"
    for attr in ("verdict", "passed", "nu_hat", "counterexamples"):
        value = getattr(report, attr, None)
        if value is not None:
            return str(getattr(value, "value", value))
    for attr in ("midpoint", "fit"):
        inner = getattr(report, attr, None)
        if inner is not None:
            return headline(inner)
    results = getattr(report, "results", None)
    if results is not None:
        return ", ".join(r.tangency.verdict.value for r in results)
    return None


class Summary:
    def __init__(self, m: "Cslab", simple: bool = False) -> None:
        self.m = m
        self.simple = simple

    def get_grid(self) -> Table:
        "create a rich grid to display the summary"
        grid = Table.grid(expand=True, padding=(0, 2))
        grid.add_column("report", style="bold gold1")
        grid.add_column("value")
        for name, report in sorted(self.m.reports.items()):
            value = headline(report)
            if value is None:
                continue
            color = COLORS.get(value, "white")
            grid.add_row(name, f"[{color}]{value}[/]")
        if self.m.written:
            grid.add_row("wrote", f"{len(self.m.written)} files")
        return grid

    def __rich__(self) -> Union[Panel, Table]:
        grid = self.get_grid()

        if self.simple:
            return grid
        else:
            return Panel(
                grid,
                title="[gold1]cslab[/]",
                border_style="magenta",
                expand=False,
            )
