"""CSV and table rendering of report bundles.

CSV files open with ``# key: value`` provenance lines followed by the
command's fixed header and long-format rows. Floats are printed with 9
significant digits in CSV and 4 in tables, or repr-exact with
``full_precision``. Rendering is deterministic: identical bundles give
identical bytes.
"""

import csv
import io
import math
from pathlib import Path

from misbelief.schemas.report import Cell, ReportBundle, ReportTable

CSV_DIGITS = 9
TABLE_DIGITS = 4


def format_cell(value: Cell, digits: int, full_precision: bool = False) -> str:
    """Render one cell; booleans and integers are printed as-is."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        if full_precision:
            return repr(value)
        text = f"{value:.{digits}g}"
        # Avoid a distracting "-0" for values that round to zero
        return "0" if text in ("-0", "-0.0") else text
    return value


def provenance_lines(bundle: ReportBundle) -> list[str]:
    provenance = bundle.provenance
    lines = [
        f"tool_version: {provenance.tool_version}",
        f"command: {provenance.command.value}",
        f"input_digest: {provenance.input_digest or '-'}",
        f"scenario: {provenance.scenario_name or '-'}",
        f"kind: {provenance.scenario_kind or '-'}",
        f"seed: {provenance.seed}",
    ]
    lines += [f"{key}: {value}" for key, value in sorted(provenance.parameters.items())]
    return lines


def render_csv(bundle: ReportBundle, full_precision: bool = False) -> str:
    output = io.StringIO()
    for line in provenance_lines(bundle):
        output.write(f"# {line}\n")
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(bundle.header)
    for row in bundle.rows:
        writer.writerow([format_cell(cell, CSV_DIGITS, full_precision) for cell in row])
    return output.getvalue()


def write_csv(bundle: ReportBundle, path: Path, full_precision: bool = False) -> None:
    path.write_text(render_csv(bundle, full_precision), encoding="utf-8")


def render_table(table: ReportTable, full_precision: bool = False) -> str:
    """Fixed-width text table with right-aligned cells."""
    cells = [[format_cell(cell, TABLE_DIGITS, full_precision) for cell in row] for row in table.rows]
    widths = [
        max([len(column)] + [len(row[c]) for row in cells]) for c, column in enumerate(table.columns)
    ]
    lines = [table.title, "  ".join(column.rjust(w) for column, w in zip(table.columns, widths, strict=True))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(cell.rjust(w) for cell, w in zip(row, widths, strict=True)) for row in cells]
    return "\n".join(lines)


def render_report(bundle: ReportBundle, full_precision: bool = False) -> str:
    """Provenance header, every human table and any notes."""
    blocks = ["\n".join(provenance_lines(bundle))]
    blocks += [render_table(table, full_precision) for table in bundle.tables]
    if bundle.notes:
        blocks.append("\n".join(bundle.notes))
    return "\n\n".join(blocks) + "\n"
