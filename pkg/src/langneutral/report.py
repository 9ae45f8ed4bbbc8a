"""Report rendering shared by every CLI subcommand.

Three formats (json, text, csv) carry the identical numeric values: numbers
are rendered with json.dumps in all of them, so a value printed in the text
table is byte-for-byte the value in the JSON document. Every report starts
with a provenance header (inputs, config, toolkit version, seed) and never
contains timestamps, keeping repeat runs byte-identical.
"""
from __future__ import annotations

import json

FORMATS = ("json", "text", "csv")


def provenance(command: str, config: dict, inputs: dict) -> dict:
    from . import __version__

    return {
        "tool": "langneutral",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": inputs,
    }


def _cell(value) -> str:
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, (int, float)):
        return json.dumps(value)
    return str(value)


def _columns(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    return cols


def render(rows: list[dict], fmt: str, prov: dict) -> str:
    if fmt == "json":
        return (
            json.dumps({"provenance": prov, "rows": rows}, sort_keys=True, indent=2)
            + "\n"
        )
    header = json.dumps(prov, sort_keys=True)
    if fmt == "csv":
        cols = _columns(rows)
        lines = ["# provenance: " + header, ",".join(cols)]
        for row in rows:
            lines.append(",".join(_cell(row.get(c, "")) for c in cols))
        return "\n".join(lines) + "\n"
    if fmt == "text":
        cols = _columns(rows)
        table = [cols] + [[_cell(row.get(c, "")) for c in cols] for row in rows]
        widths = [max(len(r[i]) for r in table) for i in range(len(cols))]
        lines = ["# provenance: " + header]
        for r in table:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def best_row(rows: list[dict], metric: str, layer_key: str = "layer") -> dict:
    """Max-over-layers summary row for --all-layers reports."""
    best = max(rows, key=lambda r: r[metric])
    out = dict(best)
    out[layer_key] = "best"
    out["from_layer"] = best[layer_key]
    return out
