"""Result serialization: delimited table or JSON with the config embedded.

The CSV schema is fixed at 11 columns. Floats are written with repr so a
load reproduces every value bit for bit; a missing GCMD (TDD rows, K = 1)
is an empty field in CSV and null in JSON.
"""

import dataclasses
import json

from .campaign import CampaignResult, CellStats
from .config import ScenarioConfig

__all__ = ["emit_results", "load_results", "CSV_COLUMNS"]

CSV_COLUMNS = (
    "policy", "snr_db", "t_coh_ms", "q_bits", "K",
    "mean_throughput", "stderr_throughput", "mean_m_bs",
    "mean_omega", "mean_gcmd", "n",
)

_TUPLE_FIELDS = ("snr_db", "t_coh_ms", "q_bits", "policies")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _cell_row(cell: CellStats) -> list:
    return [
        cell.policy, cell.snr_db, cell.t_coh_ms, cell.q_bits, cell.k_users,
        cell.mean_throughput, cell.stderr_throughput, cell.mean_m_bs,
        cell.mean_omega, cell.mean_gcmd, cell.n,
    ]


def _cell_dict(cell: CellStats) -> dict:
    row = dict(zip(CSV_COLUMNS, _cell_row(cell)))
    row["mean_se"] = cell.mean_se
    return row


def emit_results(result: CampaignResult, fmt: str, path: str) -> str:
    """Write the aggregated cells to path as csv or json; returns the path."""
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for cell in result.cells:
            lines.append(",".join(_fmt(v) for v in _cell_row(cell)))
        payload = "\n".join(lines) + "\n"
    elif fmt == "json":
        doc = {
            "config": dataclasses.asdict(result.config),
            "cells": [_cell_dict(c) for c in result.cells],
        }
        payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(payload)
    return path


def load_results(path: str) -> CampaignResult:
    """Rebuild a CampaignResult from a JSON emit (exact round-trip)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    raw_cfg = dict(doc["config"])
    for key in _TUPLE_FIELDS:
        if key in raw_cfg:
            raw_cfg[key] = tuple(raw_cfg[key])
    cfg = ScenarioConfig(**raw_cfg)
    cells = tuple(
        CellStats(
            policy=row["policy"],
            snr_db=row["snr_db"],
            t_coh_ms=row["t_coh_ms"],
            q_bits=row["q_bits"],
            k_users=row["K"],
            mean_throughput=row["mean_throughput"],
            stderr_throughput=row["stderr_throughput"],
            mean_m_bs=row["mean_m_bs"],
            mean_omega=row["mean_omega"],
            mean_gcmd=row["mean_gcmd"],
            n=row["n"],
            mean_se=row["mean_se"],
        )
        for row in doc["cells"]
    )
    return CampaignResult(config=cfg, cells=cells)
