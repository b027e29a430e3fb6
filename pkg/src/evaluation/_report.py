#
# Multi-Set Robust RL Toolkit
# Copyright (C) 2025  msrl-toolkit contributors
#
# This program is free software; you can redistribute it and/or
# modify it under the terms of the GNU General Public License
# as published by the Free Software Foundation; either version 2
# of the License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program; if not, see <https://www.gnu.org/licenses/>.
#


import logging
import math
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from enums import SweepAxis
from globals import (
	APP_VERSION,
	CSV_EVAL_COLUMNS,
	CSV_IDENTIFICATION_COLUMNS,
	CSV_SWEEP_COLUMNS,
	CSV_TRACE_COLUMNS,
	REPORT_VERSION,
)
from utils import check_artifact_version, read_json, write_csv, write_json

from ._harness import EvalReport, SetEvaluation, SweepRow, SweepTable

logger = logging.getLogger(__name__)


def _header(kind: str, *, config_hash: str, seed: int | None) -> dict[str, Any]:
	return {
		"kind": kind,
		"report_version": REPORT_VERSION,
		"app_version": APP_VERSION,
		"config_hash": config_hash,
		"seed": seed,
	}


def emit_report(report: EvalReport | SweepTable, stem: Path) -> tuple[Path, Path]:
	"""Write `<stem>.csv` (one row per rollout or sweep point) and `<stem>.json` (summary plus raw data)."""
	csv_path = stem.parent / f"{stem.name}.csv"
	json_path = stem.parent / f"{stem.name}.json"
	if isinstance(report, EvalReport):
		write_csv(csv_path, CSV_EVAL_COLUMNS, report.rows())
		payload = _header("eval", config_hash=report.config_hash, seed=report.seed)
		payload.update(
			{
				"method": report.method,
				"summary": report.summary(),
				"sets": [s.to_dict() for s in report.sets],
				"extra": report.extra,
			}
		)
	else:
		write_csv(csv_path, CSV_SWEEP_COLUMNS, [r.to_dict() for r in report.rows])
		seeds = sorted({r.seed for r in report.rows})
		payload = _header("sweep", config_hash=report.config_hash, seed=seeds[0] if len(seeds) == 1 else None)
		payload.update(
			{
				"method": report.method,
				"axis": str(report.axis),
				"rows": [r.to_dict() for r in report.rows],
				"summary": report.summary(),
				"best_value": report.best_value() if report.rows else None,
			}
		)
	write_json(json_path, payload)
	logger.info("Report : Write : %s", json_path)
	return csv_path, json_path


def read_report(path: Path) -> EvalReport | SweepTable:
	data = read_json(path)
	if data.get("report_version") != REPORT_VERSION:
		msg = f"Report {path} has format version {data.get('report_version')}, expected {REPORT_VERSION}"
		raise ValueError(msg)
	check_artifact_version(str(data.get("app_version")), "Report")
	match data.get("kind"):
		case "eval":
			return EvalReport(
				method=data["method"],
				seed=int(data["seed"]),
				config_hash=data["config_hash"],
				sets=[SetEvaluation.from_dict(s) for s in data["sets"]],
				extra=data.get("extra", {}),
			)
		case "sweep":
			return SweepTable(
				axis=SweepAxis(data["axis"]),
				method=data["method"],
				rows=[SweepRow.from_dict(r) for r in data["rows"]],
				config_hash=data["config_hash"],
			)
		case other:
			msg = f"Unknown report kind {other!r} in {path}"
			raise ValueError(msg)


def aggregate_reports(reports: Sequence[EvalReport]) -> list[dict[str, Any]]:
	"""Per-method mean and standard error over seeds of the mean-of-mins and mean-of-means."""
	by_method: dict[str, list[EvalReport]] = {}
	for report in reports:
		by_method.setdefault(report.method, []).append(report)

	rows = []
	for method, group in sorted(by_method.items()):
		mins = np.array([r.mean_of_mins for r in group])
		means = np.array([r.mean_of_means for r in group])
		n = len(group)
		rows.append(
			{
				"method": method,
				"n_seeds": n,
				"mean_of_mins": float(mins.mean()),
				"mean_of_mins_stderr": float(mins.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
				"mean_of_means": float(means.mean()),
				"mean_of_means_stderr": float(means.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
			}
		)
	return rows


def emit_aggregate(rows: Sequence[Mapping[str, Any]], stem: Path) -> Path:
	path = stem.parent / f"{stem.name}.csv"
	columns = ("method", "n_seeds", "mean_of_mins", "mean_of_mins_stderr", "mean_of_means", "mean_of_means_stderr")
	write_csv(path, columns, rows)
	return path


def emit_trace(rows: Sequence[Mapping[str, Any]], path: Path) -> Path:
	write_csv(path, CSV_TRACE_COLUMNS, rows)
	return path


def emit_identification(rows: Sequence[Mapping[str, Any]], path: Path) -> Path:
	write_csv(path, CSV_IDENTIFICATION_COLUMNS, rows)
	return path
