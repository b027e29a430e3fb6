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


import csv
import logging
import sys
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, TextIO

from enums import LogType
from globals import CSV_TRAINING_COLUMNS

logger = logging.getLogger(__name__)


class Logger:
	"""Run-facing log: status lines to the console and `logging`, metric rows to a CSV file."""

	def __init__(
		self,
		csv_path: Path | None = None,
		*,
		columns: Sequence[str] = CSV_TRAINING_COLUMNS,
		stream: TextIO | None = None,
	) -> None:
		self.csv_path = csv_path
		self.columns = tuple(columns)
		self._stream = stream if stream is not None else sys.stdout
		self._marks = {
			LogType.Bad: "[!!] ",
			LogType.Good: "[ok] ",
			LogType.Info: "[..] ",
		}
		self.rows: list[dict[str, Any]] = []

		if csv_path is not None:
			csv_path.parent.mkdir(parents=True, exist_ok=True)
			with csv_path.open("w", encoding="utf-8", newline="") as f:
				csv.DictWriter(f, fieldnames=list(self.columns)).writeheader()

	def log_message(self, log_type: LogType, message: str, *, skip_logging: bool = False) -> None:
		if not skip_logging:
			if log_type == LogType.Bad:
				logger.error(message)
			else:
				logger.info(message)
		self._stream.write(f"{self._marks[log_type]}{message}\n")
		self._stream.flush()

	def log_metrics(self, row: Mapping[str, Any]) -> None:
		clean = {k: row.get(k, "") for k in self.columns}
		self.rows.append(clean)
		if self.csv_path is None:
			return
		with self.csv_path.open("a", encoding="utf-8", newline="") as f:
			csv.DictWriter(f, fieldnames=list(self.columns), extrasaction="ignore").writerow(clean)
