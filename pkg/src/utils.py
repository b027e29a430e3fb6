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
import json
import logging
import platform
import zlib
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt
import psutil
from packaging.version import InvalidVersion, Version

from globals import APP_VERSION
from helpers import CheckpointError

logger = logging.getLogger(__name__)


def get_crc32(data: bytes | str) -> str:
	if isinstance(data, str):
		data = data.encode("utf-8")
	return f"{zlib.crc32(data):08X}"


def canonical_json(data: Any) -> str:
	return json.dumps(data, sort_keys=True, separators=(",", ":"))


def context_hash(values: npt.ArrayLike) -> int:
	array = np.ascontiguousarray(values, dtype=np.float64)
	return zlib.crc32(array.tobytes())


def write_json(path: Path, data: Any) -> None:
	logger.debug("Files : Writing %s", path)
	path.parent.mkdir(parents=True, exist_ok=True)
	with path.open("w", encoding="utf-8") as f:
		json.dump(data, f, indent="\t")
		f.write("\n")


def read_json(path: Path) -> Any:
	logger.debug("Files : Reading %s", path)
	return json.loads(path.read_text("utf-8"))


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> None:
	logger.debug("Files : Writing %s", path)
	path.parent.mkdir(parents=True, exist_ok=True)
	with path.open("w", encoding="utf-8", newline="") as f:
		writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction="ignore")
		writer.writeheader()
		writer.writerows(rows)


def describe_host() -> str:
	mem = psutil.virtual_memory()
	cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
	return f"{platform.system()} {platform.release()} | {cores} cores | {round(mem.total / 1024**3)}GB RAM"


def default_jobs() -> int:
	return psutil.cpu_count(logical=False) or 1


def generator_state(rng: np.random.Generator) -> dict[str, Any]:
	return dict(rng.bit_generator.state)


def restore_generator(state: Mapping[str, Any]) -> np.random.Generator:
	bit_generator_cls = getattr(np.random, str(state["bit_generator"]))
	bit_generator = bit_generator_cls()
	bit_generator.state = dict(state)
	return np.random.Generator(bit_generator)


def check_artifact_version(found: str, kind: str) -> None:
	"""Refuse artifacts written by a newer major version of the toolkit."""
	try:
		found_version = Version(found)
	except InvalidVersion as e:
		msg = f"{kind} has an unreadable toolkit version '{found}'"
		raise CheckpointError(msg) from e

	current = Version(APP_VERSION)
	if found_version.major > current.major:
		msg = f"{kind} was written by v{found_version}; this toolkit is v{current}"
		raise CheckpointError(msg)
	if found_version != current:
		logger.info("Files : %s written by v%s, reading with v%s", kind, found_version, current)
