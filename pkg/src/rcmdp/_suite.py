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


import dataclasses
import logging
from pathlib import Path
from typing import Any

import numpy as np

from globals import APP_VERSION, MAX_TEST_SET_ATTEMPTS, SUITE_VERSION
from helpers import CheckpointError
from utils import check_artifact_version, read_json, write_json

from ._context import (
	ContextSpace,
	ContextVector,
	SetDistribution,
	UncertaintySet,
	as_vector,
	sample_context_uniform,
	sample_set,
	set_contains,
)

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class TrainContext:
	index: int
	set_index: int
	context: ContextVector


@dataclasses.dataclass(frozen=True, eq=False)
class TaskSuite:
	context_space: ContextSpace
	train_sets: tuple[UncertaintySet, ...]
	train_contexts: dict[int, tuple[ContextVector, ...]]
	test_sets: tuple[UncertaintySet, ...]
	variant: str = ""

	def __post_init__(self) -> None:
		for set_index, contexts in self.train_contexts.items():
			parent = self.train_sets[set_index]
			for c in contexts:
				if not set_contains(parent, c) or not set_contains(UncertaintySet.spanning(self.context_space), c):
					msg = f"Train context {c.tolist()} lies outside set {set_index} or the context space"
					raise ValueError(msg)

	def __eq__(self, other: object) -> bool:
		if not isinstance(other, TaskSuite):
			return NotImplemented
		return self.to_dict() == other.to_dict()

	def __hash__(self) -> int:
		return hash(str(self.to_dict()))

	def flat_contexts(self) -> list[TrainContext]:
		"""Every training context with a stable global index."""
		flat: list[TrainContext] = []
		for set_index in sorted(self.train_contexts):
			flat.extend(
				TrainContext(len(flat) + i, set_index, c) for i, c in enumerate(self.train_contexts[set_index])
			)
		return flat

	def to_dict(self) -> dict[str, Any]:
		return {
			"suite_version": SUITE_VERSION,
			"app_version": APP_VERSION,
			"variant": self.variant,
			"context_space": self.context_space.to_dict(),
			"train_sets": [s.to_dict() for s in self.train_sets],
			"train_contexts": {str(k): [c.tolist() for c in v] for k, v in sorted(self.train_contexts.items())},
			"test_sets": [s.to_dict() for s in self.test_sets],
		}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "TaskSuite":
		if data.get("suite_version") != SUITE_VERSION:
			msg = f"Unsupported suite_version: {data.get('suite_version')}"
			raise CheckpointError(msg)
		check_artifact_version(str(data.get("app_version", APP_VERSION)), "Task suite")
		return cls(
			context_space=ContextSpace.from_dict(data["context_space"]),
			train_sets=tuple(UncertaintySet.from_dict(s) for s in data["train_sets"]),
			train_contexts={int(k): tuple(as_vector(c) for c in v) for k, v in data["train_contexts"].items()},
			test_sets=tuple(UncertaintySet.from_dict(s) for s in data["test_sets"]),
			variant=str(data.get("variant", "")),
		)

	def save(self, path: Path) -> None:
		write_json(path, self.to_dict())
		logger.info("Suite : Saved %s", path)

	@classmethod
	def load(cls, path: Path) -> "TaskSuite":
		return cls.from_dict(read_json(path))


def make_task_suite(
	dist: SetDistribution,
	n_train_sets: int,
	contexts_per_set: int,
	n_test_sets: int,
	rng: np.random.Generator,
	*,
	variant: str = "",
) -> TaskSuite:
	if min(n_train_sets, contexts_per_set, n_test_sets) < 1:
		msg = f"Suite counts must be positive: {n_train_sets}/{contexts_per_set}/{n_test_sets}"
		raise ValueError(msg)

	train_sets = tuple(sample_set(dist, rng) for _ in range(n_train_sets))
	train_contexts = {
		i: tuple(sample_context_uniform(s, rng) for _ in range(contexts_per_set)) for i, s in enumerate(train_sets)
	}
	seen = [c for contexts in train_contexts.values() for c in contexts]

	test_sets: list[UncertaintySet] = []
	for _ in range(n_test_sets):
		for _attempt in range(MAX_TEST_SET_ATTEMPTS):
			candidate = sample_set(dist, rng)
			if not any(np.array_equal(candidate.center, c) for c in seen):
				test_sets.append(candidate)
				break
		else:
			msg = f"Could not draw a test set distinct from the training contexts in {MAX_TEST_SET_ATTEMPTS} attempts"
			raise RuntimeError(msg)

	logger.debug(
		"Suite : %s train sets x %s contexts, %s test sets",
		n_train_sets,
		contexts_per_set,
		n_test_sets,
	)
	return TaskSuite(dist.context_space, train_sets, train_contexts, tuple(test_sets), variant)
