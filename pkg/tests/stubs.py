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


import numpy as np

from agents import SirsaTrainer, sirsa_rollout
from pointmass import PointMassEnv
from rcmdp import ContextVector, TaskSuite, UncertaintySet, sample_contexts
from rollout import FloatArray


class ConstantRuntime:
	"""Always takes the same normalised action and never narrows its set."""

	def __init__(self, action: float = 0.0) -> None:
		self.action = action
		self.changes = 0
		self._set = UncertaintySet(np.zeros(1), np.zeros(1))

	def begin_episode(self, prior: UncertaintySet, context: ContextVector, rng: np.random.Generator) -> None:  # noqa: ARG002
		self._set = prior

	def act(self, obs: FloatArray, rng: np.random.Generator, *, deterministic: bool) -> FloatArray:  # noqa: ARG002
		return np.array([self.action])

	def observe(self, obs: FloatArray, action: FloatArray, reward: float, next_obs: FloatArray) -> None:  # noqa: ARG002
		pass

	def context_changed(self, context: ContextVector) -> None:  # noqa: ARG002
		self.changes += 1

	@property
	def current_set(self) -> UncertaintySet:
		return self._set


def mean_width_trace(trainer: SirsaTrainer, env: PointMassEnv, suite: TaskSuite, n_episodes: int) -> FloatArray:
	"""Normalised set width per step, averaged over filtered rollouts on the test sets."""
	widths = []
	for i, episode_rng in enumerate(np.random.default_rng(23).spawn(n_episodes)):
		test_set = suite.test_sets[i % len(suite.test_sets)]
		context = sample_contexts(test_set, 1, episode_rng)[0]
		episode = sirsa_rollout(trainer.actor, trainer.ensemble, env, context, test_set, episode_rng, deterministic=True)
		widths.append(env.context_space.normalize_width(episode.set_widths).mean(axis=1))
	return np.mean(widths, axis=0)
