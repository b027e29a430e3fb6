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
from typing import TYPE_CHECKING, Protocol

import numpy as np
import numpy.typing as npt

from rcmdp import ContextVector, UncertaintySet, sample_context_uniform
from utils import context_hash

if TYPE_CHECKING:
	from pointmass import PointMassEnv

FloatArray = npt.NDArray[np.float64]


class PolicyRuntime(Protocol):
	"""A policy plus whatever per-episode state it keeps (filtered set, sampled contexts)."""

	def begin_episode(self, prior: UncertaintySet, context: ContextVector, rng: np.random.Generator) -> None: ...

	def act(self, obs: FloatArray, rng: np.random.Generator, *, deterministic: bool) -> FloatArray:
		"""Normalised action in [-1, 1]^act_dim."""
		...

	def observe(self, obs: FloatArray, action: FloatArray, reward: float, next_obs: FloatArray) -> None: ...

	def context_changed(self, context: ContextVector) -> None: ...

	@property
	def current_set(self) -> UncertaintySet: ...


@dataclasses.dataclass
class Episode:
	obs: FloatArray
	actions: FloatArray
	rewards: FloatArray
	next_obs: FloatArray
	dones: npt.NDArray[np.bool_]
	contexts: FloatArray
	set_centers: FloatArray
	"""Filtered set centers Ξ_0..Ξ_T, one row more than there are steps."""
	set_widths: FloatArray
	prior: UncertaintySet

	@property
	def length(self) -> int:
		return int(self.rewards.shape[0])

	@property
	def episode_return(self) -> float:
		return float(self.rewards.sum())

	def trace_rows(self) -> list[dict[str, float | int]]:
		return [
			{
				"t": t,
				"reward": float(self.rewards[t]),
				"x": float(self.next_obs[t, 0]),
				"y": float(self.next_obs[t, 1]),
				"context_hash": context_hash(self.contexts[t]),
			}
			for t in range(self.length)
		]


def run_episode(
	env: "PointMassEnv",
	runtime: PolicyRuntime,
	context: ContextVector,
	prior: UncertaintySet,
	rng: np.random.Generator,
	*,
	deterministic: bool,
	horizon: int | None = None,
	resample_period: int | None = None,
	resample_set: UncertaintySet | None = None,
	context_rng: np.random.Generator | None = None,
) -> Episode:
	"""Roll one episode; optionally resample the true context every `resample_period` steps."""
	horizon = horizon or env.horizon
	context = np.asarray(context, dtype=np.float64)
	physical = env.physical_context(context)
	state = env.reset(physical, rng)
	runtime.begin_episode(prior, context, rng)

	obs = np.empty((horizon, env.obs_dim))
	actions = np.empty((horizon, env.act_dim))
	rewards = np.empty(horizon)
	next_obs = np.empty((horizon, env.obs_dim))
	dones = np.zeros(horizon, dtype=np.bool_)
	contexts = np.empty((horizon, context.shape[0]))
	centers = np.empty((horizon + 1, prior.dim))
	widths = np.empty((horizon + 1, prior.dim))
	centers[0], widths[0] = runtime.current_set.center, runtime.current_set.width

	for t in range(horizon):
		if resample_period and t > 0 and t % resample_period == 0:
			source = resample_set if resample_set is not None else prior
			context = sample_context_uniform(source, context_rng if context_rng is not None else rng)
			physical = env.physical_context(context)
			runtime.context_changed(context)

		s = state.as_array()
		a = runtime.act(s, rng, deterministic=deterministic)
		transition = env.step(state, float(a[0]) * env.action_max, physical, done=t == horizon - 1)
		state = transition.s_next
		s_next = state.as_array()
		runtime.observe(s, a, transition.reward, s_next)

		obs[t], actions[t], rewards[t], next_obs[t] = s, a, transition.reward, s_next
		dones[t] = transition.done
		contexts[t] = context
		centers[t + 1], widths[t + 1] = runtime.current_set.center, runtime.current_set.width

	return Episode(obs, actions, rewards, next_obs, dones, contexts, centers, widths, prior)
