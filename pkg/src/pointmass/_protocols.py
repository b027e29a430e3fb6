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
import itertools
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from rcmdp import ContextSpace, ContextVector, UncertaintySet, sample_context_uniform

from ._env import PointMassEnv

if TYPE_CHECKING:
	from rollout import PolicyRuntime


def make_misspecified_contexts(
	uncertainty_set: UncertaintySet,
	r_level: float,
	bounds: ContextSpace | None = None,
) -> list[ContextVector]:
	"""All 2^d corners center + w * width with w in {-(1 + r), 1 + r}^d."""
	scale = 1.0 + r_level
	corners: list[ContextVector] = []
	for signs in itertools.product((-1.0, 1.0), repeat=uncertainty_set.dim):
		corner = uncertainty_set.center + scale * np.asarray(signs) * uncertainty_set.width
		if bounds is not None:
			corner = bounds.clip(corner)
		corners.append(corner)
	return corners


@dataclasses.dataclass
class NonStationaryResult:
	total_return: float
	rewards: npt.NDArray[np.float64]
	contexts: npt.NDArray[np.float64]


def nonstationary_rollout(
	env: PointMassEnv,
	runtime: "PolicyRuntime",
	uncertainty_set: UncertaintySet,
	period: int,
	rng: np.random.Generator,
	*,
	horizon: int | None = None,
	deterministic: bool = True,
) -> NonStationaryResult:
	from rollout import run_episode  # noqa: PLC0415

	horizon = horizon or env.horizon
	if period < 1 or horizon % period:
		msg = f"Period {period} must divide horizon {horizon}"
		raise ValueError(msg)

	policy_rng, context_rng = rng.spawn(2)
	context = sample_context_uniform(uncertainty_set, context_rng)
	episode = run_episode(
		env,
		runtime,
		context,
		uncertainty_set,
		policy_rng,
		deterministic=deterministic,
		horizon=horizon,
		resample_period=period,
		resample_set=uncertainty_set,
		context_rng=context_rng,
	)
	return NonStationaryResult(episode.episode_return, episode.rewards, episode.contexts)
