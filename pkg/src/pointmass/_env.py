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
import math

import numpy as np
import numpy.typing as npt

from enums import EnvVariant
from globals import (
	ACT_DIM,
	ACTION_MAX,
	HORIZON,
	OBS_DIM,
	OBSTACLE_RANGE,
	OBSTACLE_SAFE_RANGE,
	START_X,
	START_Y,
	VELOCITY_RANGE,
	VELOCITY_SAFE_RANGE,
	Y_PENALTY,
)
from helpers import DimensionError
from rcmdp import ContextSpace, as_vector

_VARIANT_DIMS = {
	EnvVariant.ObstacleOnly: ("obstacle_radius",),
	EnvVariant.VelocityOnly: ("velocity",),
	EnvVariant.Combined: ("obstacle_radius", "velocity"),
}
_RANGES = {"obstacle_radius": OBSTACLE_RANGE, "velocity": VELOCITY_RANGE}
_SAFE_RANGES = {"obstacle_radius": OBSTACLE_SAFE_RANGE, "velocity": VELOCITY_SAFE_RANGE}


@dataclasses.dataclass(frozen=True)
class PointMassContext:
	obstacle_radius: float
	velocity: float


@dataclasses.dataclass(frozen=True)
class PointMassState:
	x: float
	y: float
	on_obstacle: int

	def as_array(self) -> npt.NDArray[np.float64]:
		return np.array([self.x, self.y, float(self.on_obstacle)])


@dataclasses.dataclass(frozen=True)
class Transition:
	s: PointMassState
	a: float
	reward: float
	s_next: PointMassState
	done: bool


def _on_obstacle(x: float, y: float, radius: float) -> int:
	return int(x * x + y * y < radius * radius)


class PointMassEnv:
	"""Point mass that drifts right at a fixed speed and steers in y around a round obstacle."""

	obs_dim = OBS_DIM
	act_dim = ACT_DIM

	def __init__(
		self,
		variant: EnvVariant | str,
		*,
		horizon: int = HORIZON,
		action_max: float = ACTION_MAX,
		start: tuple[float, float] = (START_X, START_Y),
	) -> None:
		self.variant = EnvVariant(variant)
		self.horizon = horizon
		self.action_max = action_max
		self.start = start
		self.dims = _VARIANT_DIMS[self.variant]

	@property
	def context_space(self) -> ContextSpace:
		return ContextSpace(
			np.array([_RANGES[d][0] for d in self.dims]),
			np.array([_RANGES[d][1] for d in self.dims]),
		)

	@property
	def safe_space(self) -> ContextSpace:
		"""Bounds that keep the dynamics well defined for out-of-range contexts."""
		return ContextSpace(
			np.array([_SAFE_RANGES[d][0] for d in self.dims]),
			np.array([_SAFE_RANGES[d][1] for d in self.dims]),
		)

	def physical_context(self, context: npt.ArrayLike) -> PointMassContext:
		c = as_vector(context)
		if c.shape[0] != len(self.dims):
			msg = f"{self.variant} expects a {len(self.dims)}-d context, got {c.shape[0]}"
			raise DimensionError(msg)
		values = {d: (lo + hi) / 2 for d, (lo, hi) in _RANGES.items()}
		values.update(zip(self.dims, c.tolist(), strict=True))
		return PointMassContext(values["obstacle_radius"], values["velocity"])

	def context_vector(self, context: PointMassContext) -> npt.NDArray[np.float64]:
		return np.array([getattr(context, d) for d in self.dims])

	def reset(self, context: PointMassContext, rng: np.random.Generator | None = None) -> PointMassState:  # noqa: ARG002
		x, y = self.start
		return PointMassState(x, y, _on_obstacle(x, y, context.obstacle_radius))

	def step(self, state: PointMassState, action: float, context: PointMassContext, *, done: bool = False) -> Transition:
		if not math.isfinite(action):
			msg = f"Action must be finite, got {action}"
			raise ValueError(msg)
		dy = min(max(action, -self.action_max), self.action_max)
		x = state.x + context.velocity
		y = state.y + dy
		on_obstacle = _on_obstacle(x, y, context.obstacle_radius)
		reward = 1.0 - on_obstacle - Y_PENALTY * abs(y)
		return Transition(state, dy, reward, PointMassState(x, y, on_obstacle), done)

	def episode_return_upper_bound(self, context: PointMassContext | None = None) -> float:  # noqa: ARG002
		return float(self.horizon)
