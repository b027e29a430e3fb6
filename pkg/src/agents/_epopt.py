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

from approximator import FloatArray
from enums import Algorithm
from rcmdp import UncertaintySet

from ._base import Trainer
from ._replay import Batch, epopt_filter_batch
from ._runtime import ActorRuntime, FixedSetRuntime, set_features


class EPOptTrainer(Trainer):
	"""SAC on the lowest-return fraction alpha of sampled trajectories.

	EPOpt conditions on the full context space and filters over all data; SetEPOpt conditions
	on the episode's initial set and filters within one set at a time.
	"""

	algorithms = (Algorithm.EPOpt, Algorithm.SetEPOpt)

	@property
	def per_set(self) -> bool:
		return self.spec.algorithm == Algorithm.SetEPOpt

	@property
	def conditioning_dim(self) -> int:
		return 2 * self.space.dim

	def sample_batch(self, rng: np.random.Generator) -> Batch:
		return epopt_filter_batch(self.buffers, self.settings.batch_size, self.spec.alpha, rng, per_set=self.per_set)

	def batch_conditioning(self, batch: Batch, rng: np.random.Generator) -> tuple[FloatArray, FloatArray]:  # noqa: ARG002
		if self.per_set:
			features = set_features(self.space, batch.initial_mu, batch.initial_sigma)
		else:
			full = UncertaintySet.spanning(self.space)
			features = np.tile(set_features(self.space, full.center, full.width), (len(batch), 1))
		return features, features

	def runtime(self, *, random_actions: bool = False) -> ActorRuntime:
		override = None if self.per_set else UncertaintySet.spanning(self.space)
		return FixedSetRuntime(self.actor, self.space, override_set=override, random_actions=random_actions)
