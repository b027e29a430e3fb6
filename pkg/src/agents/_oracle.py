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
import numpy.typing as npt

from approximator import FloatArray, SquashedGaussianActor
from enums import Algorithm
from rcmdp import ContextSpace, UncertaintySet, as_vector, sample_contexts

from ._base import Trainer
from ._replay import Batch
from ._runtime import ActorRuntime, EnsembleRuntime, OracleRuntime, actor_inputs, context_mean_action, set_features


class OracleTrainer(Trainer):
	"""Multitask SAC with the true context as input, written as the degenerate set (c, 0).

	The same network serves the Oracle baseline and the policy ensemble.
	"""

	algorithms = (Algorithm.Oracle, Algorithm.PolicyEnsemble)

	@property
	def conditioning_dim(self) -> int:
		return 2 * self.space.dim

	def batch_conditioning(self, batch: Batch, rng: np.random.Generator) -> tuple[FloatArray, FloatArray]:  # noqa: ARG002
		features = set_features(self.space, batch.contexts, np.zeros_like(batch.contexts))
		return features, features

	def runtime(self, *, random_actions: bool = False) -> ActorRuntime:
		return OracleRuntime(self.actor, self.space, random_actions=random_actions)

	def ensemble_runtime(self) -> EnsembleRuntime:
		return EnsembleRuntime(self.actor, self.space, self.spec.n_ens)


def oracle_act(
	actor: SquashedGaussianActor,
	context_space: ContextSpace,
	context: npt.ArrayLike,
	obs: npt.ArrayLike,
) -> FloatArray:
	"""Greedy action of the context-conditioned actor at the true context."""
	c = as_vector(context)
	features = set_features(context_space, c, np.zeros_like(c))
	return actor.mean_action(actor_inputs(np.asarray(obs, dtype=np.float64), features))


def ensemble_policy_act(
	actor: SquashedGaussianActor,
	context_space: ContextSpace,
	initial_set: UncertaintySet,
	obs: npt.ArrayLike,
	rng: np.random.Generator,
	*,
	n_ens: int = 5,
) -> FloatArray:
	"""Mean greedy action over `n_ens` contexts drawn from the initial set."""
	contexts = sample_contexts(initial_set, n_ens, rng)
	return context_mean_action(actor, context_space, contexts, np.asarray(obs, dtype=np.float64))
