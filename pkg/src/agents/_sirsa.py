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
from typing import Any

import numpy as np

from approximator import FloatArray, SquashedGaussianActor
from enums import Algorithm, Phase
from logger import Logger
from pointmass import PointMassEnv
from rcmdp import ContextVector, TaskSuite, UncertaintySet
from risk import RiskConfig, cvar_actor_gradient
from rollout import Episode, run_episode
from sysid import SysIdBatch, SysIdEnsemble, ensemble_train_step

from ._base import CheckpointHook, PolicySpec, Trainer, TrainingResult, TrainingSettings
from ._replay import Batch
from ._runtime import ActorRuntime, FilteringRuntime, actor_inputs, set_features

logger = logging.getLogger(__name__)


class SirsaTrainer(Trainer):
	"""Set-conditioned actor with recursive system identification.

	Before `t_threshold` gradient steps the actor follows the SAC objective; afterwards it
	ascends the CVaR over contexts sampled from each transition's filtered set. SystemID
	runs the same loop with alpha = 1.
	"""

	algorithms = (Algorithm.SIRSA, Algorithm.SystemID)

	def _setup(self, rng: np.random.Generator) -> None:
		self.ensemble = SysIdEnsemble.create(
			self.space,
			self.env.obs_dim,
			self.env.act_dim,
			rng,
			n_members=self.spec.b_ensemble,
			history_length=self.spec.sysid_history_length,
			hidden=self.spec.sysid_hidden,
			activation=self.spec.activation,
		)
		self.ensemble_optimizers = self.ensemble.new_optimizers(self.settings.lr)

	@property
	def conditioning_dim(self) -> int:
		return 2 * self.space.dim

	@property
	def risk(self) -> RiskConfig:
		alpha = self.spec.alpha if self.spec.algorithm == Algorithm.SIRSA else 1.0
		return RiskConfig(alpha, self.spec.n_cvar)

	@property
	def phase(self) -> Phase:
		return Phase.SAC if self.step < self.spec.t_threshold else Phase.CVaR

	def batch_conditioning(self, batch: Batch, rng: np.random.Generator) -> tuple[FloatArray, FloatArray]:
		if self.phase == Phase.CVaR:
			return (
				set_features(self.space, batch.set_mu, batch.set_sigma),
				set_features(self.space, batch.next_set_mu, batch.next_set_sigma),
			)
		degenerate = (rng.random(len(batch)) < self.spec.degenerate_set_prob)[:, None]
		zeros = np.zeros_like(batch.contexts)
		return (
			set_features(
				self.space,
				np.where(degenerate, batch.contexts, batch.set_mu),
				np.where(degenerate, zeros, batch.set_sigma),
			),
			set_features(
				self.space,
				np.where(degenerate, batch.contexts, batch.next_set_mu),
				np.where(degenerate, zeros, batch.next_set_sigma),
			),
		)

	def actor_step(self, batch: Batch, conditioning: FloatArray, rng: np.random.Generator) -> tuple[float, float]:
		if self.phase == Phase.SAC:
			return super().actor_step(batch, conditioning, rng)
		temperature = self.temperature.value if self.spec.entropy_in_cvar else 0.0
		step = cvar_actor_gradient(
			self.bank,
			self.actor,
			actor_inputs(batch.obs, conditioning),
			batch.obs,
			batch.set_mu,
			batch.set_sigma,
			self.risk,
			rng,
			temperature=temperature,
		)
		self.actor_state.ascend(step.grads)
		return -step.objective, step.log_prob

	def auxiliary_step(self, batch: Batch, rng: np.random.Generator) -> dict[str, float]:
		use_initial = (rng.random(len(batch)) < self.spec.sysid_initial_prior_prob)[:, None]
		sysid_batch = SysIdBatch(
			prior_mu=np.where(use_initial, batch.initial_mu, batch.set_mu),
			prior_sigma=np.where(use_initial, batch.initial_sigma, batch.set_sigma),
			history=batch.history,
			contexts=batch.contexts,
		)
		return {"sysid_loss": ensemble_train_step(self.ensemble, sysid_batch, self.ensemble_optimizers, rng)}

	def runtime(self, *, random_actions: bool = False) -> ActorRuntime:
		return FilteringRuntime(self.actor, self.ensemble, self.space, random_actions=random_actions)

	def extra_state(self) -> dict[str, Any]:
		return {
			"ensemble": self.ensemble.to_dict(),
			"ensemble_optimizers": [o.to_dict() for o in self.ensemble_optimizers],
		}


def sirsa_rollout(
	actor: SquashedGaussianActor,
	ensemble: SysIdEnsemble,
	env: PointMassEnv,
	context: ContextVector,
	initial_set: UncertaintySet,
	rng: np.random.Generator,
	*,
	deterministic: bool = False,
) -> Episode:
	"""One episode acting on the filtered set; the episode carries the set trace Ξ_0..Ξ_T."""
	runtime = FilteringRuntime(actor, ensemble, ensemble.context_space)
	return run_episode(env, runtime, context, initial_set, rng, deterministic=deterministic)


def sirsa_train(
	spec: PolicySpec,
	settings: TrainingSettings,
	suite: TaskSuite,
	env: PointMassEnv,
	rng: np.random.Generator,
	*,
	budget: int | None = None,
	metrics: Logger | None = None,
	on_checkpoint: CheckpointHook | None = None,
) -> tuple[SirsaTrainer, TrainingResult]:
	budget = settings.budget if budget is None else budget
	if budget < spec.t_threshold:
		logger.warning("Train : %s : Budget %s ends before the switch at %s", spec.algorithm, budget, spec.t_threshold)
	trainer = SirsaTrainer(spec, settings, suite, env, rng, metrics=metrics)
	return trainer, trainer.train(budget, on_checkpoint=on_checkpoint)
