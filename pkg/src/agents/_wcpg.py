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
from collections.abc import Sequence
from typing import Any

import numpy as np
import numpy.typing as npt

from approximator import (
	AdamState,
	FloatArray,
	MLPParams,
	SquashedGaussianActor,
	adam_init,
	adam_step,
	backward,
	forward,
	forward_cached,
	init_mlp,
)
from enums import Activation, Algorithm
from globals import VARIANCE_EPSILON
from helpers import NonFiniteError
from logger import Logger
from pointmass import PointMassEnv
from rcmdp import ContextSpace, TaskSuite, UncertaintySet
from risk import ContextCritic, cvar_coefficient, gaussian_cvar_closed_form, sample_set_contexts

from ._base import CheckpointHook, PolicySpec, Trainer, TrainingResult, TrainingSettings
from ._critics import ActorStep
from ._replay import Batch
from ._runtime import ActorRuntime, FixedSetRuntime, actor_inputs, set_features

logger = logging.getLogger(__name__)

WCPG_EVAL_ALPHAS = (0.25, 0.5, 0.75, 1.0)


class VarianceNet:
	"""Regresses Var_c[Q(s, a, c)] over a set from (s, a, set features)."""

	def __init__(self, net: MLPParams, optimizer: AdamState, obs_dim: int, act_dim: int) -> None:
		self.net = net
		self.optimizer = optimizer
		self.obs_dim = obs_dim
		self.act_dim = act_dim

	@classmethod
	def create(
		cls,
		context_space: ContextSpace,
		obs_dim: int,
		act_dim: int,
		rng: np.random.Generator,
		*,
		hidden: Sequence[int] = (256, 256),
		activation: Activation | str = Activation.ReLU,
		lr: float = 3e-4,
	) -> "VarianceNet":
		net = init_mlp([obs_dim + act_dim + 2 * context_space.dim, *hidden, 1], rng, activation)
		return cls(net, adam_init(net, lr=lr), obs_dim, act_dim)

	def _inputs(self, obs: FloatArray, actions: FloatArray, set_feats: FloatArray) -> FloatArray:
		return np.concatenate([np.atleast_2d(obs), np.atleast_2d(actions), np.atleast_2d(set_feats)], axis=1)

	def predict(self, obs: FloatArray, actions: FloatArray, set_feats: FloatArray) -> FloatArray:
		return forward(self.net, self._inputs(obs, actions, set_feats))[:, 0]

	def action_gradient(self, obs: FloatArray, actions: FloatArray, set_feats: FloatArray) -> FloatArray:
		cache = forward_cached(self.net, self._inputs(obs, actions, set_feats))
		_, input_grad = backward(self.net, cache, np.ones_like(cache.output))
		return input_grad[:, self.obs_dim : self.obs_dim + self.act_dim]

	def fit_step(self, obs: FloatArray, actions: FloatArray, set_feats: FloatArray, targets: FloatArray) -> float:
		cache = forward_cached(self.net, self._inputs(obs, actions, set_feats))
		err = cache.output[:, 0] - targets
		loss = float(np.mean(err * err))
		if not np.isfinite(loss):
			raise NonFiniteError("variance-net", f"loss is {loss}")
		grads, _ = backward(self.net, cache, (2.0 * err / err.size)[:, None])
		self.net, self.optimizer = adam_step(self.net, grads, self.optimizer)
		return loss

	def to_dict(self) -> dict[str, Any]:
		return {
			"net": self.net.to_dict(),
			"optimizer": self.optimizer.to_dict(),
			"obs_dim": self.obs_dim,
			"act_dim": self.act_dim,
		}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "VarianceNet":
		return cls(
			MLPParams.from_dict(data["net"]),
			AdamState.from_dict(data["optimizer"]),
			int(data["obs_dim"]),
			int(data["act_dim"]),
		)


def monte_carlo_q_variance(
	critic: ContextCritic,
	obs: FloatArray,
	actions: FloatArray,
	centers: FloatArray,
	widths: FloatArray,
	n_samples: int,
	rng: np.random.Generator,
) -> FloatArray:
	"""Population variance of Q(s, a, c) over `n_samples` contexts drawn from each row's set."""
	contexts = sample_set_contexts(centers, widths, n_samples, rng)
	n, _, d = contexts.shape
	q = critic.q_values(
		np.repeat(obs, n_samples, axis=0),
		np.repeat(actions, n_samples, axis=0),
		contexts.reshape(n * n_samples, d),
	)
	return q.reshape(n, n_samples).var(axis=1)


def wcpg_actor_gradient(
	critic: ContextCritic,
	variance: VarianceNet,
	actor: SquashedGaussianActor,
	inputs: FloatArray,
	obs: FloatArray,
	centers: FloatArray,
	set_feats: FloatArray,
	alpha: float,
	temperature: float,
	rng: np.random.Generator | None,
	*,
	literal: bool = False,
	noise: npt.NDArray[np.float64] | None = None,
) -> tuple[ActorStep, int]:
	"""Ascent direction of the Gaussian CVaR Q(s, a, mu) - k(alpha) * sqrt(QVar) minus the entropy term.

	Returns the step and the number of negative variance predictions clamped to zero.
	"""
	sample = actor.sample(inputs, rng, noise=noise)
	n = sample.action.shape[0]
	q_mean = critic.q_values(obs, sample.action, centers)
	dq_da = critic.action_gradient(obs, sample.action, centers)

	raw = variance.predict(obs, sample.action, set_feats)
	negative = int(np.sum(raw < 0))
	q_var = np.maximum(raw, 0.0)
	coefficient = 0.0 if alpha == 1.0 and not literal else cvar_coefficient(alpha, literal=literal)
	dvar_da = variance.action_gradient(obs, sample.action, set_feats)
	dstd_da = np.where((q_var > 0)[:, None], dvar_da / (2.0 * np.sqrt(q_var + VARIANCE_EPSILON))[:, None], 0.0)

	grad_action = (dq_da - coefficient * dstd_da) / n
	grads, _ = actor.backward_sample(sample, grad_action, np.full(n, -temperature / n))
	objective = np.asarray(gaussian_cvar_closed_form(q_mean, q_var, alpha, literal=literal)) - temperature * sample.log_prob
	return ActorStep(grads, float(np.mean(objective)), float(sample.log_prob.mean())), negative


class WCPGTrainer(Trainer):
	"""Risk-level-conditioned actor trained on a closed-form Gaussian CVaR.

	WCPG treats the full context space as its set; SetWCPG uses each episode's initial set.
	"""

	algorithms = (Algorithm.WCPG, Algorithm.SetWCPG)

	def _setup(self, rng: np.random.Generator) -> None:
		self.variance = VarianceNet.create(
			self.space,
			self.env.obs_dim,
			self.env.act_dim,
			rng,
			hidden=self.spec.wcpg_variance_hidden,
			activation=self.spec.activation,
			lr=self.settings.lr,
		)
		self.batch_alpha = 1.0
		self.negative_variance_count = 0

	@property
	def conditioning_dim(self) -> int:
		return 2 * self.space.dim + 1

	@property
	def uses_full_space(self) -> bool:
		return self.spec.algorithm == Algorithm.WCPG

	def _batch_sets(self, batch: Batch) -> tuple[FloatArray, FloatArray]:
		if self.uses_full_space:
			full = UncertaintySet.spanning(self.space)
			return np.tile(full.center, (len(batch), 1)), np.tile(full.width, (len(batch), 1))
		return batch.initial_mu, batch.initial_sigma

	def batch_conditioning(self, batch: Batch, rng: np.random.Generator) -> tuple[FloatArray, FloatArray]:
		self.batch_alpha = float(rng.uniform(self.spec.wcpg_alpha_min, 1.0))
		centers, widths = self._batch_sets(batch)
		features = np.concatenate(
			[set_features(self.space, centers, widths), np.full((len(batch), 1), self.batch_alpha)],
			axis=1,
		)
		return features, features

	def actor_step(self, batch: Batch, conditioning: FloatArray, rng: np.random.Generator) -> tuple[float, float]:
		centers, widths = self._batch_sets(batch)
		step, negative = wcpg_actor_gradient(
			self.bank,
			self.variance,
			self.actor,
			actor_inputs(batch.obs, conditioning),
			batch.obs,
			centers,
			set_features(self.space, centers, widths),
			self.batch_alpha,
			self.temperature.value,
			rng,
			literal=self.spec.wcpg_literal_formula,
		)
		if negative:
			self.negative_variance_count += negative
			logger.debug("Train : WCPG : Clamped %s negative variance predictions at step %s", negative, self.step)
		self.actor_state.ascend(step.grads)
		return -step.objective, step.log_prob

	def auxiliary_step(self, batch: Batch, rng: np.random.Generator) -> dict[str, float]:
		centers, widths = self._batch_sets(batch)
		features = np.concatenate(
			[set_features(self.space, centers, widths), np.full((len(batch), 1), self.batch_alpha)],
			axis=1,
		)
		actions = self.actor.sample(actor_inputs(batch.obs, features), rng).action
		targets = monte_carlo_q_variance(
			self.bank, batch.obs, actions, centers, widths, self.spec.wcpg_variance_samples, rng
		)
		loss = self.variance.fit_step(batch.obs, actions, set_features(self.space, centers, widths), targets)
		return {"variance_loss": loss}

	def runtime(self, *, random_actions: bool = False, alpha: float | None = None) -> ActorRuntime:
		if alpha is None:
			alpha = float(self.rng.uniform(self.spec.wcpg_alpha_min, 1.0))
		override = UncertaintySet.spanning(self.space) if self.uses_full_space else None
		return FixedSetRuntime(self.actor, self.space, override_set=override, alpha=alpha, random_actions=random_actions)

	def extra_state(self) -> dict[str, Any]:
		return {"variance": self.variance.to_dict(), "negative_variance_count": self.negative_variance_count}


def wcpg_train_and_act(
	spec: PolicySpec,
	settings: TrainingSettings,
	suite: TaskSuite,
	env: PointMassEnv,
	rng: np.random.Generator,
	*,
	budget: int | None = None,
	alphas: Sequence[float] = WCPG_EVAL_ALPHAS,
	metrics: Logger | None = None,
	on_checkpoint: CheckpointHook | None = None,
) -> tuple[WCPGTrainer, TrainingResult, dict[float, ActorRuntime]]:
	"""Train one alpha-conditioned family and return a runtime per evaluation alpha."""
	trainer = WCPGTrainer(spec, settings, suite, env, rng, metrics=metrics)
	result = trainer.train(budget, on_checkpoint=on_checkpoint)
	if trainer.negative_variance_count:
		logger.info("Train : %s : %s negative variance predictions clamped", spec.algorithm, trainer.negative_variance_count)
	return trainer, result, {a: trainer.runtime(alpha=a) for a in alphas}
