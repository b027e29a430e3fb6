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
from typing import Protocol

import numpy as np
import numpy.typing as npt

from approximator import ActorSample, FloatArray, SquashedGaussianActor
from helpers import DimensionError, NonFiniteError

from ._estimators import RiskConfig, worst_indices

logger = logging.getLogger(__name__)


class ContextCritic(Protocol):
	"""Q(s, a, c) evaluated row by row; actions are in the actor's normalised units."""

	def q_values(self, obs: FloatArray, actions: FloatArray, contexts: FloatArray) -> FloatArray: ...

	def action_gradient(self, obs: FloatArray, actions: FloatArray, contexts: FloatArray) -> FloatArray: ...


@dataclasses.dataclass
class CVaRGradient:
	grads: list[FloatArray]
	"""Ascent direction for the actor parameters."""
	objective: float
	var: float
	cvar: float
	log_prob: float


def sample_set_contexts(
	centers: FloatArray,
	widths: FloatArray,
	n_samples: int,
	rng: np.random.Generator,
) -> FloatArray:
	"""N contexts per row drawn uniformly from each row's box, shape (n, N, d)."""
	centers = np.atleast_2d(centers)
	widths = np.atleast_2d(widths)
	u = rng.uniform(-1.0, 1.0, size=(centers.shape[0], n_samples, centers.shape[1]))
	lower = (centers - widths)[:, None, :]
	upper = (centers + widths)[:, None, :]
	return np.clip(centers[:, None, :] + widths[:, None, :] * u, lower, upper)


def _context_q(
	critic: ContextCritic,
	obs: FloatArray,
	actions: FloatArray,
	contexts: FloatArray,
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
	n, n_samples, d = contexts.shape
	obs_rep = np.repeat(obs, n_samples, axis=0)
	act_rep = np.repeat(actions, n_samples, axis=0)
	flat_contexts = contexts.reshape(n * n_samples, d)
	q = critic.q_values(obs_rep, act_rep, flat_contexts).reshape(n, n_samples)
	if not np.all(np.isfinite(q)):
		raise NonFiniteError("risk-metrics", "critic returned non-finite Q-values")
	return q, obs_rep, act_rep, flat_contexts


def _sample_and_score(
	critic: ContextCritic,
	actor: SquashedGaussianActor,
	actor_inputs: FloatArray,
	obs: FloatArray,
	contexts: FloatArray,
	config: RiskConfig,
	*,
	rng: np.random.Generator | None,
	noise: FloatArray | None,
) -> tuple[ActorSample, FloatArray, FloatArray, FloatArray, FloatArray, FloatArray]:
	obs = np.atleast_2d(obs)
	if contexts.ndim != 3 or contexts.shape[:2] != (obs.shape[0], config.n_samples):
		msg = f"Expected contexts of shape ({obs.shape[0]}, {config.n_samples}, d), got {contexts.shape}"
		raise DimensionError(msg)
	sample = actor.sample(actor_inputs, rng, noise=noise)
	q, obs_rep, act_rep, flat_contexts = _context_q(critic, obs, sample.action, contexts)
	worst = worst_indices(q, config.rank)
	return sample, q, worst, obs_rep, act_rep, flat_contexts


def cvar_objective(
	critic: ContextCritic,
	actor: SquashedGaussianActor,
	actor_inputs: FloatArray,
	obs: FloatArray,
	contexts: FloatArray,
	config: RiskConfig,
	noise: FloatArray,
	*,
	temperature: float = 0.0,
) -> float:
	"""Batch mean of CVaR over contexts minus temperature * log-prob, with eps and contexts fixed."""
	sample, q, worst, *_ = _sample_and_score(
		critic, actor, actor_inputs, obs, contexts, config, rng=None, noise=noise
	)
	cvar = np.take_along_axis(q, worst, axis=1).mean(axis=1)
	return float(np.mean(cvar - temperature * sample.log_prob))


def cvar_actor_gradient(
	critic: ContextCritic,
	actor: SquashedGaussianActor,
	actor_inputs: FloatArray,
	obs: FloatArray,
	set_centers: FloatArray,
	set_widths: FloatArray,
	config: RiskConfig,
	rng: np.random.Generator,
	*,
	temperature: float = 0.0,
	noise: FloatArray | None = None,
	contexts: FloatArray | None = None,
) -> CVaRGradient:
	"""Pathwise CVaR gradient over contexts drawn from each state's uncertainty set.

	For every state one reparameterised action is drawn, Q is evaluated on N contexts,
	and dQ/da is averaged over the floor(alpha * N) lowest. A SAC entropy term
	-temperature * log pi is added when temperature > 0.
	"""
	obs = np.atleast_2d(obs)
	n = obs.shape[0]
	if contexts is None:
		contexts = sample_set_contexts(set_centers, set_widths, config.n_samples, rng)
	sample, q, worst, obs_rep, act_rep, flat_contexts = _sample_and_score(
		critic, actor, actor_inputs, obs, contexts, config, rng=rng, noise=noise
	)

	flat_worst = (worst + config.n_samples * np.arange(n)[:, None]).ravel()
	dq_da = critic.action_gradient(obs_rep[flat_worst], act_rep[flat_worst], flat_contexts[flat_worst])
	if not np.all(np.isfinite(dq_da)):
		raise NonFiniteError("risk-metrics", "critic returned non-finite action gradients")
	grad_action = dq_da.reshape(n, config.rank, -1).mean(axis=1) / n
	grad_log_prob = np.full(n, -temperature / n)
	grads, _ = actor.backward_sample(sample, grad_action, grad_log_prob)

	worst_q = np.take_along_axis(q, worst, axis=1)
	cvar = float(worst_q.mean())
	var = float(worst_q[:, -1].mean())
	log_prob = float(sample.log_prob.mean())
	logger.debug(
		"Risk : CVaR : alpha=%s N=%s VaR=%.4f CVaR=%.4f",
		config.alpha,
		config.n_samples,
		var,
		cvar,
	)
	return CVaRGradient(grads, cvar - temperature * log_prob, var, cvar, log_prob)


def objective_grads(grads: list[FloatArray]) -> list[FloatArray]:
	"""Flip an ascent direction into a loss gradient for a descent optimiser."""
	return [-g for g in grads]
