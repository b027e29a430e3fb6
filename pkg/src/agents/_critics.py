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
from collections.abc import Sequence
from typing import Any

import numpy as np
import numpy.typing as npt

from approximator import (
	AdamState,
	FloatArray,
	MLPParams,
	SquashedGaussianActor,
	TargetParams,
	adam_init,
	adam_step,
	adam_step_arrays,
	backward,
	forward,
	forward_cached,
	init_mlp,
	polyak_update,
)
from enums import Activation
from helpers import NonFiniteError
from rcmdp import ContextSpace
from risk import ContextCritic, objective_grads

from ._replay import Batch


class CriticBank:
	"""M critics Q(s, a, c) with Polyak-averaged targets.

	Bootstrapped targets take the minimum over 2 randomly chosen target critics, which for
	M = 2 is the usual twin minimum. The actor sees the twin minimum for M = 2 and the
	bank mean for larger banks.
	"""

	subsample = 2

	def __init__(
		self,
		critics: list[MLPParams],
		targets: list[TargetParams],
		optimizers: list[AdamState],
		context_space: ContextSpace,
		obs_dim: int,
		act_dim: int,
	) -> None:
		if len(critics) < 2 or len(critics) != len(targets) or len(critics) != len(optimizers):
			msg = f"Critic bank needs at least 2 critics with matching targets, got {len(critics)}/{len(targets)}"
			raise ValueError(msg)
		self.critics = critics
		self.targets = targets
		self.optimizers = optimizers
		self.context_space = context_space
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
		n_critics: int = 2,
		hidden: Sequence[int] = (64, 64),
		activation: Activation | str = Activation.ReLU,
		lr: float = 3e-4,
		tau: float = 0.005,
	) -> "CriticBank":
		in_dim = obs_dim + act_dim + context_space.dim
		critics = [init_mlp([in_dim, *hidden, 1], critic_rng, activation) for critic_rng in rng.spawn(n_critics)]
		return cls(
			critics,
			[TargetParams.of(c, tau) for c in critics],
			[adam_init(c, lr=lr) for c in critics],
			context_space,
			obs_dim,
			act_dim,
		)

	@property
	def size(self) -> int:
		return len(self.critics)

	def inputs(self, obs: FloatArray, actions: FloatArray, contexts: FloatArray) -> FloatArray:
		return np.concatenate(
			[np.atleast_2d(obs), np.atleast_2d(actions), self.context_space.normalize(np.atleast_2d(contexts))],
			axis=1,
		)

	def q_all(self, obs: FloatArray, actions: FloatArray, contexts: FloatArray) -> FloatArray:
		x = self.inputs(obs, actions, contexts)
		return np.stack([forward(c, x)[:, 0] for c in self.critics])

	def q_values(self, obs: FloatArray, actions: FloatArray, contexts: FloatArray) -> FloatArray:
		q = self.q_all(obs, actions, contexts)
		return q.min(axis=0) if self.size == 2 else q.mean(axis=0)

	def action_gradient(self, obs: FloatArray, actions: FloatArray, contexts: FloatArray) -> FloatArray:
		"""d q_values / d a, row by row."""
		x = self.inputs(obs, actions, contexts)
		caches = [forward_cached(c, x) for c in self.critics]
		q = np.stack([cache.output[:, 0] for cache in caches])
		if self.size == 2:
			weights = (np.arange(2)[:, None] == np.argmin(q, axis=0)[None, :]).astype(np.float64)
		else:
			weights = np.full_like(q, 1.0 / self.size)
		grad = np.zeros_like(x)
		for critic, cache, w in zip(self.critics, caches, weights, strict=True):
			_, input_grad = backward(critic, cache, w[:, None])
			grad += input_grad
		return grad[:, self.obs_dim : self.obs_dim + self.act_dim]

	def target_q(self, obs: FloatArray, actions: FloatArray, contexts: FloatArray, rng: np.random.Generator) -> FloatArray:
		chosen = rng.choice(self.size, size=self.subsample, replace=False) if self.size > self.subsample else range(self.size)
		x = self.inputs(obs, actions, contexts)
		return np.min(np.stack([forward(self.targets[j].params, x)[:, 0] for j in chosen]), axis=0)

	def to_dict(self) -> dict[str, Any]:
		return {
			"critics": [c.to_dict() for c in self.critics],
			"targets": [t.params.to_dict() for t in self.targets],
			"tau": self.targets[0].tau,
			"optimizers": [o.to_dict() for o in self.optimizers],
			"context_space": self.context_space.to_dict(),
			"obs_dim": self.obs_dim,
			"act_dim": self.act_dim,
		}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "CriticBank":
		tau = float(data["tau"])
		return cls(
			[MLPParams.from_dict(c) for c in data["critics"]],
			[TargetParams(MLPParams.from_dict(t), tau) for t in data["targets"]],
			[AdamState.from_dict(o) for o in data["optimizers"]],
			ContextSpace.from_dict(data["context_space"]),
			int(data["obs_dim"]),
			int(data["act_dim"]),
		)


@dataclasses.dataclass
class Temperature:
	"""Entropy coefficient exp(log_alpha), tuned toward a target entropy when `auto` is set."""

	log_alpha: float
	target_entropy: float
	auto: bool
	optimizer: AdamState

	@classmethod
	def create(cls, initial: float, act_dim: int, *, auto: bool = True, lr: float = 3e-4) -> "Temperature":
		log_alpha = math.log(initial) if initial > 0 else -math.inf
		return cls(log_alpha, -float(act_dim), auto and initial > 0, adam_init([np.zeros(1)], lr=lr))

	@property
	def value(self) -> float:
		return math.exp(self.log_alpha) if math.isfinite(self.log_alpha) else 0.0

	def update(self, mean_log_prob: float) -> float:
		"""Descent on -log_alpha * (log_prob + target_entropy); returns the loss."""
		if not self.auto:
			return 0.0
		gap = mean_log_prob + self.target_entropy
		(new,), self.optimizer = adam_step_arrays([np.array([self.log_alpha])], [np.array([-gap])], self.optimizer)
		self.log_alpha = float(new[0])
		return -self.log_alpha * gap

	def to_dict(self) -> dict[str, Any]:
		return {
			"log_alpha": self.log_alpha if math.isfinite(self.log_alpha) else None,
			"target_entropy": self.target_entropy,
			"auto": self.auto,
			"optimizer": self.optimizer.to_dict(),
		}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "Temperature":
		log_alpha = -math.inf if data["log_alpha"] is None else float(data["log_alpha"])
		return cls(log_alpha, float(data["target_entropy"]), bool(data["auto"]), AdamState.from_dict(data["optimizer"]))


@dataclasses.dataclass
class ActorState:
	actor: SquashedGaussianActor
	optimizer: AdamState

	@classmethod
	def create(cls, actor: SquashedGaussianActor, lr: float) -> "ActorState":
		return cls(actor, adam_init(actor.net, lr=lr))

	def ascend(self, grads: list[FloatArray]) -> None:
		net, self.optimizer = adam_step(self.actor.net, objective_grads(grads), self.optimizer)
		self.actor = self.actor.with_net(net)


def critic_update(
	bank: CriticBank,
	batch: Batch,
	gamma: float,
	next_actions: FloatArray,
	next_log_prob: FloatArray,
	temperature: float,
	rng: np.random.Generator,
) -> float:
	"""One step of 0.5 * (Q(s, a, c) - y)^2 on every critic, then a Polyak step on the targets.

	y = r + gamma * (1 - done) * (min target Q(s', a', c) - temperature * log pi(a' | s')).
	"""
	next_q = bank.target_q(batch.next_obs, next_actions, batch.contexts, rng)
	target = batch.rewards + gamma * (1.0 - batch.dones) * (next_q - temperature * next_log_prob)
	if not np.all(np.isfinite(target)):
		raise NonFiniteError("critic", "bootstrapped target is non-finite")

	x = bank.inputs(batch.obs, batch.actions, batch.contexts)
	losses: list[float] = []
	for j, critic in enumerate(bank.critics):
		cache = forward_cached(critic, x)
		err = cache.output[:, 0] - target
		losses.append(float(0.5 * np.mean(err * err)))
		grads, _ = backward(critic, cache, (err / err.size)[:, None])
		bank.critics[j], bank.optimizers[j] = adam_step(critic, grads, bank.optimizers[j])
		bank.targets[j] = polyak_update(bank.targets[j], bank.critics[j])
	return float(np.mean(losses))


@dataclasses.dataclass
class ActorStep:
	grads: list[FloatArray]
	objective: float
	log_prob: float


def sac_actor_gradient(
	critic: ContextCritic,
	actor: SquashedGaussianActor,
	actor_inputs: FloatArray,
	obs: FloatArray,
	contexts: FloatArray,
	temperature: float,
	rng: np.random.Generator | None,
	*,
	noise: npt.NDArray[np.float64] | None = None,
) -> ActorStep:
	"""Ascent direction of mean(Q(s, a, c) - temperature * log pi(a | s)) through the reparameterised action."""
	sample = actor.sample(actor_inputs, rng, noise=noise)
	n = sample.action.shape[0]
	q = critic.q_values(obs, sample.action, contexts)
	dq_da = critic.action_gradient(obs, sample.action, contexts)
	grads, _ = actor.backward_sample(sample, dq_da / n, np.full(n, -temperature / n))
	log_prob = float(sample.log_prob.mean())
	return ActorStep(grads, float(np.mean(q)) - temperature * log_prob, log_prob)


def actor_update_sac(
	state: ActorState,
	bank: CriticBank,
	batch: Batch,
	actor_inputs: FloatArray,
	temperature: Temperature,
	rng: np.random.Generator,
) -> tuple[float, float]:
	"""One SAC actor step on the batch's true contexts; returns (loss, mean log-prob)."""
	step = sac_actor_gradient(bank, state.actor, actor_inputs, batch.obs, batch.contexts, temperature.value, rng)
	state.ascend(step.grads)
	return -step.objective, step.log_prob
