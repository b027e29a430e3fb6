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
import math
import time
from abc import ABC, abstractmethod
from collections.abc import Callable
from typing import Any, ClassVar, final

import numpy as np

from approximator import FloatArray, SquashedGaussianActor
from enums import Activation, Algorithm, Phase
from helpers import NonFiniteError
from logger import Logger
from pointmass import PointMassEnv
from rcmdp import TaskSuite
from risk import cvar_rank
from rollout import Episode, run_episode
from sysid import HistoryWindow, feature_dim

from ._critics import ActorState, CriticBank, Temperature, actor_update_sac, critic_update
from ._replay import Batch, ReplayBuffers
from ._runtime import ActorRuntime, actor_inputs

logger = logging.getLogger(__name__)


@dataclasses.dataclass
class PolicySpec:
	"""Algorithm choice and its hyperparameters."""

	algorithm: Algorithm = Algorithm.SIRSA
	alpha: float = 0.25
	n_cvar: int = 50
	b_ensemble: int = 4
	t_threshold: int = 25_000
	redq: bool = False
	redq_m: int = 8
	n_ens: int = 5
	entropy_in_cvar: bool = True
	degenerate_set_prob: float = 0.5
	hidden: tuple[int, ...] = (64, 64)
	activation: Activation = Activation.ReLU
	sysid_history_length: int = 1
	sysid_hidden: tuple[int, ...] = (64, 64)
	sysid_initial_prior_prob: float = 0.5
	wcpg_alpha_min: float = 0.05
	wcpg_variance_samples: int = 50
	wcpg_variance_hidden: tuple[int, ...] = (256, 256)
	wcpg_literal_formula: bool = False

	def __post_init__(self) -> None:
		self.algorithm = Algorithm(self.algorithm)
		self.activation = Activation(self.activation)
		self.hidden = tuple(self.hidden)
		self.sysid_hidden = tuple(self.sysid_hidden)
		self.wcpg_variance_hidden = tuple(self.wcpg_variance_hidden)
		if not 0.0 < self.alpha <= 1.0:
			msg = f"alpha must be in (0, 1], got {self.alpha}"
			raise ValueError(msg)
		if cvar_rank(self.alpha, self.n_cvar) < 1:
			msg = f"alpha * N must be at least 1 (alpha={self.alpha}, N={self.n_cvar})"
			raise ValueError(msg)
		if self.b_ensemble < 2:
			msg = f"The system-ID ensemble needs B >= 2, got {self.b_ensemble}"
			raise ValueError(msg)
		if self.redq and self.redq_m < 2:
			msg = f"REDQ needs at least 2 critics, got {self.redq_m}"
			raise ValueError(msg)

	@property
	def n_critics(self) -> int:
		return self.redq_m if self.redq else 2

	def to_dict(self) -> dict[str, Any]:
		data = dataclasses.asdict(self)
		data["algorithm"] = str(self.algorithm)
		data["activation"] = str(self.activation)
		for key in ("hidden", "sysid_hidden", "wcpg_variance_hidden"):
			data[key] = list(data[key])
		return data

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "PolicySpec":
		return cls(**data)


@dataclasses.dataclass
class TrainingSettings:
	budget: int = 50_000
	batch_size: int = 128
	steps_per_episode: int = 50
	warmup_episodes: int = 10
	buffer_capacity: int = 100_000
	gamma: float = 0.99
	tau: float = 0.005
	lr: float = 3e-4
	init_temperature: float = 0.1
	auto_temperature: bool = True
	checkpoint_interval: int = 5_000
	log_interval: int = 500

	def to_dict(self) -> dict[str, Any]:
		return dataclasses.asdict(self)

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "TrainingSettings":
		return cls(**data)


@dataclasses.dataclass
class TrainingResult:
	algorithm: Algorithm
	steps: int
	episodes: int
	rows: list[dict[str, Any]]
	wall_seconds: float


CheckpointHook = Callable[["Trainer", str], None]


def episode_history(episode: Episode, history_length: int, obs_dim: int, act_dim: int) -> FloatArray:
	"""History features after each step of an episode, shape (T, F)."""
	window = HistoryWindow(history_length, obs_dim, act_dim)
	rows = []
	for t in range(episode.length):
		window.push(episode.obs[t], episode.actions[t], float(episode.rewards[t]), episode.next_obs[t])
		rows.append(window.features())
	return np.stack(rows)


class Trainer(ABC):
	"""Off-policy actor-critic loop shared by every algorithm.

	Subclasses decide what the actor is conditioned on, how batches are drawn, how the actor
	is updated, and which extra models are fitted alongside the critics.
	"""

	algorithms: ClassVar[tuple[Algorithm, ...]] = ()

	def __init__(
		self,
		spec: PolicySpec,
		settings: TrainingSettings,
		suite: TaskSuite,
		env: PointMassEnv,
		rng: np.random.Generator,
		*,
		metrics: Logger | None = None,
	) -> None:
		if spec.algorithm not in self.algorithms:
			msg = f"{type(self).__name__} cannot train {spec.algorithm}"
			raise ValueError(msg)
		self.spec = spec
		self.settings = settings
		self.suite = suite
		self.env = env
		self.rng = rng
		self.metrics = metrics
		self.space = suite.context_space
		self.train_contexts = suite.flat_contexts()
		self.history_dim = feature_dim(spec.sysid_history_length, env.obs_dim, env.act_dim)

		actor_rng, critic_rng, extra_rng = rng.spawn(3)
		actor = SquashedGaussianActor.create(
			env.obs_dim + self.conditioning_dim, env.act_dim, spec.hidden, actor_rng, spec.activation
		)
		self.actor_state = ActorState.create(actor, settings.lr)
		self.bank = CriticBank.create(
			self.space,
			env.obs_dim,
			env.act_dim,
			critic_rng,
			n_critics=spec.n_critics,
			hidden=spec.hidden,
			activation=spec.activation,
			lr=settings.lr,
			tau=settings.tau,
		)
		self.temperature = Temperature.create(
			settings.init_temperature, env.act_dim, auto=settings.auto_temperature, lr=settings.lr
		)
		self.buffers = ReplayBuffers(settings.buffer_capacity, env.obs_dim, env.act_dim, self.space.dim, self.history_dim)
		self.step = 0
		self.episodes = 0
		self.last_return = math.nan
		self.rows: list[dict[str, Any]] = []
		self._setup(extra_rng)

	@property
	def actor(self) -> SquashedGaussianActor:
		return self.actor_state.actor

	@property
	@abstractmethod
	def conditioning_dim(self) -> int: ...

	@abstractmethod
	def batch_conditioning(self, batch: Batch, rng: np.random.Generator) -> tuple[FloatArray, FloatArray]:
		"""Actor conditioning for the batch's states and next states."""

	@abstractmethod
	def runtime(self, *, random_actions: bool = False) -> ActorRuntime: ...

	def _setup(self, rng: np.random.Generator) -> None:
		return

	@property
	def phase(self) -> Phase:
		return Phase.SAC

	def sample_batch(self, rng: np.random.Generator) -> Batch:
		return self.buffers.sample(self.settings.batch_size, rng)

	def actor_step(self, batch: Batch, conditioning: FloatArray, rng: np.random.Generator) -> tuple[float, float]:
		"""Returns (actor loss, mean log-prob of the sampled actions)."""
		inputs = actor_inputs(batch.obs, conditioning)
		return actor_update_sac(self.actor_state, self.bank, batch, inputs, self.temperature, rng)

	def auxiliary_step(self, batch: Batch, rng: np.random.Generator) -> dict[str, float]:
		return {}

	def extra_state(self) -> dict[str, Any]:
		"""Algorithm-specific models to store in checkpoints."""
		return {}

	@final
	def collect_episode(self, rng: np.random.Generator, *, random_actions: bool = False) -> Episode:
		train_context = self.train_contexts[int(rng.integers(len(self.train_contexts)))]
		prior = self.suite.train_sets[train_context.set_index]
		episode = run_episode(
			self.env,
			self.runtime(random_actions=random_actions),
			train_context.context,
			prior,
			rng,
			deterministic=False,
		)
		history = episode_history(episode, self.spec.sysid_history_length, self.env.obs_dim, self.env.act_dim)
		self.buffers.add_episode(
			episode,
			history,
			context_index=train_context.index,
			set_id=train_context.set_index,
			episode_id=self.episodes,
		)
		self.episodes += 1
		self.last_return = episode.episode_return
		return episode

	@final
	def gradient_step(self, rng: np.random.Generator) -> dict[str, float]:
		batch = self.sample_batch(rng)
		conditioning, next_conditioning = self.batch_conditioning(batch, rng)
		next_sample = self.actor.sample(actor_inputs(batch.next_obs, next_conditioning), rng)
		critic_loss = critic_update(
			self.bank,
			batch,
			self.settings.gamma,
			next_sample.action,
			next_sample.log_prob,
			self.temperature.value,
			rng,
		)
		actor_loss, log_prob = self.actor_step(batch, conditioning, rng)
		if not (math.isfinite(critic_loss) and math.isfinite(actor_loss)):
			raise NonFiniteError("agents", f"critic loss {critic_loss}, actor loss {actor_loss} at step {self.step}")
		self.temperature.update(log_prob)
		return {"critic_loss": critic_loss, "actor_loss": actor_loss, **self.auxiliary_step(batch, rng)}

	@final
	def train(self, budget: int | None = None, *, on_checkpoint: CheckpointHook | None = None) -> TrainingResult:
		budget = self.settings.budget if budget is None else budget
		started = time.perf_counter()
		logger.info(
			"Train : %s : budget %s, switch at %s, %s training contexts",
			self.spec.algorithm,
			budget,
			self.spec.t_threshold,
			len(self.train_contexts),
		)

		try:
			while self.episodes < self.settings.warmup_episodes:
				self.collect_episode(self.rng, random_actions=True)
			while self.step < budget:
				if self.step % self.settings.steps_per_episode == 0:
					self.collect_episode(self.rng)
				phase = self.phase
				losses = self.gradient_step(self.rng)
				self.step += 1
				if self.phase != phase:
					logger.info("Train : %s : Phase switch to %s at step %s", self.spec.algorithm, self.phase, self.step)
				if self.step % self.settings.log_interval == 0 or self.step == budget:
					self._record(phase, losses, started)
				if on_checkpoint and self.settings.checkpoint_interval and self.step % self.settings.checkpoint_interval == 0:
					on_checkpoint(self, "periodic")
		except NonFiniteError:
			logger.exception("Train : %s : Aborted at step %s", self.spec.algorithm, self.step)
			if on_checkpoint:
				on_checkpoint(self, "aborted")
			raise

		if on_checkpoint:
			on_checkpoint(self, "final")
		wall = time.perf_counter() - started
		logger.info("Train : %s : Finished %s steps, %s episodes in %.1fs", self.spec.algorithm, self.step, self.episodes, wall)
		return TrainingResult(self.spec.algorithm, self.step, self.episodes, self.rows, wall)

	def _record(self, phase: Phase, losses: dict[str, float], started: float) -> None:
		row = {
			"iteration": self.step,
			"phase": str(phase),
			"critic_loss": losses.get("critic_loss", ""),
			"actor_loss": losses.get("actor_loss", ""),
			"sysid_loss": losses.get("sysid_loss", ""),
			"temperature": self.temperature.value,
			"episode_return": self.last_return,
			"wall_seconds": round(time.perf_counter() - started, 3),
		}
		self.rows.append(row)
		if self.metrics is not None:
			self.metrics.log_metrics(row)
