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


from abc import ABC, abstractmethod

import numpy as np
import numpy.typing as npt

from approximator import FloatArray, SquashedGaussianActor
from enums import Algorithm
from rcmdp import ContextSpace, ContextVector, UncertaintySet, as_vector, sample_contexts
from sysid import HistoryWindow, SysIdEnsemble, recursive_filter_step


def set_features(space: ContextSpace, centers: npt.ArrayLike, widths: npt.ArrayLike) -> FloatArray:
	"""Actor conditioning for a set: normalised center then normalised width."""
	mu = np.asarray(centers, dtype=np.float64)
	sigma = np.asarray(widths, dtype=np.float64)
	return np.concatenate([space.normalize(mu), space.normalize_width(sigma)], axis=-1)


def actor_inputs(obs: npt.ArrayLike, conditioning: npt.ArrayLike) -> FloatArray:
	return np.concatenate([np.asarray(obs, dtype=np.float64), np.asarray(conditioning, dtype=np.float64)], axis=-1)


def context_mean_action(actor: SquashedGaussianActor, space: ContextSpace, contexts: FloatArray, obs: FloatArray) -> FloatArray:
	"""Mean of the per-context greedy actions; sorted first so the result ignores context order."""
	contexts = np.atleast_2d(contexts)
	features = set_features(space, contexts, np.zeros_like(contexts))
	inputs = actor_inputs(np.broadcast_to(obs, (contexts.shape[0], obs.shape[-1])), features)
	actions = np.sort(actor.mean_action(inputs), axis=0)
	return actions.mean(axis=0)


class ActorRuntime(ABC):
	"""Drives a trained actor through an episode, owning whatever per-episode state it needs."""

	def __init__(self, actor: SquashedGaussianActor, context_space: ContextSpace, *, random_actions: bool = False) -> None:
		self.actor = actor
		self.context_space = context_space
		self.random_actions = random_actions
		self.prior = UncertaintySet.spanning(context_space)
		self.context: ContextVector = context_space.midpoint

	def begin_episode(self, prior: UncertaintySet, context: ContextVector, rng: np.random.Generator) -> None:
		self.prior = prior
		self.context = as_vector(context)
		self._start(rng)

	def _start(self, rng: np.random.Generator) -> None:  # noqa: ARG002
		return

	@abstractmethod
	def conditioning(self) -> FloatArray: ...

	def act(self, obs: FloatArray, rng: np.random.Generator, *, deterministic: bool) -> FloatArray:
		if self.random_actions:
			return rng.uniform(-1.0, 1.0, size=self.actor.act_dim)
		inputs = actor_inputs(obs, self.conditioning())
		if deterministic:
			return self.actor.mean_action(inputs)
		return self.actor.sample(inputs, rng).action[0]

	def observe(self, obs: FloatArray, action: FloatArray, reward: float, next_obs: FloatArray) -> None:
		return

	def context_changed(self, context: ContextVector) -> None:
		self.context = as_vector(context)

	@property
	def current_set(self) -> UncertaintySet:
		return self.prior


class FilteringRuntime(ActorRuntime):
	"""Set-conditioned actor whose set is refined by the system-ID ensemble after every step."""

	def __init__(
		self,
		actor: SquashedGaussianActor,
		ensemble: SysIdEnsemble,
		context_space: ContextSpace,
		*,
		random_actions: bool = False,
	) -> None:
		super().__init__(actor, context_space, random_actions=random_actions)
		self.ensemble = ensemble
		self.window: HistoryWindow = ensemble.new_window()
		self._set = self.prior

	def _start(self, rng: np.random.Generator) -> None:  # noqa: ARG002
		self.window = self.ensemble.new_window()
		self._set = self.prior

	def conditioning(self) -> FloatArray:
		return set_features(self.context_space, self._set.center, self._set.width)

	def observe(self, obs: FloatArray, action: FloatArray, reward: float, next_obs: FloatArray) -> None:
		self.window.push(obs, action, reward, next_obs)
		self._set = recursive_filter_step(self.ensemble, self._set, self.window)

	@property
	def current_set(self) -> UncertaintySet:
		return self._set


class FixedSetRuntime(ActorRuntime):
	"""Conditions on one set for the whole episode, optionally with a risk level input."""

	def __init__(
		self,
		actor: SquashedGaussianActor,
		context_space: ContextSpace,
		*,
		override_set: UncertaintySet | None = None,
		alpha: float | None = None,
		random_actions: bool = False,
	) -> None:
		super().__init__(actor, context_space, random_actions=random_actions)
		self.override_set = override_set
		self.alpha = alpha

	@property
	def current_set(self) -> UncertaintySet:
		return self.override_set if self.override_set is not None else self.prior

	def conditioning(self) -> FloatArray:
		features = set_features(self.context_space, self.current_set.center, self.current_set.width)
		if self.alpha is None:
			return features
		return np.append(features, self.alpha)


class OracleRuntime(ActorRuntime):
	"""Context-conditioned actor given the true context, or a fixed believed one."""

	def __init__(
		self,
		actor: SquashedGaussianActor,
		context_space: ContextSpace,
		*,
		believed_context: npt.ArrayLike | None = None,
		random_actions: bool = False,
	) -> None:
		super().__init__(actor, context_space, random_actions=random_actions)
		self.believed_context = None if believed_context is None else as_vector(believed_context)

	@property
	def acting_context(self) -> ContextVector:
		return self.context if self.believed_context is None else self.believed_context

	def conditioning(self) -> FloatArray:
		c = self.acting_context
		return set_features(self.context_space, c, np.zeros_like(c))

	@property
	def current_set(self) -> UncertaintySet:
		return UncertaintySet.degenerate(self.acting_context)


class EnsembleRuntime(ActorRuntime):
	"""Averages the greedy actions of the oracle actor at N_ens contexts drawn once per episode."""

	def __init__(self, actor: SquashedGaussianActor, context_space: ContextSpace, n_ens: int) -> None:
		super().__init__(actor, context_space)
		if n_ens < 1:
			msg = f"Policy ensemble needs at least one member, got {n_ens}"
			raise ValueError(msg)
		self.n_ens = n_ens
		self.contexts: FloatArray = np.tile(context_space.midpoint, (n_ens, 1))

	def _start(self, rng: np.random.Generator) -> None:
		self.contexts = sample_contexts(self.prior, self.n_ens, rng)

	def conditioning(self) -> FloatArray:
		return set_features(self.context_space, self.prior.center, self.prior.width)

	def act(self, obs: FloatArray, rng: np.random.Generator, *, deterministic: bool) -> FloatArray:  # noqa: ARG002
		return context_mean_action(self.actor, self.context_space, self.contexts, obs)


def make_runtime(
	algorithm: Algorithm | str,
	actor: SquashedGaussianActor,
	context_space: ContextSpace,
	*,
	ensemble: SysIdEnsemble | None = None,
	n_ens: int = 5,
	alpha: float | None = None,
	random_actions: bool = False,
) -> ActorRuntime:
	"""Runtime that acts the way `algorithm` acts at evaluation time."""
	algorithm = Algorithm(algorithm)
	match algorithm:
		case Algorithm.SIRSA | Algorithm.SystemID:
			if ensemble is None:
				msg = f"{algorithm} needs its system-ID ensemble to act"
				raise ValueError(msg)
			return FilteringRuntime(actor, ensemble, context_space, random_actions=random_actions)
		case Algorithm.EPOpt:
			return FixedSetRuntime(
				actor, context_space, override_set=UncertaintySet.spanning(context_space), random_actions=random_actions
			)
		case Algorithm.SetEPOpt:
			return FixedSetRuntime(actor, context_space, random_actions=random_actions)
		case Algorithm.WCPG:
			return FixedSetRuntime(
				actor,
				context_space,
				override_set=UncertaintySet.spanning(context_space),
				alpha=1.0 if alpha is None else alpha,
				random_actions=random_actions,
			)
		case Algorithm.SetWCPG:
			return FixedSetRuntime(actor, context_space, alpha=1.0 if alpha is None else alpha, random_actions=random_actions)
		case Algorithm.Oracle:
			return OracleRuntime(actor, context_space, random_actions=random_actions)
		case Algorithm.PolicyEnsemble:
			return EnsembleRuntime(actor, context_space, n_ens)
