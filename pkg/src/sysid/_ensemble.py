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


import collections
import dataclasses
import logging
from collections.abc import Sequence
from typing import Any

import numpy as np
import numpy.typing as npt

from approximator import AdamState, FloatArray, MLPParams, adam_init, adam_step, backward, forward, forward_cached, init_mlp
from enums import Activation
from globals import IDENTIFIABILITY_EPSILON, POSTERIOR_WIDEN_FRACTION
from helpers import DimensionError, NonFiniteError
from rcmdp import ContextSpace, UncertaintySet

logger = logging.getLogger(__name__)


def feature_dim(history_length: int, obs_dim: int, act_dim: int) -> int:
	"""(s, a, s') for a single transition; (s, a, r, s') per transition for longer windows."""
	if history_length < 1:
		msg = f"History length must be at least 1, got {history_length}"
		raise ValueError(msg)
	if history_length == 1:
		return 2 * obs_dim + act_dim
	return history_length * (2 * obs_dim + act_dim + 1)


class HistoryWindow:
	"""The last H transitions, oldest first, zero-padded at the front until H have been seen."""

	def __init__(self, history_length: int, obs_dim: int, act_dim: int) -> None:
		self.history_length = history_length
		self.obs_dim = obs_dim
		self.act_dim = act_dim
		self._transitions: collections.deque[FloatArray] = collections.deque(maxlen=history_length)

	def __len__(self) -> int:
		return len(self._transitions)

	@property
	def empty(self) -> bool:
		return not self._transitions

	@property
	def padding(self) -> int:
		return self.history_length - len(self._transitions)

	def push(self, s: npt.ArrayLike, a: npt.ArrayLike, r: float, s_next: npt.ArrayLike) -> None:
		parts = [np.asarray(s, dtype=np.float64).ravel(), np.asarray(a, dtype=np.float64).ravel()]
		if self.history_length > 1:
			parts.append(np.array([r], dtype=np.float64))
		parts.append(np.asarray(s_next, dtype=np.float64).ravel())
		row = np.concatenate(parts)
		if row.shape[0] * self.history_length != feature_dim(self.history_length, self.obs_dim, self.act_dim):
			msg = f"Transition of width {row.shape[0]} does not fit a window over obs {self.obs_dim} / act {self.act_dim}"
			raise DimensionError(msg)
		self._transitions.append(row)

	def clear(self) -> None:
		self._transitions.clear()

	def features(self) -> FloatArray:
		width = feature_dim(self.history_length, self.obs_dim, self.act_dim) // self.history_length
		rows = [np.zeros(width)] * self.padding + list(self._transitions)
		return np.concatenate(rows)


@dataclasses.dataclass
class SysIdBatch:
	prior_mu: FloatArray
	prior_sigma: FloatArray
	history: FloatArray
	contexts: FloatArray

	def __len__(self) -> int:
		return int(self.contexts.shape[0])


class SysIdEnsemble:
	"""B context regressors f(mu, sigma, h) -> c sharing one layout.

	Inputs and targets are normalised through the context space; predictions come back in context units.
	"""

	def __init__(
		self,
		members: list[MLPParams],
		context_space: ContextSpace,
		history_length: int,
		obs_dim: int,
		act_dim: int,
	) -> None:
		if len(members) < 2:
			msg = f"A system-ID ensemble needs at least 2 members, got {len(members)}"
			raise ValueError(msg)
		layouts = {m.layer_sizes for m in members}
		if len(layouts) != 1:
			msg = f"Ensemble members disagree on layout: {sorted(layouts)}"
			raise DimensionError(msg)
		self.members = members
		self.context_space = context_space
		self.history_length = history_length
		self.obs_dim = obs_dim
		self.act_dim = act_dim
		self.output_space = context_space.widened(POSTERIOR_WIDEN_FRACTION)
		expected = self.input_dim
		if members[0].in_dim != expected or members[0].out_dim != context_space.dim:
			msg = f"Members map {members[0].in_dim} -> {members[0].out_dim}, expected {expected} -> {context_space.dim}"
			raise DimensionError(msg)

	@classmethod
	def create(
		cls,
		context_space: ContextSpace,
		obs_dim: int,
		act_dim: int,
		rng: np.random.Generator,
		*,
		n_members: int = 4,
		history_length: int = 1,
		hidden: Sequence[int] = (64, 64),
		activation: Activation | str = Activation.ReLU,
	) -> "SysIdEnsemble":
		if n_members < 2:
			msg = f"A system-ID ensemble needs at least 2 members, got {n_members}"
			raise ValueError(msg)
		d = context_space.dim
		in_dim = 2 * d + feature_dim(history_length, obs_dim, act_dim)
		members = [init_mlp([in_dim, *hidden, d], member_rng, activation) for member_rng in rng.spawn(n_members)]
		logger.debug("SysID : Ensemble : %s members, history %s, input width %s", n_members, history_length, in_dim)
		return cls(members, context_space, history_length, obs_dim, act_dim)

	@property
	def size(self) -> int:
		return len(self.members)

	@property
	def input_dim(self) -> int:
		return 2 * self.context_space.dim + feature_dim(self.history_length, self.obs_dim, self.act_dim)

	def new_window(self) -> HistoryWindow:
		return HistoryWindow(self.history_length, self.obs_dim, self.act_dim)

	def inputs(self, prior_mu: npt.ArrayLike, prior_sigma: npt.ArrayLike, history: npt.ArrayLike) -> FloatArray:
		mu = np.atleast_2d(np.asarray(prior_mu, dtype=np.float64))
		sigma = np.atleast_2d(np.asarray(prior_sigma, dtype=np.float64))
		h = np.atleast_2d(np.asarray(history, dtype=np.float64))
		return np.concatenate(
			[self.context_space.normalize(mu), self.context_space.normalize_width(sigma), h],
			axis=1,
		)

	def member_predictions(self, prior: UncertaintySet, history: HistoryWindow | npt.ArrayLike) -> FloatArray:
		"""Every member's context estimate, shape (B, d), in context units."""
		features = history.features() if isinstance(history, HistoryWindow) else np.asarray(history, dtype=np.float64)
		x = self.inputs(prior.center, prior.width, features)
		return np.stack([self.context_space.denormalize(forward(m, x)[0]) for m in self.members])

	def new_optimizers(self, lr: float) -> list[AdamState]:
		return [adam_init(m, lr=lr) for m in self.members]

	def to_dict(self) -> dict[str, Any]:
		return {
			"n_members": self.size,
			"history_length": self.history_length,
			"obs_dim": self.obs_dim,
			"act_dim": self.act_dim,
			"layer_sizes": list(self.members[0].layer_sizes),
			"context_space": self.context_space.to_dict(),
			"members": [m.to_dict() for m in self.members],
		}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "SysIdEnsemble":
		members = [MLPParams.from_dict(m) for m in data["members"]]
		if len(members) != int(data["n_members"]):
			msg = f"Ensemble records {data['n_members']} members but stores {len(members)}"
			raise DimensionError(msg)
		return cls(
			members,
			ContextSpace.from_dict(data["context_space"]),
			int(data["history_length"]),
			int(data["obs_dim"]),
			int(data["act_dim"]),
		)


def ensemble_train_step(
	ensemble: SysIdEnsemble,
	batch: SysIdBatch,
	opt_states: list[AdamState],
	rng: np.random.Generator,
) -> float:
	"""One regression step where every sample trains a single uniformly drawn member.

	Members and their optimiser states are replaced in place. Returns the batch MSE in
	normalised context units.
	"""
	n = len(batch)
	x = ensemble.inputs(batch.prior_mu, batch.prior_sigma, batch.history)
	targets = ensemble.context_space.normalize(np.atleast_2d(batch.contexts))
	assignment = rng.integers(0, ensemble.size, size=n)

	total = 0.0
	updates: list[tuple[int, MLPParams, AdamState]] = []
	for j, member in enumerate(ensemble.members):
		rows = np.flatnonzero(assignment == j)
		if rows.size == 0:
			continue
		cache = forward_cached(member, x[rows])
		err = cache.output - targets[rows]
		total += float(np.sum(err * err))
		grads, _ = backward(member, cache, 2.0 * err / err.size)
		params, state = adam_step(member, grads, opt_states[j])
		updates.append((j, params, state))

	loss = total / targets.size
	if not np.isfinite(loss):
		raise NonFiniteError("sysid-ensemble", f"loss is {loss} on a batch of {n}")
	for j, params, state in updates:
		ensemble.members[j] = params
		opt_states[j] = state
	return loss


def infer_posterior(ensemble: SysIdEnsemble, prior: UncertaintySet, history: HistoryWindow | npt.ArrayLike) -> UncertaintySet:
	"""Mean and population standard deviation over members."""
	predictions = ensemble.member_predictions(prior, history)
	mu = ensemble.output_space.clip(predictions.mean(axis=0))
	sigma = np.where(np.ptp(predictions, axis=0) == 0.0, 0.0, predictions.std(axis=0))
	return UncertaintySet(mu, sigma)


def recursive_filter_step(ensemble: SysIdEnsemble, previous: UncertaintySet, history: HistoryWindow) -> UncertaintySet:
	if history.empty:
		return previous
	return infer_posterior(ensemble, previous, history)


def identifiability_proxy(uncertainty_set: UncertaintySet) -> float:
	"""Log-volume of the box, i.e. its uniform entropy up to a constant."""
	return float(np.sum(np.log(2.0 * uncertainty_set.width + IDENTIFIABILITY_EPSILON)))
