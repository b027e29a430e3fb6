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

from enums import Activation
from globals import FINAL_LAYER_SCALE, LOG_STD_MAX, LOG_STD_MIN, SQUASH_EPSILON
from helpers import DimensionError

from ._network import FloatArray, ForwardCache, MLPParams, backward, forward, forward_cached, init_mlp

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclasses.dataclass
class ActorSample:
	action: FloatArray
	"""Squashed action tanh(u) in [-1, 1], shape (n, act_dim)."""
	log_prob: FloatArray
	mean: FloatArray
	noise: FloatArray
	log_std: FloatArray
	cache: ForwardCache
	log_std_mask: FloatArray


class SquashedGaussianActor:
	"""Gaussian policy squashed through tanh, with the change-of-variables log-prob correction."""

	def __init__(self, net: MLPParams, act_dim: int) -> None:
		if net.out_dim != 2 * act_dim:
			msg = f"Actor head needs {2 * act_dim} outputs for {act_dim} action dims, net gives {net.out_dim}"
			raise DimensionError(msg)
		self.net = net
		self.act_dim = act_dim

	@classmethod
	def create(
		cls,
		in_dim: int,
		act_dim: int,
		hidden: Sequence[int],
		rng: np.random.Generator,
		activation: Activation | str = Activation.ReLU,
	) -> "SquashedGaussianActor":
		net = init_mlp([in_dim, *hidden, 2 * act_dim], rng, activation, final_scale=FINAL_LAYER_SCALE)
		return cls(net, act_dim)

	@property
	def in_dim(self) -> int:
		return self.net.in_dim

	def with_net(self, net: MLPParams) -> "SquashedGaussianActor":
		return SquashedGaussianActor(net, self.act_dim)

	def _split(self, out: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
		mu = out[:, : self.act_dim]
		raw = out[:, self.act_dim :]
		log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
		mask = ((raw >= LOG_STD_MIN) & (raw <= LOG_STD_MAX)).astype(np.float64)
		return mu, log_std, mask

	def sample(
		self,
		inputs: npt.ArrayLike,
		rng: np.random.Generator | None = None,
		*,
		noise: FloatArray | None = None,
	) -> ActorSample:
		"""Reparameterised draw a = tanh(mu + std * eps).

		Pass `noise` to reuse a fixed eps (finite-difference checks); otherwise eps ~ N(0, I) from `rng`.
		"""
		cache = forward_cached(self.net, np.atleast_2d(np.asarray(inputs, dtype=np.float64)))
		mu, log_std, mask = self._split(cache.output)
		if noise is None:
			if rng is None:
				msg = "Sampling needs either an rng or explicit noise"
				raise ValueError(msg)
			noise = rng.standard_normal(mu.shape)
		noise = np.broadcast_to(noise, mu.shape)
		u = mu + np.exp(log_std) * noise
		action = np.tanh(u)
		log_prob = np.sum(
			-0.5 * noise * noise - log_std - _HALF_LOG_2PI - np.log(1.0 - action * action + SQUASH_EPSILON),
			axis=1,
		)
		return ActorSample(action, log_prob, np.tanh(mu), np.array(noise), log_std, cache, mask)

	def mean_action(self, inputs: npt.ArrayLike) -> FloatArray:
		x = np.asarray(inputs, dtype=np.float64)
		out = np.atleast_2d(forward(self.net, np.atleast_2d(x)))
		action = np.tanh(out[:, : self.act_dim])
		return action[0] if x.ndim == 1 else action

	def backward_sample(
		self,
		sample: ActorSample,
		grad_action: npt.ArrayLike,
		grad_log_prob: npt.ArrayLike,
	) -> tuple[list[FloatArray], FloatArray]:
		"""Gradients of sum(grad_action * a) + sum(grad_log_prob * log_prob) with eps held fixed."""
		d_action = np.broadcast_to(np.asarray(grad_action, dtype=np.float64), sample.action.shape)
		d_logp = np.asarray(grad_log_prob, dtype=np.float64).reshape(-1, 1)
		a = sample.action
		one_minus_a2 = 1.0 - a * a
		d_u = d_action * one_minus_a2 + d_logp * 2.0 * a * one_minus_a2 / (one_minus_a2 + SQUASH_EPSILON)
		d_log_std = (d_u * np.exp(sample.log_std) * sample.noise - d_logp) * sample.log_std_mask
		upstream = np.concatenate([d_u, d_log_std], axis=1)
		return backward(self.net, sample.cache, upstream)

	def to_dict(self) -> dict[str, Any]:
		return {"act_dim": self.act_dim, "net": self.net.to_dict()}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "SquashedGaussianActor":
		return cls(MLPParams.from_dict(data["net"]), int(data["act_dim"]))
