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

import numpy as np
import numpy.typing as npt

from approximator import FloatArray
from globals import RANK_TOLERANCE
from helpers import BookkeepingError, InsufficientDataError
from rollout import Episode
from utils import context_hash

logger = logging.getLogger(__name__)

_INITIAL_ROWS = 256


def context_keys(contexts: npt.ArrayLike) -> npt.NDArray[np.int64]:
	rows = np.atleast_2d(np.asarray(contexts, dtype=np.float64))
	return np.fromiter((context_hash(c) for c in rows), dtype=np.int64, count=rows.shape[0])


def check_context_keys(contexts: npt.ArrayLike, keys: npt.ArrayLike, where: str) -> None:
	"""Every stored key must be the hash of the context stored next to it."""
	keys = np.asarray(keys, dtype=np.int64)
	if keys.size == 0:
		return
	bad = np.flatnonzero(context_keys(contexts) != keys)
	if bad.size:
		msg = f"{where}: context key mismatch on {bad.size} of {keys.size} transitions, first at row {bad[0]}"
		raise BookkeepingError(msg)


@dataclasses.dataclass
class Batch:
	obs: FloatArray
	actions: FloatArray
	rewards: FloatArray
	next_obs: FloatArray
	dones: FloatArray
	contexts: FloatArray
	"""True context of the episode, observed at training time."""
	set_mu: FloatArray
	set_sigma: FloatArray
	"""Filtered set the actor conditioned on when the action was taken."""
	next_set_mu: FloatArray
	next_set_sigma: FloatArray
	initial_mu: FloatArray
	initial_sigma: FloatArray
	history: FloatArray
	set_id: npt.NDArray[np.int64]
	episode_id: npt.NDArray[np.int64]
	episode_return: FloatArray
	context_key: npt.NDArray[np.int64]
	indices: npt.NDArray[np.int64]

	def __len__(self) -> int:
		return int(self.rewards.shape[0])


def _field_layout(obs_dim: int, act_dim: int, ctx_dim: int, hist_dim: int) -> dict[str, tuple[tuple[int, ...], type]]:
	vec = np.float64
	return {
		"obs": ((obs_dim,), vec),
		"actions": ((act_dim,), vec),
		"rewards": ((), vec),
		"next_obs": ((obs_dim,), vec),
		"dones": ((), vec),
		"contexts": ((ctx_dim,), vec),
		"set_mu": ((ctx_dim,), vec),
		"set_sigma": ((ctx_dim,), vec),
		"next_set_mu": ((ctx_dim,), vec),
		"next_set_sigma": ((ctx_dim,), vec),
		"initial_mu": ((ctx_dim,), vec),
		"initial_sigma": ((ctx_dim,), vec),
		"history": ((hist_dim,), vec),
		"set_id": ((), np.int64),
		"episode_id": ((), np.int64),
		"episode_return": ((), vec),
		"context_key": ((), np.int64),
	}


class ContextBuffer:
	"""Bounded FIFO of transitions collected under one training context."""

	def __init__(self, capacity: int, layout: dict[str, tuple[tuple[int, ...], type]]) -> None:
		if capacity < 1:
			msg = f"Buffer capacity must be positive, got {capacity}"
			raise ValueError(msg)
		self.capacity = capacity
		self._layout = layout
		rows = min(capacity, _INITIAL_ROWS)
		self._data = {name: np.zeros((rows, *shape), dtype=dtype) for name, (shape, dtype) in layout.items()}
		self._next = 0
		self._size = 0

	def __len__(self) -> int:
		return self._size

	def _reserve(self, rows: int) -> None:
		current = next(iter(self._data.values())).shape[0]
		if rows <= current:
			return
		grown = min(self.capacity, max(rows, 2 * current))
		for name, array in self._data.items():
			bigger = np.zeros((grown, *array.shape[1:]), dtype=array.dtype)
			bigger[:current] = array
			self._data[name] = bigger

	def add(self, rows: dict[str, npt.NDArray[np.generic]]) -> None:
		check_context_keys(rows["contexts"], rows["context_key"], "Replay add")
		n = len(rows["rewards"])
		if n > self.capacity:
			rows = {k: v[-self.capacity :] for k, v in rows.items()}
			n = self.capacity
		self._reserve(min(self.capacity, self._size + n))
		slots = (self._next + np.arange(n)) % self.capacity
		for name in self._layout:
			self._data[name][slots] = rows[name]
		self._next = int((self._next + n) % self.capacity)
		self._size = min(self.capacity, self._size + n)

	def column(self, name: str) -> npt.NDArray[np.generic]:
		return self._data[name][: self._size]


class ReplayBuffers:
	"""One ContextBuffer per training context, addressed through a flat index over their union."""

	def __init__(self, capacity: int, obs_dim: int, act_dim: int, ctx_dim: int, hist_dim: int) -> None:
		self.capacity = capacity
		self._layout = _field_layout(obs_dim, act_dim, ctx_dim, hist_dim)
		self._buffers: dict[int, ContextBuffer] = {}

	def __len__(self) -> int:
		return sum(len(b) for b in self._buffers.values())

	@property
	def context_indices(self) -> list[int]:
		return sorted(self._buffers)

	def buffer(self, context_index: int) -> ContextBuffer:
		if context_index not in self._buffers:
			self._buffers[context_index] = ContextBuffer(self.capacity, self._layout)
		return self._buffers[context_index]

	def add_episode(
		self,
		episode: Episode,
		history: FloatArray,
		*,
		context_index: int,
		set_id: int,
		episode_id: int,
	) -> None:
		n = episode.length
		keys = context_keys(episode.contexts)
		rows: dict[str, npt.NDArray[np.generic]] = {
			"obs": episode.obs,
			"actions": episode.actions,
			"rewards": episode.rewards,
			"next_obs": episode.next_obs,
			"dones": episode.dones.astype(np.float64),
			"contexts": episode.contexts,
			"set_mu": episode.set_centers[:-1],
			"set_sigma": episode.set_widths[:-1],
			"next_set_mu": episode.set_centers[1:],
			"next_set_sigma": episode.set_widths[1:],
			"initial_mu": np.broadcast_to(episode.prior.center, (n, episode.prior.dim)),
			"initial_sigma": np.broadcast_to(episode.prior.width, (n, episode.prior.dim)),
			"history": history,
			"set_id": np.full(n, set_id, dtype=np.int64),
			"episode_id": np.full(n, episode_id, dtype=np.int64),
			"episode_return": np.full(n, episode.episode_return),
			"context_key": keys,
		}
		self.buffer(context_index).add(rows)

	def column(self, name: str) -> npt.NDArray[np.generic]:
		"""A field over the union, in flat-index order."""
		parts = [self._buffers[i].column(name) for i in self.context_indices]
		if not parts:
			shape, dtype = self._layout[name]
			return np.zeros((0, *shape), dtype=dtype)
		return np.concatenate(parts)

	def gather(self, flat: npt.ArrayLike) -> Batch:
		flat = np.asarray(flat, dtype=np.int64)
		sizes = np.array([len(self._buffers[i]) for i in self.context_indices], dtype=np.int64)
		ends = np.cumsum(sizes)
		if flat.size and (flat.min() < 0 or flat.max() >= (ends[-1] if ends.size else 0)):
			msg = f"Flat index out of range for {len(self)} stored transitions"
			raise IndexError(msg)
		owners = np.searchsorted(ends, flat, side="right")
		local = flat - (ends - sizes)[owners]

		fields: dict[str, npt.NDArray[np.generic]] = {}
		for name, (shape, dtype) in self._layout.items():
			out = np.zeros((flat.size, *shape), dtype=dtype)
			for slot, context_index in enumerate(self.context_indices):
				mask = owners == slot
				if np.any(mask):
					out[mask] = self._buffers[context_index].column(name)[local[mask]]
			fields[name] = out
		check_context_keys(fields["contexts"], fields["context_key"], "Replay gather")
		return Batch(**fields, indices=flat)  # type: ignore[arg-type]

	def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
		return self.gather(draw_indices(len(self), batch_size, rng))


def draw_indices(total: int, count: int, rng: np.random.Generator) -> npt.NDArray[np.int64]:
	"""Uniform draw with replacement over `total` stored transitions."""
	if total < 1:
		msg = "Cannot sample from empty replay buffers"
		raise InsufficientDataError(msg)
	return rng.integers(0, total, size=count, dtype=np.int64)


def epopt_draw_size(batch_size: int, alpha: float) -> int:
	return math.ceil(batch_size / alpha - RANK_TOLERANCE)


def epopt_filter_batch(
	buffers: ReplayBuffers,
	batch_size: int,
	alpha: float,
	rng: np.random.Generator,
	*,
	per_set: bool = False,
) -> Batch:
	"""Draw ceil(D / alpha) transitions and keep the D from the lowest-return trajectories.

	Ties are broken by episode id, then by draw order. With `per_set` the draw is restricted
	to one uniformly chosen initial set.
	"""
	if alpha >= 1.0:
		return buffers.sample(batch_size, rng)

	draw = epopt_draw_size(batch_size, alpha)
	if per_set:
		set_ids = buffers.column("set_id")
		chosen = rng.choice(np.unique(set_ids))
		pool = np.flatnonzero(set_ids == chosen)
		if pool.size < draw:
			logger.debug("EPOpt : Set %s holds %s of %s transitions, using a uniform batch", chosen, pool.size, draw)
			return buffers.gather(pool[draw_indices(pool.size, batch_size, rng)])
		drawn = pool[draw_indices(pool.size, draw, rng)]
	else:
		if len(buffers) < draw:
			logger.debug("EPOpt : %s of %s transitions stored, using a uniform batch", len(buffers), draw)
			return buffers.sample(batch_size, rng)
		drawn = draw_indices(len(buffers), draw, rng)

	candidates = buffers.gather(drawn)
	order = np.lexsort((candidates.episode_id, candidates.episode_return))[:batch_size]
	return buffers.gather(drawn[order])
