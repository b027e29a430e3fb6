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
from typing import Any, TypeAlias

import numpy as np
import numpy.typing as npt

from globals import MEMBERSHIP_TOLERANCE
from helpers import DimensionError

ContextVector: TypeAlias = npt.NDArray[np.float64]
"""Unobserved task parameters, one entry per uncertain dimension."""


def as_vector(values: npt.ArrayLike, name: str = "context") -> ContextVector:
	array = np.array(values, dtype=np.float64, ndmin=1)
	if array.ndim != 1:
		msg = f"{name} must be a vector, got shape {array.shape}"
		raise DimensionError(msg)
	if not np.all(np.isfinite(array)):
		msg = f"{name} has non-finite entries: {array}"
		raise ValueError(msg)
	array.setflags(write=False)
	return array


def _check_same_dim(a: ContextVector, b: ContextVector) -> None:
	if a.shape != b.shape:
		msg = f"Dimension mismatch: {a.shape[0]} vs {b.shape[0]}"
		raise DimensionError(msg)


@dataclasses.dataclass(frozen=True, eq=False)
class ContextSpace:
	lower: ContextVector
	upper: ContextVector

	def __post_init__(self) -> None:
		lower = as_vector(self.lower, "lower")
		upper = as_vector(self.upper, "upper")
		_check_same_dim(lower, upper)
		if np.any(lower > upper):
			msg = f"Context space bounds are inverted: {lower} > {upper}"
			raise ValueError(msg)
		object.__setattr__(self, "lower", lower)
		object.__setattr__(self, "upper", upper)

	def __eq__(self, other: object) -> bool:
		if not isinstance(other, ContextSpace):
			return NotImplemented
		return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

	def __hash__(self) -> int:
		return hash((self.lower.tobytes(), self.upper.tobytes()))

	@property
	def dim(self) -> int:
		return int(self.lower.shape[0])

	@property
	def midpoint(self) -> ContextVector:
		return (self.lower + self.upper) / 2

	@property
	def half_range(self) -> ContextVector:
		return (self.upper - self.lower) / 2

	def _scale(self) -> ContextVector:
		half = self.half_range
		return np.where(half > 0, half, 1.0)

	def normalize(self, values: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
		"""Affine map of the space onto [-1, 1] per dimension."""
		return (values - self.midpoint) / self._scale()

	def denormalize(self, values: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
		return values * self._scale() + self.midpoint

	def normalize_width(self, widths: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
		return widths / self._scale()

	def denormalize_width(self, widths: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
		return widths * self._scale()

	def clip(self, values: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
		return np.clip(values, self.lower, self.upper)

	def widened(self, fraction: float) -> "ContextSpace":
		span = self.upper - self.lower
		return ContextSpace(self.lower - fraction * span, self.upper + fraction * span)

	def to_dict(self) -> dict[str, Any]:
		return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "ContextSpace":
		return cls(np.asarray(data["lower"]), np.asarray(data["upper"]))


@dataclasses.dataclass(frozen=True, eq=False)
class UncertaintySet:
	"""Axis-aligned box of plausible contexts: |c[i] - center[i]| <= width[i]."""

	center: ContextVector
	width: ContextVector

	def __post_init__(self) -> None:
		center = as_vector(self.center, "center")
		width = as_vector(self.width, "width")
		_check_same_dim(center, width)
		if np.any(width < 0):
			msg = f"Uncertainty set width must be non-negative: {width}"
			raise ValueError(msg)
		object.__setattr__(self, "center", center)
		object.__setattr__(self, "width", width)

	def __eq__(self, other: object) -> bool:
		if not isinstance(other, UncertaintySet):
			return NotImplemented
		return np.array_equal(self.center, other.center) and np.array_equal(self.width, other.width)

	def __hash__(self) -> int:
		return hash((self.center.tobytes(), self.width.tobytes()))

	def __repr__(self) -> str:
		return f"UncertaintySet(center={self.center.tolist()}, width={self.width.tolist()})"

	@property
	def dim(self) -> int:
		return int(self.center.shape[0])

	@property
	def lower(self) -> ContextVector:
		return self.center - self.width

	@property
	def upper(self) -> ContextVector:
		return self.center + self.width

	@classmethod
	def degenerate(cls, context: npt.ArrayLike) -> "UncertaintySet":
		center = as_vector(context)
		return cls(center, np.zeros_like(center))

	@classmethod
	def spanning(cls, space: ContextSpace) -> "UncertaintySet":
		return cls(space.midpoint, space.half_range)

	def to_dict(self) -> dict[str, Any]:
		return {"center": self.center.tolist(), "width": self.width.tolist()}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "UncertaintySet":
		return cls(np.asarray(data["center"]), np.asarray(data["width"]))


@dataclasses.dataclass(frozen=True)
class SetDistribution:
	"""Uniform centers over the space, fixed width, shifted inward to fit."""

	context_space: ContextSpace
	width_fraction: float
	seed: int = 0

	def __post_init__(self) -> None:
		if not 0.0 < self.width_fraction <= 1.0:
			msg = f"width_fraction must be in (0, 1], got {self.width_fraction}"
			raise ValueError(msg)


def sample_context_uniform(uncertainty_set: UncertaintySet, rng: np.random.Generator) -> ContextVector:
	u = rng.uniform(-1.0, 1.0, size=uncertainty_set.dim)
	context = uncertainty_set.center + uncertainty_set.width * u
	return np.clip(context, uncertainty_set.lower, uncertainty_set.upper)


def sample_contexts(uncertainty_set: UncertaintySet, count: int, rng: np.random.Generator) -> npt.NDArray[np.float64]:
	u = rng.uniform(-1.0, 1.0, size=(count, uncertainty_set.dim))
	contexts = uncertainty_set.center + uncertainty_set.width * u
	return np.clip(contexts, uncertainty_set.lower, uncertainty_set.upper)


def set_contains(uncertainty_set: UncertaintySet, context: npt.ArrayLike) -> bool:
	c = np.asarray(context, dtype=np.float64).reshape(-1)
	if c.shape != uncertainty_set.center.shape:
		msg = f"Dimension mismatch: set has {uncertainty_set.dim} dims, context has {c.shape[0]}"
		raise DimensionError(msg)
	return bool(np.all(np.abs(c - uncertainty_set.center) <= uncertainty_set.width + MEMBERSHIP_TOLERANCE))


def sample_set(dist: SetDistribution, rng: np.random.Generator) -> UncertaintySet:
	space = dist.context_space
	width = dist.width_fraction * (space.upper - space.lower) / 2
	center = rng.uniform(space.lower, space.upper)
	center = np.clip(center, space.lower + width, space.upper - width)
	return UncertaintySet(center, width)
