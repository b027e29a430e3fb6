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

import numpy as np
import numpy.typing as npt

from globals import RANK_TOLERANCE


def cvar_rank(alpha: float, n: int) -> int:
	"""floor(alpha * n), robust to products like 0.29 * 100 landing just under an integer."""
	return math.floor(alpha * n + RANK_TOLERANCE)


@dataclasses.dataclass(frozen=True)
class RiskConfig:
	alpha: float
	n_samples: int

	def __post_init__(self) -> None:
		if not 0.0 < self.alpha <= 1.0:
			msg = f"alpha must be in (0, 1], got {self.alpha}"
			raise ValueError(msg)
		if self.n_samples < 1:
			msg = f"CVaR sample count must be positive, got {self.n_samples}"
			raise ValueError(msg)
		if self.rank < 1:
			msg = f"alpha * N must be at least 1 (alpha={self.alpha}, N={self.n_samples})"
			raise ValueError(msg)

	@property
	def rank(self) -> int:
		return cvar_rank(self.alpha, self.n_samples)


def _prepare(values: npt.ArrayLike, alpha: float) -> tuple[npt.NDArray[np.float64], int]:
	v = np.asarray(values, dtype=np.float64).ravel()
	if v.size == 0:
		msg = "Cannot estimate a risk measure from an empty sample"
		raise ValueError(msg)
	if not 0.0 < alpha <= 1.0:
		msg = f"alpha must be in (0, 1], got {alpha}"
		raise ValueError(msg)
	k = cvar_rank(alpha, v.size)
	if k < 1:
		msg = f"alpha * N must be at least 1 (alpha={alpha}, N={v.size})"
		raise ValueError(msg)
	return v, k


def empirical_var(values: npt.ArrayLike, alpha: float) -> float:
	"""Element of 1-indexed rank floor(alpha * N) in ascending order."""
	v, k = _prepare(values, alpha)
	return float(np.sort(v, kind="stable")[k - 1])


def empirical_cvar(values: npt.ArrayLike, alpha: float) -> float:
	"""Mean of the floor(alpha * N) smallest values."""
	v, k = _prepare(values, alpha)
	if k == v.size:
		return float(np.mean(v))
	return float(np.mean(np.sort(v, kind="stable")[:k]))


def worst_indices(values: npt.NDArray[np.float64], k: int) -> npt.NDArray[np.intp]:
	"""Column indices of the k lowest entries per row; ties go to the lower index."""
	return np.argsort(values, axis=-1, kind="stable")[..., :k]
