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


import math

import numpy as np
import numpy.typing as npt
from scipy import optimize, special

from globals import NORMAL_QUANTILE_BRACKET, NORMAL_QUANTILE_XTOL


def std_normal_pdf(x: float) -> float:
	return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
	return float(0.5 * (1.0 + special.erf(x / math.sqrt(2.0))))


def std_normal_ppf(p: float) -> float:
	"""Inverse of std_normal_cdf by bracketed root finding."""
	if not 0.0 < p < 1.0:
		msg = f"Quantile level must be in (0, 1), got {p}"
		raise ValueError(msg)
	return float(
		optimize.brentq(
			lambda x: std_normal_cdf(x) - p,
			-NORMAL_QUANTILE_BRACKET,
			NORMAL_QUANTILE_BRACKET,
			xtol=NORMAL_QUANTILE_XTOL,
		)
	)


def cvar_coefficient(alpha: float, *, literal: bool = False) -> float:
	"""k such that CVaR_alpha = mean - k * std for a Gaussian.

	`literal` evaluates pdf(alpha) / cdf(alpha) instead of the exact pdf(ppf(alpha)) / alpha.
	"""
	if not 0.0 < alpha <= 1.0:
		msg = f"alpha must be in (0, 1], got {alpha}"
		raise ValueError(msg)
	if literal:
		return std_normal_pdf(alpha) / std_normal_cdf(alpha)
	if alpha == 1.0:
		return 0.0
	return std_normal_pdf(std_normal_ppf(alpha)) / alpha


def gaussian_cvar_closed_form(
	q_mean: npt.ArrayLike,
	q_var: npt.ArrayLike,
	alpha: float,
	*,
	literal: bool = False,
) -> npt.NDArray[np.float64] | float:
	mean = np.asarray(q_mean, dtype=np.float64)
	var = np.asarray(q_var, dtype=np.float64)
	if np.any(var < 0):
		msg = f"Variance must be non-negative, got {var.min()}"
		raise ValueError(msg)
	if alpha == 1.0 and not literal:
		result = mean + np.zeros_like(var)
	else:
		result = mean - cvar_coefficient(alpha, literal=literal) * np.sqrt(var)
	return float(result) if result.ndim == 0 else result
