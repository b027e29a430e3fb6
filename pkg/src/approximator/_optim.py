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
from collections.abc import Sequence
from typing import Any

import numpy as np

from globals import ADAM_BETAS, ADAM_EPSILON, ADAM_LR
from helpers import DimensionError

from ._network import FloatArray, MLPParams


@dataclasses.dataclass
class AdamState:
	m: list[FloatArray]
	v: list[FloatArray]
	step: int = 0
	lr: float = ADAM_LR
	beta1: float = ADAM_BETAS[0]
	beta2: float = ADAM_BETAS[1]
	eps: float = ADAM_EPSILON

	def to_dict(self) -> dict[str, Any]:
		return {
			"m": [a.tolist() for a in self.m],
			"v": [a.tolist() for a in self.v],
			"step": self.step,
			"lr": self.lr,
			"beta1": self.beta1,
			"beta2": self.beta2,
			"eps": self.eps,
		}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "AdamState":
		return cls(
			m=[np.array(a, dtype=np.float64) for a in data["m"]],
			v=[np.array(a, dtype=np.float64) for a in data["v"]],
			step=int(data["step"]),
			lr=float(data["lr"]),
			beta1=float(data["beta1"]),
			beta2=float(data["beta2"]),
			eps=float(data["eps"]),
		)


def adam_init(
	params: MLPParams | Sequence[FloatArray],
	lr: float = ADAM_LR,
	betas: tuple[float, float] = ADAM_BETAS,
	eps: float = ADAM_EPSILON,
) -> AdamState:
	arrays = params.arrays() if isinstance(params, MLPParams) else list(params)
	return AdamState(
		m=[np.zeros_like(a) for a in arrays],
		v=[np.zeros_like(a) for a in arrays],
		lr=lr,
		beta1=betas[0],
		beta2=betas[1],
		eps=eps,
	)


def adam_step_arrays(
	arrays: Sequence[FloatArray],
	grads: Sequence[FloatArray],
	state: AdamState,
) -> tuple[list[FloatArray], AdamState]:
	"""One descent step: theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)."""
	if len(arrays) != len(grads) or len(arrays) != len(state.m):
		msg = f"Adam got {len(arrays)} parameters, {len(grads)} gradients and {len(state.m)} moments"
		raise DimensionError(msg)

	step = state.step + 1
	correction1 = 1.0 - state.beta1**step
	correction2 = 1.0 - state.beta2**step
	new_arrays: list[FloatArray] = []
	new_m: list[FloatArray] = []
	new_v: list[FloatArray] = []
	for theta, g, m, v in zip(arrays, grads, state.m, state.v, strict=True):
		if theta.shape != g.shape:
			msg = f"Gradient shape {g.shape} does not match parameter shape {theta.shape}"
			raise DimensionError(msg)
		m_next = state.beta1 * m + (1.0 - state.beta1) * g
		v_next = state.beta2 * v + (1.0 - state.beta2) * g * g
		new_arrays.append(theta - state.lr * (m_next / correction1) / (np.sqrt(v_next / correction2) + state.eps))
		new_m.append(m_next)
		new_v.append(v_next)
	return new_arrays, dataclasses.replace(state, m=new_m, v=new_v, step=step)


def adam_step(params: MLPParams, grads: Sequence[FloatArray], state: AdamState) -> tuple[MLPParams, AdamState]:
	arrays, state = adam_step_arrays(params.arrays(), grads, state)
	return params.with_arrays(arrays), state


@dataclasses.dataclass
class TargetParams:
	"""Exponential moving average of a source network."""

	params: MLPParams
	tau: float

	@classmethod
	def of(cls, source: MLPParams, tau: float) -> "TargetParams":
		_check_tau(tau)
		return cls(source.copy(), tau)


def _check_tau(tau: float) -> None:
	if not 0.0 < tau <= 1.0:
		msg = f"Polyak coefficient must be in (0, 1], got {tau}"
		raise ValueError(msg)


def polyak_update(target: TargetParams, source: MLPParams, tau: float | None = None) -> TargetParams:
	tau = target.tau if tau is None else tau
	_check_tau(tau)
	pairs = list(zip(target.params.arrays(), source.arrays(), strict=True))
	for t, s in pairs:
		if t.shape != s.shape:
			msg = f"Target shape {t.shape} does not match source shape {s.shape}"
			raise DimensionError(msg)
	mixed = [(1.0 - tau) * t + tau * s for t, s in pairs]
	return TargetParams(target.params.with_arrays(mixed), target.tau)
