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
import numpy.typing as npt

from enums import Activation
from helpers import DimensionError, NonFiniteError

FloatArray = npt.NDArray[np.float64]


@dataclasses.dataclass
class MLPParams:
	"""Fully connected net; hidden layers use `activation`, the output layer is linear.

	Weights are stored (in_dim, out_dim) so a batch maps as x @ W + b.
	"""

	weights: list[FloatArray]
	biases: list[FloatArray]
	activation: Activation = Activation.ReLU

	def __post_init__(self) -> None:
		if not self.weights or len(self.weights) != len(self.biases):
			msg = f"Need one bias per weight matrix, got {len(self.weights)} weights and {len(self.biases)} biases"
			raise DimensionError(msg)
		for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
			if w.ndim != 2 or b.shape != (w.shape[1],):
				msg = f"Layer {i}: weight {w.shape} does not match bias {b.shape}"
				raise DimensionError(msg)
			if i and w.shape[0] != self.weights[i - 1].shape[1]:
				msg = f"Layer {i} expects {w.shape[0]} inputs, previous layer gives {self.weights[i - 1].shape[1]}"
				raise DimensionError(msg)
		self.activation = Activation(self.activation)

	@property
	def in_dim(self) -> int:
		return int(self.weights[0].shape[0])

	@property
	def out_dim(self) -> int:
		return int(self.weights[-1].shape[1])

	@property
	def layer_sizes(self) -> tuple[int, ...]:
		return (self.in_dim, *(int(w.shape[1]) for w in self.weights))

	def arrays(self) -> list[FloatArray]:
		"""Parameters in gradient order: W0, b0, W1, b1, ..."""
		out: list[FloatArray] = []
		for w, b in zip(self.weights, self.biases, strict=True):
			out.extend((w, b))
		return out

	def with_arrays(self, arrays: Sequence[FloatArray]) -> "MLPParams":
		if len(arrays) != 2 * len(self.weights):
			msg = f"Expected {2 * len(self.weights)} arrays, got {len(arrays)}"
			raise DimensionError(msg)
		return MLPParams(list(arrays[0::2]), list(arrays[1::2]), self.activation)

	def copy(self) -> "MLPParams":
		return self.with_arrays([a.copy() for a in self.arrays()])

	def is_finite(self) -> bool:
		return all(np.all(np.isfinite(a)) for a in self.arrays())

	def to_dict(self) -> dict[str, Any]:
		return {
			"activation": str(self.activation),
			"layer_sizes": list(self.layer_sizes),
			"weights": [w.tolist() for w in self.weights],
			"biases": [b.tolist() for b in self.biases],
		}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "MLPParams":
		weights = [np.array(w, dtype=np.float64, ndmin=2) for w in data["weights"]]
		biases = [np.array(b, dtype=np.float64, ndmin=1) for b in data["biases"]]
		params = cls(weights, biases, Activation(data["activation"]))
		if list(params.layer_sizes) != list(data.get("layer_sizes", params.layer_sizes)):
			msg = f"Layer sizes {params.layer_sizes} disagree with recorded {data['layer_sizes']}"
			raise DimensionError(msg)
		return params


def init_mlp(
	sizes: Sequence[int],
	rng: np.random.Generator,
	activation: Activation | str = Activation.ReLU,
	*,
	final_scale: float = 1.0,
) -> MLPParams:
	"""Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
	if len(sizes) < 2 or min(sizes) < 1:
		msg = f"Layer sizes must be at least two positive widths, got {list(sizes)}"
		raise DimensionError(msg)

	weights: list[FloatArray] = []
	biases: list[FloatArray] = []
	for fan_in, fan_out in zip(sizes[:-1], sizes[1:], strict=True):
		bound = 1.0 / np.sqrt(fan_in)
		weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
		biases.append(rng.uniform(-bound, bound, size=fan_out))
	weights[-1] *= final_scale
	biases[-1] *= final_scale
	return MLPParams(weights, biases, Activation(activation))


def _activate(activation: Activation, x: FloatArray) -> FloatArray:
	if activation == Activation.Tanh:
		return np.tanh(x)
	return np.maximum(x, 0.0)


def _activation_grad(activation: Activation, pre: FloatArray, post: FloatArray) -> FloatArray:
	if activation == Activation.Tanh:
		return 1.0 - post * post
	return (pre > 0.0).astype(np.float64)


@dataclasses.dataclass
class ForwardCache:
	layer_inputs: list[FloatArray]
	pre_activations: list[FloatArray]
	output: FloatArray
	squeeze: bool


def _as_batch(params: MLPParams, x: npt.ArrayLike) -> tuple[FloatArray, bool]:
	batch = np.asarray(x, dtype=np.float64)
	squeeze = batch.ndim == 1
	batch = np.atleast_2d(batch)
	if batch.ndim != 2 or batch.shape[1] != params.in_dim:
		msg = f"Network expects inputs of width {params.in_dim}, got shape {np.shape(x)}"
		raise DimensionError(msg)
	return batch, squeeze


def forward_cached(params: MLPParams, x: npt.ArrayLike) -> ForwardCache:
	h, squeeze = _as_batch(params, x)
	inputs: list[FloatArray] = []
	pres: list[FloatArray] = []
	last = len(params.weights) - 1
	for i, (w, b) in enumerate(zip(params.weights, params.biases, strict=True)):
		inputs.append(h)
		pre = h @ w + b
		pres.append(pre)
		h = pre if i == last else _activate(params.activation, pre)
	return ForwardCache(inputs, pres, h, squeeze)


def forward(params: MLPParams, x: npt.ArrayLike) -> FloatArray:
	cache = forward_cached(params, x)
	return cache.output[0] if cache.squeeze else cache.output


def backward(params: MLPParams, cache: ForwardCache, upstream: npt.ArrayLike) -> tuple[list[FloatArray], FloatArray]:
	"""Reverse-mode pass for the scalar loss sum(upstream * output).

	Returns parameter gradients aligned with `params.arrays()` and the gradient
	with respect to the network input (same shape as the forward input).
	"""
	delta = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
	if delta.shape != cache.output.shape:
		msg = f"Upstream gradient shape {delta.shape} does not match output shape {cache.output.shape}"
		raise DimensionError(msg)

	grads: list[FloatArray] = [np.empty(0)] * (2 * len(params.weights))
	for i in reversed(range(len(params.weights))):
		if i != len(params.weights) - 1:
			post = cache.layer_inputs[i + 1]
			delta = delta * _activation_grad(params.activation, cache.pre_activations[i], post)
		grad_w = cache.layer_inputs[i].T @ delta
		grad_b = delta.sum(axis=0)
		if not (np.all(np.isfinite(grad_w)) and np.all(np.isfinite(grad_b))):
			raise NonFiniteError("approximator", "non-finite parameter gradient", layer=i)
		grads[2 * i] = grad_w
		grads[2 * i + 1] = grad_b
		delta = delta @ params.weights[i].T

	input_grad = delta[0] if cache.squeeze else delta
	return grads, input_grad
