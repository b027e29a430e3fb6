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


import time

import numpy as np
import pytest
from scipy import stats

from approximator import MLPParams, SquashedGaussianActor, adam_init, adam_step
from enums import Activation
from risk import (
	RiskConfig,
	cvar_actor_gradient,
	cvar_coefficient,
	cvar_objective,
	cvar_rank,
	empirical_cvar,
	empirical_var,
	gaussian_cvar_closed_form,
	objective_grads,
	std_normal_cdf,
	std_normal_ppf,
	worst_indices,
)


class QuadraticCritic:
	"""Q = -(a - 0.3 c0)^2 - s0 * c0, with closed-form dQ/da."""

	def q_values(self, obs: np.ndarray, actions: np.ndarray, contexts: np.ndarray) -> np.ndarray:
		return -((actions[:, 0] - 0.3 * contexts[:, 0]) ** 2) - obs[:, 0] * contexts[:, 0]

	def action_gradient(self, obs: np.ndarray, actions: np.ndarray, contexts: np.ndarray) -> np.ndarray:  # noqa: ARG002
		return (-2.0 * (actions[:, 0] - 0.3 * contexts[:, 0]))[:, None]


class DistanceCritic:
	"""Q = -(a - c0)^2."""

	def q_values(self, obs: np.ndarray, actions: np.ndarray, contexts: np.ndarray) -> np.ndarray:  # noqa: ARG002
		return -((actions[:, 0] - contexts[:, 0]) ** 2)

	def action_gradient(self, obs: np.ndarray, actions: np.ndarray, contexts: np.ndarray) -> np.ndarray:  # noqa: ARG002
		return (-2.0 * (actions[:, 0] - contexts[:, 0]))[:, None]


class ContextBlindCritic:
	"""Q = -(a - 0.3)^2 for every context."""

	def q_values(self, obs: np.ndarray, actions: np.ndarray, contexts: np.ndarray) -> np.ndarray:  # noqa: ARG002
		return -((actions[:, 0] - 0.3) ** 2)

	def action_gradient(self, obs: np.ndarray, actions: np.ndarray, contexts: np.ndarray) -> np.ndarray:  # noqa: ARG002
		return -2.0 * (actions - 0.3)


def _gaussian_cvar(alpha: float) -> float:
	return -stats.norm.pdf(stats.norm.ppf(alpha)) / alpha


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_cvar_of_normal_quantile_grid(alpha: float) -> None:
	n = 100_000
	values = stats.norm.ppf((np.arange(n) + 0.5) / n)
	assert empirical_cvar(values, alpha) == pytest.approx(_gaussian_cvar(alpha), rel=0.01)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_cvar_of_normal_samples(alpha: float) -> None:
	values = np.random.default_rng(0).standard_normal(100_000)
	started = time.perf_counter()
	estimate = empirical_cvar(values, alpha)
	assert time.perf_counter() - started < 1.0
	assert estimate == pytest.approx(_gaussian_cvar(alpha), rel=0.03)


def test_cvar_at_one_is_sample_mean() -> None:
	values = np.random.default_rng(1).standard_normal(100_000)
	assert empirical_cvar(values, 1.0) == float(np.mean(values))


def test_var_and_cvar_match_sort_and_slice() -> None:
	rng = np.random.default_rng(2)
	for _ in range(1000):
		n = int(rng.integers(1, 65))
		values = rng.integers(-20, 20, size=n).astype(np.float64)
		k = int(rng.integers(1, n + 1))
		alpha = k / n
		ordered = sorted(values.tolist())
		assert empirical_var(values, alpha) == ordered[k - 1]
		assert empirical_cvar(values, alpha) == sum(ordered[:k]) / k


def test_rank_one_cvar_is_minimum() -> None:
	values = np.random.default_rng(3).normal(size=50)
	assert empirical_cvar(values, 1 / 50) == values.min()
	assert empirical_var(values, 1 / 50) == values.min()


def test_rank_is_robust_to_float_products() -> None:
	assert cvar_rank(0.29, 100) == 29
	assert cvar_rank(0.25, 50) == 12
	assert RiskConfig(0.25, 50).rank == 12


def test_rank_below_one_rejected() -> None:
	with pytest.raises(ValueError, match="at least 1"):
		RiskConfig(0.01, 50)
	with pytest.raises(ValueError, match="at least 1"):
		empirical_cvar([1.0, 2.0], 0.4)


def test_empty_sample_rejected() -> None:
	with pytest.raises(ValueError, match="empty"):
		empirical_var([], 0.5)


def test_worst_indices_break_ties_low() -> None:
	values = np.array([[3.0, 1.0, 1.0, 0.0]])
	np.testing.assert_array_equal(worst_indices(values, 2), [[3, 1]])


@pytest.mark.parametrize("p", [1e-6, 0.025, 0.3, 0.5, 0.9, 0.999])
def test_normal_quantile_matches_scipy(p: float) -> None:
	assert std_normal_ppf(p) == pytest.approx(stats.norm.ppf(p), abs=1e-9)
	assert std_normal_cdf(std_normal_ppf(p)) == pytest.approx(p, rel=1e-9)


def test_normal_quantile_domain() -> None:
	with pytest.raises(ValueError, match="Quantile"):
		std_normal_ppf(1.0)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_gaussian_closed_form_matches_monte_carlo(alpha: float) -> None:
	samples = np.random.default_rng(4).normal(10.0, 2.0, size=1_000_000)
	closed = gaussian_cvar_closed_form(10.0, 4.0, alpha)
	assert closed == pytest.approx(empirical_cvar(samples, alpha), rel=0.005)


def test_gaussian_closed_form_zero_variance_is_mean() -> None:
	assert gaussian_cvar_closed_form(3.5, 0.0, 0.25) == 3.5
	np.testing.assert_array_equal(gaussian_cvar_closed_form(np.array([1.0, 2.0]), np.zeros(2), 0.1), [1.0, 2.0])


def test_gaussian_closed_form_at_one_is_mean() -> None:
	assert gaussian_cvar_closed_form(3.5, 9.0, 1.0) == 3.5


def test_gaussian_closed_form_rejects_negative_variance() -> None:
	with pytest.raises(ValueError, match="non-negative"):
		gaussian_cvar_closed_form(0.0, -1.0, 0.5)


def test_literal_coefficient() -> None:
	assert cvar_coefficient(0.5, literal=True) == pytest.approx(stats.norm.pdf(0.5) / stats.norm.cdf(0.5), rel=1e-12)
	assert cvar_coefficient(0.5) == pytest.approx(stats.norm.pdf(0.0) / 0.5, rel=1e-9)


def _objective_fd(
	actor: SquashedGaussianActor,
	inputs: np.ndarray,
	obs: np.ndarray,
	contexts: np.ndarray,
	config: RiskConfig,
	noise: np.ndarray,
	temperature: float,
	h: float = 1e-6,
) -> list[np.ndarray]:
	arrays = actor.net.arrays()
	grads = []
	for k, array in enumerate(arrays):
		g = np.zeros_like(array)
		for idx in np.ndindex(array.shape):
			plus = [a.copy() for a in arrays]
			minus = [a.copy() for a in arrays]
			plus[k][idx] += h
			minus[k][idx] -= h
			f_plus, f_minus = (
				cvar_objective(
					QuadraticCritic(), actor.with_net(actor.net.with_arrays(p)), inputs, obs, contexts, config, noise,
					temperature=temperature,
				)
				for p in (plus, minus)
			)
			g[idx] = (f_plus - f_minus) / (2 * h)
		grads.append(g)
	return grads


@pytest.mark.parametrize("temperature", [0.0, 0.1])
def test_cvar_gradient_matches_finite_differences(temperature: float) -> None:
	rng = np.random.default_rng(5)
	actor = SquashedGaussianActor.create(4, 1, (8,), rng, Activation.Tanh)
	config = RiskConfig(0.25, 20)
	obs = rng.normal(size=(6, 3))
	inputs = np.concatenate([obs, rng.normal(size=(6, 1))], axis=1)
	contexts = rng.uniform(0.0, 1.0, size=(6, 20, 1))
	noise = rng.normal(size=(6, 1))

	result = cvar_actor_gradient(
		QuadraticCritic(), actor, inputs, obs, np.zeros((6, 1)), np.ones((6, 1)), config, rng,
		temperature=temperature, noise=noise, contexts=contexts,
	)
	numeric = _objective_fd(actor, inputs, obs, contexts, config, noise, temperature)
	flat_analytic = np.concatenate([g.ravel() for g in result.grads])
	flat_numeric = np.concatenate([g.ravel() for g in numeric])
	error = np.linalg.norm(flat_analytic - flat_numeric) / max(np.linalg.norm(flat_numeric), 1e-12)
	assert error < 1e-3
	assert result.objective == pytest.approx(
		cvar_objective(QuadraticCritic(), actor, inputs, obs, contexts, config, noise, temperature=temperature)
	)
	assert result.var >= result.cvar


def test_cvar_gradient_pushes_action_toward_worst_contexts() -> None:
	rng = np.random.default_rng(6)
	actor = SquashedGaussianActor(MLPParams([np.zeros((1, 2))], [np.array([0.0, -20.0])]), 1)
	config = RiskConfig(1 / 20, 20)
	obs = np.zeros((1, 3))
	contexts = np.linspace(0.0, 1.0, 20).reshape(1, 20, 1)
	result = cvar_actor_gradient(
		QuadraticCritic(), actor, np.ones((1, 1)), obs, np.zeros((1, 1)), np.ones((1, 1)), config, rng,
		noise=np.zeros((1, 1)), contexts=contexts,
	)
	assert result.cvar == pytest.approx(-(0.3**2))
	assert result.grads[1][0] > 0.0


def _grid_cvar_action(alpha: float, contexts: np.ndarray, actions: np.ndarray) -> float:
	q = -((actions[:, None] - contexts[None, :]) ** 2)
	worst = np.sort(q, axis=1)[:, : cvar_rank(alpha, contexts.size)]
	return float(actions[np.argmax(worst.mean(axis=1))])


def test_cvar_ascent_reaches_grid_optimum() -> None:
	rng = np.random.default_rng(8)
	config = RiskConfig(0.5, 50)
	actor = SquashedGaussianActor(MLPParams([np.zeros((1, 2))], [np.array([0.0, -20.0])]), 1)
	optimizer = adam_init(actor.net, lr=3e-3)
	inputs, obs = np.ones((32, 1)), np.zeros((32, 3))
	centers, widths = np.full((32, 1), 0.5), np.full((32, 1), 0.5)
	for _ in range(2000):
		step = cvar_actor_gradient(DistanceCritic(), actor, inputs, obs, centers, widths, config, rng)
		net, optimizer = adam_step(actor.net, objective_grads(step.grads), optimizer)
		actor = actor.with_net(net)

	learned = float(actor.mean_action(np.ones((1, 1)))[0, 0])
	grid = np.linspace(0.0, 1.0, 1001)
	assert learned == pytest.approx(_grid_cvar_action(0.5, grid, grid), abs=0.02)


def test_context_blind_critic_gives_same_gradient_for_every_alpha() -> None:
	rng = np.random.default_rng(9)
	actor = SquashedGaussianActor.create(4, 1, (8,), rng, Activation.Tanh)
	obs = rng.normal(size=(6, 3))
	inputs = np.concatenate([obs, rng.normal(size=(6, 1))], axis=1)
	contexts = rng.uniform(0.0, 1.0, size=(6, 20, 1))
	noise = rng.normal(size=(6, 1))

	flat = []
	for alpha in (0.05, 0.25, 0.5, 1.0):
		result = cvar_actor_gradient(
			ContextBlindCritic(), actor, inputs, obs, np.zeros((6, 1)), np.ones((6, 1)), RiskConfig(alpha, 20), rng,
			noise=noise, contexts=contexts,
		)
		flat.append(np.concatenate([g.ravel() for g in result.grads]))
	for grads in flat[1:]:
		np.testing.assert_allclose(grads, flat[0], rtol=1e-12, atol=1e-15)
