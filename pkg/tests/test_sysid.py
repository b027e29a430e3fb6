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


import numpy as np
import pytest

from agents import SirsaTrainer
from approximator import MLPParams, forward
from enums import EnvVariant
from pointmass import PointMassEnv
from rcmdp import ContextSpace, TaskSuite, UncertaintySet, sample_contexts
from stubs import mean_width_trace
from sysid import (
	HistoryWindow,
	SysIdBatch,
	SysIdEnsemble,
	ensemble_train_step,
	feature_dim,
	identifiability_proxy,
	infer_posterior,
	recursive_filter_step,
)

UNIT = ContextSpace(np.array([0.0]), np.array([1.0]))


def _linear_batch(rng: np.random.Generator, n: int) -> SysIdBatch:
	history = rng.uniform(-1.0, 1.0, size=(n, 3))
	contexts = 0.5 + 0.2 * history[:, :1] - 0.2 * history[:, 2:]
	prior_mu = np.full((n, 1), 0.5)
	prior_sigma = np.full((n, 1), 0.5)
	return SysIdBatch(prior_mu, prior_sigma, history, contexts)


def test_feature_dim() -> None:
	assert feature_dim(1, 3, 1) == 7
	assert feature_dim(4, 3, 1) == 32
	with pytest.raises(ValueError, match="History length"):
		feature_dim(0, 3, 1)


def test_history_window_pads_at_front() -> None:
	window = HistoryWindow(3, 3, 1)
	assert window.empty
	window.push([1.0, 2.0, 0.0], [0.5], 1.0, [1.1, 2.0, 0.0])
	features = window.features()
	assert features.shape == (24,)
	np.testing.assert_array_equal(features[:16], 0.0)
	np.testing.assert_array_equal(features[16:], [1.0, 2.0, 0.0, 0.5, 1.0, 1.1, 2.0, 0.0])
	for _ in range(5):
		window.push(np.zeros(3), [0.0], 0.0, np.zeros(3))
	assert len(window) == 3
	assert window.padding == 0


def test_single_transition_window_has_no_reward() -> None:
	window = HistoryWindow(1, 3, 1)
	window.push([1.0, 2.0, 0.0], [0.5], 9.0, [1.1, 2.0, 0.0])
	np.testing.assert_array_equal(window.features(), [1.0, 2.0, 0.0, 0.5, 1.1, 2.0, 0.0])


def test_single_member_rejected() -> None:
	with pytest.raises(ValueError, match="at least 2"):
		SysIdEnsemble.create(UNIT, 1, 1, np.random.default_rng(0), n_members=1)


def test_ensemble_fits_realisable_task() -> None:
	rng = np.random.default_rng(0)
	ensemble = SysIdEnsemble.create(UNIT, 1, 1, rng, n_members=4, hidden=())
	optimizers = ensemble.new_optimizers(3e-3)
	for _ in range(4000):
		ensemble_train_step(ensemble, _linear_batch(rng, 64), optimizers, rng)

	held_out = _linear_batch(np.random.default_rng(99), 256)
	x = ensemble.inputs(held_out.prior_mu, held_out.prior_sigma, held_out.history)
	targets = UNIT.normalize(held_out.contexts)
	for member in ensemble.members:
		assert float(np.mean((forward(member, x) - targets) ** 2)) < 1e-3


def test_train_step_only_touches_assigned_members() -> None:
	rng = np.random.default_rng(1)
	ensemble = SysIdEnsemble.create(UNIT, 1, 1, rng, n_members=3, hidden=(4,))
	before = [m.copy() for m in ensemble.members]
	optimizers = ensemble.new_optimizers(1e-2)
	batch = _linear_batch(rng, 1)
	ensemble_train_step(ensemble, batch, optimizers, rng)
	changed = [not np.array_equal(a.biases[-1], b.biases[-1]) for a, b in zip(before, ensemble.members, strict=True)]
	assert sum(changed) == 1
	assert sorted(o.step for o in optimizers) == [0, 0, 1]


def test_posterior_is_member_mean_and_std() -> None:
	rng = np.random.default_rng(2)
	space = ContextSpace(np.array([0.025, 0.06]), np.array([0.075, 0.1]))
	ensemble = SysIdEnsemble.create(space, 3, 1, rng, n_members=4, hidden=(8,))
	prior = UncertaintySet(np.array([0.05, 0.08]), np.array([0.01, 0.01]))
	history = rng.normal(size=7)

	x = ensemble.inputs(prior.center, prior.width, history)
	predictions = np.stack([space.denormalize(forward(m, x)[0]) for m in ensemble.members])
	posterior = infer_posterior(ensemble, prior, history)
	np.testing.assert_array_equal(posterior.center, ensemble.output_space.clip(predictions.mean(axis=0)))
	np.testing.assert_array_equal(posterior.width, predictions.std(axis=0))


def test_identical_members_give_zero_width() -> None:
	rng = np.random.default_rng(3)
	ensemble = SysIdEnsemble.create(UNIT, 1, 1, rng, n_members=4, hidden=(8,))
	ensemble.members = [ensemble.members[0].copy() for _ in range(4)]
	posterior = infer_posterior(ensemble, UncertaintySet(np.array([0.5]), np.array([0.5])), rng.normal(size=3))
	assert posterior.width[0] == 0.0


def test_posterior_center_is_clamped() -> None:
	members = [MLPParams([np.zeros((5, 1))], [np.array([b])]) for b in (50.0, 60.0)]
	ensemble = SysIdEnsemble(members, UNIT, 1, 1, 1)
	posterior = infer_posterior(ensemble, UncertaintySet(np.array([0.5]), np.array([0.5])), np.zeros(3))
	assert posterior.center[0] == pytest.approx(1.5)


def test_filter_keeps_prior_before_first_transition() -> None:
	ensemble = SysIdEnsemble.create(UNIT, 1, 1, np.random.default_rng(4), n_members=2, hidden=(4,))
	prior = UncertaintySet(np.array([0.3]), np.array([0.2]))
	assert recursive_filter_step(ensemble, prior, ensemble.new_window()) is prior


def test_ensemble_serialisation() -> None:
	ensemble = SysIdEnsemble.create(UNIT, 1, 1, np.random.default_rng(5), n_members=3, hidden=(4,), history_length=2)
	restored = SysIdEnsemble.from_dict(ensemble.to_dict())
	prior = UncertaintySet(np.array([0.5]), np.array([0.5]))
	history = np.ones(feature_dim(2, 1, 1))
	np.testing.assert_array_equal(restored.member_predictions(prior, history), ensemble.member_predictions(prior, history))


def test_identifiability_proxy_shrinks_with_width() -> None:
	wide = UncertaintySet(np.array([0.5]), np.array([0.5]))
	narrow = UncertaintySet(np.array([0.5]), np.array([0.01]))
	assert identifiability_proxy(narrow) < identifiability_proxy(wide)


def _first_transition_batch(env: PointMassEnv, n: int, rng: np.random.Generator) -> SysIdBatch:
	space = env.context_space
	prior = UncertaintySet.spanning(space)
	contexts = sample_contexts(prior, n, rng)
	history = np.empty((n, feature_dim(1, env.obs_dim, env.act_dim)))
	for i, c in enumerate(contexts):
		physical = env.physical_context(c)
		transition = env.step(env.reset(physical), 0.0, physical)
		window = HistoryWindow(1, env.obs_dim, env.act_dim)
		window.push(transition.s.as_array(), [0.0], transition.reward, transition.s_next.as_array())
		history[i] = window.features()
	return SysIdBatch(np.tile(prior.center, (n, 1)), np.tile(prior.width, (n, 1)), history, contexts)


def _first_step_error(variant: EnvVariant) -> float:
	env = PointMassEnv(variant)
	rng = np.random.default_rng(21)
	ensemble = SysIdEnsemble.create(env.context_space, env.obs_dim, env.act_dim, rng, n_members=4, hidden=(64,))
	optimizers = ensemble.new_optimizers(1e-2)
	for _ in range(5000):
		ensemble_train_step(ensemble, _first_transition_batch(env, 64, rng), optimizers, rng)

	held_out = _first_transition_batch(env, 200, np.random.default_rng(22))
	prior = UncertaintySet.spanning(env.context_space)
	estimates = np.stack([infer_posterior(ensemble, prior, h).center for h in held_out.history])
	return float(np.mean(np.abs(env.context_space.normalize(estimates) - env.context_space.normalize(held_out.contexts))))


@pytest.mark.slow
def test_velocity_is_identified_before_obstacle() -> None:
	assert _first_step_error(EnvVariant.VelocityOnly) < _first_step_error(EnvVariant.ObstacleOnly)


@pytest.mark.slow
def test_trained_filter_halves_velocity_width_by_step_five(
	trained_velocity_sirsa: tuple[SirsaTrainer, PointMassEnv, TaskSuite],
) -> None:
	sigma = mean_width_trace(*trained_velocity_sirsa, 20)
	assert sigma[5] < 0.5 * sigma[0]
