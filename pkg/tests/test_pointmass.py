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

from enums import EnvVariant
from pointmass import PointMassContext, PointMassEnv, PointMassState, make_misspecified_contexts, nonstationary_rollout
from rcmdp import UncertaintySet
from rollout import run_episode
from stubs import ConstantRuntime


def test_reset_is_fixed_start(combined_env: PointMassEnv) -> None:
	for c in (PointMassContext(0.025, 0.06), PointMassContext(0.075, 0.1)):
		state = combined_env.reset(c)
		assert (state.x, state.y, state.on_obstacle) == (-2.0, 0.0, 0)
		assert combined_env.reset(c) == state


def test_step_clear_of_obstacle(combined_env: PointMassEnv) -> None:
	t = combined_env.step(PointMassState(0.0, 0.0, 0), 0.0, PointMassContext(0.05, 0.08))
	assert t.s_next.x == pytest.approx(0.08)
	assert t.s_next.y == 0.0
	assert t.reward == 1.0


def test_step_inside_obstacle(combined_env: PointMassEnv) -> None:
	t = combined_env.step(PointMassState(-0.01, 0.0, 1), 0.0, PointMassContext(0.05, 0.0))
	assert t.s_next.on_obstacle == 1
	assert t.reward == 0.0


def test_step_y_penalty(combined_env: PointMassEnv) -> None:
	t = combined_env.step(PointMassState(1.0, 0.1, 0), 0.0, PointMassContext(0.05, 0.08))
	assert t.reward == pytest.approx(0.2)


def test_action_is_clamped(combined_env: PointMassEnv) -> None:
	t = combined_env.step(PointMassState(0.0, 0.0, 0), 1.0, PointMassContext(0.05, 0.08))
	assert t.s_next.y == pytest.approx(0.05)


def test_non_finite_action_rejected(combined_env: PointMassEnv) -> None:
	with pytest.raises(ValueError, match="finite"):
		combined_env.step(PointMassState(0.0, 0.0, 0), float("nan"), PointMassContext(0.05, 0.08))


@pytest.mark.parametrize(("variant", "dim"), [("obstacle_only", 1), ("velocity_only", 1), ("combined", 2)])
def test_variant_dimensions(variant: str, dim: int) -> None:
	env = PointMassEnv(variant)
	assert env.context_space.dim == dim


def test_frozen_dimension_uses_midpoint() -> None:
	obstacle = PointMassEnv(EnvVariant.ObstacleOnly).physical_context([0.03])
	assert obstacle.velocity == pytest.approx(0.08)
	velocity = PointMassEnv(EnvVariant.VelocityOnly).physical_context([0.07])
	assert velocity.obstacle_radius == pytest.approx(0.05)


def test_velocity_is_exact_per_step(combined_env: PointMassEnv, rng: np.random.Generator) -> None:
	context = np.array([0.05, 0.07])
	episode = run_episode(
		combined_env, ConstantRuntime(0.3), context, UncertaintySet.degenerate(context), rng, deterministic=True
	)
	np.testing.assert_allclose(episode.next_obs[:, 0] - episode.obs[:, 0], 0.07)


def test_straight_line_collides_and_return_is_bounded(combined_env: PointMassEnv, rng: np.random.Generator) -> None:
	context = np.array([0.075, 0.06])
	episode = run_episode(
		combined_env, ConstantRuntime(0.0), context, UncertaintySet.degenerate(context), rng, deterministic=True
	)
	assert episode.length == 50
	assert episode.episode_return < combined_env.episode_return_upper_bound()
	assert np.all(episode.rewards <= 1.0)
	assert np.all(episode.rewards >= -8 * 2.5)


def test_larger_obstacle_never_collides_less(rng: np.random.Generator) -> None:
	env = PointMassEnv(EnvVariant.ObstacleOnly)
	returns = []
	for radius in (0.025, 0.05, 0.075):
		c = np.array([radius])
		episode = run_episode(env, ConstantRuntime(0.0), c, UncertaintySet.degenerate(c), rng, deterministic=True)
		returns.append(episode.episode_return)
	assert returns[0] >= returns[1] >= returns[2]


def test_obstacle_radius_invisible_away_from_obstacle(rng: np.random.Generator) -> None:
	env = PointMassEnv(EnvVariant.ObstacleOnly)
	small, large = (
		run_episode(env, ConstantRuntime(-1.0), c, UncertaintySet.degenerate(c), rng, deterministic=True)
		for c in (np.array([0.025]), np.array([0.075]))
	)
	np.testing.assert_array_equal(small.next_obs, large.next_obs)
	np.testing.assert_array_equal(small.rewards, large.rewards)


def test_misspecified_corners_one_dim() -> None:
	corners = make_misspecified_contexts(UncertaintySet(np.array([0.05]), np.array([0.01])), 1.0)
	np.testing.assert_allclose(sorted(c[0] for c in corners), [0.03, 0.07])


def test_misspecified_corners_two_dims(combined_env: PointMassEnv) -> None:
	s = UncertaintySet(np.array([0.05, 0.08]), np.array([0.01, 0.01]))
	assert len(make_misspecified_contexts(s, 0.5, bounds=combined_env.safe_space)) == 4


def test_misspecified_corners_at_zero_level() -> None:
	s = UncertaintySet(np.array([0.05]), np.array([0.01]))
	np.testing.assert_allclose(sorted(c[0] for c in make_misspecified_contexts(s, 0.0)), [0.04, 0.06])


def test_misspecified_corners_clamped_to_safe_bounds() -> None:
	env = PointMassEnv(EnvVariant.ObstacleOnly)
	s = UncertaintySet(np.array([0.07]), np.array([0.05]))
	corners = make_misspecified_contexts(s, 1.0, bounds=env.safe_space)
	assert min(c[0] for c in corners) == pytest.approx(0.005)
	assert max(c[0] for c in corners) == pytest.approx(0.15)


def test_nonstationary_segments(combined_env: PointMassEnv, rng: np.random.Generator) -> None:
	runtime = ConstantRuntime(0.0)
	s = UncertaintySet(np.array([0.05, 0.08]), np.array([0.02, 0.02]))
	result = nonstationary_rollout(combined_env, runtime, s, 10, rng, horizon=50)
	assert result.rewards.shape == (50,)
	assert runtime.changes == 4
	segments = result.contexts.reshape(5, 10, 2)
	assert np.all(segments == segments[:, :1, :])


def test_nonstationary_zero_width_matches_stationary(combined_env: PointMassEnv) -> None:
	s = UncertaintySet.degenerate([0.05, 0.08])
	shifting = nonstationary_rollout(combined_env, ConstantRuntime(0.2), s, 10, np.random.default_rng(0))
	fixed = run_episode(combined_env, ConstantRuntime(0.2), s.center, s, np.random.default_rng(0), deterministic=True)
	assert shifting.total_return == pytest.approx(fixed.episode_return)


def test_nonstationary_period_must_divide_horizon(combined_env: PointMassEnv, rng: np.random.Generator) -> None:
	with pytest.raises(ValueError, match="divide"):
		nonstationary_rollout(combined_env, ConstantRuntime(), UncertaintySet.degenerate([0.05, 0.08]), 7, rng)


def test_trace_rows(combined_env: PointMassEnv, rng: np.random.Generator) -> None:
	c = np.array([0.05, 0.08])
	rows = run_episode(combined_env, ConstantRuntime(0.0), c, UncertaintySet.degenerate(c), rng, deterministic=True).trace_rows()
	assert len(rows) == 50
	assert set(rows[0]) == {"t", "reward", "x", "y", "context_hash"}
