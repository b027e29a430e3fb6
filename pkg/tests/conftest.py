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

from agents import PolicySpec, SirsaTrainer, TrainingSettings, make_trainer
from enums import Algorithm, EnvVariant
from pointmass import PointMassEnv
from rcmdp import ContextSpace, SetDistribution, TaskSuite, make_task_suite


def pytest_addoption(parser: pytest.Parser) -> None:
	parser.addoption("--run-slow", action="store_true", default=False, help="run training-based checks")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
	if config.getoption("--run-slow"):
		return
	skip_slow = pytest.mark.skip(reason="needs --run-slow")
	for item in items:
		if "slow" in item.keywords:
			item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
	return np.random.default_rng(1234)


@pytest.fixture
def combined_env() -> PointMassEnv:
	return PointMassEnv(EnvVariant.Combined)


@pytest.fixture
def small_suite(combined_env: PointMassEnv) -> TaskSuite:
	dist = SetDistribution(combined_env.context_space, 0.25)
	return make_task_suite(dist, 3, 2, 2, np.random.default_rng(7), variant=str(EnvVariant.Combined))


@pytest.fixture
def unit_space() -> ContextSpace:
	return ContextSpace(np.array([0.0]), np.array([1.0]))


@pytest.fixture(scope="session")
def trained_velocity_sirsa() -> tuple[SirsaTrainer, PointMassEnv, TaskSuite]:
	"""SIRSA trained briefly on the velocity variant, for checks that need a fitted ensemble."""
	env = PointMassEnv(EnvVariant.VelocityOnly)
	dist = SetDistribution(env.context_space, 0.25)
	suite = make_task_suite(dist, 20, 3, 20, np.random.default_rng(0), variant=str(EnvVariant.VelocityOnly))
	spec = PolicySpec(algorithm=Algorithm.SIRSA, t_threshold=4000, hidden=(64, 64), sysid_hidden=(64, 64))
	settings = TrainingSettings(budget=8000, warmup_episodes=20, checkpoint_interval=0, log_interval=1000)
	trainer = make_trainer(spec, settings, suite, env, np.random.default_rng(0))
	trainer.train()
	assert isinstance(trainer, SirsaTrainer)
	return trainer, env, suite
