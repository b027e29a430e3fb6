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

from enums import Algorithm
from logger import Logger
from pointmass import PointMassEnv
from rcmdp import TaskSuite

from ._base import PolicySpec, Trainer, TrainingSettings
from ._epopt import EPOptTrainer
from ._oracle import OracleTrainer
from ._sirsa import SirsaTrainer
from ._wcpg import WCPGTrainer

TRAINERS: dict[Algorithm, type[Trainer]] = {
	algorithm: trainer for trainer in (SirsaTrainer, EPOptTrainer, WCPGTrainer, OracleTrainer) for algorithm in trainer.algorithms
}


def make_trainer(
	spec: PolicySpec,
	settings: TrainingSettings,
	suite: TaskSuite,
	env: PointMassEnv,
	rng: np.random.Generator,
	*,
	metrics: Logger | None = None,
) -> Trainer:
	return TRAINERS[spec.algorithm](spec, settings, suite, env, rng, metrics=metrics)
