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
import logging
from pathlib import Path
from typing import Any

import numpy as np

from approximator import SquashedGaussianActor
from enums import Algorithm, EnvVariant
from globals import APP_VERSION, CHECKPOINT_VERSION
from helpers import CheckpointError
from pointmass import PointMassEnv
from rcmdp import ContextSpace
from sysid import SysIdEnsemble
from utils import check_artifact_version, generator_state, read_json, restore_generator, write_json

from ._base import PolicySpec, Trainer, TrainingSettings
from ._runtime import ActorRuntime, make_runtime

logger = logging.getLogger(__name__)


@dataclasses.dataclass
class Checkpoint:
	algorithm: Algorithm
	status: str
	step: int
	seed: int
	config_hash: str
	spec: PolicySpec
	settings: TrainingSettings
	env_settings: dict[str, Any]
	context_space: ContextSpace
	actor: SquashedGaussianActor
	ensemble: SysIdEnsemble | None
	rng: np.random.Generator
	"""Trainer generator as it was when the checkpoint was written."""
	data: dict[str, Any]

	@property
	def variant(self) -> EnvVariant:
		return EnvVariant(self.env_settings["variant"])

	def make_env(self) -> PointMassEnv:
		return PointMassEnv(
			self.variant,
			horizon=int(self.env_settings["horizon"]),
			action_max=float(self.env_settings["action_max"]),
			start=(float(self.env_settings["start"][0]), float(self.env_settings["start"][1])),
		)


def checkpoint_payload(trainer: Trainer, *, config_hash: str, seed: int, status: str) -> dict[str, Any]:
	env = trainer.env
	return {
		"checkpoint_version": CHECKPOINT_VERSION,
		"app_version": APP_VERSION,
		"algorithm": str(trainer.spec.algorithm),
		"status": status,
		"step": trainer.step,
		"episodes": trainer.episodes,
		"seed": seed,
		"config_hash": config_hash,
		"spec": trainer.spec.to_dict(),
		"settings": trainer.settings.to_dict(),
		"env": {
			"variant": str(env.variant),
			"horizon": env.horizon,
			"action_max": env.action_max,
			"start": list(env.start),
		},
		"context_space": trainer.space.to_dict(),
		"actor": trainer.actor.to_dict(),
		"actor_optimizer": trainer.actor_state.optimizer.to_dict(),
		"critics": trainer.bank.to_dict(),
		"temperature": trainer.temperature.to_dict(),
		"extra": trainer.extra_state(),
		"rng": generator_state(trainer.rng),
	}


def save_checkpoint(path: Path, trainer: Trainer, *, config_hash: str, seed: int, status: str = "final") -> Path:
	write_json(path, checkpoint_payload(trainer, config_hash=config_hash, seed=seed, status=status))
	logger.info("Checkpoint : %s : Saved %s (step %s, %s)", trainer.spec.algorithm, path, trainer.step, status)
	return path


def load_checkpoint(path: Path) -> Checkpoint:
	try:
		data = read_json(path)
	except (OSError, ValueError) as e:
		msg = f"Cannot read checkpoint {path}: {e}"
		raise CheckpointError(msg) from e

	if data.get("checkpoint_version") != CHECKPOINT_VERSION:
		msg = f"Unsupported checkpoint_version in {path}: {data.get('checkpoint_version')}"
		raise CheckpointError(msg)
	check_artifact_version(str(data.get("app_version", "")), "Checkpoint")

	try:
		extra = data.get("extra", {})
		checkpoint = Checkpoint(
			algorithm=Algorithm(data["algorithm"]),
			status=str(data["status"]),
			step=int(data["step"]),
			seed=int(data["seed"]),
			config_hash=str(data["config_hash"]),
			spec=PolicySpec.from_dict(data["spec"]),
			settings=TrainingSettings.from_dict(data["settings"]),
			env_settings=dict(data["env"]),
			context_space=ContextSpace.from_dict(data["context_space"]),
			actor=SquashedGaussianActor.from_dict(data["actor"]),
			ensemble=SysIdEnsemble.from_dict(extra["ensemble"]) if "ensemble" in extra else None,
			rng=restore_generator(data["rng"]),
			data=data,
		)
	except (KeyError, TypeError, ValueError) as e:
		msg = f"Checkpoint {path} is malformed: {e}"
		raise CheckpointError(msg) from e
	logger.info("Checkpoint : %s : Loaded %s (step %s, %s)", checkpoint.algorithm, path, checkpoint.step, checkpoint.status)
	return checkpoint


def build_runtime(checkpoint: Checkpoint, *, alpha: float | None = None) -> ActorRuntime:
	return make_runtime(
		checkpoint.algorithm,
		checkpoint.actor,
		checkpoint.context_space,
		ensemble=checkpoint.ensemble,
		n_ens=checkpoint.spec.n_ens,
		alpha=alpha,
	)
