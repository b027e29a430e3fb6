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


import logging
import os
from pathlib import Path
from typing import Any, Literal, TypedDict, get_args, get_origin

import numpy as np

from agents import PolicySpec, TrainingSettings
from enums import Algorithm, EnvVariant, EvalProtocol
from globals import ENV_JOBS, ENV_OUTPUT_DIR
from helpers import ConfigError
from pointmass import PointMassEnv
from rcmdp import SetDistribution, TaskSuite, make_task_suite
from risk import cvar_rank
from utils import canonical_json, default_jobs, get_crc32, read_json

logger = logging.getLogger(__name__)


class RunConfigDict(TypedDict):
	log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"]
	env_variant: Literal["obstacle_only", "velocity_only", "combined"]
	env_horizon: int
	env_action_max: float
	env_start_x: float
	env_start_y: float
	suite_n_train_sets: int
	suite_contexts_per_set: int
	suite_n_test_sets: int
	suite_width_fraction: float
	suite_seed: int
	policy_algorithm: Literal["SIRSA", "SystemID", "EPOpt", "SetEPOpt", "WCPG", "SetWCPG", "Oracle", "PolicyEnsemble"]
	policy_alpha: float
	policy_n_cvar: int
	policy_b_ensemble: int
	policy_t_threshold: int
	policy_redq: bool
	policy_redq_m: int
	policy_n_ens: int
	policy_entropy_in_cvar: bool
	policy_degenerate_set_prob: float
	policy_hidden: list[int]
	policy_activation: Literal["relu", "tanh"]
	train_budget: int
	train_batch_size: int
	train_steps_per_episode: int
	train_warmup_episodes: int
	train_buffer_capacity: int
	train_gamma: float
	train_tau: float
	train_lr: float
	train_init_temperature: float
	train_auto_temperature: bool
	train_checkpoint_interval: int
	train_log_interval: int
	sysid_history_length: int
	sysid_hidden: list[int]
	sysid_initial_prior_prob: float
	wcpg_alpha_min: float
	wcpg_variance_samples: int
	wcpg_variance_hidden: list[int]
	wcpg_literal_formula: bool
	eval_k: int
	eval_r_levels: list[float]
	eval_nonstationary_period: int
	eval_nonstationary_horizon: int
	eval_nonstationary_rollouts: int
	eval_wcpg_alphas: list[float]
	eval_gap_rollouts: int
	eval_id_episodes: int
	eval_protocols: list[str]
	seeds: list[int]
	output_dir: str


DEFAULT_CONFIG: RunConfigDict = {
	"log_level": "INFO",
	"env_variant": "combined",
	"env_horizon": 50,
	"env_action_max": 0.05,
	"env_start_x": -2.0,
	"env_start_y": 0.0,
	"suite_n_train_sets": 20,
	"suite_contexts_per_set": 3,
	"suite_n_test_sets": 20,
	"suite_width_fraction": 0.25,
	"suite_seed": 0,
	"policy_algorithm": "SIRSA",
	"policy_alpha": 0.25,
	"policy_n_cvar": 50,
	"policy_b_ensemble": 4,
	"policy_t_threshold": 25_000,
	"policy_redq": False,
	"policy_redq_m": 8,
	"policy_n_ens": 5,
	"policy_entropy_in_cvar": True,
	"policy_degenerate_set_prob": 0.5,
	"policy_hidden": [64, 64],
	"policy_activation": "relu",
	"train_budget": 50_000,
	"train_batch_size": 128,
	"train_steps_per_episode": 50,
	"train_warmup_episodes": 10,
	"train_buffer_capacity": 100_000,
	"train_gamma": 0.99,
	"train_tau": 0.005,
	"train_lr": 3e-4,
	"train_init_temperature": 0.1,
	"train_auto_temperature": True,
	"train_checkpoint_interval": 5_000,
	"train_log_interval": 500,
	"sysid_history_length": 1,
	"sysid_hidden": [64, 64],
	"sysid_initial_prior_prob": 0.5,
	"wcpg_alpha_min": 0.05,
	"wcpg_variance_samples": 50,
	"wcpg_variance_hidden": [256, 256],
	"wcpg_literal_formula": False,
	"eval_k": 50,
	"eval_r_levels": [0.25, 0.5, 0.75, 1.0],
	"eval_nonstationary_period": 10,
	"eval_nonstationary_horizon": 50,
	"eval_nonstationary_rollouts": 10,
	"eval_wcpg_alphas": [0.25, 0.5, 0.75, 1.0],
	"eval_gap_rollouts": 10,
	"eval_id_episodes": 20,
	"eval_protocols": ["suite", "maxunc", "misspec", "nonstationary"],
	"seeds": [0],
	"output_dir": "runs",
}


def _matches(value: Any, annotation: Any) -> bool:
	origin = get_origin(annotation)
	if origin is Literal:
		return value in get_args(annotation)
	if origin is list:
		(item,) = get_args(annotation)
		return isinstance(value, list) and all(_matches(v, item) for v in value)
	if annotation is float:
		return type(value) in {float, int}
	return type(value) is annotation


class RunConfig:
	"""Validated experiment config. Unknown keys and ill-typed values are errors."""

	def __init__(self, values: dict[str, Any] | None = None, *, source: str = "defaults") -> None:
		self.source = source
		self.dict: RunConfigDict = DEFAULT_CONFIG.copy()
		values = values or {}
		if not isinstance(values, dict):  # type: ignore[reportUnnecessaryIsInstance]
			msg = f"{source} does not contain a JSON object"
			raise ConfigError(msg)

		unknown = sorted(k for k in values if k not in self.dict)
		if unknown:
			msg = f"{source} has unknown keys: {', '.join(unknown)}"
			raise ConfigError(msg)

		for k, v in values.items():
			annotation = RunConfigDict.__annotations__[k]
			if not _matches(v, annotation):
				msg = f"{source}: '{k}' has invalid value {v!r}"
				raise ConfigError(msg)
			logger.debug("Config : '%s' = %r", k, v)
			if annotation is float:
				v = float(v)
			elif get_origin(annotation) is list and get_args(annotation)[0] is float:
				v = [float(x) for x in v]
			self.dict[k] = v  # type: ignore[literal-required]

		self._validate()

	@classmethod
	def load(cls, path: Path | None) -> "RunConfig":
		if path is None:
			logger.info("Config : No config file given; using defaults")
			return cls()._with_env_overrides()
		try:
			values = read_json(path)
		except FileNotFoundError as e:
			msg = f"Config file {path} not found"
			raise ConfigError(msg) from e
		except ValueError as e:
			msg = f"Config file {path} is not valid JSON: {e}"
			raise ConfigError(msg) from e
		return cls(values, source=str(path))._with_env_overrides()

	def _with_env_overrides(self) -> "RunConfig":
		if output_dir := os.environ.get(ENV_OUTPUT_DIR):
			logger.info("Config : %s overrides output_dir with %s", ENV_OUTPUT_DIR, output_dir)
			self.dict["output_dir"] = output_dir
		return self

	def _validate(self) -> None:
		d = self.dict
		problems: list[str] = []
		if not 0.0 < d["suite_width_fraction"] <= 1.0:
			problems.append(f"suite_width_fraction must be in (0, 1], got {d['suite_width_fraction']}")
		if not 0.0 < d["policy_alpha"] <= 1.0:
			problems.append(f"policy_alpha must be in (0, 1], got {d['policy_alpha']}")
		elif cvar_rank(d["policy_alpha"], d["policy_n_cvar"]) < 1:
			problems.append(f"policy_alpha * policy_n_cvar must be at least 1 ({d['policy_alpha']} * {d['policy_n_cvar']})")
		if d["policy_b_ensemble"] < 2:
			problems.append(f"policy_b_ensemble must be at least 2, got {d['policy_b_ensemble']}")
		if d["policy_redq"] and d["policy_redq_m"] < 2:
			problems.append(f"policy_redq_m must be at least 2, got {d['policy_redq_m']}")
		if d["policy_algorithm"] in {"SIRSA", "SystemID"} and d["train_budget"] < d["policy_t_threshold"]:
			problems.append(f"train_budget {d['train_budget']} is below policy_t_threshold {d['policy_t_threshold']}")
		period, horizon = d["eval_nonstationary_period"], d["eval_nonstationary_horizon"]
		if period < 1 or horizon % period:
			problems.append(f"eval_nonstationary_period {period} must divide eval_nonstationary_horizon {horizon}")
		for key in ("policy_degenerate_set_prob", "sysid_initial_prior_prob"):
			if not 0.0 <= d[key] <= 1.0:
				problems.append(f"{key} must be a probability in [0, 1], got {d[key]}")
		if not 0.0 < d["train_tau"] <= 1.0:
			problems.append(f"train_tau must be in (0, 1], got {d['train_tau']}")
		if not 0.0 <= d["train_gamma"] < 1.0:
			problems.append(f"train_gamma must be in [0, 1), got {d['train_gamma']}")
		if not 0.0 < d["wcpg_alpha_min"] <= 1.0:
			problems.append(f"wcpg_alpha_min must be in (0, 1], got {d['wcpg_alpha_min']}")
		if any(not 0.0 < a <= 1.0 for a in d["eval_wcpg_alphas"]):
			problems.append(f"eval_wcpg_alphas must lie in (0, 1], got {d['eval_wcpg_alphas']}")
		if any(r < 0 for r in d["eval_r_levels"]):
			problems.append(f"eval_r_levels must be non-negative, got {d['eval_r_levels']}")
		valid_protocols = {str(p) for p in EvalProtocol}
		if bad := [p for p in d["eval_protocols"] if p not in valid_protocols]:
			problems.append(f"eval_protocols has unknown entries {bad}; choose from {sorted(valid_protocols)}")
		if not d["seeds"]:
			problems.append("seeds must not be empty")
		positive = (
			"env_horizon",
			"suite_n_train_sets",
			"suite_contexts_per_set",
			"suite_n_test_sets",
			"policy_n_cvar",
			"policy_n_ens",
			"train_batch_size",
			"train_steps_per_episode",
			"train_buffer_capacity",
			"train_checkpoint_interval",
			"train_log_interval",
			"sysid_history_length",
			"wcpg_variance_samples",
			"eval_k",
			"eval_nonstationary_rollouts",
			"eval_gap_rollouts",
			"eval_id_episodes",
		)
		problems.extend(f"{k} must be positive, got {d[k]}" for k in positive if d[k] < 1)  # type: ignore[literal-required]
		if d["env_action_max"] <= 0:
			problems.append(f"env_action_max must be positive, got {d['env_action_max']}")

		if problems:
			msg = f"{self.source}: " + "; ".join(problems)
			raise ConfigError(msg)

	@property
	def config_hash(self) -> str:
		"""CRC32 of the canonical JSON, independent of key order and env-var overrides."""
		values = {k: v for k, v in self.dict.items() if k != "output_dir"}
		return get_crc32(canonical_json(values))

	@property
	def output_dir(self) -> Path:
		return Path(self.dict["output_dir"])

	@property
	def algorithm(self) -> Algorithm:
		return Algorithm(self.dict["policy_algorithm"])

	@property
	def variant(self) -> EnvVariant:
		return EnvVariant(self.dict["env_variant"])

	@property
	def seeds(self) -> list[int]:
		return list(self.dict["seeds"])

	@property
	def protocols(self) -> list[EvalProtocol]:
		return [EvalProtocol(p) for p in self.dict["eval_protocols"]]

	def jobs(self, requested: int | None = None) -> int:
		if requested is not None:
			return max(1, requested)
		if env_jobs := os.environ.get(ENV_JOBS):
			try:
				return max(1, int(env_jobs))
			except ValueError as e:
				msg = f"{ENV_JOBS} must be an integer, got {env_jobs!r}"
				raise ConfigError(msg) from e
		return default_jobs()

	def with_values(self, **values: Any) -> "RunConfig":
		"""A copy with some keys replaced and revalidated."""
		merged: dict[str, Any] = dict(self.dict)
		merged.update(values)
		return RunConfig(merged, source=self.source)

	def make_env(self) -> PointMassEnv:
		d = self.dict
		return PointMassEnv(
			self.variant,
			horizon=d["env_horizon"],
			action_max=d["env_action_max"],
			start=(d["env_start_x"], d["env_start_y"]),
		)

	def set_distribution(self) -> SetDistribution:
		return SetDistribution(self.make_env().context_space, self.dict["suite_width_fraction"], self.dict["suite_seed"])

	def make_suite(self) -> TaskSuite:
		d = self.dict
		rng = np.random.default_rng(d["suite_seed"])
		return make_task_suite(
			self.set_distribution(),
			d["suite_n_train_sets"],
			d["suite_contexts_per_set"],
			d["suite_n_test_sets"],
			rng,
			variant=str(self.variant),
		)

	def policy_spec(self) -> PolicySpec:
		d = self.dict
		return PolicySpec(
			algorithm=self.algorithm,
			alpha=d["policy_alpha"],
			n_cvar=d["policy_n_cvar"],
			b_ensemble=d["policy_b_ensemble"],
			t_threshold=d["policy_t_threshold"],
			redq=d["policy_redq"],
			redq_m=d["policy_redq_m"],
			n_ens=d["policy_n_ens"],
			entropy_in_cvar=d["policy_entropy_in_cvar"],
			degenerate_set_prob=d["policy_degenerate_set_prob"],
			hidden=tuple(d["policy_hidden"]),
			activation=d["policy_activation"],  # type: ignore[arg-type]
			sysid_history_length=d["sysid_history_length"],
			sysid_hidden=tuple(d["sysid_hidden"]),
			sysid_initial_prior_prob=d["sysid_initial_prior_prob"],
			wcpg_alpha_min=d["wcpg_alpha_min"],
			wcpg_variance_samples=d["wcpg_variance_samples"],
			wcpg_variance_hidden=tuple(d["wcpg_variance_hidden"]),
			wcpg_literal_formula=d["wcpg_literal_formula"],
		)

	def training_settings(self) -> TrainingSettings:
		d = self.dict
		return TrainingSettings(
			budget=d["train_budget"],
			batch_size=d["train_batch_size"],
			steps_per_episode=d["train_steps_per_episode"],
			warmup_episodes=d["train_warmup_episodes"],
			buffer_capacity=d["train_buffer_capacity"],
			gamma=d["train_gamma"],
			tau=d["train_tau"],
			lr=d["train_lr"],
			init_temperature=d["train_init_temperature"],
			auto_temperature=d["train_auto_temperature"],
			checkpoint_interval=d["train_checkpoint_interval"],
			log_interval=d["train_log_interval"],
		)
