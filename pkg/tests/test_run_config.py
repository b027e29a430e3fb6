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


import json
from pathlib import Path

import pytest

from enums import Algorithm, EnvVariant, EvalProtocol
from globals import ENV_JOBS, ENV_OUTPUT_DIR
from helpers import ConfigError
from run_config import DEFAULT_CONFIG, RunConfig

REFERENCE_CONFIG = Path(__file__).parents[1] / "configs" / "pointmass.json"


def _write(path: Path, values: dict[str, object]) -> Path:
	path.write_text(json.dumps(values), encoding="utf-8")
	return path


def test_defaults_are_valid() -> None:
	config = RunConfig()
	assert config.algorithm == Algorithm.SIRSA
	assert config.variant == EnvVariant.Combined
	assert config.protocols[0] == EvalProtocol.Suite
	assert len(config.config_hash) == 8
	assert DEFAULT_CONFIG["eval_nonstationary_rollouts"] == 10


def test_reference_config_loads() -> None:
	config = RunConfig.load(REFERENCE_CONFIG)
	assert config.seeds == [0, 1, 2, 3, 4]
	assert EvalProtocol.Identification in config.protocols


def test_unknown_key_rejected() -> None:
	with pytest.raises(ConfigError, match="unknown keys: bogus"):
		RunConfig({"bogus": 1})


@pytest.mark.parametrize(
	("key", "value"),
	[
		("train_budget", "many"),
		("policy_n_cvar", True),
		("env_variant", "hexagon"),
		("policy_hidden", [64, "64"]),
		("policy_alpha", "0.25"),
	],
)
def test_ill_typed_values_rejected(key: str, value: object) -> None:
	with pytest.raises(ConfigError, match=f"'{key}' has invalid value"):
		RunConfig({key: value})


def test_float_keys_accept_integers() -> None:
	config = RunConfig({"policy_alpha": 1, "eval_r_levels": [0, 1]})
	assert isinstance(config.dict["policy_alpha"], float)
	assert config.dict["eval_r_levels"] == [0.0, 1.0]


@pytest.mark.parametrize(
	("values", "match"),
	[
		({"suite_width_fraction": 0.0}, "suite_width_fraction"),
		({"policy_alpha": 0.01, "policy_n_cvar": 50}, "at least 1"),
		({"policy_b_ensemble": 1}, "policy_b_ensemble"),
		({"train_budget": 100, "policy_t_threshold": 200}, "below policy_t_threshold"),
		({"eval_nonstationary_period": 7}, "must divide"),
		({"eval_protocols": ["suite", "vibes"]}, "unknown entries"),
		({"seeds": []}, "seeds"),
		({"eval_k": 0}, "eval_k must be positive"),
		({"policy_degenerate_set_prob": 1.5}, "policy_degenerate_set_prob must be a probability"),
		({"sysid_initial_prior_prob": -0.1}, "sysid_initial_prior_prob must be a probability"),
		({"train_tau": 0.0}, "train_tau"),
		({"train_tau": 1.5}, "train_tau"),
		({"train_gamma": 1.0}, "train_gamma"),
	],
)
def test_cross_checks(values: dict[str, object], match: str) -> None:
	with pytest.raises(ConfigError, match=match):
		RunConfig(values)


def test_budget_threshold_only_binds_sirsa() -> None:
	RunConfig({"policy_algorithm": "EPOpt", "train_budget": 100, "policy_t_threshold": 200})


def test_hash_ignores_key_order_and_output_dir() -> None:
	a = RunConfig({"policy_alpha": 0.5, "eval_k": 10})
	b = RunConfig({"eval_k": 10, "policy_alpha": 0.5, "output_dir": "elsewhere"})
	assert a.config_hash == b.config_hash
	assert RunConfig({"policy_alpha": 0.5, "eval_k": 11}).config_hash != a.config_hash


def test_env_override_of_output_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
	monkeypatch.delenv(ENV_OUTPUT_DIR, raising=False)
	path = _write(tmp_path / "run.json", {"output_dir": "from-file"})
	plain = RunConfig.load(path)
	monkeypatch.setenv(ENV_OUTPUT_DIR, str(tmp_path / "from-env"))
	overridden = RunConfig.load(path)
	assert overridden.output_dir == tmp_path / "from-env"
	assert overridden.config_hash == plain.config_hash


def test_load_errors(tmp_path: Path) -> None:
	with pytest.raises(ConfigError, match="not found"):
		RunConfig.load(tmp_path / "missing.json")
	broken = tmp_path / "broken.json"
	broken.write_text("{", encoding="utf-8")
	with pytest.raises(ConfigError, match="not valid JSON"):
		RunConfig.load(broken)
	with pytest.raises(ConfigError, match="JSON object"):
		RunConfig.load(_write(tmp_path / "list.json", [1, 2]))  # type: ignore[arg-type]


def test_jobs(monkeypatch: pytest.MonkeyPatch) -> None:
	config = RunConfig()
	assert config.jobs(3) == 3
	assert config.jobs(0) == 1
	monkeypatch.setenv(ENV_JOBS, "2")
	assert config.jobs() == 2
	monkeypatch.setenv(ENV_JOBS, "lots")
	with pytest.raises(ConfigError, match=ENV_JOBS):
		config.jobs()


def test_with_values_revalidates() -> None:
	config = RunConfig()
	assert config.with_values(policy_alpha=0.5).dict["policy_alpha"] == 0.5
	assert config.dict["policy_alpha"] == DEFAULT_CONFIG["policy_alpha"]
	with pytest.raises(ConfigError):
		config.with_values(policy_b_ensemble=1)


def test_builds_domain_objects() -> None:
	config = RunConfig({"policy_algorithm": "SetWCPG", "policy_hidden": [16], "env_variant": "velocity_only"})
	spec = config.policy_spec()
	assert spec.algorithm == Algorithm.SetWCPG
	assert spec.hidden == (16,)
	assert config.training_settings().budget == DEFAULT_CONFIG["train_budget"]
	env = config.make_env()
	assert env.variant == EnvVariant.VelocityOnly
	assert env.context_space.dim == 1


def test_default_suite_counts() -> None:
	suite = RunConfig().make_suite()
	assert len(suite.train_sets) == 20
	assert len(suite.flat_contexts()) == 60
	assert len(suite.test_sets) == 20
