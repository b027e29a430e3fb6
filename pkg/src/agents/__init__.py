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


from ._base import CheckpointHook, PolicySpec, Trainer, TrainingResult, TrainingSettings, episode_history
from ._checkpoint import Checkpoint, build_runtime, checkpoint_payload, load_checkpoint, save_checkpoint
from ._critics import (
	ActorState,
	ActorStep,
	CriticBank,
	Temperature,
	actor_update_sac,
	critic_update,
	sac_actor_gradient,
)
from ._epopt import EPOptTrainer
from ._oracle import OracleTrainer, ensemble_policy_act, oracle_act
from ._registry import TRAINERS, make_trainer
from ._replay import (
	Batch,
	ContextBuffer,
	ReplayBuffers,
	check_context_keys,
	context_keys,
	draw_indices,
	epopt_draw_size,
	epopt_filter_batch,
)
from ._runtime import (
	ActorRuntime,
	EnsembleRuntime,
	FilteringRuntime,
	FixedSetRuntime,
	OracleRuntime,
	actor_inputs,
	context_mean_action,
	make_runtime,
	set_features,
)
from ._sirsa import SirsaTrainer, sirsa_rollout, sirsa_train
from ._wcpg import (
	WCPG_EVAL_ALPHAS,
	VarianceNet,
	WCPGTrainer,
	monte_carlo_q_variance,
	wcpg_actor_gradient,
	wcpg_train_and_act,
)

__all__ = [
	"TRAINERS",
	"WCPG_EVAL_ALPHAS",
	"ActorRuntime",
	"ActorState",
	"ActorStep",
	"Batch",
	"Checkpoint",
	"CheckpointHook",
	"ContextBuffer",
	"CriticBank",
	"EPOptTrainer",
	"EnsembleRuntime",
	"FilteringRuntime",
	"FixedSetRuntime",
	"OracleRuntime",
	"OracleTrainer",
	"PolicySpec",
	"ReplayBuffers",
	"SirsaTrainer",
	"Temperature",
	"Trainer",
	"TrainingResult",
	"TrainingSettings",
	"VarianceNet",
	"WCPGTrainer",
	"actor_inputs",
	"actor_update_sac",
	"build_runtime",
	"check_context_keys",
	"checkpoint_payload",
	"context_keys",
	"context_mean_action",
	"critic_update",
	"draw_indices",
	"ensemble_policy_act",
	"episode_history",
	"epopt_draw_size",
	"epopt_filter_batch",
	"load_checkpoint",
	"make_runtime",
	"make_trainer",
	"monte_carlo_q_variance",
	"oracle_act",
	"sac_actor_gradient",
	"save_checkpoint",
	"set_features",
	"sirsa_rollout",
	"sirsa_train",
	"wcpg_actor_gradient",
	"wcpg_train_and_act",
]
