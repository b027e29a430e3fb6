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


from ._network import FloatArray, ForwardCache, MLPParams, backward, forward, forward_cached, init_mlp
from ._optim import AdamState, TargetParams, adam_init, adam_step, adam_step_arrays, polyak_update
from ._policy_head import ActorSample, SquashedGaussianActor

__all__ = [
	"ActorSample",
	"AdamState",
	"FloatArray",
	"ForwardCache",
	"MLPParams",
	"SquashedGaussianActor",
	"TargetParams",
	"adam_init",
	"adam_step",
	"adam_step_arrays",
	"backward",
	"forward",
	"forward_cached",
	"init_mlp",
	"polyak_update",
]
