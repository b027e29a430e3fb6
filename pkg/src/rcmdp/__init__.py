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


from ._context import (
	ContextSpace,
	ContextVector,
	SetDistribution,
	UncertaintySet,
	as_vector,
	sample_context_uniform,
	sample_contexts,
	sample_set,
	set_contains,
)
from ._suite import TaskSuite, TrainContext, make_task_suite

__all__ = [
	"ContextSpace",
	"ContextVector",
	"SetDistribution",
	"TaskSuite",
	"TrainContext",
	"UncertaintySet",
	"as_vector",
	"make_task_suite",
	"sample_context_uniform",
	"sample_contexts",
	"sample_set",
	"set_contains",
]
