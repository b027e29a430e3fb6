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


from ._estimators import RiskConfig, cvar_rank, empirical_cvar, empirical_var, worst_indices
from ._gradient import (
	ContextCritic,
	CVaRGradient,
	cvar_actor_gradient,
	cvar_objective,
	objective_grads,
	sample_set_contexts,
)
from ._normal import cvar_coefficient, gaussian_cvar_closed_form, std_normal_cdf, std_normal_pdf, std_normal_ppf

__all__ = [
	"CVaRGradient",
	"ContextCritic",
	"RiskConfig",
	"cvar_actor_gradient",
	"cvar_coefficient",
	"cvar_objective",
	"cvar_rank",
	"empirical_cvar",
	"empirical_var",
	"gaussian_cvar_closed_form",
	"objective_grads",
	"sample_set_contexts",
	"std_normal_cdf",
	"std_normal_pdf",
	"std_normal_ppf",
	"worst_indices",
]
