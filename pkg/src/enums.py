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


from enum import IntEnum, StrEnum


class EnvVariant(StrEnum):
	ObstacleOnly = "obstacle_only"
	VelocityOnly = "velocity_only"
	Combined = "combined"


class Algorithm(StrEnum):
	SIRSA = "SIRSA"
	SystemID = "SystemID"
	EPOpt = "EPOpt"
	SetEPOpt = "SetEPOpt"
	WCPG = "WCPG"
	SetWCPG = "SetWCPG"
	Oracle = "Oracle"
	PolicyEnsemble = "PolicyEnsemble"


class Activation(StrEnum):
	ReLU = "relu"
	Tanh = "tanh"


class Phase(StrEnum):
	SAC = "sac"
	CVaR = "cvar"


class EvalProtocol(StrEnum):
	Suite = "suite"
	MaxUncertainty = "maxunc"
	Misspecification = "misspec"
	NonStationary = "nonstationary"
	WorstCaseGap = "gap"
	Identification = "idtrace"


class SweepAxis(StrEnum):
	Alpha = "alpha"
	NCVaR = "n_cvar"
	BEnsemble = "b_ensemble"
	RLevel = "r_level"


class LogType(StrEnum):
	Info = "info"
	Good = "good"
	Bad = "bad"


class ExitCode(IntEnum):
	OK = 0
	ConfigError = 1
	RuntimeError = 2
