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


from ._harness import (
	EvalReport,
	GapEstimate,
	NonStationaryReport,
	SetEvaluation,
	SweepRow,
	SweepTable,
	estimate_worst_case_gap,
	evaluate_contexts,
	evaluate_max_uncertainty,
	evaluate_on_set,
	evaluate_test_suite,
	identification_trace,
	misspecification_sweep,
	nonstationary_eval,
	obstacle_confusion_set,
)
from ._report import aggregate_reports, emit_aggregate, emit_identification, emit_report, emit_trace, read_report

__all__ = [
	"EvalReport",
	"GapEstimate",
	"NonStationaryReport",
	"SetEvaluation",
	"SweepRow",
	"SweepTable",
	"aggregate_reports",
	"emit_aggregate",
	"emit_identification",
	"emit_report",
	"emit_trace",
	"estimate_worst_case_gap",
	"evaluate_contexts",
	"evaluate_max_uncertainty",
	"evaluate_on_set",
	"evaluate_test_suite",
	"identification_trace",
	"misspecification_sweep",
	"nonstationary_eval",
	"obstacle_confusion_set",
	"read_report",
]
