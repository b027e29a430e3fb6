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
import math
from pathlib import Path

import numpy as np
import pytest

from agents import FilteringRuntime
from approximator import SquashedGaussianActor
from enums import EnvVariant, SweepAxis
from evaluation import (
	EvalReport,
	SetEvaluation,
	SweepRow,
	SweepTable,
	aggregate_reports,
	emit_report,
	estimate_worst_case_gap,
	evaluate_max_uncertainty,
	evaluate_on_set,
	evaluate_test_suite,
	identification_trace,
	misspecification_sweep,
	nonstationary_eval,
	obstacle_confusion_set,
	read_report,
)
from pointmass import PointMassEnv
from rcmdp import TaskSuite, UncertaintySet, set_contains
from stubs import ConstantRuntime
from sysid import SysIdEnsemble


def _set_evaluation(returns: list[float], index: int = 0) -> SetEvaluation:
	values = np.array(returns)
	return SetEvaluation(
		index,
		UncertaintySet(np.array([0.5]), np.array([0.1])),
		np.full((values.size, 1), 0.5),
		values,
		np.isnan(values),
	)


def test_set_evaluation_rolls_k_contexts(combined_env: PointMassEnv, small_suite: TaskSuite) -> None:
	test_set = small_suite.test_sets[0]
	evaluation = evaluate_on_set(combined_env, ConstantRuntime(0.2), test_set, 5, np.random.default_rng(0))
	assert evaluation.k == 5
	assert evaluation.contexts.shape == (5, 2)
	assert all(set_contains(test_set, c) for c in evaluation.contexts)
	assert not evaluation.any_failed
	assert evaluation.min <= evaluation.mean


def test_set_evaluation_is_deterministic(combined_env: PointMassEnv, small_suite: TaskSuite) -> None:
	test_set = small_suite.test_sets[1]
	a = evaluate_on_set(combined_env, ConstantRuntime(0.2), test_set, 4, np.random.default_rng(3))
	b = evaluate_on_set(combined_env, ConstantRuntime(0.2), test_set, 4, np.random.default_rng(3))
	np.testing.assert_array_equal(a.contexts, b.contexts)
	np.testing.assert_array_equal(a.returns, b.returns)


def test_set_evaluation_needs_rollouts(combined_env: PointMassEnv, small_suite: TaskSuite) -> None:
	with pytest.raises(ValueError, match="K must be positive"):
		evaluate_on_set(combined_env, ConstantRuntime(), small_suite.test_sets[0], 0, np.random.default_rng(0))


def test_failed_rollouts_are_flagged(combined_env: PointMassEnv, small_suite: TaskSuite) -> None:
	runtime = ConstantRuntime(math.nan)
	evaluation = evaluate_on_set(combined_env, runtime, small_suite.test_sets[0], 3, np.random.default_rng(0))
	assert evaluation.any_failed
	assert math.isnan(evaluation.min)
	assert evaluation.to_dict()["returns"] == [None, None, None]
	report = EvalReport("broken", 0, "", [evaluation])
	assert report.summary()["failed_sets"] == 1
	assert {row["return"] for row in report.rows()} == {""}


def test_partial_failure_uses_remaining_returns() -> None:
	evaluation = _set_evaluation([1.0, math.nan, 3.0])
	assert evaluation.min == 1.0
	assert evaluation.mean == 2.0


def test_test_suite_report(combined_env: PointMassEnv, small_suite: TaskSuite) -> None:
	report = evaluate_test_suite(
		combined_env, ConstantRuntime(0.2), small_suite, 3, np.random.default_rng(1), method="Constant", seed=4
	)
	assert len(report.sets) == len(small_suite.test_sets)
	assert len(report.rows()) == 3 * len(small_suite.test_sets)
	assert report.mean_of_mins <= report.mean_of_means
	assert report.summary()["k"] == 3


def test_empty_report_has_no_means() -> None:
	report = EvalReport("none", 0, "", [])
	assert math.isnan(report.mean_of_mins)
	assert report.stderr_of_means == 0.0


def test_max_uncertainty_spans_space(combined_env: PointMassEnv) -> None:
	space = combined_env.context_space
	evaluation = evaluate_max_uncertainty(combined_env, ConstantRuntime(), space, 2, np.random.default_rng(2))
	np.testing.assert_array_equal(evaluation.uncertainty_set.width, space.half_range)


def test_misspecification_sweep_rows(combined_env: PointMassEnv, small_suite: TaskSuite) -> None:
	table = misspecification_sweep(
		combined_env, ConstantRuntime(0.3), small_suite, [0.0, 0.5], np.random.default_rng(5), method="Constant", seed=2
	)
	assert table.axis == SweepAxis.RLevel
	assert table.values == [0.0, 0.5]
	assert all(row.min <= row.mean for row in table.rows)
	with pytest.raises(ValueError, match="r level"):
		misspecification_sweep(combined_env, ConstantRuntime(), small_suite, [], np.random.default_rng(0))


def test_sweep_summary_and_best_value() -> None:
	table = SweepTable(SweepAxis.Alpha, "SIRSA")
	table.rows += [
		SweepRow(SweepAxis.Alpha, 0.25, 0, 1.0, 5.0),
		SweepRow(SweepAxis.Alpha, 0.25, 1, 3.0, 7.0),
		SweepRow(SweepAxis.Alpha, 1.0, 0, 0.0, 8.0),
		SweepRow(SweepAxis.Alpha, 1.0, 1, 0.0, 10.0),
	]
	first = table.summary()[0]
	assert first["min"] == 2.0
	assert first["min_stderr"] == pytest.approx(1.0)
	assert table.best_value() == 0.25
	assert table.slope() == pytest.approx(4.0)
	with pytest.raises(ValueError, match="Cannot merge"):
		table.extend(SweepTable(SweepAxis.RLevel, "SIRSA"))


def test_nonstationary_eval_shapes(combined_env: PointMassEnv, small_suite: TaskSuite) -> None:
	report = nonstationary_eval(combined_env, ConstantRuntime(), small_suite, 10, 50, 3, np.random.default_rng(6))
	assert report.returns.shape == (3,)
	assert report.rewards.shape == (3, 50)
	np.testing.assert_allclose(report.rewards.sum(axis=1), report.returns)
	with pytest.raises(ValueError, match="must divide"):
		nonstationary_eval(combined_env, ConstantRuntime(), small_suite, 7, 50, 1, np.random.default_rng(6))


def test_gap_vanishes_without_confusion() -> None:
	env = PointMassEnv(EnvVariant.ObstacleOnly, horizon=20)
	space = env.context_space
	actor = SquashedGaussianActor.create(env.obs_dim + 2 * space.dim, env.act_dim, (8,), np.random.default_rng(7))
	c_eval = space.upper
	alone = estimate_worst_case_gap(env, actor, space, [c_eval], c_eval, 3, np.random.default_rng(8))
	assert alone.gap == 0.0
	assert alone.stderr == 0.0

	confusion = obstacle_confusion_set(space)
	assert len(confusion) == 5
	np.testing.assert_array_equal(confusion[-1], space.upper)
	spread = estimate_worst_case_gap(env, actor, space, confusion, c_eval, 2, np.random.default_rng(8))
	assert spread.gap >= 0.0
	assert len(spread.confused_returns) == 5


def test_identification_trace_starts_at_prior(combined_env: PointMassEnv, small_suite: TaskSuite) -> None:
	rng = np.random.default_rng(9)
	space = combined_env.context_space
	env = PointMassEnv(EnvVariant.Combined, horizon=12)
	actor = SquashedGaussianActor.create(env.obs_dim + 2 * space.dim, env.act_dim, (8,), rng)
	ensemble = SysIdEnsemble.create(space, env.obs_dim, env.act_dim, rng, n_members=2, hidden=(8,))
	rows = identification_trace(env, FilteringRuntime(actor, ensemble, space), small_suite, 2, rng, variant="combined")
	assert [row["t"] for row in rows] == list(range(13))
	expected_sigma = np.mean([small_suite.test_sets[i].width.mean() for i in range(2)])
	assert rows[0]["mean_sigma"] == pytest.approx(expected_sigma)
	assert all(row["variant"] == "combined" for row in rows)


def test_report_files_round_trip(tmp_path: Path) -> None:
	report = EvalReport("SIRSA", 3, "cafe0001", [_set_evaluation([1.0, 2.0]), _set_evaluation([math.nan, 4.0], 1)])
	csv_path, json_path = emit_report(report, tmp_path / "eval_SIRSA_seed3")
	assert csv_path.name == "eval_SIRSA_seed3.csv"
	assert len(csv_path.read_text("utf-8").strip().splitlines()) == 5

	loaded = read_report(json_path)
	assert isinstance(loaded, EvalReport)
	assert loaded.seed == 3
	np.testing.assert_array_equal(loaded.mins, report.mins)
	np.testing.assert_array_equal(loaded.sets[1].failed, [True, False])

	table = SweepTable(SweepAxis.RLevel, "SIRSA", [SweepRow(SweepAxis.RLevel, 0.25, 3, 1.0, 2.0)], "cafe0001")
	_, sweep_json = emit_report(table, tmp_path / "misspec@0.25")
	assert sweep_json.name == "misspec@0.25.json"
	loaded_table = read_report(sweep_json)
	assert isinstance(loaded_table, SweepTable)
	assert loaded_table.rows == table.rows


def test_read_report_rejects_other_versions(tmp_path: Path) -> None:
	path = tmp_path / "eval.json"
	path.write_text(json.dumps({"kind": "eval", "report_version": 999}), encoding="utf-8")
	with pytest.raises(ValueError, match="format version"):
		read_report(path)


def test_aggregate_over_seeds() -> None:
	reports = [
		EvalReport("A", 0, "", [_set_evaluation([1.0])]),
		EvalReport("A", 1, "", [_set_evaluation([3.0])]),
		EvalReport("B", 0, "", [_set_evaluation([5.0])]),
	]
	rows = aggregate_reports(reports)
	assert [row["method"] for row in rows] == ["A", "B"]
	assert rows[0]["mean_of_mins"] == 2.0
	assert rows[0]["mean_of_mins_stderr"] == pytest.approx(1.0)
	assert rows[1]["mean_of_mins_stderr"] == 0.0
