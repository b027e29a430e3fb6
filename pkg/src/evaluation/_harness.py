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
import math
from collections.abc import Sequence
from typing import Any

import numpy as np
import numpy.typing as npt

from agents import OracleRuntime
from approximator import FloatArray, SquashedGaussianActor
from enums import SweepAxis
from helpers import RolloutOutcome, ToolkitError
from pointmass import PointMassEnv, make_misspecified_contexts, nonstationary_rollout
from rcmdp import ContextSpace, ContextVector, TaskSuite, UncertaintySet, as_vector, sample_contexts
from rollout import PolicyRuntime, run_episode
from sysid import identifiability_proxy

logger = logging.getLogger(__name__)


def _stderr(values: Sequence[float] | FloatArray) -> float:
	v = np.asarray(values, dtype=np.float64)
	if v.size < 2:
		return 0.0
	return float(v.std(ddof=1) / math.sqrt(v.size))


def _rollout_return(
	env: PointMassEnv,
	runtime: PolicyRuntime,
	context: ContextVector,
	prior: UncertaintySet,
	rng: np.random.Generator,
) -> tuple[RolloutOutcome, float]:
	try:
		episode = run_episode(env, runtime, context, prior, rng, deterministic=True)
	except (ToolkitError, ValueError, FloatingPointError) as e:
		logger.exception("Eval : Rollout : Failed at context %s", np.asarray(context).tolist())
		return RolloutOutcome(success=False, details=str(e)), math.nan
	return RolloutOutcome(success=True, details=""), episode.episode_return


@dataclasses.dataclass
class SetEvaluation:
	set_index: int
	uncertainty_set: UncertaintySet
	contexts: FloatArray
	returns: FloatArray
	failed: npt.NDArray[np.bool_]

	@property
	def k(self) -> int:
		return int(self.returns.shape[0])

	@property
	def any_failed(self) -> bool:
		return bool(self.failed.any())

	@property
	def min(self) -> float:
		ok = self.returns[~self.failed]
		return float(ok.min()) if ok.size else math.nan

	@property
	def mean(self) -> float:
		ok = self.returns[~self.failed]
		return float(ok.mean()) if ok.size else math.nan

	def to_dict(self) -> dict[str, Any]:
		return {
			"set_index": self.set_index,
			"set": self.uncertainty_set.to_dict(),
			"contexts": self.contexts.tolist(),
			"returns": [None if f else float(r) for r, f in zip(self.returns, self.failed, strict=True)],
			"min": self.min,
			"mean": self.mean,
			"failed": self.any_failed,
		}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "SetEvaluation":
		returns = [math.nan if r is None else float(r) for r in data["returns"]]
		return cls(
			set_index=int(data["set_index"]),
			uncertainty_set=UncertaintySet.from_dict(data["set"]),
			contexts=np.array(data["contexts"], dtype=np.float64, ndmin=2),
			returns=np.array(returns, dtype=np.float64),
			failed=np.array([r is None for r in data["returns"]], dtype=np.bool_),
		)


def evaluate_contexts(
	env: PointMassEnv,
	runtime: PolicyRuntime,
	contexts: FloatArray,
	prior: UncertaintySet,
	rng: np.random.Generator,
	*,
	set_index: int = 0,
) -> SetEvaluation:
	"""One greedy rollout per context, the runtime starting from `prior` each time."""
	contexts = np.atleast_2d(contexts)
	returns = np.empty(contexts.shape[0])
	failed = np.zeros(contexts.shape[0], dtype=np.bool_)
	for i, (context, rollout_rng) in enumerate(zip(contexts, rng.spawn(contexts.shape[0]), strict=True)):
		outcome, returns[i] = _rollout_return(env, runtime, context, prior, rollout_rng)
		failed[i] = not outcome.success
	return SetEvaluation(set_index, prior, contexts, returns, failed)


def evaluate_on_set(
	env: PointMassEnv,
	runtime: PolicyRuntime,
	uncertainty_set: UncertaintySet,
	k: int,
	rng: np.random.Generator,
	*,
	set_index: int = 0,
) -> SetEvaluation:
	"""K rollouts at contexts drawn uniformly from the set, which is also the runtime's prior."""
	if k < 1:
		msg = f"K must be positive, got {k}"
		raise ValueError(msg)
	context_rng, rollout_rng = rng.spawn(2)
	contexts = sample_contexts(uncertainty_set, k, context_rng)
	return evaluate_contexts(env, runtime, contexts, uncertainty_set, rollout_rng, set_index=set_index)


@dataclasses.dataclass
class EvalReport:
	method: str
	seed: int
	config_hash: str
	sets: list[SetEvaluation]
	extra: dict[str, Any] = dataclasses.field(default_factory=dict)

	@property
	def mins(self) -> FloatArray:
		return np.array([s.min for s in self.sets])

	@property
	def means(self) -> FloatArray:
		return np.array([s.mean for s in self.sets])

	@property
	def mean_of_mins(self) -> float:
		return float(np.mean(self.mins)) if self.sets else math.nan

	@property
	def mean_of_means(self) -> float:
		return float(np.mean(self.means)) if self.sets else math.nan

	@property
	def stderr_of_mins(self) -> float:
		return _stderr(self.mins)

	@property
	def stderr_of_means(self) -> float:
		return _stderr(self.means)

	def summary(self) -> dict[str, Any]:
		return {
			"method": self.method,
			"seed": self.seed,
			"n_sets": len(self.sets),
			"k": self.sets[0].k if self.sets else 0,
			"mean_of_mins": self.mean_of_mins,
			"stderr_of_mins": self.stderr_of_mins,
			"mean_of_means": self.mean_of_means,
			"stderr_of_means": self.stderr_of_means,
			"failed_sets": sum(s.any_failed for s in self.sets),
		}

	def rows(self) -> list[dict[str, Any]]:
		return [
			{
				"method": self.method,
				"seed": self.seed,
				"set_id": s.set_index,
				"sample_id": i,
				"return": "" if s.failed[i] else float(s.returns[i]),
				"failed": int(s.failed[i]),
			}
			for s in self.sets
			for i in range(s.k)
		]


def evaluate_test_suite(
	env: PointMassEnv,
	runtime: PolicyRuntime,
	suite: TaskSuite,
	k: int,
	rng: np.random.Generator,
	*,
	method: str = "",
	seed: int = 0,
	config_hash: str = "",
) -> EvalReport:
	if not suite.test_sets:
		msg = "Task suite has no test sets"
		raise ValueError(msg)
	sets = [
		evaluate_on_set(env, runtime, s, k, set_rng, set_index=i)
		for i, (s, set_rng) in enumerate(zip(suite.test_sets, rng.spawn(len(suite.test_sets)), strict=True))
	]
	report = EvalReport(method, seed, config_hash, sets)
	logger.info(
		"Eval : %s : seed %s : mean of mins %.3f, mean of means %.3f over %s sets",
		method,
		seed,
		report.mean_of_mins,
		report.mean_of_means,
		len(sets),
	)
	return report


def evaluate_max_uncertainty(
	env: PointMassEnv,
	runtime: PolicyRuntime,
	space: ContextSpace,
	k: int,
	rng: np.random.Generator,
) -> SetEvaluation:
	"""evaluate_on_set on the box spanning the whole context space."""
	return evaluate_on_set(env, runtime, UncertaintySet.spanning(space), k, rng)


@dataclasses.dataclass
class SweepRow:
	axis: SweepAxis
	value: float
	seed: int
	min: float
	mean: float
	wall_seconds: float = 0.0

	def to_dict(self) -> dict[str, Any]:
		return {
			"axis": str(self.axis),
			"value": self.value,
			"seed": self.seed,
			"min": self.min,
			"mean": self.mean,
			"wall_seconds": self.wall_seconds,
		}

	@classmethod
	def from_dict(cls, data: dict[str, Any]) -> "SweepRow":
		return cls(
			SweepAxis(data["axis"]),
			float(data["value"]),
			int(data["seed"]),
			float(data["min"]),
			float(data["mean"]),
			float(data.get("wall_seconds", 0.0)),
		)


@dataclasses.dataclass
class SweepTable:
	axis: SweepAxis
	method: str
	rows: list[SweepRow] = dataclasses.field(default_factory=list)
	config_hash: str = ""

	@property
	def values(self) -> list[float]:
		return sorted({r.value for r in self.rows})

	def extend(self, other: "SweepTable") -> None:
		if other.axis != self.axis:
			msg = f"Cannot merge a {other.axis} sweep into a {self.axis} sweep"
			raise ValueError(msg)
		self.rows.extend(other.rows)

	def summary(self) -> list[dict[str, Any]]:
		"""Mean and standard error over seeds for every axis value."""
		out = []
		for value in self.values:
			mins = [r.min for r in self.rows if r.value == value]
			means = [r.mean for r in self.rows if r.value == value]
			out.append(
				{
					"axis": str(self.axis),
					"value": value,
					"n_seeds": len(mins),
					"min": float(np.mean(mins)),
					"min_stderr": _stderr(mins),
					"mean": float(np.mean(means)),
					"mean_stderr": _stderr(means),
				}
			)
		return out

	def best_value(self) -> float:
		"""Axis value with the highest seed-averaged mean-of-mins."""
		summary = self.summary()
		return max(summary, key=lambda row: (row["min"], -row["value"]))["value"]

	def slope(self) -> float:
		"""Least-squares slope of the seed-averaged mean return against the axis value."""
		summary = self.summary()
		if len(summary) < 2:
			return 0.0
		x = np.array([row["value"] for row in summary])
		y = np.array([row["mean"] for row in summary])
		return float(np.polyfit(x, y, 1)[0])


def misspecification_sweep(
	env: PointMassEnv,
	runtime: PolicyRuntime,
	suite: TaskSuite,
	r_levels: Sequence[float],
	rng: np.random.Generator,
	*,
	method: str = "",
	seed: int = 0,
) -> SweepTable:
	"""Rollouts at the corners of each test set pushed out by (1 + r), the runtime keeping the original prior."""
	if not r_levels:
		msg = "Misspecification sweep needs at least one r level"
		raise ValueError(msg)
	table = SweepTable(SweepAxis.RLevel, method)
	for r, level_rng in zip(r_levels, rng.spawn(len(r_levels)), strict=True):
		set_mins: list[float] = []
		set_means: list[float] = []
		for i, (test_set, set_rng) in enumerate(zip(suite.test_sets, level_rng.spawn(len(suite.test_sets)), strict=True)):
			corners = np.stack(make_misspecified_contexts(test_set, r, bounds=env.safe_space))
			evaluation = evaluate_contexts(env, runtime, corners, test_set, set_rng, set_index=i)
			set_mins.append(evaluation.min)
			set_means.append(evaluation.mean)
		table.rows.append(SweepRow(SweepAxis.RLevel, float(r), seed, float(np.mean(set_mins)), float(np.mean(set_means))))
		logger.info("Eval : %s : misspecification r=%s mean %.3f", method, r, table.rows[-1].mean)
	return table


@dataclasses.dataclass
class NonStationaryReport:
	returns: FloatArray
	rewards: FloatArray
	"""Per-step reward traces, shape (n_rollouts, horizon)."""

	@property
	def mean(self) -> float:
		return float(self.returns.mean())

	@property
	def stderr(self) -> float:
		return _stderr(self.returns)

	def to_dict(self) -> dict[str, Any]:
		return {
			"returns": self.returns.tolist(),
			"rewards": self.rewards.tolist(),
			"mean": self.mean,
			"stderr": self.stderr,
		}


def nonstationary_eval(
	env: PointMassEnv,
	runtime: PolicyRuntime,
	suite: TaskSuite,
	period: int,
	horizon: int,
	n_rollouts: int,
	rng: np.random.Generator,
) -> NonStationaryReport:
	"""Rollout i starts from test set i (cycling) and re-draws its context every `period` steps."""
	returns = np.empty(n_rollouts)
	rewards = np.empty((n_rollouts, horizon))
	for i, rollout_rng in enumerate(rng.spawn(n_rollouts)):
		test_set = suite.test_sets[i % len(suite.test_sets)]
		result = nonstationary_rollout(env, runtime, test_set, period, rollout_rng, horizon=horizon)
		returns[i] = result.total_return
		rewards[i] = result.rewards
	report = NonStationaryReport(returns, rewards)
	logger.info("Eval : Non-stationary : mean %.3f +- %.3f over %s rollouts", report.mean, report.stderr, n_rollouts)
	return report


@dataclasses.dataclass
class GapEstimate:
	gap: float
	stderr: float
	reference_return: float
	confused_returns: dict[str, float]


def obstacle_confusion_set(space: ContextSpace, n_points: int = 5) -> list[ContextVector]:
	"""Radii spread over the obstacle range; all yield the same transitions until the agent reaches the obstacle."""
	return [as_vector(c) for c in np.linspace(space.lower, space.upper, n_points)]


def estimate_worst_case_gap(
	env: PointMassEnv,
	actor: SquashedGaussianActor,
	space: ContextSpace,
	confusion_set: Sequence[npt.ArrayLike],
	c_eval: npt.ArrayLike,
	n_rollouts: int,
	rng: np.random.Generator,
) -> GapEstimate:
	"""max over c' of G(pi(c) in c) - G(pi(c') in c), by Monte-Carlo rollouts of the oracle actor."""
	c_eval = as_vector(c_eval)
	prior = UncertaintySet.degenerate(c_eval)

	def returns_for(believed: ContextVector, stream: np.random.Generator) -> FloatArray:
		runtime = OracleRuntime(actor, space, believed_context=believed)
		return np.array(
			[run_episode(env, runtime, c_eval, prior, r, deterministic=True).episode_return for r in stream.spawn(n_rollouts)]
		)

	reference_rng, confused_rng = rng.spawn(2)
	reference = returns_for(c_eval, reference_rng)
	gaps: list[float] = []
	stderrs: list[float] = []
	confused: dict[str, float] = {}
	for believed, stream in zip(confusion_set, confused_rng.spawn(len(confusion_set)), strict=True):
		other = returns_for(as_vector(believed), stream)
		diff = reference - other
		gaps.append(float(diff.mean()))
		stderrs.append(_stderr(diff))
		confused[str(as_vector(believed).tolist())] = float(other.mean())

	worst = int(np.argmax(gaps))
	logger.info("Eval : Worst-case gap : %.3f at c=%s", gaps[worst], c_eval.tolist())
	return GapEstimate(gaps[worst], stderrs[worst], float(reference.mean()), confused)


def identification_trace(
	env: PointMassEnv,
	runtime: PolicyRuntime,
	suite: TaskSuite,
	n_episodes: int,
	rng: np.random.Generator,
	*,
	variant: str = "",
) -> list[dict[str, Any]]:
	"""Per-step mean |set center - true context| and mean set width over held-out episodes."""
	errors: list[FloatArray] = []
	sigmas: list[FloatArray] = []
	proxies: list[FloatArray] = []
	for i, episode_rng in enumerate(rng.spawn(n_episodes)):
		test_set = suite.test_sets[i % len(suite.test_sets)]
		context_rng, rollout_rng = episode_rng.spawn(2)
		context = sample_contexts(test_set, 1, context_rng)[0]
		episode = run_episode(env, runtime, context, test_set, rollout_rng, deterministic=True)
		errors.append(np.abs(episode.set_centers - context).mean(axis=1))
		sigmas.append(episode.set_widths.mean(axis=1))
		sets = [UncertaintySet(m, w) for m, w in zip(episode.set_centers, episode.set_widths, strict=True)]
		proxies.append(np.array([identifiability_proxy(s) for s in sets]))

	error = np.mean(errors, axis=0)
	sigma = np.mean(sigmas, axis=0)
	proxy = np.mean(proxies, axis=0)
	for t in range(0, error.shape[0], 10):
		logger.debug("Eval : ID trace : %s t=%s error %.4f sigma %.4f proxy %.3f", variant, t, error[t], sigma[t], proxy[t])
	return [
		{"variant": variant, "t": t, "mean_abs_error": float(error[t]), "mean_sigma": float(sigma[t])}
		for t in range(error.shape[0])
	]
