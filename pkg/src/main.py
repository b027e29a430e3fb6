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


import argparse
import logging
import queue
import sys
import threading
import time
from collections.abc import Callable, Sequence
from datetime import datetime
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from agents import Checkpoint, Trainer, TrainingResult, build_runtime, load_checkpoint, make_trainer, save_checkpoint
from enums import Algorithm, EnvVariant, EvalProtocol, ExitCode, LogType, SweepAxis
from evaluation import (
	EvalReport,
	SweepRow,
	SweepTable,
	aggregate_reports,
	emit_aggregate,
	emit_identification,
	emit_report,
	emit_trace,
	estimate_worst_case_gap,
	evaluate_max_uncertainty,
	evaluate_test_suite,
	identification_trace,
	misspecification_sweep,
	nonstationary_eval,
	obstacle_confusion_set,
)
from globals import APP_TITLE, APP_VERSION, LOG_FILE_NAME
from helpers import ConfigError, ToolkitError
from logger import Logger
from rcmdp import TaskSuite
from rollout import run_episode
from run_config import RunConfig
from utils import describe_host, write_json

logger = logging.getLogger()

T = TypeVar("T")

_SWEEP_KEYS = {
	SweepAxis.Alpha: "policy_alpha",
	SweepAxis.NCVaR: "policy_n_cvar",
	SweepAxis.BEnsemble: "policy_b_ensemble",
}
_WCPG_FAMILY = {Algorithm.WCPG, Algorithm.SetWCPG}
_GAP_ALGORITHMS = {Algorithm.Oracle, Algorithm.PolicyEnsemble}


def _csv_list(kind: Callable[[str], T]) -> Callable[[str], list[T]]:
	def parse(text: str) -> list[T]:
		try:
			return [kind(part) for part in text.split(",") if part.strip()]
		except ValueError as e:
			msg = f"invalid list '{text}'"
			raise argparse.ArgumentTypeError(msg) from e

	return parse


def build_parser() -> argparse.ArgumentParser:
	common = argparse.ArgumentParser(add_help=False)
	common.add_argument("--config", type=Path, help="JSON run config; defaults are used when omitted")
	common.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
	common.add_argument("--seeds", type=_csv_list(int), help="comma-separated seeds (overrides seeds)")
	common.add_argument("--jobs", type=int, help="seeds run in parallel")

	parser = argparse.ArgumentParser(prog="msrl", description=f"{APP_TITLE} v{APP_VERSION}")
	sub = parser.add_subparsers(dest="command", required=True)

	sub.add_parser("suite", parents=[common], help="generate the task suite")

	train = sub.add_parser("train", parents=[common], help="train the configured algorithm for every seed")
	train.add_argument("--suite", type=Path, help="task suite JSON; generated from the config when omitted")

	evaluate = sub.add_parser("eval", parents=[common], help="evaluate checkpoints")
	evaluate.add_argument("--suite", type=Path)
	evaluate.add_argument("--checkpoint", type=Path, required=True, help="checkpoint file or a directory of runs")
	evaluate.add_argument("--protocols", type=_csv_list(EvalProtocol), help="comma-separated protocols")
	evaluate.add_argument("--allow-mismatch", action="store_true", help="evaluate checkpoints trained under another config")

	sweep = sub.add_parser("sweep", parents=[common], help="train and evaluate over one hyperparameter axis")
	sweep.add_argument("--suite", type=Path)
	sweep.add_argument("--axis", type=SweepAxis, choices=list(SweepAxis), required=True)
	sweep.add_argument("--values", type=_csv_list(float), required=True)
	return parser


def setup_logging(config: RunConfig) -> logging.Handler:
	out = config.output_dir
	out.mkdir(parents=True, exist_ok=True)
	file_handler = logging.FileHandler(out / LOG_FILE_NAME, encoding="utf-8")
	file_handler.setFormatter(logging.Formatter("%(levelname)s : %(message)s"))
	logger.addHandler(file_handler)
	logger.setLevel(config.dict["log_level"])

	start_message = f"Starting {APP_TITLE} v{APP_VERSION}"
	logger.info("-" * len(start_message))
	logger.info("%s", start_message)
	logger.info("%s", datetime.now().strftime("%Y-%m-%d %H:%M"))
	logger.info("%s", describe_host())
	logger.info("Config : %s : hash %s", config.source, config.config_hash)
	return file_handler


def fan_out(work: Callable[[int], T], seeds: Sequence[int], jobs: int) -> dict[int, T]:
	"""Run `work(seed)` on up to `jobs` threads. Results are keyed by seed; the first failure is re-raised."""
	pending: queue.Queue[int] = queue.Queue()
	for seed in seeds:
		pending.put(seed)
	done: queue.Queue[tuple[int, T | None, BaseException | None]] = queue.Queue()

	def worker() -> None:
		while True:
			try:
				seed = pending.get_nowait()
			except queue.Empty:
				return
			try:
				done.put((seed, work(seed), None))
			except Exception as e:  # noqa: BLE001
				done.put((seed, None, e))

	threads = [threading.Thread(target=worker, name=f"seed-worker-{i}") for i in range(max(1, min(jobs, len(seeds))))]
	for thread in threads:
		thread.start()
	for thread in threads:
		thread.join()

	results: dict[int, T] = {}
	errors: dict[int, BaseException] = {}
	while done.qsize():
		seed, result, error = done.get()
		if error is not None:
			errors[seed] = error
		else:
			results[seed] = result  # type: ignore[assignment]
	if errors:
		raise errors[min(errors)]
	return dict(sorted(results.items()))


def _load_or_make_suite(config: RunConfig, path: Path | None, status: Logger) -> TaskSuite:
	if path is None:
		default_path = config.output_dir / "suite.json"
		if default_path.is_file():
			path = default_path
	if path is None:
		suite = config.make_suite()
		suite.save(config.output_dir / "suite.json")
		status.log_message(LogType.Info, f"Generated task suite {config.output_dir / 'suite.json'}")
	else:
		try:
			suite = TaskSuite.load(path)
		except FileNotFoundError as e:
			msg = f"Task suite {path} not found"
			raise ConfigError(msg) from e
	if suite.variant and EnvVariant(suite.variant) != config.variant:
		msg = f"Task suite is for {suite.variant}, config is for {config.variant}"
		raise ConfigError(msg)
	return suite


def cmd_suite(config: RunConfig, status: Logger) -> Path:
	suite = config.make_suite()
	path = config.output_dir / "suite.json"
	suite.save(path)
	space = suite.context_space
	status.log_message(
		LogType.Good,
		f"Wrote {path}: {len(suite.train_sets)} train sets x {config.dict['suite_contexts_per_set']} contexts, "
		f"{len(suite.test_sets)} test sets over [{space.lower.tolist()}, {space.upper.tolist()}]",
	)
	return path


def _train_seed(config: RunConfig, suite: TaskSuite, seed: int, run_dir: Path) -> TrainingResult:
	config_hash = config.config_hash
	checkpoint_path = run_dir / "checkpoint.json"

	def on_checkpoint(trainer: Trainer, status: str) -> None:
		save_checkpoint(checkpoint_path, trainer, config_hash=config_hash, seed=seed, status=status)

	metrics = Logger(run_dir / "training.csv")
	trainer = make_trainer(
		config.policy_spec(),
		config.training_settings(),
		suite,
		config.make_env(),
		np.random.default_rng(seed),
		metrics=metrics,
	)
	result = trainer.train(on_checkpoint=on_checkpoint)
	metrics.log_message(
		LogType.Good,
		f"{result.algorithm} seed {seed}: {result.steps} steps, {result.episodes} episodes in {result.wall_seconds:.1f}s",
	)
	return result


def cmd_train(config: RunConfig, suite: TaskSuite, jobs: int) -> dict[int, Path]:
	root = config.output_dir / str(config.algorithm)

	def work(seed: int) -> Path:
		run_dir = root / f"seed_{seed}"
		_train_seed(config, suite, seed, run_dir)
		return run_dir / "checkpoint.json"

	return fan_out(work, config.seeds, jobs)


def _find_checkpoints(path: Path) -> list[Path]:
	if path.is_file():
		return [path]
	found = sorted(path.glob("**/checkpoint.json"))
	if not found:
		msg = f"No checkpoints found under {path}"
		raise ConfigError(msg)
	return found


def _check_hash(config: RunConfig, checkpoint: Checkpoint, path: Path, *, allow_mismatch: bool) -> None:
	if checkpoint.config_hash == config.config_hash:
		return
	if not allow_mismatch:
		msg = (
			f"Checkpoint {path} was trained under config {checkpoint.config_hash}, current config is "
			f"{config.config_hash}; pass --allow-mismatch to evaluate anyway"
		)
		raise ConfigError(msg)
	logger.warning("Eval : Config hash mismatch for %s (%s vs %s)", path, checkpoint.config_hash, config.config_hash)


def evaluate_checkpoint(
	config: RunConfig,
	checkpoint: Checkpoint,
	suite: TaskSuite,
	protocols: Sequence[EvalProtocol],
	out: Path,
) -> list[EvalReport]:
	"""Every enabled protocol for one checkpoint; WCPG families are evaluated once per alpha."""
	d = config.dict
	env = checkpoint.make_env()
	alphas: list[float | None] = list(d["eval_wcpg_alphas"]) if checkpoint.algorithm in _WCPG_FAMILY else [None]
	reports: list[EvalReport] = []

	for alpha in alphas:
		method = str(checkpoint.algorithm) if alpha is None else f"{checkpoint.algorithm}@{alpha:g}"
		runtime = build_runtime(checkpoint, alpha=alpha)
		streams = iter(np.random.default_rng(checkpoint.seed).spawn(len(EvalProtocol)))
		rngs = {p: next(streams) for p in EvalProtocol}
		report = EvalReport(method, checkpoint.seed, checkpoint.config_hash, [])

		if EvalProtocol.Suite in protocols:
			report = evaluate_test_suite(
				env,
				runtime,
				suite,
				d["eval_k"],
				rngs[EvalProtocol.Suite],
				method=method,
				seed=checkpoint.seed,
				config_hash=checkpoint.config_hash,
			)
			first_set = suite.test_sets[0]
			episode = run_episode(
				env, runtime, first_set.center, first_set, np.random.default_rng(checkpoint.seed), deterministic=True
			)
			emit_trace(episode.trace_rows(), out / f"trace_{method}.csv")

		if EvalProtocol.MaxUncertainty in protocols:
			widest = evaluate_max_uncertainty(env, runtime, suite.context_space, d["eval_k"], rngs[EvalProtocol.MaxUncertainty])
			report.extra["maxunc"] = {"min": widest.min, "mean": widest.mean, "failed": widest.any_failed}

		if EvalProtocol.Misspecification in protocols:
			table = misspecification_sweep(
				env, runtime, suite, d["eval_r_levels"], rngs[EvalProtocol.Misspecification], method=method, seed=checkpoint.seed
			)
			table.config_hash = checkpoint.config_hash
			emit_report(table, out / f"misspec_{method}")
			report.extra["misspec_slope"] = table.slope()

		if EvalProtocol.NonStationary in protocols:
			ns = nonstationary_eval(
				env,
				runtime,
				suite,
				d["eval_nonstationary_period"],
				d["eval_nonstationary_horizon"],
				d["eval_nonstationary_rollouts"],
				rngs[EvalProtocol.NonStationary],
			)
			report.extra["nonstationary"] = ns.to_dict()

		if EvalProtocol.WorstCaseGap in protocols:
			if checkpoint.algorithm in _GAP_ALGORITHMS and checkpoint.variant == EnvVariant.ObstacleOnly:
				space = checkpoint.context_space
				gap = estimate_worst_case_gap(
					env,
					checkpoint.actor,
					space,
					obstacle_confusion_set(space),
					space.upper,
					d["eval_gap_rollouts"],
					rngs[EvalProtocol.WorstCaseGap],
				)
				report.extra["worst_case_gap"] = {"gap": gap.gap, "stderr": gap.stderr, "returns": gap.confused_returns}
			else:
				logger.info("Eval : Gap : Needs an obstacle-only Oracle or PolicyEnsemble checkpoint; skipped for %s", method)

		if EvalProtocol.Identification in protocols:
			rows = identification_trace(
				env, runtime, suite, d["eval_id_episodes"], rngs[EvalProtocol.Identification], variant=str(checkpoint.variant)
			)
			emit_identification(rows, out / f"idtrace_{method}.csv")
			report.extra["id_error_final"] = rows[-1]["mean_abs_error"]

		emit_report(report, out / f"eval_{method}")
		reports.append(report)

	if len(reports) > 1:
		table = SweepTable(SweepAxis.Alpha, str(checkpoint.algorithm), config_hash=checkpoint.config_hash)
		for alpha, report in zip(alphas, reports, strict=True):
			row = SweepRow(SweepAxis.Alpha, float(alpha or 0.0), checkpoint.seed, report.mean_of_mins, report.mean_of_means)
			table.rows.append(row)
		if EvalProtocol.Suite in protocols:
			emit_report(table, out / f"alphas_{checkpoint.algorithm}")
			logger.info("Eval : %s : best alpha %s", checkpoint.algorithm, table.best_value())
	return reports


def cmd_eval(
	config: RunConfig,
	suite: TaskSuite,
	checkpoint_path: Path,
	protocols: Sequence[EvalProtocol],
	jobs: int,
	*,
	allow_mismatch: bool,
) -> list[EvalReport]:
	paths = _find_checkpoints(checkpoint_path)
	checkpoints = {i: load_checkpoint(p) for i, p in enumerate(paths)}
	for i, cp in checkpoints.items():
		_check_hash(config, cp, paths[i], allow_mismatch=allow_mismatch)
		if EnvVariant(suite.variant or cp.variant) != cp.variant:
			msg = f"Checkpoint {paths[i]} is for {cp.variant}, suite is for {suite.variant}"
			raise ConfigError(msg)

	out = config.output_dir / "eval"

	def work(i: int) -> list[EvalReport]:
		cp = checkpoints[i]
		return evaluate_checkpoint(config, cp, suite, protocols, out / str(cp.algorithm) / f"seed_{cp.seed}")

	results = fan_out(work, list(checkpoints), jobs)
	reports = [r for i in sorted(results) for r in results[i]]
	if EvalProtocol.Suite in protocols:
		emit_aggregate(aggregate_reports(reports), out / "aggregate")
	return reports


def cmd_sweep(config: RunConfig, suite: TaskSuite, axis: SweepAxis, values: Sequence[float], jobs: int) -> SweepTable:
	root = config.output_dir / f"sweep_{axis}"
	table = SweepTable(axis, str(config.algorithm), config_hash=config.config_hash)

	if axis == SweepAxis.RLevel:
		checkpoints = cmd_train(config.with_values(output_dir=str(root)), suite, jobs)
		for seed, path in checkpoints.items():
			cp = load_checkpoint(path)
			runtime = build_runtime(cp)
			rng = np.random.default_rng(seed)
			partial = misspecification_sweep(cp.make_env(), runtime, suite, values, rng, method=str(cp.algorithm), seed=seed)
			table.extend(partial)
	else:
		key = _SWEEP_KEYS[axis]
		for value in values:
			setting: float | int = int(value) if axis != SweepAxis.Alpha else value
			value_config = config.with_values(**{key: setting, "output_dir": str(root / f"{axis}_{setting}")})

			def work(seed: int, value_config: RunConfig = value_config) -> tuple[EvalReport, float]:
				run_dir = value_config.output_dir / str(value_config.algorithm) / f"seed_{seed}"
				started = time.perf_counter()
				_train_seed(value_config, suite, seed, run_dir)
				wall = time.perf_counter() - started
				cp = load_checkpoint(run_dir / "checkpoint.json")
				report = evaluate_test_suite(
					cp.make_env(),
					build_runtime(cp),
					suite,
					value_config.dict["eval_k"],
					np.random.default_rng(seed),
					method=str(cp.algorithm),
					seed=seed,
					config_hash=cp.config_hash,
				)
				return report, wall

			for seed, (report, wall) in fan_out(work, config.seeds, jobs).items():
				table.rows.append(SweepRow(axis, float(setting), seed, report.mean_of_mins, report.mean_of_means, wall))
			wall = float(np.mean([r.wall_seconds for r in table.rows if r.value == float(setting)]))
			logger.info("Sweep : %s=%s : %.1fs mean training wall-clock", axis, setting, wall)

	emit_report(table, root / "sweep")
	logger.info("Sweep : %s : best value %s", axis, table.best_value())
	return table


def main(argv: Sequence[str] | None = None) -> int:
	logging.basicConfig(format="%(levelname)s : %(message)s", level=logging.INFO, stream=sys.stderr)
	args = build_parser().parse_args(argv)
	status = Logger()
	file_handler: logging.Handler | None = None

	try:
		overrides: dict[str, Any] = {}
		if args.out is not None:
			overrides["output_dir"] = str(args.out)
		if args.seeds:
			overrides["seeds"] = args.seeds
		config = RunConfig.load(args.config)
		if overrides:
			config = config.with_values(**overrides)
		file_handler = setup_logging(config)
		jobs = config.jobs(args.jobs)

		match args.command:
			case "suite":
				cmd_suite(config, status)
			case "train":
				suite = _load_or_make_suite(config, args.suite, status)
				paths = cmd_train(config, suite, jobs)
				status.log_message(LogType.Good, f"Trained {len(paths)} seed(s); checkpoints under {config.output_dir}")
			case "eval":
				suite = _load_or_make_suite(config, args.suite, status)
				protocols = args.protocols or config.protocols
				reports = cmd_eval(config, suite, args.checkpoint, protocols, jobs, allow_mismatch=args.allow_mismatch)
				status.log_message(LogType.Good, f"Wrote {len(reports)} report(s) under {config.output_dir / 'eval'}")
			case "sweep":
				suite = _load_or_make_suite(config, args.suite, status)
				table = cmd_sweep(config, suite, args.axis, args.values, jobs)
				write_json(config.output_dir / f"sweep_{args.axis}" / "summary.json", table.summary())
				status.log_message(LogType.Good, f"Sweep over {args.axis}: best value {table.best_value()}")
	except ConfigError as e:
		status.log_message(LogType.Bad, f"Config error: {e}")
		return ExitCode.ConfigError
	except (ToolkitError, OSError, ValueError, FloatingPointError) as e:
		logger.exception("Run : Failed")
		status.log_message(LogType.Bad, f"Run failed: {e}", skip_logging=True)
		return ExitCode.RuntimeError
	finally:
		if file_handler is not None:
			logger.removeHandler(file_handler)
			file_handler.close()
	return ExitCode.OK


if __name__ == "__main__":
	sys.exit(main())
