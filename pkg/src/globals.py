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


APP_TITLE = "Multi-Set Robust RL Toolkit"
APP_VERSION = "0.1.0"

LOG_FILE_NAME = "msrl-toolkit.log"
ENV_OUTPUT_DIR = "MSRL_OUTPUT_DIR"
ENV_JOBS = "MSRL_JOBS"

SUITE_VERSION = 1
CHECKPOINT_VERSION = 1
REPORT_VERSION = 1

# Point mass
OBSTACLE_RANGE = (0.025, 0.075)
VELOCITY_RANGE = (0.06, 0.1)
OBSTACLE_SAFE_RANGE = (0.005, 0.15)
VELOCITY_SAFE_RANGE = (0.01, 0.2)
HORIZON = 50
ACTION_MAX = 0.05
START_X = -2.0
START_Y = 0.0
Y_PENALTY = 8.0
OBS_DIM = 3
ACT_DIM = 1

# Approximators
LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
SQUASH_EPSILON = 1e-6
FINAL_LAYER_SCALE = 0.01
ADAM_LR = 3e-4
ADAM_BETAS = (0.9, 0.999)
ADAM_EPSILON = 1e-8

# System identification
POSTERIOR_WIDEN_FRACTION = 0.5
IDENTIFIABILITY_EPSILON = 1e-9

# Risk
NORMAL_QUANTILE_BRACKET = 40.0
NORMAL_QUANTILE_XTOL = 1e-12
RANK_TOLERANCE = 1e-9
VARIANCE_EPSILON = 1e-8

MEMBERSHIP_TOLERANCE = 1e-12
MAX_TEST_SET_ATTEMPTS = 1000

CSV_EVAL_COLUMNS = ("method", "seed", "set_id", "sample_id", "return", "failed")
CSV_SWEEP_COLUMNS = ("axis", "value", "seed", "min", "mean", "wall_seconds")
CSV_TRAINING_COLUMNS = (
	"iteration",
	"phase",
	"critic_loss",
	"actor_loss",
	"sysid_loss",
	"temperature",
	"episode_return",
	"wall_seconds",
)
CSV_TRACE_COLUMNS = ("t", "reward", "x", "y", "context_hash")
CSV_IDENTIFICATION_COLUMNS = ("variant", "t", "mean_abs_error", "mean_sigma")
