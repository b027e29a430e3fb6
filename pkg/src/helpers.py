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


class ToolkitError(Exception):
	"""Base class for every error raised on purpose by the toolkit."""


class ConfigError(ToolkitError):
	pass


class DimensionError(ToolkitError, ValueError):
	pass


class CheckpointError(ToolkitError):
	pass


class InsufficientDataError(ToolkitError, ValueError):
	pass


class BookkeepingError(ToolkitError):
	"""Stored transitions disagree with the context they were recorded under."""


class NonFiniteError(ToolkitError, FloatingPointError):
	def __init__(self, component: str, detail: str, *, layer: int | None = None) -> None:
		self.component = component
		self.detail = detail
		self.layer = layer
		where = f" (layer {layer})" if layer is not None else ""
		super().__init__(f"{component}{where}: {detail}")


@dataclasses.dataclass
class RolloutOutcome:
	success: bool
	details: str
