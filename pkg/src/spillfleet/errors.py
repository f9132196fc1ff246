"""Shared exception types."""


class SpillFleetError(Exception):
    """Base class for all library errors."""


class ConfigError(SpillFleetError):
    """Invalid configuration or parameter value."""


class NumericError(SpillFleetError):
    """Non-finite or otherwise unusable numeric input."""


class InvalidWorkspaceError(ConfigError):
    """Workspace bounds or obstacle polygons are malformed."""


class PointInObstacleError(SpillFleetError):
    """A query point lies inside an occupied cell (or outside the workspace)."""


class UnreachableError(SpillFleetError):
    """No grid path exists between two free points."""


class PlacementError(SpillFleetError):
    """Random placement could not find free space within the retry budget."""


class InvalidRouteSetError(SpillFleetError):
    """Routes do not form a partition of the spill set."""


class CapacityError(SpillFleetError):
    """Problem size exceeds a solver's configured capacity."""
