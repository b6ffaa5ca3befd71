"""Exception types shared across the transmission stack."""


class ClescError(Exception):
    """Base class for all library errors."""


class ConfigurationError(ClescError, ValueError):
    """A config value is out of range or inconsistent."""


class DimensionError(ClescError, ValueError):
    """Frame/grid dimensions violate a structural requirement."""


class FramingError(ClescError, ValueError):
    """A packet's bit layout cannot be parsed."""


class IncompleteGroupError(ClescError, ValueError):
    """A group cannot be reassembled because packets are missing."""

    def __init__(self, group_id: int, missing: list[int]):
        self.group_id = group_id
        self.missing = missing
        super().__init__(
            f"group {group_id}: missing packet seq numbers {missing}"
        )
