"""Exception types shared across the package."""


class WiplabError(Exception):
    """Base class for all package errors."""


class ParameterError(WiplabError):
    """Physical or configuration parameters violate an invariant."""


class DivergenceError(WiplabError):
    """Numerical integration produced a non-finite state.

    ``time`` is the simulation time of the failing step when the caller
    tracks it, else None.
    """

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class SynthesisError(WiplabError):
    """Riccati solve failed: no stabilizing seed or iteration divergence."""


class DataError(WiplabError):
    """Malformed external data (trace files, CSV inputs)."""


class CheckpointError(WiplabError):
    """Checkpoint file is malformed, truncated, or fails its checksum."""
