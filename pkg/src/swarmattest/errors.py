"""Exception types shared across the library."""


class ConfigError(Exception):
    """A scenario or primitive was configured with invalid parameters."""


class ProtocolError(Exception):
    """A protocol operation was invoked outside its contract."""


class MalformedMessageError(ProtocolError):
    """A wire message failed structural validation (bad cell codes, padding, size)."""


class QueryFailedError(Exception):
    """The verifier could not reach any prover (distinct from a rejected snapshot)."""
