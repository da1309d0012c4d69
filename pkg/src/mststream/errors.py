class ConfigError(ValueError):
    """Invalid parameters; the CLI maps this to exit code 2."""


class StreamError(ValueError):
    """Malformed stream, e.g. deleting a point that is not present."""


class SketchMismatch(ValueError):
    """Attempt to merge sketches with different seeds or shapes."""


class CapExhausted(RuntimeError):
    """An LSH scan ran past its anchor cap without finding a bucket."""
