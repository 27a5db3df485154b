"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A call violated a documented precondition (bad argument, dim mismatch)."""


class ResourceError(RuntimeError):
    """A computation would exceed a configured memory/work cap.

    The message carries whatever cheap estimate triggered the refusal so the
    caller can rescale or switch to a sampling mode.
    """
