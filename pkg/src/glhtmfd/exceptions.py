"""Exception hierarchy shared across the package."""


class GLHTError(ValueError):
    """Base class for all errors raised by glhtmfd."""


class SchemaError(GLHTError):
    """Input file is missing required columns or is empty."""


class DataError(GLHTError):
    """A data row or series cannot be used (bad number, too few points, ...)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SampleSizeError(GLHTError):
    """A group is too small for the requested computation."""


class HypothesisError(GLHTError):
    """The coefficient matrix does not define a valid linear hypothesis."""


class SingularityError(GLHTError):
    """The pooled error matrix cannot be inverted at some grid point."""


class DegenerateCumulantError(GLHTError):
    """Estimated cumulants are not positive; the data are effectively noiseless."""
