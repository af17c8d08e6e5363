"""Exception types shared across the toolchain."""


class Nn2cError(Exception):
    """Base class for all nn2c errors."""


class ShapeMismatch(Nn2cError):
    """A layer cannot consume the shape produced by its predecessor."""


class NonIntegralPoolOutput(Nn2cError):
    """A strided window does not tile the input exactly under valid padding."""


class UnsupportedLayer(Nn2cError):
    """Layer kind outside the supported set."""


class UnsupportedActivation(Nn2cError):
    """Activation outside {linear, relu, sigmoid, tanh}."""


class NetworkValidationError(Nn2cError):
    """Raised when validation finds one or more issues; carries all of them."""

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(str(i) for i in self.issues)
        super().__init__(f"{len(self.issues)} validation issue(s): {lines}")


class ManifestSyntax(Nn2cError):
    """Manifest is not well-formed (bad JSON, wrong types, unknown fields)."""


class UnsupportedVersion(Nn2cError):
    """Manifest format_version is not supported."""


class ChecksumMismatch(Nn2cError):
    """Weights blob digest does not match the manifest."""


class WeightsLengthMismatch(Nn2cError):
    """Weights blob has the wrong byte length."""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"expected {expected} weight bytes, got {actual}")


class ModeMismatch(Nn2cError):
    """Numeric mode of the inputs does not match the execution mode."""


class CodegenError(Nn2cError):
    """Code emission cannot proceed (bad prefix, non-finite weight, ...)."""
