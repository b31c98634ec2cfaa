"""Exception and warning taxonomy shared across the package."""


class EquiweylError(Exception):
    """Base class for all package errors."""


class UnknownModel(EquiweylError):
    pass


class InvalidModel(EquiweylError):
    pass


class UnknownObservable(EquiweylError):
    pass


class NoExactBackend(EquiweylError):
    pass


class SpectrumCapExceeded(EquiweylError):
    pass


class EigvecFailure(EquiweylError):
    def __init__(self, index, message=""):
        self.index = index
        super().__init__(message or f"inverse iteration failed for eigenvalue index {index}")


class MixedParameters(EquiweylError):
    pass


class NonRegularValue(EquiweylError):
    pass


class ZeroShell(EquiweylError):
    pass


class ShoulderTooWide(EquiweylError):
    pass


class InsufficientSpectrum(EquiweylError):
    pass


class MissingEigenvector(EquiweylError):
    pass


class ConfigError(EquiweylError):
    """Carries a list of `field: message` strings from config validation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class GridTooCoarse(UserWarning):
    """Grid cannot resolve the centrifugal barrier for the requested mode."""
