class BreatherError(Exception):
    """Base error. `exit_code` is the process status the CLI exits with."""

    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def to_dict(self) -> dict:
        return {
            "error": type(self).__name__,
            "detail": self.detail,
            "exit_code": self.exit_code
        }


# --- exit 2: configuration
class ConfigError(BreatherError):
    exit_code = 2


class CatalogError(ConfigError):
    pass


class DomainError(ConfigError):
    pass


# --- exit 3: numerics
class NumericalError(BreatherError):
    exit_code = 3


class BlowUpError(NumericalError):
    def __init__(self, detail: str, t: float = None):
        super().__init__(detail)
        self.t = t


class SingularSystemError(NumericalError):
    pass


class NonpolynomialDomainError(NumericalError):
    pass


# --- exit 4: analysis
class AnalysisError(BreatherError):
    exit_code = 4


class DegenerateFieldError(AnalysisError):
    pass


class InsufficientDataError(AnalysisError):
    pass


class AlignmentError(AnalysisError):
    pass


# --- exit 5: output
class OutputError(BreatherError):
    exit_code = 5
