"""Exception hierarchy shared across the package."""


class TauspreadError(Exception):
    """Base class for all package errors."""


class ParseError(TauspreadError):
    """Malformed or inconsistent input file (carries file path and line number)."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc = f" [{loc}]"
        super().__init__(f"{message}{loc}")
        self.path = path
        self.line = line


class ConfigError(TauspreadError):
    """Invalid run configuration (schema violation, missing file, bad combination)."""


class PathBudgetError(TauspreadError):
    """Admissible-path enumeration exceeded the per-source budget."""

    def __init__(self, source, budget):
        super().__init__(
            f"path budget ({budget}) exceeded while enumerating admissible paths "
            f"from vertex {source}; raise graph.path_budget or lower r_c"
        )
        self.source = source
        self.budget = budget


class SpectralError(TauspreadError):
    """Eigensolver failure."""


class IntegrationError(TauspreadError):
    """ODE solver failure (step-size underflow, non-finite right-hand side)."""


class EvaluationError(TauspreadError):
    """Pattern/network evaluation failure (empty network, length mismatch)."""
