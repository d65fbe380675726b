"""Exception hierarchy. Each class carries a short ``category`` used by the CLI."""


class CholSpectralError(Exception):
    category = "error"


class GraphError(CholSpectralError, ValueError):
    category = "graph"


class ParseError(CholSpectralError, ValueError):
    category = "parse"

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class RankDeficiencyError(CholSpectralError, ArithmeticError):
    """An iterate lost full column rank (its Gram matrix is not positive definite)."""

    category = "rank"


class ConvergenceError(CholSpectralError, RuntimeError):
    category = "convergence"


class ConfigError(CholSpectralError, ValueError):
    category = "config"
