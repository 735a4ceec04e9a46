"""
Jerarquia de errores del simulador CurvaDion
"""

from typing import List, Optional


class CurvaDionError(Exception):
    """Error base del paquete."""


class DimensionError(CurvaDionError, ValueError):
    """Formas de matrices incompatibles."""


class RankDeficiencyError(CurvaDionError, ArithmeticError):
    """Columna numericamente dependiente o de norma nula."""

    def __init__(self, column: int, value: float, tol: float, operation: str = "orthonormalize_columns"):
        self.column = column
        self.value = value
        self.tol = tol
        self.operation = operation
        super().__init__(
            f"{operation}: columna {column} degenerada (|valor| = {value:.3e} < {tol:.1e})"
        )


class NumericalError(CurvaDionError, ArithmeticError):
    """Valor no finito durante la simulacion."""

    def __init__(self, step: int, message: str):
        self.step = step
        super().__init__(f"paso {step}: {message}")


class StepSizeError(CurvaDionError, ValueError):
    """Paso eta demasiado grande para la hipotesis de paso pequeno."""


class ConfigError(CurvaDionError, ValueError):
    """Configuracion invalida; conserva un mensaje por campo."""

    def __init__(self, message: str, fields: Optional[List[str]] = None):
        self.fields = list(fields or [])
        detalle = "\n  ".join(self.fields)
        super().__init__(f"{message}\n  {detalle}" if detalle else message)
