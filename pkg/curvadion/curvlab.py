"""
Laboratorio de la relacion RMMC-curvatura

Sobre trayectorias de descenso con momentum simple

    x_t = x_{t-1} - eta M_{t-1}
    M_t = mu M_{t-1} + grad F(x_t)

compara el RMMC medido |m_t - m_{t-1}| / m_{t-1} con la prediccion
|eta kappa_M(x_{t-1}) + B_t|, donde kappa_M = v^T H v en la direccion
unitaria v = M_{t-1}/m_{t-1} y B_t = (1 - mu) - v^T grad F(x_{t-1}) / m_{t-1}.
El residuo debe escalar como O(eta^2); el estudio de orden lo verifica
reduciendo eta a la mitad.

Los parametros se aplanan a un vector (capas concatenadas). El momentum
arranca en M_0 = grad F(x_0).
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Literal, Optional, Sequence, Union

import numpy as np

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import RMMC_DEFAULTS, THEOREM_DEFAULTS, TOLERANCIAS

from .exceptions import StepSizeError
from .problems import Problem
from .trigger import layer_rmmc, relative_change

logger = logging.getLogger(__name__)

Vector = np.ndarray


@dataclass(frozen=True)
class AnalyticQuadratic:
    """Hessiano exacto A (simetrico, semidefinido positivo)."""

    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"AnalyticQuadratic: A debe ser cuadrada, forma {A.shape}")
        if not np.allclose(A, A.T, rtol=0.0, atol=TOLERANCIAS['symmetry']):
            raise ValueError("AnalyticQuadratic: A no es simetrica")
        if np.linalg.eigvalsh(A)[0] < -TOLERANCIAS['psd']:
            raise ValueError("AnalyticQuadratic: A no es semidefinida positiva")
        object.__setattr__(self, 'A', A)


@dataclass(frozen=True)
class FiniteDifference:
    """Producto Hessiano-vector por diferencias centrales del gradiente."""

    gradient: Callable[[Vector], Vector]
    fd_eps: float = THEOREM_DEFAULTS['fd_eps']

    def __post_init__(self):
        if not self.fd_eps > 0:
            raise ValueError(f"FiniteDifference: fd_eps debe ser > 0 (recibido {self.fd_eps})")


HvpOracle = Union[AnalyticQuadratic, FiniteDifference]


def oracle_for(problem: Problem, kind: Literal['analytic', 'finite_difference'] = 'analytic',
               fd_eps: float = THEOREM_DEFAULTS['fd_eps']) -> HvpOracle:
    """Oraculo para un problema sin ruido (analitico solo para cuadraticas)."""
    if kind == 'analytic':
        A = getattr(problem, 'A', None)
        if A is None:
            raise ValueError(f"{type(problem).__name__} no tiene Hessiano analitico")
        return AnalyticQuadratic(A)
    return FiniteDifference(lambda x: problem.flat_gradient(x), fd_eps)


def directional_curvature(oracle: HvpOracle, x: Vector, v: Vector) -> float:
    """
    kappa = v^T H(x) v.

    Raises:
        ValueError: Si ||v|| difiere de 1 en mas de 1e-9
    """
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if abs(np.linalg.norm(v) - 1.0) > TOLERANCIAS['unit_vector']:
        raise ValueError(f"directional_curvature: v no es unitario (||v|| = {np.linalg.norm(v):.12f})")
    if isinstance(oracle, AnalyticQuadratic):
        return float(v @ (oracle.A @ v))
    eps = oracle.fd_eps
    diff = oracle.gradient(x + eps * v) - oracle.gradient(x - eps * v)
    return float(v @ diff / (2.0 * eps))


def equilibrium_bias(grad: Vector, M: Vector, mu: float) -> float:
    """B = (1 - mu) - M^T grad / ||M||^2."""
    grad = np.asarray(grad, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    m2 = float(M @ M)
    if m2 == 0.0:
        raise ValueError("equilibrium_bias: momentum nulo")
    return (1.0 - mu) - float(M @ grad) / m2


@dataclass(frozen=True)
class CurvatureProbe:
    step: int
    v: Vector
    kappa_M: float
    bias: float
    eta: float
    measured_rmmc: float

    @property
    def predicted_rmmc(self) -> float:
        return abs(self.eta * self.kappa_M + self.bias)

    @property
    def residual(self) -> float:
        return abs(self.measured_rmmc - self.predicted_rmmc)


@dataclass
class ResidualTrace:
    """Sondas por paso; las de burn-in se conservan aparte."""

    eta: float
    mu: float
    burn_in: int
    probes: List[CurvatureProbe] = field(default_factory=list)

    @property
    def measured(self) -> List[CurvatureProbe]:
        return [p for p in self.probes if p.step > self.burn_in]

    @property
    def early(self) -> List[CurvatureProbe]:
        return [p for p in self.probes if p.step <= self.burn_in]

    @property
    def residuals(self) -> np.ndarray:
        return np.array([p.residual for p in self.measured])

    @property
    def early_residuals(self) -> np.ndarray:
        return np.array([p.residual for p in self.early])

    @property
    def median_residual(self) -> float:
        return float(np.median(self.residuals))

    @property
    def constant(self) -> float:
        """C tal que mediana = C eta^2."""
        return self.median_residual / self.eta ** 2


def theorem_residual(problem: Problem, eta: float, mu: float, steps: int,
                     burn_in: int = THEOREM_DEFAULTS['burn_in'],
                     oracle: Optional[HvpOracle] = None,
                     measure_on: Literal['momentum', 'buffer'] = 'momentum',
                     step_guard: float = THEOREM_DEFAULTS['step_guard']) -> ResidualTrace:
    """
    Corre descenso con momentum y registra medido vs predicho en cada paso.

    Args:
        problem: Problema sin ruido con curvature_bound conocido
        eta: Paso
        mu: Momentum
        steps: Numero de pasos
        burn_in: Pasos iniciales excluidos de la mediana
        oracle: Oraculo Hessiano (None -> analitico)
        measure_on: 'momentum' usa el cambio relativo exacto de ||M||;
            'buffer' la formula del disparador con guarda epsilon
        step_guard: Cota para eta * ||M|| * L

    Returns:
        ResidualTrace

    Raises:
        StepSizeError: Si eta * ||M_{t-1}|| * L >= step_guard en algun paso
    """
    if not eta > 0 or not 0 <= mu < 1:
        raise ValueError(f"theorem_residual: eta={eta}, mu={mu} fuera de rango")
    if steps <= burn_in:
        raise ValueError(f"theorem_residual: steps ({steps}) debe superar burn_in ({burn_in})")
    L = problem.curvature_bound
    if L is None:
        raise ValueError(f"{type(problem).__name__} no declara curvature_bound")
    oracle = oracle_for(problem) if oracle is None else oracle

    x = problem.flatten(problem.initial_params())
    g = problem.flat_gradient(x)
    M = g.copy()
    trace = ResidualTrace(eta=eta, mu=mu, burn_in=burn_in)

    for t in range(1, steps + 1):
        m_prev = float(np.linalg.norm(M))
        if m_prev == 0.0:
            raise ValueError(f"theorem_residual: momentum nulo en el paso {t}")
        if eta * m_prev * L >= step_guard:
            raise StepSizeError(
                f"paso {t}: eta*||M||*L = {eta * m_prev * L:.3e} >= {step_guard}; reducir eta"
            )
        v = M / m_prev
        kappa = directional_curvature(oracle, x, v)
        bias = equilibrium_bias(g, M, mu)

        x_new = x - eta * M
        g_new = problem.flat_gradient(x_new)
        M_new = mu * M + g_new
        m_new = float(np.linalg.norm(M_new))
        if measure_on == 'momentum':
            measured = relative_change(m_prev, m_new)
        else:
            measured = layer_rmmc(m_prev, m_new, RMMC_DEFAULTS['epsilon'])

        trace.probes.append(CurvatureProbe(step=t, v=v, kappa_M=kappa, bias=bias,
                                           eta=eta, measured_rmmc=measured))
        x, g, M = x_new, g_new, M_new

    return trace


@dataclass(frozen=True)
class OrderRow:
    eta: float
    median_residual: float
    ratio: Optional[float]       # residuo(eta) / residuo(eta/2); None en la ultima fila o si no aplica
    applicable: bool


@dataclass
class OrderStudy:
    rows: List[OrderRow]
    traces: List[ResidualTrace]
    min_ratio: float = THEOREM_DEFAULTS['min_ratio']

    @property
    def passed(self) -> bool:
        return all(r.ratio >= self.min_ratio for r in self.rows if r.applicable and r.ratio is not None)

    @property
    def applicable(self) -> bool:
        return any(r.applicable for r in self.rows)


def convergence_order_study(problem: Problem, etas: Sequence[float], mu: float,
                            steps: int = THEOREM_DEFAULTS['steps'],
                            burn_in: int = THEOREM_DEFAULTS['burn_in'],
                            oracle: Optional[HvpOracle] = None,
                            min_ratio: float = THEOREM_DEFAULTS['min_ratio'],
                            na_tol: float = THEOREM_DEFAULTS['na_tol'],
                            measure_on: Literal['momentum', 'buffer'] = 'momentum') -> OrderStudy:
    """
    Estudio de orden: mediana del residuo para cada eta y razon entre
    etas consecutivos. Si alguna de las dos medianas esta a escala de
    redondeo (<= na_tol) la razon se marca como no aplicable.

    Raises:
        ValueError: Menos de 3 valores de eta o etas que no se reducen a la mitad
    """
    etas = [float(e) for e in etas]
    if len(etas) < 3:
        raise ValueError(f"convergence_order_study: se requieren >= 3 valores de eta (recibidos {len(etas)})")
    for a, b in zip(etas, etas[1:]):
        if not np.isclose(b, a / 2, rtol=1e-9, atol=0.0):
            raise ValueError(f"convergence_order_study: {b} no es la mitad de {a}")

    traces = [theorem_residual(problem, eta, mu, steps, burn_in, oracle=oracle, measure_on=measure_on)
              for eta in etas]
    medians = [t.median_residual for t in traces]
    rows = []
    for i, eta in enumerate(etas):
        if i + 1 < len(etas):
            applicable = medians[i] > na_tol and medians[i + 1] > na_tol
            ratio = medians[i] / medians[i + 1] if applicable else None
        else:
            applicable = medians[i] > na_tol
            ratio = None
        rows.append(OrderRow(eta=eta, median_residual=medians[i], ratio=ratio, applicable=applicable))
        logger.debug("eta=%g mediana=%.3e razon=%s", eta, medians[i], ratio)

    return OrderStudy(rows=rows, traces=traces, min_ratio=min_ratio)
