"""
Paso del optimizador Dion y camino de actualizacion local de CurvaDion.

Todas las operaciones son funciones puras sobre una capa: reciben matrices y
devuelven matrices nuevas, nunca modifican sus argumentos. El paso
sincronizado se escribe una sola vez (``sync_layer_replicas``) con el
operador de reduccion como parametro; ``dion_sync_step`` es el caso de una
sola replica y el simulador multi-worker pasa ``all_reduce_mean``.
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import DION_DEFAULTS

from .exceptions import DimensionError, RankDeficiencyError
from .matrixcore import (
    Matrix,
    as_matrix,
    check_same_shape,
    column_normalize,
    matmul,
    orthonormalize_columns,
    random_orthonormal,
)

logger = logging.getLogger(__name__)

Reducer = Callable[[Sequence[Matrix]], Matrix]


@dataclass(frozen=True)
class DionConfig:
    """Hiperparametros de Dion/CurvaDion (eta_local=None -> eta)."""

    eta: float = DION_DEFAULTS['eta']
    mu: float = DION_DEFAULTS['mu']
    rank_fraction: float = DION_DEFAULTS['rank_fraction']
    eta_local: Optional[float] = DION_DEFAULTS['eta_local']
    weight_decay: float = DION_DEFAULTS['weight_decay']
    power_iters: int = DION_DEFAULTS['power_iters']
    warmup_frac: float = DION_DEFAULTS['warmup_frac']
    warmdown_frac: float = DION_DEFAULTS['warmdown_frac']
    lr_floor: float = DION_DEFAULTS['lr_floor']

    def __post_init__(self):
        errores = []
        if not self.eta > 0:
            errores.append(f"eta debe ser > 0 (recibido {self.eta})")
        if not 0 <= self.mu < 1:
            errores.append(f"mu debe estar en [0, 1) (recibido {self.mu})")
        if not 0 < self.rank_fraction <= 1:
            errores.append(f"rank_fraction debe estar en (0, 1] (recibido {self.rank_fraction})")
        if self.eta_local is not None and not self.eta_local > 0:
            errores.append(f"eta_local debe ser > 0 (recibido {self.eta_local})")
        if not self.weight_decay >= 0:
            errores.append(f"weight_decay debe ser >= 0 (recibido {self.weight_decay})")
        if self.power_iters < 1:
            errores.append(f"power_iters debe ser >= 1 (recibido {self.power_iters})")
        if not (0 <= self.warmup_frac <= 1 and 0 <= self.warmdown_frac <= 1
                and self.warmup_frac + self.warmdown_frac <= 1):
            errores.append("warmup_frac y warmdown_frac deben estar en [0, 1] y sumar <= 1")
        if not 0 <= self.lr_floor <= 1:
            errores.append(f"lr_floor debe estar en [0, 1] (recibido {self.lr_floor})")
        if errores:
            raise ValueError("DionConfig invalida: " + "; ".join(errores))

    @property
    def local_eta(self) -> float:
        return self.eta if self.eta_local is None else self.eta_local

    def rank_for(self, m: int, n: int) -> int:
        """r = max(1, round(rank_fraction * min(m, n))), redondeo mitad hacia arriba."""
        k = min(m, n)
        r = int(math.floor(self.rank_fraction * k + 0.5))
        return min(k, max(1, r))

    def lr_factor(self, step: int, total_steps: int) -> float:
        """
        Multiplicador del learning rate: rampa lineal de warmup y caida
        lineal en el warmdown hasta lr_floor. Con fracciones 0 vale 1.
        """
        warmup = int(round(self.warmup_frac * total_steps))
        warmdown = int(round(self.warmdown_frac * total_steps))
        if warmup and step <= warmup:
            return step / warmup
        if warmdown and step > total_steps - warmdown:
            w = (total_steps - step) / warmdown
            return w + (1 - w) * self.lr_floor
        return 1.0


@dataclass
class LayerState:
    """Una capa optimizable: X (m x n), buffer M (m x n), Q (n x r), prev_norm."""

    X: Matrix
    M: Matrix
    Q: Matrix
    prev_norm: float = 0.0

    def __post_init__(self):
        self.X = as_matrix(self.X, "X")
        self.M = as_matrix(self.M, "M")
        self.Q = as_matrix(self.Q, "Q")
        check_same_shape(self.X, self.M, "LayerState")
        if self.Q.shape[0] != self.X.shape[1]:
            raise DimensionError(
                f"LayerState: Q tiene {self.Q.shape[0]} filas, X tiene {self.X.shape[1]} columnas"
            )
        if self.prev_norm < 0:
            raise ValueError(f"LayerState: prev_norm negativo {self.prev_norm}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.X.shape

    @property
    def rank(self) -> int:
        return self.Q.shape[1]

    @classmethod
    def initial(cls, X: Matrix, rank: int, seed: int) -> "LayerState":
        """Estado inicial: buffer en cero, Q0 aleatorio ortonormal, prev_norm = 0."""
        X = as_matrix(X, "X")
        Q0 = random_orthonormal(X.shape[1], rank, seed)
        return cls(X=X.copy(), M=np.zeros_like(X), Q=Q0, prev_norm=0.0)

    def copy(self) -> "LayerState":
        return LayerState(self.X.copy(), self.M.copy(), self.Q.copy(), self.prev_norm)


def accumulate_buffer(M, G) -> Matrix:
    """B = M + G. El decaimiento del momentum ocurre en error_feedback."""
    M = as_matrix(M, "M")
    G = as_matrix(G, "G")
    check_same_shape(M, G, "accumulate_buffer")
    return M + G


def _single(mats: Sequence[Matrix]) -> Matrix:
    return mats[0]


def _reduced_power_iteration(buffers: Sequence[Matrix], Q_prev: Matrix, iters: int,
                             reduce_mean: Reducer) -> Tuple[Matrix, Matrix]:
    Q = Q_prev
    for it in range(iters):
        if it > 0:
            Q = column_normalize(R)
        P = orthonormalize_columns(reduce_mean([matmul(B, Q) for B in buffers]))
        R = reduce_mean([matmul(B.T, P) for B in buffers])
    return P, R


def power_iterate(B, Q_prev, iters: int = 1) -> Tuple[Matrix, Matrix]:
    """
    Iteracion de potencia con arranque en caliente.

    P = orthonormalize_columns(B Q_prev), R = B^T P. Con iters > 1 la
    siguiente iteracion arranca desde column_normalize(R).

    Args:
        B: Buffer m x n
        Q_prev: Factor derecho n x r del paso anterior
        iters: Numero de iteraciones

    Returns:
        (P m x r, R n x r)

    Raises:
        RankDeficiencyError: Si B Q_prev no tiene rango r a tolerancia 1e-10
    """
    B = as_matrix(B, "B")
    Q_prev = as_matrix(Q_prev, "Q_prev")
    return _reduced_power_iteration([B], Q_prev, iters, _single)


def error_feedback(B, P, R, mu: float) -> Matrix:
    """M = B - (1 - mu) P R^T."""
    B = as_matrix(B, "B")
    P = as_matrix(P, "P")
    R = as_matrix(R, "R")
    if P.shape[0] != B.shape[0] or R.shape[0] != B.shape[1] or P.shape[1] != R.shape[1]:
        raise DimensionError(
            f"error_feedback: B {B.shape}, P {P.shape}, R {R.shape} no componen"
        )
    return B - (1.0 - mu) * (P @ R.T)


def apply_sync_update(X, P, Q, eta: float) -> Matrix:
    """X - eta * sqrt(m/n) * P Q^T."""
    X = as_matrix(X, "X")
    P = as_matrix(P, "P")
    Q = as_matrix(Q, "Q")
    m, n = X.shape
    if P.shape[0] != m or Q.shape[0] != n or P.shape[1] != Q.shape[1]:
        raise DimensionError(
            f"apply_sync_update: X {X.shape}, P {P.shape}, Q {Q.shape} no componen"
        )
    return X - (eta * math.sqrt(m / n)) * (P @ Q.T)


def apply_local_update(X, G, eta_local: float) -> Matrix:
    """Descenso de gradiente simple X - eta_local * G; el buffer lo maneja el llamador."""
    X = as_matrix(X, "X")
    G = as_matrix(G, "G")
    check_same_shape(X, G, "apply_local_update")
    return X - eta_local * G


def decay_weights(X: Matrix, eta: float, weight_decay: float) -> Matrix:
    """Weight decay desacoplado X <- (1 - eta*wd) X."""
    if weight_decay == 0:
        return X
    return (1.0 - eta * weight_decay) * X


def sync_layer_replicas(states: Sequence[LayerState], grads: Sequence[Matrix], cfg: DionConfig,
                        *, eta: Optional[float] = None, reduce_mean: Reducer = _single,
                        fallback_seed: Optional[int] = None) -> LayerState:
    """
    Paso Dion sincronizado de una capa sobre todas las replicas.

    Cada replica forma su buffer local; las entradas de P (B Q) se promedian
    antes de ortonormalizar y R despues. X y el buffer se reconcilian con el
    mismo promedio, de modo que el estado devuelto es comun a todas.

    Args:
        states: Estado de la capa en cada replica (mismo Q)
        grads: Gradiente de la capa en cada replica
        cfg: DionConfig
        eta: Learning rate del paso (None -> cfg.eta)
        reduce_mean: Promedio en orden fijo de replicas
        fallback_seed: Semilla para re-sortear Q si la iteracion de potencia
            es deficiente en rango; None desactiva el reintento

    Returns:
        LayerState compartido (prev_norm del primer estado)
    """
    if not states or len(states) != len(grads):
        raise ValueError("sync_layer_replicas: se requiere un gradiente por replica")
    eta = cfg.eta if eta is None else eta

    buffers = [accumulate_buffer(s.M, g) for s, g in zip(states, grads)]
    Q = states[0].Q
    B_mean = reduce_mean(buffers)
    X_mean = decay_weights(reduce_mean([s.X for s in states]), eta, cfg.weight_decay)

    # buffer exactamente nulo: no hay direccion que ortonormalizar
    if not np.any(B_mean):
        return LayerState(X=X_mean, M=B_mean, Q=Q, prev_norm=states[0].prev_norm)

    try:
        P, R = _reduced_power_iteration(buffers, Q, cfg.power_iters, reduce_mean)
    except RankDeficiencyError as exc:
        if fallback_seed is None:
            raise
        logger.warning("Iteracion de potencia deficiente (%s); re-sorteando Q", exc)
        Q = random_orthonormal(Q.shape[0], Q.shape[1], fallback_seed)
        P, R = _reduced_power_iteration(buffers, Q, cfg.power_iters, reduce_mean)

    M_new = error_feedback(B_mean, P, R, cfg.mu)
    Q_new = column_normalize(R)
    X_new = apply_sync_update(X_mean, P, Q_new, eta)
    return LayerState(X=X_new, M=M_new, Q=Q_new, prev_norm=states[0].prev_norm)


def dion_sync_step(state: LayerState, G, cfg: DionConfig, *, eta: Optional[float] = None,
                   fallback_seed: Optional[int] = None) -> LayerState:
    """Paso Dion completo de una capa (replica unica)."""
    return sync_layer_replicas([state], [as_matrix(G, "G")], cfg, eta=eta,
                               reduce_mean=_single, fallback_seed=fallback_seed)


def local_step(state: LayerState, G, cfg: DionConfig, *, eta_local: Optional[float] = None) -> LayerState:
    """Paso sin sincronizar: M = B, X = decay(X) - eta_local G."""
    eta_local = cfg.local_eta if eta_local is None else eta_local
    B = accumulate_buffer(state.M, G)
    X = apply_local_update(decay_weights(state.X, eta_local, cfg.weight_decay), G, eta_local)
    return replace(state, X=X, M=B)
