"""
Disparador RMMC y politicas de sincronizacion (EveryStep, Scheduled, Adaptive)
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import RMMC_DEFAULTS


@dataclass(frozen=True)
class RmmcConfig:
    """
    tau: umbral de sincronizacion (comparacion estricta RMMC > tau).
    epsilon: guarda del denominador.

    tau = 0 se admite: sincroniza en todo paso con cambio de norma no nulo.
    """

    tau: float = RMMC_DEFAULTS['tau']
    epsilon: float = RMMC_DEFAULTS['epsilon']

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"RmmcConfig: epsilon debe ser > 0 (recibido {self.epsilon})")
        if not self.tau >= 0:
            raise ValueError(f"RmmcConfig: tau debe ser >= 0 (recibido {self.tau})")


@dataclass(frozen=True)
class EveryStep:
    kind = 'every_step'


@dataclass(frozen=True)
class Scheduled:
    interval: int = RMMC_DEFAULTS['interval']
    kind = 'scheduled'

    def __post_init__(self):
        if self.interval < 1:
            raise ValueError(f"Scheduled: H debe ser >= 1 (recibido {self.interval})")


@dataclass(frozen=True)
class Adaptive:
    rmmc: RmmcConfig = field(default_factory=RmmcConfig)
    kind = 'adaptive'


SyncPolicy = Union[EveryStep, Scheduled, Adaptive]


def relative_change(prev_norm: float, cur_norm: float) -> float:
    """|cur - prev| / prev sin guarda; prev debe ser > 0."""
    if not prev_norm > 0:
        raise ValueError(f"relative_change: norma previa no positiva {prev_norm}")
    return abs(cur_norm - prev_norm) / prev_norm


def layer_rmmc(prev_norm: float, cur_norm: float, epsilon: float = RMMC_DEFAULTS['epsilon']) -> float:
    """
    RMMC de una capa: |cur - prev| / (prev + epsilon).

    Con prev = 0 (primer paso) el valor es cur/epsilon y fuerza la
    sincronizacion inicial.
    """
    if prev_norm < 0 or cur_norm < 0:
        raise ValueError(f"layer_rmmc: normas negativas (prev={prev_norm}, cur={cur_norm})")
    if not epsilon > 0:
        raise ValueError(f"layer_rmmc: epsilon debe ser > 0 (recibido {epsilon})")
    return abs(cur_norm - prev_norm) / (prev_norm + epsilon)


def global_max_rmmc(per_worker: Sequence[Sequence[float]]) -> float:
    """Maximo sobre todas las capas de todos los workers."""
    valores = [v for capas in per_worker for v in capas]
    if not valores:
        raise ValueError("global_max_rmmc: se requiere al menos un worker con una capa")
    return max(valores)


def decide(policy: SyncPolicy, step: int, global_rmmc: float) -> bool:
    """True si el paso debe sincronizar segun la politica."""
    if step < 1:
        raise ValueError(f"decide: step debe ser >= 1 (recibido {step})")
    match policy:
        case EveryStep():
            return True
        case Scheduled(interval=h):
            return step % h == 0
        case Adaptive(rmmc=cfg):
            return global_rmmc > cfg.tau
    raise TypeError(f"decide: politica desconocida {policy!r}")


def rmmc_epsilon(policy: SyncPolicy) -> float:
    """Epsilon para la telemetria RMMC (las politicas no adaptativas usan el default)."""
    if isinstance(policy, Adaptive):
        return policy.rmmc.epsilon
    return RMMC_DEFAULTS['epsilon']


def describe_policy(policy: SyncPolicy) -> Dict:
    """Eco serializable de la politica para summary.json."""
    if isinstance(policy, Scheduled):
        return {'kind': policy.kind, 'interval': policy.interval}
    if isinstance(policy, Adaptive):
        return {'kind': policy.kind, 'tau': policy.rmmc.tau, 'epsilon': policy.rmmc.epsilon}
    return {'kind': policy.kind}


def replay_decisions(trace: Sequence[Tuple[float, float]], policy: SyncPolicy,
                     epsilon: float = RMMC_DEFAULTS['epsilon']) -> List[bool]:
    """
    Reproduce una traza fija de pares (prev_norm, cur_norm), un par por paso
    desde el paso 1, a traves de layer_rmmc + decide.
    """
    return [
        decide(policy, step, layer_rmmc(prev, cur, epsilon))
        for step, (prev, cur) in enumerate(trace, start=1)
    ]


def count_syncs(trace: Sequence[Tuple[float, float]], policy: SyncPolicy,
                epsilon: float = RMMC_DEFAULTS['epsilon']) -> int:
    return sum(replay_decisions(trace, policy, epsilon))
