"""
Simulador lockstep de entrenamiento data-parallel con sincronizacion por politica.

Cada worker guarda una replica completa de los parametros y difiere solo
en su fragmento de datos. Por paso:

1. cada worker evalua perdida y gradiente sobre su lote
2. forma el buffer B = M + G por capa y su RMMC
3. el cluster reduce el maximo global y decide si sincroniza
4. paso sincronizado: promedios en orden fijo de worker (P antes de
   ortonormalizar, R despues) y actualizacion identica en todas las replicas;
   paso local: M = B y X -= eta_local G en cada worker

Modo paralelo: solo la evaluacion de gradientes corre en hilos; las
reducciones siguen el orden ascendente de worker, asi que la telemetria es
identica bit a bit al modo de referencia.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import COMM_DEFAULTS

from .dion import DionConfig, LayerState, accumulate_buffer, local_step, sync_layer_replicas
from .exceptions import DimensionError, NumericalError
from .matrixcore import Matrix, frobenius_norm
from .problems import Batch, Params, Problem
from .trigger import Adaptive, SyncPolicy, decide, describe_policy, layer_rmmc, rmmc_epsilon

logger = logging.getLogger(__name__)

CommConvention = Literal['fullgrad', 'lowrank']


def derive_seed(*keys: int) -> int:
    """Semilla entera de 64 bits derivada de una tupla de enteros no negativos."""
    return int(np.random.SeedSequence(list(keys)).generate_state(1, dtype=np.uint64)[0])


@dataclass
class Worker:
    """Replica de datos; (seed, id) fija su flujo de lotes, ver batch()."""

    id: int
    layers: List[LayerState]
    seed: int = 0

    @property
    def params(self) -> Params:
        return [layer.X for layer in self.layers]

    def batch(self, step: int, n_workers: int) -> Batch:
        """Lote del paso; Batch.rng sortea de (seed, id, step)."""
        return Batch(step=step, worker=self.id, n_workers=n_workers, seed=self.seed)


@dataclass(frozen=True)
class CommLedger:
    """Contabilidad de bytes: total = step_count*flag + sync_count*full (enteros)."""

    full_sync_bytes_per_step: int
    flag_bytes_per_step: int = COMM_DEFAULTS['flag_bytes']
    total_bytes: int = 0
    sync_count: int = 0
    step_count: int = 0

    def identity_holds(self) -> bool:
        return self.total_bytes == (self.step_count * self.flag_bytes_per_step
                                    + self.sync_count * self.full_sync_bytes_per_step)


@dataclass(frozen=True)
class StepRecord:
    step: int
    mean_loss: float
    global_rmmc: float
    synced: bool
    bytes: int
    divergence: float


@dataclass(frozen=True)
class RunSummary:
    final_loss: float
    steps: int
    sync_count: int
    sync_rate: float
    sync_steps: List[int]
    total_bytes: Dict[str, int]
    comm_convention: str
    bytes_per_step_mb: float
    comm_reduction: Optional[float]
    mean_divergence: float
    max_divergence: float
    policy: Dict
    seed: int
    n_workers: int

    def to_dict(self) -> Dict:
        return asdict(self)


def all_reduce_mean(per_worker: Sequence[Matrix]) -> Matrix:
    """Media entrada a entrada acumulada en orden ascendente de worker."""
    if not per_worker:
        raise ValueError("all_reduce_mean: lista vacia")
    acc = np.array(per_worker[0], dtype=np.float64, copy=True)
    for mat in per_worker[1:]:
        if np.shape(mat) != acc.shape:
            raise DimensionError(f"all_reduce_mean: formas {acc.shape} y {np.shape(mat)}")
        acc += mat
    return acc / len(per_worker)


def all_reduce_max(per_worker: Sequence[float]) -> float:
    if not per_worker:
        raise ValueError("all_reduce_max: lista vacia")
    return max(per_worker)


def worker_divergence(workers: Sequence[Worker]) -> float:
    """Maxima distancia de Frobenius entre pares de replicas, sobre todas las capas."""
    if not workers:
        raise ValueError("worker_divergence: se requiere al menos un worker")
    div = 0.0
    for a, b in combinations(workers, 2):
        for la, lb in zip(a.layers, b.layers):
            div = max(div, frobenius_norm(la.X - lb.X))
    return div


def full_sync_bytes(layer_shapes: Sequence[Tuple[int, int]], convention: CommConvention,
                    rank_fraction: float, bytes_per_value: int = COMM_DEFAULTS['bytes_per_value']) -> int:
    """
    Bytes de una sincronizacion completa.
    fullgrad: sum(m*n) * 4; lowrank: sum(m*r + n*r) * 4.
    """
    if convention == 'fullgrad':
        return sum(m * n for m, n in layer_shapes) * bytes_per_value
    if convention == 'lowrank':
        cfg = DionConfig(rank_fraction=rank_fraction)
        return sum((m + n) * cfg.rank_for(m, n) for m, n in layer_shapes) * bytes_per_value
    raise ValueError(f"convencion de comunicacion desconocida: {convention}")


def account_step(ledger: CommLedger, synced: bool) -> CommLedger:
    step_bytes = ledger.flag_bytes_per_step + (ledger.full_sync_bytes_per_step if synced else 0)
    return replace(
        ledger,
        total_bytes=ledger.total_bytes + step_bytes,
        sync_count=ledger.sync_count + int(synced),
        step_count=ledger.step_count + 1,
    )


def init_workers(problem: Problem, n_workers: int, cfg: DionConfig, seed: int) -> List[Worker]:
    """Replicas identicas: mismos X0 y Q0 por capa, buffers en cero."""
    params = problem.initial_params(seed)
    problem.check_params(params)
    workers = []
    for wid in range(n_workers):
        layers = [
            LayerState.initial(X, cfg.rank_for(*X.shape), derive_seed(seed, li))
            for li, X in enumerate(params)
        ]
        workers.append(Worker(id=wid, layers=layers, seed=seed))
    return workers


def _evaluate(problem: Problem, workers: Sequence[Worker], batches: Sequence[Batch],
              pool: Optional[ThreadPoolExecutor]) -> List[Tuple[float, Params]]:
    def tarea(args):
        worker, batch = args
        params = worker.params
        return problem.loss(params, batch), problem.gradient(params, batch)

    pares = list(zip(workers, batches))
    if pool is None:
        return [tarea(p) for p in pares]
    return list(pool.map(tarea, pares))


def simulate(problem: Problem, n_workers: int, policy: SyncPolicy, cfg: DionConfig,
             steps: int, seed: int, *, comm: CommConvention = 'fullgrad',
             full_sync_bytes_override: Optional[int] = None,
             flag_bytes: int = COMM_DEFAULTS['flag_bytes'],
             threads: int = 1) -> Tuple[List[StepRecord], RunSummary]:
    """
    Corre la simulacion completa.

    Args:
        problem: Problema (gradiente por capa)
        n_workers: Numero de replicas
        policy: EveryStep | Scheduled | Adaptive
        cfg: DionConfig
        steps: Pasos de entrenamiento
        seed: Semilla de la corrida
        comm: Convencion de volumen de la sincronizacion completa
        full_sync_bytes_override: Fuerza los bytes por sincronizacion (convencion elegida)
        flag_bytes: Bytes del all-reduce del flag (solo politica adaptativa)
        threads: Hilos para evaluar gradientes; <= 1 es el modo de referencia

    Returns:
        (lista de StepRecord, RunSummary)

    Raises:
        NumericalError: Perdida o gradiente no finito (incluye el paso)
    """
    if steps < 1 or n_workers < 1:
        raise ValueError(f"simulate: steps ({steps}) y n_workers ({n_workers}) deben ser >= 1")
    if seed < 0:
        raise ValueError(f"simulate: semilla negativa {seed}")

    workers = init_workers(problem, n_workers, cfg, seed)
    shapes = [tuple(s) for s in problem.layer_shapes]
    per_sync = {conv: full_sync_bytes(shapes, conv, cfg.rank_fraction) for conv in ('fullgrad', 'lowrank')}
    if full_sync_bytes_override is not None:
        per_sync[comm] = int(full_sync_bytes_override)
    flag = flag_bytes if isinstance(policy, Adaptive) else 0
    ledgers = {conv: CommLedger(per_sync[conv], flag) for conv in per_sync}
    epsilon = rmmc_epsilon(policy)

    logger.info("Simulacion: %d workers, %d capas, politica %s, %d pasos, semilla %d",
                n_workers, len(shapes), describe_policy(policy), steps, seed)

    records: List[StepRecord] = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for step in range(1, steps + 1):
            factor = cfg.lr_factor(step, steps)
            eta_t, eta_local_t = cfg.eta * factor, cfg.local_eta * factor
            batches = [w.batch(step, n_workers) for w in workers]
            evals = _evaluate(problem, workers, batches, pool)

            loss_sum = 0.0
            for loss, grads in evals:
                loss_sum += loss
                if not all(np.all(np.isfinite(g)) for g in grads):
                    raise NumericalError(step, "gradiente no finito")
            mean_loss = loss_sum / n_workers
            if not np.isfinite(mean_loss):
                raise NumericalError(step, f"perdida no finita ({mean_loss})")

            worker_max = []
            for w, (_, grads) in zip(workers, evals):
                valores = []
                for li, G in enumerate(grads):
                    layer = w.layers[li]
                    cur = frobenius_norm(accumulate_buffer(layer.M, G))
                    valores.append(layer_rmmc(layer.prev_norm, cur, epsilon))
                    layer.prev_norm = cur
                worker_max.append(max(valores))
            global_rmmc = all_reduce_max(worker_max)
            synced = decide(policy, step, global_rmmc)

            if synced:
                for li in range(len(shapes)):
                    shared = sync_layer_replicas(
                        [w.layers[li] for w in workers],
                        [grads[li] for _, grads in evals],
                        cfg, eta=eta_t, reduce_mean=all_reduce_mean,
                        fallback_seed=derive_seed(seed, li, step),
                    )
                    for w in workers:
                        w.layers[li] = LayerState(shared.X.copy(), shared.M.copy(), shared.Q.copy(),
                                                  w.layers[li].prev_norm)
            else:
                for w, (_, grads) in zip(workers, evals):
                    w.layers = [local_step(layer, G, cfg, eta_local=eta_local_t)
                                for layer, G in zip(w.layers, grads)]

            ledgers = {conv: account_step(led, synced) for conv, led in ledgers.items()}
            records.append(StepRecord(
                step=step,
                mean_loss=mean_loss,
                global_rmmc=global_rmmc,
                synced=synced,
                bytes=ledgers[comm].total_bytes,
                divergence=worker_divergence(workers),
            ))
            if synced:
                logger.debug("paso %d: sync (rmmc=%.4g)", step, global_rmmc)
    finally:
        if pool is not None:
            pool.shutdown()

    summary = summarize(records, ledgers, comm, policy, seed, n_workers)
    logger.info("Fin: %d/%d pasos sincronizados, %.3f GB (%s)",
                summary.sync_count, steps, summary.total_bytes[comm] / 1e9, comm)
    return records, summary


def summarize(records: Sequence[StepRecord], ledgers: Dict[str, CommLedger], comm: str,
              policy: SyncPolicy, seed: int, n_workers: int) -> RunSummary:
    steps = len(records)
    ledger = ledgers[comm]
    sync_steps = [r.step for r in records if r.synced]
    every_step_bytes = steps * ledger.full_sync_bytes_per_step
    divergences = np.array([r.divergence for r in records])
    return RunSummary(
        final_loss=records[-1].mean_loss,
        steps=steps,
        sync_count=len(sync_steps),
        sync_rate=len(sync_steps) / steps,
        sync_steps=sync_steps,
        total_bytes={conv: led.total_bytes for conv, led in ledgers.items()},
        comm_convention=comm,
        bytes_per_step_mb=ledger.total_bytes / steps / 1e6,
        comm_reduction=(every_step_bytes / ledger.total_bytes) if ledger.total_bytes else None,
        mean_divergence=float(divergences.mean()),
        max_divergence=float(divergences.max()),
        policy=describe_policy(policy),
        seed=seed,
        n_workers=n_workers,
    )
