"""
Linea de comandos del simulador CurvaDion

Subcomandos:
    run      simulacion con la politica del YAML -> steps.csv, summary.json
    compare  adaptativa vs Scheduled con presupuesto igualado -> comparison.json
    theorem  estudio de orden del residuo RMMC-curvatura -> theorem_study.csv/json
    project  tabla de tiempo de pared por red -> projection.csv/json
    sweep    barrido de tau + referencia EveryStep -> sweep.csv/json

Codigos de salida: 0 ok, 1 configuracion/precondicion, 2 falla numerica,
3 sistema de archivos.
"""

import argparse
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import (
    ARCHIVOS_SALIDA, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICO, EXIT_OK, SWEEP_COLUMNS,
    THEOREM_DEFAULTS, get_threads,
)

from . import reports
from .curvlab import convergence_order_study, oracle_for
from .distsim import RunSummary, StepRecord, simulate
from .exceptions import ConfigError, NumericalError, RankDeficiencyError
from .netcost import project_table
from .problems import CurvatureSwitchProblem, Problem
from .run_config import RunConfig, load_run_config, parse_run_config
from .trigger import Adaptive, EveryStep, RmmcConfig, Scheduled, SyncPolicy

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)-7s %(name)s: %(message)s'


# ==============================================================================
# CONFIGURACION
# ==============================================================================

def _cargar(args: argparse.Namespace) -> RunConfig:
    """YAML + overrides de linea de comandos, validado de nuevo tras aplicar overrides."""
    try:
        cfg = load_run_config(args.config)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc

    data = cfg.model_dump()
    if getattr(args, 'out', None) is not None:
        data['output_dir'] = args.out
    if getattr(args, 'seed', None) is not None:
        data['seed'] = args.seed
    if getattr(args, 'comm', None) is not None:
        data['comm']['convention'] = args.comm
    return parse_run_config(data)


def _threads(cfg: RunConfig) -> int:
    return get_threads() if cfg.parallel else 1


def _correr(cfg: RunConfig, problem: Problem, policy: SyncPolicy,
            seed: int) -> Tuple[List[StepRecord], RunSummary]:
    return simulate(
        problem, cfg.n_workers, policy, cfg.dion.build(), cfg.steps, seed,
        comm=cfg.comm.convention,
        full_sync_bytes_override=cfg.comm.full_sync_bytes,
        flag_bytes=cfg.comm.flag_bytes,
        threads=_threads(cfg),
    )


def _escribir_run(out_dir: Path, records: Sequence[StepRecord], summary: RunSummary) -> None:
    reports.write_csv(reports.steps_frame(records), out_dir / ARCHIVOS_SALIDA['steps'])
    reports.write_json(summary.to_dict(), out_dir / ARCHIVOS_SALIDA['summary'])


# ==============================================================================
# PRESUPUESTO IGUALADO
# ==============================================================================

def matched_interval(sync_rate: float, steps: int) -> int:
    """
    H = round(1 / tasa), redondeo hacia arriba en .5, acotado a [1, steps].
    Tasa nula -> H = steps.
    """
    if steps < 1:
        raise ValueError(f"matched_interval: steps debe ser >= 1 (recibido {steps})")
    if sync_rate <= 0:
        return steps
    return int(min(max(np.floor(1.0 / sync_rate + 0.5), 1), steps))


def placement_fraction(sync_steps: Sequence[int], switch_steps: Sequence[int],
                       window: int) -> Optional[float]:
    """Fraccion de syncs posteriores al paso 1 a distancia <= window de algun cambio."""
    posteriores = [s for s in sync_steps if s > 1]
    if not posteriores or not switch_steps:
        return None
    cerca = sum(1 for s in posteriores if min(abs(s - sw) for sw in switch_steps) <= window)
    return cerca / len(posteriores)


def _fila_politica(summary: RunSummary) -> Dict:
    return {
        'final_loss': summary.final_loss,
        'mean_divergence': summary.mean_divergence,
        'max_divergence': summary.max_divergence,
        'sync_count': summary.sync_count,
        'sync_rate': summary.sync_rate,
        'sync_steps': summary.sync_steps,
        'total_bytes': summary.total_bytes[summary.comm_convention],
    }


def _mediana(valores: Sequence[Optional[float]]) -> Optional[float]:
    validos = [v for v in valores if v is not None]
    return float(np.median(validos)) if validos else None


# ==============================================================================
# SUBCOMANDOS
# ==============================================================================

def cmd_run(args: argparse.Namespace) -> int:
    cfg = _cargar(args)
    problem = cfg.problem.build()
    policy = cfg.policy.build()
    records, summary = _correr(cfg, problem, policy, cfg.seed)
    _escribir_run(Path(cfg.output_dir), records, summary)
    logger.info("run: %d syncs en %d pasos, perdida final %.6g -> %s",
                summary.sync_count, summary.steps, summary.final_loss, cfg.output_dir)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _cargar(args)
    if cfg.policy.kind != 'adaptive':
        raise ConfigError("compare requiere policy.kind = adaptive",
                          [f"policy.kind: recibido '{cfg.policy.kind}'"])

    problem = cfg.problem.build()
    switch_steps = list(problem.spec.switch_steps) if isinstance(problem, CurvatureSwitchProblem) else []
    seeds = list(cfg.compare.seeds) or [cfg.seed]
    out = Path(cfg.output_dir)
    adaptive = cfg.policy.build()

    filas = []
    for seed in seeds:
        run_dir = out if len(seeds) == 1 else out / f"seed_{seed}"
        rec_a, sum_a = _correr(cfg, problem, adaptive, seed)

        if cfg.compare.matched_budget:
            if sum(1 for s in sum_a.sync_steps if s > 1) == 0:
                logger.warning("semilla %d: sin syncs adaptativos despues del paso 1; H = %d",
                               seed, cfg.steps)
                interval = cfg.steps
            else:
                interval = matched_interval(sum_a.sync_rate, cfg.steps)
        else:
            interval = cfg.compare.scheduled_interval
        logger.info("semilla %d: tasa adaptativa %.4f -> H = %d", seed, sum_a.sync_rate, interval)

        rec_s, sum_s = _correr(cfg, problem, Scheduled(interval), seed)
        _escribir_run(run_dir / 'adaptive', rec_a, sum_a)
        _escribir_run(run_dir / 'scheduled', rec_s, sum_s)

        filas.append({
            'seed': seed,
            'interval': interval,
            'adaptive': _fila_politica(sum_a),
            'scheduled': _fila_politica(sum_s),
            'placement_fraction': placement_fraction(sum_a.sync_steps, switch_steps,
                                                     cfg.compare.window),
        })

    medianas = {
        'adaptive_final_loss': _mediana([f['adaptive']['final_loss'] for f in filas]),
        'scheduled_final_loss': _mediana([f['scheduled']['final_loss'] for f in filas]),
        'adaptive_mean_divergence': _mediana([f['adaptive']['mean_divergence'] for f in filas]),
        'scheduled_mean_divergence': _mediana([f['scheduled']['mean_divergence'] for f in filas]),
        'placement_fraction': _mediana([f['placement_fraction'] for f in filas]),
    }
    comparison = {
        'matched_budget': cfg.compare.matched_budget,
        'window': cfg.compare.window,
        'switch_steps': switch_steps,
        'steps': cfg.steps,
        'n_workers': cfg.n_workers,
        'comm_convention': cfg.comm.convention,
        'seeds': filas,
        'median': medianas,
        'adaptive_loss_le_scheduled': medianas['adaptive_final_loss'] <= medianas['scheduled_final_loss'],
        'adaptive_divergence_le_scheduled':
            medianas['adaptive_mean_divergence'] <= medianas['scheduled_mean_divergence'],
    }
    reports.write_json(comparison, out / ARCHIVOS_SALIDA['comparison'])
    logger.info("compare: perdida mediana %.6g (adaptativa) vs %.6g (scheduled)",
                medianas['adaptive_final_loss'], medianas['scheduled_final_loss'])
    return EXIT_OK


def cmd_theorem(args: argparse.Namespace) -> int:
    cfg = _cargar(args)
    th = cfg.theorem
    studies = {}
    for spec in th.problems:
        problem = spec.build()
        oracle = oracle_for(problem, th.oracle, th.fd_eps)
        studies[spec.label] = convergence_order_study(
            problem, th.etas, th.mu, th.steps, th.burn_in, oracle=oracle,
            min_ratio=th.min_ratio, na_tol=THEOREM_DEFAULTS['na_tol'], measure_on=th.measure_on,
        )

    out = Path(cfg.output_dir)
    gates = {spec.label: spec.gate for spec in th.problems}
    passed = all(s.passed for nombre, s in studies.items() if gates[nombre])
    resumen = reports.study_summary(studies)
    for spec in th.problems:
        resumen[spec.label].update(gate=spec.gate, note=spec.note)
    reports.write_csv(reports.study_frame(studies), out / ARCHIVOS_SALIDA['theorem_csv'])
    reports.write_json({
        'mu': th.mu,
        'etas': th.etas,
        'steps': th.steps,
        'burn_in': th.burn_in,
        'oracle': th.oracle,
        'measure_on': th.measure_on,
        'passed': passed,
        'known_deviations': sorted(n for n, s in studies.items() if not gates[n] and not s.passed),
        'problems': resumen,
    }, out / ARCHIVOS_SALIDA['theorem_json'])

    for nombre, study in studies.items():
        razones = ', '.join('NA' if r.ratio is None else f"{r.ratio:.2f}" for r in study.rows[:-1])
        estado = 'OK' if study.passed else ('FALLA' if gates[nombre] else 'desviacion conocida')
        logger.info("theorem %s: razones [%s] -> %s", nombre, razones, estado)
    return EXIT_OK if passed else EXIT_CONFIG


def cmd_project(args: argparse.Namespace) -> int:
    cfg = _cargar(args)
    overrides = {
        't_compute_ms': args.t_compute,
        't_opt_ms': args.t_opt,
        't_flag_ms': args.t_flag,
        'sync_rate': args.sync_rate,
    }
    if args.summary is not None:
        with open(args.summary, encoding='utf-8') as fh:
            medido = json.load(fh)
        if 'sync_rate' not in medido:
            raise ConfigError(f"{args.summary} no contiene sync_rate")
        overrides['sync_rate'] = float(medido['sync_rate'])
    project = cfg.project.model_copy(update={k: v for k, v in overrides.items() if v is not None})

    tm = project.timing()
    df = project_table([p.build() for p in project.profiles], base=tm,
                       steps_total=project.steps_total)

    out = Path(cfg.output_dir)
    reports.write_csv(df, out / ARCHIVOS_SALIDA['projection_csv'])
    reports.write_json({
        't_compute_ms': tm.t_compute_ms,
        't_opt_ms': tm.t_opt_ms,
        't_flag_ms': tm.t_flag_ms,
        'sync_rate': tm.sync_rate,
        'steps_total': project.steps_total,
        'rows': df.to_dict(orient='records'),
    }, out / ARCHIVOS_SALIDA['projection_json'])
    print(df.to_string(index=False))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _cargar(args)
    problem = cfg.problem.build()
    eps = cfg.policy.epsilon

    politicas: List[Tuple[str, Optional[float], SyncPolicy]] = [('every_step', None, EveryStep())]
    politicas += [('adaptive', tau, Adaptive(RmmcConfig(tau=tau, epsilon=eps))) for tau in cfg.sweep.taus]

    filas = []
    for nombre, tau, policy in politicas:
        _, summary = _correr(cfg, problem, policy, cfg.seed)
        filas.append({
            'policy': nombre,
            'tau': tau,
            'sync_count': summary.sync_count,
            'sync_rate': summary.sync_rate,
            'final_loss': summary.final_loss,
            'total_bytes': summary.total_bytes[summary.comm_convention],
            'comm_reduction': summary.comm_reduction,
        })
        logger.info("sweep %s tau=%s: %d syncs", nombre, tau, summary.sync_count)

    df = pd.DataFrame(filas, columns=SWEEP_COLUMNS)
    out = Path(cfg.output_dir)
    reports.write_csv(df, out / ARCHIVOS_SALIDA['sweep_csv'])
    reports.write_json({'seed': cfg.seed, 'steps': cfg.steps, 'rows': filas},
                       out / ARCHIVOS_SALIDA['sweep_json'])
    return EXIT_OK


# ==============================================================================
# PARSER Y DESPACHO
# ==============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='curvadion',
        description='Simulador de sincronizacion adaptativa RMMC sobre Dion',
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='logging DEBUG')
    sub = parser.add_subparsers(dest='command', required=True)

    comunes = argparse.ArgumentParser(add_help=False)
    comunes.add_argument('--config', type=Path, default=None, help='YAML de corrida')
    comunes.add_argument('--out', type=Path, default=None, help='directorio de salida')
    comunes.add_argument('--seed', type=int, default=None, help='semilla (reemplaza la del YAML)')
    comunes.add_argument('--comm', choices=['fullgrad', 'lowrank'], default=None,
                         help='convencion de volumen de comunicacion')

    for nombre, funcion, ayuda in (
        ('run', cmd_run, 'simular con la politica configurada'),
        ('compare', cmd_compare, 'adaptativa vs Scheduled con presupuesto igualado'),
        ('theorem', cmd_theorem, 'estudio de orden RMMC-curvatura'),
        ('sweep', cmd_sweep, 'barrido de tau'),
    ):
        sp = sub.add_parser(nombre, parents=[comunes], help=ayuda)
        sp.set_defaults(func=funcion)

    sp = sub.add_parser('project', parents=[comunes], help='proyeccion de tiempo de pared')
    sp.add_argument('--sync-rate', type=float, default=None)
    sp.add_argument('--t-compute', type=float, default=None, help='ms de computo por paso')
    sp.add_argument('--t-opt', type=float, default=None, help='ms de optimizador por paso')
    sp.add_argument('--t-flag', type=float, default=None, help='ms del all-reduce del flag')
    sp.add_argument('--summary', type=Path, default=None,
                    help='summary.json de una corrida; usa su sync_rate medido')
    sp.set_defaults(func=cmd_project)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)

    try:
        return args.func(args)
    except (NumericalError, RankDeficiencyError, FloatingPointError) as exc:
        logger.error("falla numerica: %s", exc)
        return EXIT_NUMERICO
    except ValueError as exc:
        # ConfigError, StepSizeError y DimensionError son ValueError
        logger.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("error de archivos: %s", exc)
        return EXIT_IO
