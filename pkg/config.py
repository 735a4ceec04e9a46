"""
Configuracion global del simulador CurvaDion
FUENTE UNICA DE VERDAD para hiperparametros, tolerancias, archivos de salida
y perfiles de red

NOTA SOBRE VOLUMENES DE COMUNICACION:
Existen DOS referencias para el volumen de una sincronizacion completa:

1) 619 MB por paso (volumen medido del baseline Dion)
2) 640 MB de parametros (all-reduce de gradiente completo)

Este archivo no reconcilia ambos valores. Por defecto el volumen se calcula
desde las formas de las capas (convencion 'fullgrad' = parametros x 4 bytes)
y se puede forzar con comm.full_sync_bytes en el YAML (p.ej. 619_000_000).
1 GB = 1e9 bytes en todos los reportes (1857 GB ~ 1729 GiB).
"""

import os
from pathlib import Path
from typing import Dict, List, Optional

# ==============================================================================
# RUTAS BASE
# ==============================================================================
BASE_DIR = Path(__file__).parent
CONFIGS_DIR = BASE_DIR / "configs"
RESULTS_DIR = BASE_DIR / "resultados"

# ==============================================================================
# HIPERPARAMETROS DION (regimen experimental de referencia)
# ==============================================================================
DION_DEFAULTS = {
    'eta': 0.02,
    'mu': 0.95,
    'rank_fraction': 0.125,
    'eta_local': None,       # None -> igual a eta
    'weight_decay': 0.01,
    'power_iters': 1,
    'warmup_frac': 0.0,      # experimentos originales: 0.01
    'warmdown_frac': 0.0,    # experimentos originales: 0.20
    'lr_floor': 0.1,
}

RUN_DEFAULTS = {
    'steps': 3000,
    'seed': 0,
    'n_workers': 4,
}

# ==============================================================================
# DISPARADOR RMMC
# ==============================================================================
RMMC_DEFAULTS = {
    'tau': 0.3,
    'epsilon': 1e-8,
    'interval': 100,   # H del baseline Scheduled
}

TAU_SWEEP = [0.1, 0.2, 0.3, 0.5, 0.7, 0.9]

# ==============================================================================
# TOLERANCIAS NUMERICAS
# ==============================================================================
TOLERANCIAS = {
    'rank': 1e-10,          # |r_jj| minimo en Gram-Schmidt
    'norm_floor': 1e-300,   # norma minima de columna en ColumnNormalize
    'symmetry': 1e-12,
    'psd': 1e-12,
    'unit_vector': 1e-9,
}

# ==============================================================================
# LABORATORIO DEL TEOREMA RMMC-CURVATURA
# ==============================================================================
THEOREM_DEFAULTS = {
    'etas': [0.02, 0.01, 0.005],
    'mu': 0.95,
    'steps': 150,
    'burn_in': 50,
    'fd_eps': 1e-5,
    'step_guard': 0.1,    # eta * ||M|| * L < 0.1
    'min_ratio': 3.0,
    'na_tol': 1e-12,      # mediana por debajo -> residuo a escala de redondeo
}

# ==============================================================================
# COMUNICACION
# ==============================================================================
COMM_DEFAULTS = {
    'convention': 'fullgrad',
    'flag_bytes': 4,
    'bytes_per_value': 4,
}

# ==============================================================================
# MODELO DE TIEMPO (ms por paso)
# ==============================================================================
TIMING_DEFAULTS = {
    't_compute_ms': 3375.0,
    't_opt_ms': 39.0,
    't_flag_ms': 0.5,
    'sync_rate': 0.01,
    'steps_total': 3000,
}

# Latencia/ancho de banda nominales, solo para estimate_sync_ms
PERFILES_RED = {
    'infiniband': {'t_sync_ms': 70.0, 'latency_ms': 0.1, 'bandwidth_gbps': 100.0},
    '10gbe': {'t_sync_ms': 700.0, 'latency_ms': 10.0, 'bandwidth_gbps': 10.0},
    'wan': {'t_sync_ms': 12000.0, 'latency_ms': 50.0, 'bandwidth_gbps': 1.0},
}

# ==============================================================================
# ARCHIVOS DE SALIDA (contrato de compatibilidad)
# ==============================================================================
ARCHIVOS_SALIDA = {
    'steps': 'steps.csv',
    'summary': 'summary.json',
    'comparison': 'comparison.json',
    'theorem_csv': 'theorem_study.csv',
    'theorem_json': 'theorem_study.json',
    'projection_csv': 'projection.csv',
    'projection_json': 'projection.json',
    'sweep_csv': 'sweep.csv',
    'sweep_json': 'sweep.json',
}

STEPS_COLUMNS = ['step', 'mean_loss', 'global_rmmc', 'synced', 'bytes_cum', 'divergence']
THEOREM_COLUMNS = ['problem', 'eta', 'step', 'phase', 'measured', 'predicted', 'residual']
PROJECTION_COLUMNS = [
    'network', 't_sync_ms', 'baseline_ms', 'adaptive_ms', 'speedup',
    'baseline_minutes', 'adaptive_minutes',
]
SWEEP_COLUMNS = [
    'policy', 'tau', 'sync_count', 'sync_rate', 'final_loss', 'total_bytes', 'comm_reduction',
]

CSV_FLOAT_FORMAT = '%.17g'

# ==============================================================================
# CODIGOS DE SALIDA CLI
# ==============================================================================
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICO = 2
EXIT_IO = 3

THREADS_ENV = 'CURVADION_THREADS'

# ==============================================================================
# COLORES DEL DASHBOARD
# ==============================================================================
COLORES_POLITICA = {
    'every_step': '#2c3e50',
    'scheduled': '#fdae61',
    'adaptive': '#1a9641',
}

COLORES_SYNC = {
    1: '#d7191c',  # paso sincronizado
    0: '#a6d96a',  # paso local
}


# ==============================================================================
# FUNCIONES DE UTILIDAD
# ==============================================================================

def get_threads() -> int:
    """
    Lee CURVADION_THREADS. Valores ausentes, invalidos o <= 1 implican
    el modo de referencia de un solo hilo.
    """
    raw = os.environ.get(THREADS_ENV, '').strip()
    try:
        threads = int(raw)
    except ValueError:
        return 1
    return max(1, threads)


def get_runs_disponibles(results_dir: Optional[Path] = None) -> List[str]:
    """
    Detecta corridas disponibles buscando subdirectorios (recursivos) en
    results_dir que contengan al menos summary.json o comparison.json.
    """
    base = Path(results_dir) if results_dir is not None else RESULTS_DIR
    runs = []
    if not base.exists():
        return runs

    for archivo in base.rglob('*.json'):
        if archivo.name in (ARCHIVOS_SALIDA['summary'], ARCHIVOS_SALIDA['comparison']):
            rel = archivo.parent.relative_to(base)
            nombre = rel.as_posix() if rel.parts else '.'
            if nombre not in runs:
                runs.append(nombre)

    return sorted(runs)


def get_archivos_run(run: str, results_dir: Optional[Path] = None) -> Dict[str, Optional[Path]]:
    """
    Retorna paths a los archivos de una corrida.
    Retorna None para archivos que no existen.
    """
    base = Path(results_dir) if results_dir is not None else RESULTS_DIR
    run_dir = base / run
    archivos = {}

    for key, filename in ARCHIVOS_SALIDA.items():
        filepath = run_dir / filename
        archivos[key] = filepath if filepath.exists() else None

    return archivos
