"""
Carga de corridas (steps.csv, summary.json, comparison.json) con validacion
"""

import json
import pandas as pd
from pathlib import Path
from typing import Dict, Optional, Any

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import ARCHIVOS_SALIDA, STEPS_COLUMNS


def load_json(file_path: Path) -> Dict[str, Any]:
    """
    Carga un JSON de resultados.

    Raises:
        FileNotFoundError: Si el archivo no existe
    """
    if not Path(file_path).exists():
        raise FileNotFoundError(f"No se encontro: {file_path}")
    with open(file_path, encoding='utf-8') as fh:
        return json.load(fh)


def load_steps(file_path: Path) -> pd.DataFrame:
    """
    Carga la telemetria por paso y valida el contrato de columnas.

    Args:
        file_path: Path a steps.csv

    Returns:
        DataFrame con STEPS_COLUMNS; 'synced' como bool

    Raises:
        FileNotFoundError: Si el archivo no existe
        ValueError: Si faltan columnas del contrato
    """
    if not Path(file_path).exists():
        raise FileNotFoundError(f"No se encontro: {file_path}")

    df = pd.read_csv(file_path)
    faltantes = [c for c in STEPS_COLUMNS if c not in df.columns]
    if faltantes:
        raise ValueError(f"{file_path}: faltan columnas {faltantes}")

    df = df[STEPS_COLUMNS].copy()
    df['synced'] = df['synced'].astype(int).astype(bool)
    return df


def load_run(run_dir: Path) -> Dict[str, Any]:
    """
    Carga una corrida completa. Cualquier archivo ausente queda como None.

    Returns:
        dict con 'steps' (DataFrame o None) y 'summary' (dict o None)
    """
    run_dir = Path(run_dir)
    steps_path = run_dir / ARCHIVOS_SALIDA['steps']
    summary_path = run_dir / ARCHIVOS_SALIDA['summary']
    return {
        'steps': load_steps(steps_path) if steps_path.exists() else None,
        'summary': load_json(summary_path) if summary_path.exists() else None,
    }


def load_comparison(run_dir: Path) -> Optional[Dict[str, Any]]:
    path = Path(run_dir) / ARCHIVOS_SALIDA['comparison']
    return load_json(path) if path.exists() else None


def sync_events(steps_df: pd.DataFrame) -> pd.DataFrame:
    """Pasos sincronizados con su RMMC global y el intervalo desde el sync anterior."""
    eventos = steps_df.loc[steps_df['synced'], ['step', 'global_rmmc', 'mean_loss', 'divergence']].copy()
    eventos['gap'] = eventos['step'].diff().fillna(eventos['step']).astype(int)
    return eventos.reset_index(drop=True)


def get_estadisticas_run(steps_df: pd.DataFrame) -> Dict[str, Any]:
    """
    Calcula estadisticas de una corrida a partir de steps.csv.

    Args:
        steps_df: DataFrame de load_steps

    Returns:
        dict con estadisticas
    """
    stats = {
        'total_pasos': len(steps_df),
        'syncs': 0,
        'sync_rate': 0.0,
        'bytes_total': 0,
        'loss_stats': {},
        'divergence_stats': {},
        'rmmc_stats': {},
    }
    if len(steps_df) == 0:
        return stats

    stats['syncs'] = int(steps_df['synced'].sum())
    stats['sync_rate'] = stats['syncs'] / len(steps_df)
    stats['bytes_total'] = int(steps_df['bytes_cum'].iloc[-1])

    stats['loss_stats'] = {
        'inicial': float(steps_df['mean_loss'].iloc[0]),
        'final': float(steps_df['mean_loss'].iloc[-1]),
        'min': float(steps_df['mean_loss'].min()),
    }
    stats['divergence_stats'] = {
        'mean': float(steps_df['divergence'].mean()),
        'max': float(steps_df['divergence'].max()),
    }

    # el paso 1 tiene RMMC ~ 1/epsilon; se excluye de la mediana
    rmmc = steps_df.loc[steps_df['step'] > 1, 'global_rmmc']
    if len(rmmc) > 0:
        stats['rmmc_stats'] = {
            'median': float(rmmc.median()),
            'p95': float(rmmc.quantile(0.95)),
            'max': float(rmmc.max()),
        }

    return stats
