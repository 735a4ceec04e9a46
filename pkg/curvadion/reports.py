"""
Escritura de salidas: CSV con pandas (orden de columnas fijo) y JSON.
Sin marcas de tiempo: configuraciones iguales producen archivos identicos.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import CSV_FLOAT_FORMAT, STEPS_COLUMNS, THEOREM_COLUMNS

from .curvlab import OrderStudy
from .distsim import StepRecord


def _json_safe(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, Path):
        return obj.as_posix()
    if hasattr(obj, 'item') and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(data: Dict, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_json_safe(data), indent=2) + "\n", encoding='utf-8')
    return path


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path


def steps_frame(records: Sequence[StepRecord]) -> pd.DataFrame:
    """Telemetria por paso con las columnas del contrato STEPS_COLUMNS."""
    filas = [
        {
            'step': r.step,
            'mean_loss': r.mean_loss,
            'global_rmmc': r.global_rmmc,
            'synced': int(r.synced),
            'bytes_cum': r.bytes,
            'divergence': r.divergence,
        }
        for r in records
    ]
    return pd.DataFrame(filas, columns=STEPS_COLUMNS)


def study_frame(studies: Dict[str, OrderStudy]) -> pd.DataFrame:
    """Una fila por (problema, eta, paso), incluidas las de burn-in (phase='burn_in')."""
    filas: List[Dict] = []
    for nombre, study in studies.items():
        for trace in study.traces:
            for probe in trace.probes:
                filas.append({
                    'problem': nombre,
                    'eta': trace.eta,
                    'step': probe.step,
                    'phase': 'burn_in' if probe.step <= trace.burn_in else 'measured',
                    'measured': probe.measured_rmmc,
                    'predicted': probe.predicted_rmmc,
                    'residual': probe.residual,
                })
    return pd.DataFrame(filas, columns=THEOREM_COLUMNS)


def study_summary(studies: Dict[str, OrderStudy]) -> Dict:
    resumen = {}
    for nombre, study in studies.items():
        resumen[nombre] = {
            'passed': study.passed,
            'applicable': study.applicable,
            'min_ratio': study.min_ratio,
            'rows': [
                {
                    'eta': row.eta,
                    'median_residual': row.median_residual,
                    'constant': row.median_residual / row.eta ** 2,
                    'ratio': row.ratio,
                    'applicable': row.applicable,
                }
                for row in study.rows
            ],
            'early_median_residual': [
                float(np.median(trace.early_residuals)) if trace.early_residuals.size else None
                for trace in study.traces
            ],
        }
    return resumen
