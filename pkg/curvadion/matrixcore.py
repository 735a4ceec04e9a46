"""
Primitivas de matrices densas para Dion

Convencion de almacenamiento: una Matrix es un np.ndarray 2-D de float64 en
orden C (fila mayor); a[i, j] es la fila i, columna j y los datos planos
tienen longitud m*n.
"""

import numpy as np
from pathlib import Path
from scipy import linalg

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import TOLERANCIAS

from .exceptions import DimensionError, RankDeficiencyError

Matrix = np.ndarray

RANK_TOL = TOLERANCIAS['rank']
NORM_FLOOR = TOLERANCIAS['norm_floor']


def as_matrix(a, name: str = "a") -> Matrix:
    """
    Convierte a Matrix float64 2-D no vacia.

    Raises:
        DimensionError: Si no es 2-D o tiene una dimension nula
    """
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise DimensionError(f"{name}: se esperaba matriz 2-D no vacia, forma {m.shape}")
    return m


def check_same_shape(a: Matrix, b: Matrix, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: formas incompatibles {a.shape} y {b.shape}")


def frobenius_norm(a) -> float:
    """Raiz de la suma de cuadrados de todas las entradas."""
    return float(np.linalg.norm(as_matrix(a)))


def matmul(a, b) -> Matrix:
    """
    Producto matricial estandar.

    Raises:
        DimensionError: Si las dimensiones internas no coinciden (nombra ambas formas)
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: {a.shape} x {b.shape} (dimension interna distinta)")
    return a @ b


def orthonormalize_columns(a) -> Matrix:
    """
    Gram-Schmidt modificado con reortogonalizacion (dos pasadas).

    Args:
        a: Matrix m x r con r <= m

    Returns:
        Matrix P m x r con P^T P = I_r y span(P) = span(a)

    Raises:
        DimensionError: Si r > m
        RankDeficiencyError: Si |r_jj| < 1e-10 para alguna columna j
    """
    q = np.array(as_matrix(a), dtype=np.float64, copy=True)
    m, r = q.shape
    if r > m:
        raise DimensionError(f"orthonormalize_columns: r={r} > m={m}, forma {q.shape}")

    for j in range(r):
        v = q[:, j]
        for _ in range(2):
            for k in range(j):
                v -= np.dot(q[:, k], v) * q[:, k]
        rjj = float(np.linalg.norm(v))
        if rjj < RANK_TOL:
            raise RankDeficiencyError(j, rjj, RANK_TOL)
        q[:, j] = v / rjj

    return q


def column_normalize(a) -> Matrix:
    """
    Escala cada columna a norma euclidiana unitaria.

    Raises:
        RankDeficiencyError: Si alguna columna tiene norma < 1e-300
    """
    a = as_matrix(a)
    norms = np.linalg.norm(a, axis=0)
    bad = np.flatnonzero(norms < NORM_FLOOR)
    if bad.size:
        j = int(bad[0])
        raise RankDeficiencyError(j, float(norms[j]), NORM_FLOOR, operation="column_normalize")
    return a / norms


def random_orthonormal(m: int, r: int, seed: int) -> Matrix:
    """
    Matriz m x r con columnas ortonormales, determinista para una semilla.
    QR de una gaussiana con signos fijados por la diagonal de R.
    """
    if r < 1 or m < 1 or r > m:
        raise DimensionError(f"random_orthonormal: se requiere 1 <= r <= m, recibido m={m}, r={r}")
    if seed < 0:
        raise ValueError(f"random_orthonormal: semilla negativa {seed}")

    rng = np.random.default_rng(seed)
    g = rng.standard_normal((m, r))
    q, rr = linalg.qr(g, mode='economic')
    signs = np.sign(np.diag(rr))
    signs[signs == 0] = 1.0
    return np.ascontiguousarray(q * signs)
