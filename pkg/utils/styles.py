"""
Badges HTML para politicas de sincronizacion y pasos sincronizados
"""

from pathlib import Path
from typing import Any, Dict

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import COLORES_POLITICA, COLORES_SYNC


def _badge(texto: str, color: str, texto_color: str = 'white') -> str:
    return (
        f"<span style='background-color: {color}; color: {texto_color}; "
        f"padding: 2px 8px; border-radius: 4px; font-size: 12px; font-weight: bold;'>"
        f"{texto}</span>"
    )


def policy_label(policy: Dict[str, Any]) -> str:
    """
    Etiqueta legible de una politica serializada (summary.json['policy']).

    Args:
        policy: dict con 'kind' y sus parametros (tau, interval)

    Returns:
        str: p.ej. 'adaptive (tau=0.3)'
    """
    kind = policy.get('kind', '?')
    if kind == 'adaptive':
        return f"adaptive (tau={policy.get('tau')})"
    if kind == 'scheduled':
        return f"scheduled (H={policy.get('interval')})"
    return kind


def policy_badge(policy: Dict[str, Any]) -> str:
    color = COLORES_POLITICA.get(policy.get('kind'), '#808080')
    return _badge(policy_label(policy), color)


def sync_badge(synced: bool) -> str:
    color = COLORES_SYNC[int(bool(synced))]
    return _badge('SYNC' if synced else 'local', color, 'white' if synced else 'black')


def check_badge(ok: bool) -> str:
    """Verde si ok, rojo si no (criterios de la comparacion y del estudio de orden)."""
    return _badge('OK' if ok else 'FALLA', '#1a9641' if ok else '#d7191c')
