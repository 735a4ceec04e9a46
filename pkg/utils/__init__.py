"""
Utilidades para el Dashboard de CurvaDion
"""

from .data_loader import load_run, load_steps, load_comparison, get_estadisticas_run, sync_events
from .styles import policy_badge, policy_label, sync_badge, check_badge
