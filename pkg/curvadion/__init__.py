"""
CurvaDion: optimizador Dion con sincronizacion adaptativa por RMMC
sobre un cluster data-parallel simulado.
"""

from .curvlab import convergence_order_study, directional_curvature, equilibrium_bias, theorem_residual
from .dion import DionConfig, LayerState, dion_sync_step, local_step, sync_layer_replicas
from .distsim import CommLedger, RunSummary, StepRecord, simulate
from .exceptions import (
    ConfigError, CurvaDionError, DimensionError, NumericalError, RankDeficiencyError, StepSizeError,
)
from .netcost import NetworkProfile, TimingModel, project_table, speedup
from .trigger import Adaptive, EveryStep, RmmcConfig, Scheduled, decide, layer_rmmc

__version__ = "0.1.0"
