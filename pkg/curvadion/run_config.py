"""
RunConfig: modelos pydantic del archivo YAML de corrida y su carga.

Los defaults vienen de config.py; el YAML vacio reproduce el regimen de
referencia (eta 0.02, mu 0.95, weight decay 0.01, rango 0.125).
"""

from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import (
    COMM_DEFAULTS, DION_DEFAULTS, PERFILES_RED, RESULTS_DIR, RMMC_DEFAULTS, RUN_DEFAULTS,
    TAU_SWEEP, THEOREM_DEFAULTS, TIMING_DEFAULTS,
)

from . import problems as pb
from .dion import DionConfig
from .exceptions import ConfigError
from .netcost import NetworkProfile, TimingModel
from .trigger import Adaptive, EveryStep, RmmcConfig, Scheduled, SyncPolicy


class _Modelo(BaseModel):
    model_config = ConfigDict(extra='forbid')


# ==============================================================================
# PROBLEMAS
# ==============================================================================

class QuadraticSpec(_Modelo):
    kind: Literal['quadratic'] = 'quadratic'
    shape: Tuple[int, int] = (8, 6)
    eig_min: float = Field(0.1, gt=0)
    eig_max: float = Field(1.0, gt=0)
    noise_sigma: float = Field(0.0, ge=0)
    matrix_seed: int = Field(0, ge=0)

    @model_validator(mode='after')
    def _rango(self):
        if self.eig_max < self.eig_min:
            raise ValueError('eig_max debe ser >= eig_min')
        if min(self.shape) < 1:
            raise ValueError('shape debe tener dimensiones >= 1')
        return self

    def build(self) -> pb.Problem:
        d = self.shape[0] * self.shape[1]
        A = pb.spd_from_spectrum(np.linspace(self.eig_min, self.eig_max, d), self.matrix_seed)
        return pb.quadratic_problem(A, None, self.noise_sigma, shape=self.shape)


class CurvatureSwitchConfig(_Modelo):
    kind: Literal['curvature_switch'] = 'curvature_switch'
    shape: Tuple[int, int] = (4, 3)
    flat_eigs: Tuple[float, float] = (0.01, 0.1)
    sharp_eigs: Tuple[float, float] = (1.0, 10.0)
    switch_steps: List[int] = Field(default_factory=lambda: [40, 80, 120, 160])
    noise_sigma: float = Field(0.01, ge=0)
    matrix_seed: int = Field(0, ge=0)
    tilt: float = Field(0.0, ge=0)
    shard_bias: float = Field(0.0, ge=0)
    x0: Literal['random', 'sharp_minimizer'] = 'random'

    @model_validator(mode='after')
    def _orden(self):
        if self.switch_steps != sorted(self.switch_steps) or any(s < 1 for s in self.switch_steps):
            raise ValueError('switch_steps debe ser creciente y >= 1')
        if min(self.flat_eigs + self.sharp_eigs) <= 0:
            raise ValueError('los autovalores deben ser > 0')
        return self

    def build(self) -> pb.Problem:
        d = self.shape[0] * self.shape[1]
        spec = pb.CurvatureSwitchSpec.default(d, self.switch_steps, self.matrix_seed,
                                              self.flat_eigs, self.sharp_eigs)
        b = pb.tilt_vector(d, self.tilt, self.matrix_seed) if self.tilt > 0 else None
        x0 = None
        if self.x0 == 'sharp_minimizer':
            b_vec = np.zeros(d) if b is None else b
            x0 = -np.linalg.solve(spec.A_sharp, b_vec)
        return pb.curvature_switch_problem(spec, self.noise_sigma, shape=self.shape, x0=x0, b=b,
                                           shard_bias=self.shard_bias, shard_seed=self.matrix_seed)


class TinyMlpSpec(_Modelo):
    kind: Literal['tiny_mlp'] = 'tiny_mlp'
    in_dim: int = Field(8, ge=1)
    hidden: int = Field(16, ge=1)
    out_dim: int = Field(4, ge=1)
    n_samples: int = Field(256, ge=1)
    batch_size: int = Field(32, ge=1)
    dataset_seed: int = Field(0, ge=0)

    def build(self) -> pb.Problem:
        return pb.tiny_mlp_problem(self.in_dim, self.hidden, self.out_dim, self.dataset_seed,
                                   n_samples=self.n_samples, batch_size=self.batch_size)


ProblemSpec = Annotated[Union[QuadraticSpec, CurvatureSwitchConfig, TinyMlpSpec],
                        Field(discriminator='kind')]


# ==============================================================================
# OPTIMIZADOR Y POLITICA
# ==============================================================================

class PolicySpec(_Modelo):
    kind: Literal['every_step', 'scheduled', 'adaptive'] = 'adaptive'
    tau: float = Field(RMMC_DEFAULTS['tau'], ge=0)
    epsilon: float = Field(RMMC_DEFAULTS['epsilon'], gt=0)
    interval: int = Field(RMMC_DEFAULTS['interval'], ge=1)

    def build(self) -> SyncPolicy:
        if self.kind == 'every_step':
            return EveryStep()
        if self.kind == 'scheduled':
            return Scheduled(self.interval)
        return Adaptive(RmmcConfig(tau=self.tau, epsilon=self.epsilon))


class DionSpec(_Modelo):
    eta: float = Field(DION_DEFAULTS['eta'], gt=0)
    mu: float = Field(DION_DEFAULTS['mu'], ge=0, lt=1)
    rank_fraction: float = Field(DION_DEFAULTS['rank_fraction'], gt=0, le=1)
    eta_local: Optional[float] = Field(DION_DEFAULTS['eta_local'], gt=0)
    weight_decay: float = Field(DION_DEFAULTS['weight_decay'], ge=0)
    power_iters: int = Field(DION_DEFAULTS['power_iters'], ge=1)
    warmup_frac: float = Field(DION_DEFAULTS['warmup_frac'], ge=0, le=1)
    warmdown_frac: float = Field(DION_DEFAULTS['warmdown_frac'], ge=0, le=1)

    def build(self) -> DionConfig:
        return DionConfig(**self.model_dump())


class CommSpec(_Modelo):
    convention: Literal['fullgrad', 'lowrank'] = COMM_DEFAULTS['convention']
    flag_bytes: int = Field(COMM_DEFAULTS['flag_bytes'], ge=0)
    full_sync_bytes: Optional[int] = Field(None, ge=1)


# ==============================================================================
# COMANDOS
# ==============================================================================

class CompareSpec(_Modelo):
    matched_budget: bool = True
    scheduled_interval: int = Field(RMMC_DEFAULTS['interval'], ge=1)
    window: int = Field(5, ge=0)
    seeds: List[Annotated[int, Field(ge=0)]] = Field(default_factory=list)


class TheoremProblemSpec(_Modelo):
    name: Optional[str] = None
    kind: Literal['isotropic', 'diagonal', 'linear'] = 'isotropic'
    dim: int = Field(4, ge=1)
    lam: float = Field(1.0, ge=0)
    diag: List[float] = Field(default_factory=lambda: [1.0, 100.0])
    scale: float = Field(1.0, gt=0)
    x0_scale: float = Field(1e-3, gt=0)
    gate: bool = True
    note: Optional[str] = None

    @property
    def label(self) -> str:
        return self.name or self.kind

    def build(self) -> pb.Problem:
        if self.kind == 'isotropic':
            return pb.isotropic_quadratic(self.dim, self.lam * self.scale, self.x0_scale)
        if self.kind == 'diagonal':
            return pb.diagonal_quadratic(self.diag, self.scale, self.x0_scale)
        return pb.linear_problem(np.ones(self.dim))


NOTA_ISOTROPICA = ("dinamica exactamente 1-D: el residuo queda en redondeo (~1e-17) y las razones "
                   "salen NA; ver DESIGN.md, estudio de orden")
NOTA_DIAG_SIN_ESCALA = ("desviacion conocida: con eta*L ~ 1 fuera del regimen cuasi-estatico las "
                        "razones quedan por debajo de min_ratio (~2.9 y ~2.4); no decide passed")


def _default_theorem_problems() -> List[TheoremProblemSpec]:
    return [
        TheoremProblemSpec(name='isotropic', kind='isotropic', dim=4, lam=1.0, note=NOTA_ISOTROPICA),
        TheoremProblemSpec(name='diag_1e-5_1e-3', kind='diagonal', diag=[1.0, 100.0], scale=1e-5),
        TheoremProblemSpec(name='diag_1_100', kind='diagonal', diag=[1.0, 100.0], scale=1.0,
                           gate=False, note=NOTA_DIAG_SIN_ESCALA),
    ]


class TheoremSpec(_Modelo):
    problems: List[TheoremProblemSpec] = Field(default_factory=_default_theorem_problems, min_length=1)
    etas: List[float] = Field(default_factory=lambda: list(THEOREM_DEFAULTS['etas']))
    mu: float = Field(THEOREM_DEFAULTS['mu'], ge=0, lt=1)
    steps: int = Field(THEOREM_DEFAULTS['steps'], ge=2)
    burn_in: int = Field(THEOREM_DEFAULTS['burn_in'], ge=0)
    oracle: Literal['analytic', 'finite_difference'] = 'analytic'
    fd_eps: float = Field(THEOREM_DEFAULTS['fd_eps'], gt=0)
    measure_on: Literal['momentum', 'buffer'] = 'momentum'
    min_ratio: float = Field(THEOREM_DEFAULTS['min_ratio'], gt=0)


class NetworkProfileSpec(_Modelo):
    name: str
    t_sync_ms: float
    latency_ms: Optional[float] = None
    bandwidth_gbps: Optional[float] = None

    def build(self) -> NetworkProfile:
        return NetworkProfile(**self.model_dump())


def _default_profiles() -> List[NetworkProfileSpec]:
    return [NetworkProfileSpec(name=name, **vals) for name, vals in PERFILES_RED.items()]


class ProjectSpec(_Modelo):
    # sin cotas aqui: TimingModel rechaza negativos con su propio mensaje
    t_compute_ms: float = TIMING_DEFAULTS['t_compute_ms']
    t_opt_ms: float = TIMING_DEFAULTS['t_opt_ms']
    t_flag_ms: float = TIMING_DEFAULTS['t_flag_ms']
    sync_rate: float = TIMING_DEFAULTS['sync_rate']
    steps_total: int = Field(TIMING_DEFAULTS['steps_total'], ge=1)
    profiles: List[NetworkProfileSpec] = Field(default_factory=_default_profiles)

    def timing(self) -> TimingModel:
        return TimingModel(self.t_compute_ms, self.t_opt_ms, self.t_flag_ms, 0.0, self.sync_rate)


class SweepSpec(_Modelo):
    taus: List[Annotated[float, Field(ge=0)]] = Field(default_factory=lambda: list(TAU_SWEEP), min_length=1)


class RunConfig(_Modelo):
    problem: ProblemSpec = Field(default_factory=QuadraticSpec)
    n_workers: int = Field(RUN_DEFAULTS['n_workers'], ge=1)
    policy: PolicySpec = Field(default_factory=PolicySpec)
    dion: DionSpec = Field(default_factory=DionSpec)
    steps: int = Field(RUN_DEFAULTS['steps'], ge=1)
    seed: int = Field(RUN_DEFAULTS['seed'], ge=0)
    output_dir: Path = RESULTS_DIR / 'run'
    comm: CommSpec = Field(default_factory=CommSpec)
    parallel: bool = False
    compare: CompareSpec = Field(default_factory=CompareSpec)
    theorem: TheoremSpec = Field(default_factory=TheoremSpec)
    project: ProjectSpec = Field(default_factory=ProjectSpec)
    sweep: SweepSpec = Field(default_factory=SweepSpec)

    @model_validator(mode='after')
    def _warm(self):
        if self.dion.warmup_frac + self.dion.warmdown_frac > 1:
            raise ValueError('dion.warmup_frac + dion.warmdown_frac debe ser <= 1')
        return self


def _mensajes(exc: ValidationError) -> List[str]:
    mensajes = []
    for err in exc.errors():
        loc = '.'.join(str(p) for p in err['loc']) or '<raiz>'
        mensajes.append(f"{loc}: {err['msg']}")
    return mensajes


def parse_run_config(data: Optional[dict]) -> RunConfig:
    """Valida un dict ya cargado; None equivale a {}."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("la configuracion debe ser un mapeo clave-valor en la raiz")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError("configuracion invalida", _mensajes(exc)) from exc


def load_run_config(path: Optional[Path]) -> RunConfig:
    """
    Carga y valida el YAML de corrida.

    Args:
        path: Ruta al YAML (None -> todos los defaults)

    Returns:
        RunConfig

    Raises:
        FileNotFoundError: Si el archivo no existe
        ConfigError: YAML mal formado o campos invalidos
    """
    if path is None:
        return parse_run_config({})
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No se encontro: {path}")
    try:
        with open(path, encoding='utf-8') as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML mal formado en {path}", [str(exc)]) from exc
    return parse_run_config(data)
