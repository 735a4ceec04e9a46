"""
Problemas de prueba deterministas con curvatura conocida o computable

- QuadraticProblem: F(x) = 1/2 x^T A x + b^T x con ruido gaussiano opcional
- CurvatureSwitchProblem: alterna entre A_flat y A_sharp en pasos fijos
- TinyMlpProblem: MLP de dos capas con squared-ReLU y MSE, backprop manual

Los parametros de un problema son una lista de matrices, una por capa. Para
cuadraticas el vector x se guarda en una sola capa m x n (x = vec(X) en
orden fila mayor). Todos los parametros de estos testbeds son construcciones
propias.
"""

from abc import ABC, abstractmethod
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import TOLERANCIAS

from .exceptions import DimensionError
from .matrixcore import Matrix, random_orthonormal

Params = List[Matrix]


@dataclass(frozen=True)
class Batch:
    """
    Descriptor de lote: paso global, worker y semilla de la corrida.
    Los problemas derivan su ruido de (seed, worker, step), asi que la
    evaluacion es una funcion pura de (params, batch).
    """

    step: int
    worker: int = 0
    n_workers: int = 1
    seed: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.worker, self.step])


class Problem(ABC):
    """Interfaz comun de los problemas del simulador y del laboratorio."""

    layer_shapes: List[Tuple[int, int]]
    has_hvp: bool = False
    curvature_bound: Optional[float] = None

    @abstractmethod
    def loss(self, params: Params, batch: Optional[Batch] = None) -> float:
        ...

    @abstractmethod
    def gradient(self, params: Params, batch: Optional[Batch] = None) -> Params:
        ...

    @abstractmethod
    def initial_params(self, seed: int = 0) -> Params:
        ...

    def hvp(self, params: Params, v: np.ndarray, batch: Optional[Batch] = None) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} no expone producto Hessiano-vector")

    @property
    def dim(self) -> int:
        return sum(m * n for m, n in self.layer_shapes)

    def flatten(self, params: Params) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=np.float64).ravel() for p in params])

    def unflatten(self, x: np.ndarray) -> Params:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionError(f"unflatten: vector de forma {x.shape}, se esperaba ({self.dim},)")
        params, offset = [], 0
        for m, n in self.layer_shapes:
            params.append(x[offset:offset + m * n].reshape(m, n).copy())
            offset += m * n
        return params

    def flat_gradient(self, x: np.ndarray, batch: Optional[Batch] = None) -> np.ndarray:
        return self.flatten(self.gradient(self.unflatten(x), batch))

    def flat_loss(self, x: np.ndarray, batch: Optional[Batch] = None) -> float:
        return self.loss(self.unflatten(x), batch)

    def check_params(self, params: Params) -> None:
        shapes = [tuple(np.shape(p)) for p in params]
        if shapes != [tuple(s) for s in self.layer_shapes]:
            raise DimensionError(f"parametros con formas {shapes}, se esperaba {self.layer_shapes}")


def _check_symmetric_psd(A: np.ndarray, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name}: se esperaba matriz cuadrada, forma {A.shape}")
    if not np.allclose(A, A.T, rtol=0.0, atol=TOLERANCIAS['symmetry']):
        raise ValueError(f"{name}: matriz no simetrica (tolerancia {TOLERANCIAS['symmetry']})")
    eig_min = float(linalg.eigvalsh(A)[0])
    if eig_min < -TOLERANCIAS['psd']:
        raise ValueError(f"{name}: matriz no semidefinida positiva (autovalor minimo {eig_min:.3e})")
    return A


def spd_from_spectrum(eigenvalues: Sequence[float], seed: int) -> np.ndarray:
    """Q diag(eigenvalues) Q^T con base ortonormal sembrada, simetrizada exacta."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    Q = random_orthonormal(lam.size, lam.size, seed)
    A = (Q * lam) @ Q.T
    return 0.5 * (A + A.T)


class QuadraticProblem(Problem):
    """
    F(x) = 1/2 x^T A x + b^T x. El lote agrega ruido gaussiano de escala
    noise_sigma al gradiente (la perdida no lleva ruido); batch=None es la
    evaluacion exacta. hvp(v) = A v.
    """

    has_hvp = True

    def __init__(self, A, b=None, noise_sigma: float = 0.0,
                 shape: Optional[Tuple[int, int]] = None, x0=None):
        A = _check_symmetric_psd(A)
        d = A.shape[0]
        b = np.zeros(d) if b is None else np.asarray(b, dtype=np.float64).ravel()
        if b.shape != (d,):
            raise DimensionError(f"b: forma {b.shape}, se esperaba ({d},)")
        if noise_sigma < 0:
            raise ValueError(f"noise_sigma debe ser >= 0 (recibido {noise_sigma})")
        shape = (d, 1) if shape is None else (int(shape[0]), int(shape[1]))
        if shape[0] * shape[1] != d:
            raise DimensionError(f"shape {shape} incompatible con dimension {d}")

        self.A = A
        self.b = b
        self.noise_sigma = float(noise_sigma)
        self.layer_shapes = [shape]
        self.x0 = None if x0 is None else np.asarray(x0, dtype=np.float64).ravel()
        if self.x0 is not None and self.x0.shape != (d,):
            raise DimensionError(f"x0: forma {self.x0.shape}, se esperaba ({d},)")
        self.curvature_bound = self._bound(A)

    @staticmethod
    def _bound(A: np.ndarray) -> float:
        return max(0.0, float(linalg.eigvalsh(A)[-1]))

    def matrix_for(self, batch: Optional[Batch]) -> np.ndarray:
        return self.A

    def _x(self, params: Params) -> np.ndarray:
        self.check_params(params)
        return self.flatten(params)

    def loss(self, params: Params, batch: Optional[Batch] = None) -> float:
        x = self._x(params)
        A = self.matrix_for(batch)
        return float(0.5 * x @ (A @ x) + self.b @ x)

    def gradient(self, params: Params, batch: Optional[Batch] = None) -> Params:
        x = self._x(params)
        g = self.matrix_for(batch) @ x + self.b
        if batch is not None and self.noise_sigma > 0:
            g = g + self.noise_sigma * batch.rng().standard_normal(g.shape[0])
        return self.unflatten(g)

    def hvp(self, params: Params, v: np.ndarray, batch: Optional[Batch] = None) -> np.ndarray:
        return self.matrix_for(batch) @ np.asarray(v, dtype=np.float64)

    def initial_params(self, seed: int = 0) -> Params:
        if self.x0 is not None:
            return self.unflatten(self.x0)
        rng = np.random.default_rng([seed, 0x51])
        return self.unflatten(rng.standard_normal(self.dim))

    def minimizer(self) -> np.ndarray:
        """x* = -A^{-1} b (requiere A definida positiva)."""
        return -linalg.solve(self.A, self.b, assume_a='pos')

    def minimum_value(self) -> float:
        return float(-0.5 * self.b @ linalg.solve(self.A, self.b, assume_a='pos'))


def quadratic_problem(A, b=None, noise_sigma: float = 0.0,
                      shape: Optional[Tuple[int, int]] = None, x0=None) -> QuadraticProblem:
    return QuadraticProblem(A, b, noise_sigma, shape=shape, x0=x0)


def linear_problem(b, x0=None) -> QuadraticProblem:
    """F(x) = b^T x: curvatura nula, gradiente constante."""
    b = np.asarray(b, dtype=np.float64).ravel()
    return QuadraticProblem(np.zeros((b.size, b.size)), b, 0.0, x0=x0)


@dataclass(frozen=True)
class CurvatureSwitchSpec:
    A_flat: np.ndarray
    A_sharp: np.ndarray
    switch_steps: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        flat = _check_symmetric_psd(self.A_flat, "A_flat")
        sharp = _check_symmetric_psd(self.A_sharp, "A_sharp")
        if flat.shape != sharp.shape:
            raise DimensionError(f"A_flat {flat.shape} y A_sharp {sharp.shape} difieren")
        for nombre, A in (("A_flat", flat), ("A_sharp", sharp)):
            if float(linalg.eigvalsh(A)[0]) <= 0:
                raise ValueError(f"{nombre}: el autovalor minimo debe ser > 0")
        steps = tuple(int(s) for s in self.switch_steps)
        if list(steps) != sorted(steps) or any(s < 1 for s in steps):
            raise ValueError(f"switch_steps debe ser creciente y >= 1: {steps}")
        object.__setattr__(self, 'A_flat', flat)
        object.__setattr__(self, 'A_sharp', sharp)
        object.__setattr__(self, 'switch_steps', steps)

    @classmethod
    def default(cls, dim: int, switch_steps: Sequence[int], seed: int = 0,
                flat_eigs: Tuple[float, float] = (0.01, 0.1),
                sharp_eigs: Tuple[float, float] = (1.0, 10.0)) -> "CurvatureSwitchSpec":
        """Espectros lineales en [0.01, 0.1] y [1, 10] con bases independientes."""
        flat = spd_from_spectrum(np.linspace(*flat_eigs, dim), seed)
        sharp = spd_from_spectrum(np.linspace(*sharp_eigs, dim), seed + 1)
        return cls(flat, sharp, tuple(switch_steps))


class CurvatureSwitchProblem(QuadraticProblem):
    """
    Cuadratica cuya matriz activa alterna tras cada paso de switch_steps:
    con un cambio en s, los pasos <= s usan A_flat y el paso s+1 ya usa
    A_sharp.

    shard_bias > 0 desplaza el minimo que ve cada worker: el gradiente del
    worker w es A (x - d_w) + b con sum_w d_w = 0, de modo que el promedio
    sobre workers es el gradiente exacto y la perdida no cambia. El
    desplazamiento pesa con la curvatura activa: casi nulo en la fase plana,
    fuerte en la aguda.
    """

    def __init__(self, spec: CurvatureSwitchSpec, noise_sigma: float = 0.0,
                 b=None, shape: Optional[Tuple[int, int]] = None, x0=None,
                 shard_bias: float = 0.0, shard_seed: int = 0):
        super().__init__(spec.A_flat, b, noise_sigma, shape=shape, x0=x0)
        if shard_bias < 0:
            raise ValueError(f"shard_bias debe ser >= 0 (recibido {shard_bias})")
        self.spec = spec
        self.shard_bias = float(shard_bias)
        self.shard_seed = int(shard_seed)
        self.curvature_bound = max(self._bound(spec.A_flat), self._bound(spec.A_sharp))

    def switches_before(self, step: int) -> int:
        return bisect_left(self.spec.switch_steps, step)

    def matrix_for(self, batch: Optional[Batch]) -> np.ndarray:
        step = 0 if batch is None else batch.step
        return self.spec.A_sharp if self.switches_before(step) % 2 else self.spec.A_flat

    def shard_offsets(self, n_workers: int) -> np.ndarray:
        """Desplazamientos d_w (n_workers x dim) centrados; ceros si shard_bias = 0."""
        rng = np.random.default_rng([self.shard_seed, 0x5A4D, n_workers])
        D = rng.standard_normal((n_workers, self.dim))
        return self.shard_bias * (D - D.mean(axis=0))

    def gradient(self, params: Params, batch: Optional[Batch] = None) -> Params:
        grads = super().gradient(params, batch)
        if batch is None or self.shard_bias == 0:
            return grads
        shift = self.shard_offsets(batch.n_workers)[batch.worker]
        return self.unflatten(self.flatten(grads) - self.matrix_for(batch) @ shift)

    def sharp_minimizer(self) -> np.ndarray:
        return -linalg.solve(self.spec.A_sharp, self.b, assume_a='pos')


def curvature_switch_problem(spec: CurvatureSwitchSpec, noise_sigma: float = 0.0,
                             shape: Optional[Tuple[int, int]] = None, x0=None, b=None,
                             shard_bias: float = 0.0, shard_seed: int = 0) -> CurvatureSwitchProblem:
    return CurvatureSwitchProblem(spec, noise_sigma, b=b, shape=shape, x0=x0,
                                  shard_bias=shard_bias, shard_seed=shard_seed)


def tilt_vector(dim: int, norm: float, seed: int = 0) -> np.ndarray:
    """Vector b de norma `norm` en una direccion aleatoria fija por semilla."""
    v = np.random.default_rng([seed, 0xB1A5]).standard_normal(dim)
    return norm * v / np.linalg.norm(v)


def _sq_relu(h: np.ndarray) -> np.ndarray:
    return np.maximum(h, 0.0) ** 2


class TinyMlpProblem(Problem):
    """
    y = W2 relu(W1 x)^2, perdida 1/(2N) sum ||y - t||^2.

    Dataset sintetico fijo (columnas = muestras) generado por una red
    maestra de la misma arquitectura. El worker w usa el fragmento de
    muestras con indice % n_workers == w y cada paso sortea batch_size
    muestras de su fragmento sin reemplazo.
    """

    def __init__(self, in_dim: int = 8, hidden: int = 16, out_dim: int = 4,
                 dataset_seed: int = 0, n_samples: int = 256, batch_size: int = 32,
                 target_noise: float = 0.01, inputs=None, targets=None):
        if min(in_dim, hidden, out_dim, n_samples, batch_size) < 1:
            raise ValueError("TinyMlpProblem: dimensiones y tamanos deben ser >= 1")
        self.in_dim, self.hidden, self.out_dim = in_dim, hidden, out_dim
        self.batch_size = batch_size
        self.layer_shapes = [(hidden, in_dim), (out_dim, hidden)]

        if inputs is None or targets is None:
            rng = np.random.default_rng([dataset_seed, 0xDA7A])
            inputs = rng.standard_normal((in_dim, n_samples))
            W1 = rng.standard_normal((hidden, in_dim)) / np.sqrt(in_dim)
            W2 = rng.standard_normal((out_dim, hidden)) / np.sqrt(hidden)
            targets = W2 @ _sq_relu(W1 @ inputs)
            targets = targets + target_noise * rng.standard_normal(targets.shape)
        self.inputs = np.asarray(inputs, dtype=np.float64)
        self.targets = np.asarray(targets, dtype=np.float64)
        if self.inputs.shape[0] != in_dim or self.targets.shape[0] != out_dim \
                or self.inputs.shape[1] != self.targets.shape[1]:
            raise DimensionError(
                f"dataset: inputs {self.inputs.shape}, targets {self.targets.shape} "
                f"no corresponden a in_dim={in_dim}, out_dim={out_dim}"
            )

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[1]

    def batch_indices(self, batch: Optional[Batch]) -> np.ndarray:
        if batch is None:
            return np.arange(self.n_samples)
        shard = np.arange(batch.worker, self.n_samples, max(1, batch.n_workers))
        if shard.size == 0:
            shard = np.arange(self.n_samples)
        size = min(self.batch_size, shard.size)
        return np.sort(batch.rng().choice(shard, size=size, replace=False))

    def _forward(self, params: Params, idx: np.ndarray):
        self.check_params(params)
        W1, W2 = params
        x = self.inputs[:, idx]
        h = W1 @ x
        a = _sq_relu(h)
        y = W2 @ a
        return x, h, a, y - self.targets[:, idx]

    def loss(self, params: Params, batch: Optional[Batch] = None) -> float:
        idx = self.batch_indices(batch)
        *_, err = self._forward(params, idx)
        return float(0.5 * np.sum(err ** 2) / idx.size)

    def gradient(self, params: Params, batch: Optional[Batch] = None) -> Params:
        idx = self.batch_indices(batch)
        x, h, a, err = self._forward(params, idx)
        W2 = params[1]
        dy = err / idx.size
        dW2 = dy @ a.T
        dh = (W2.T @ dy) * (2.0 * np.maximum(h, 0.0))
        dW1 = dh @ x.T
        return [dW1, dW2]

    def initial_params(self, seed: int = 0) -> Params:
        rng = np.random.default_rng([seed, 0x31])
        return [
            rng.standard_normal((self.hidden, self.in_dim)) / np.sqrt(self.in_dim),
            rng.standard_normal((self.out_dim, self.hidden)) / np.sqrt(self.hidden),
        ]


def tiny_mlp_problem(in_dim: int = 8, hidden: int = 16, out_dim: int = 4,
                     dataset_seed: int = 0, **kwargs) -> TinyMlpProblem:
    return TinyMlpProblem(in_dim, hidden, out_dim, dataset_seed=dataset_seed, **kwargs)


# ==============================================================================
# PROBLEMAS DEL LABORATORIO DEL TEOREMA
# ==============================================================================

def isotropic_quadratic(dim: int = 4, lam: float = 1.0, x0_scale: float = 1e-3) -> QuadraticProblem:
    """F = 1/2 lam ||x||^2, arranque en la direccion (1, 1, ..., 1)."""
    x0 = np.ones(dim) / np.sqrt(dim) * x0_scale
    return QuadraticProblem(lam * np.eye(dim), np.zeros(dim), 0.0, x0=x0)


def diagonal_quadratic(diag: Sequence[float], scale: float = 1.0,
                       x0_scale: float = 1e-3) -> QuadraticProblem:
    """
    F = 1/2 x^T (scale * diag) x. El arranque x0 ~ diag^{-1} 1 hace que el
    gradiente inicial apunte a (1, ..., 1), a medio camino entre ejes
    propios de curvatura distinta.
    """
    d = np.asarray(diag, dtype=np.float64)
    if np.any(d <= 0) or scale <= 0:
        raise ValueError("diagonal_quadratic: diagonal y escala deben ser > 0")
    x0 = 1.0 / d
    x0 = x0 / np.linalg.norm(x0) * x0_scale
    return QuadraticProblem(np.diag(scale * d), np.zeros(d.size), 0.0, x0=x0)
