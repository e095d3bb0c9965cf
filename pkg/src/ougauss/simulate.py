"""Exact-in-law sampling of the noise and construction of the OU path.

The noise values ``G_{t_1}, ..., G_{t_n}`` are drawn as ``L z`` with ``L``
the Cholesky factor of the Gram matrix.  The factor is computed once per
``(spec, grid)`` and shared read-only across replications.  Replication
``r`` of base seed ``b`` always draws from the stream
``SeedSequence(b, spawn_key=(r,))``, so results do not depend on how the
replications are scheduled.
"""

from __future__ import annotations

import csv
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterDomainError, SimulationError
from .kernels import KernelSpec, gram_matrix

__all__ = [
    "TimeGrid",
    "GaussianPath",
    "OUPath",
    "replication_rng",
    "cholesky_factor",
    "sample_gaussian_path",
    "sample_gaussian_paths",
    "build_ou_path",
    "ou_from_noise",
    "refine_path",
    "write_path_csv",
    "read_path_csv",
    "MAX_GRID",
]

log = logging.getLogger(__name__)

MAX_GRID = 2**14
JITTERS = (0.0, 1e-12, 1e-10, 1e-8)


@dataclass(frozen=True)
class TimeGrid:
    n: int
    delta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterDomainError(f"grid needs n >= 1 steps, got {self.n}")
        if not self.delta > 0:
            raise ParameterDomainError(f"grid step must be positive, got {self.delta}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def T(self) -> float:
        return self.n * self.delta

    @property
    def points(self) -> np.ndarray:
        return self.delta * np.arange(self.n + 1)


@dataclass(frozen=True, eq=False)
class GaussianPath:
    grid: TimeGrid
    g_values: np.ndarray
    seed: int | None
    spec: KernelSpec | None


@dataclass(frozen=True, eq=False)
class OUPath:
    grid: TimeGrid
    x_values: np.ndarray
    theta: float | None
    source: GaussianPath | None = None
    z_values: np.ndarray | None = None
    zeta_values: np.ndarray | None = None


def replication_rng(base_seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(base_seed), spawn_key=(int(replication),)))


_factor_cache: dict[tuple, np.ndarray] = {}
_factor_lock = threading.Lock()


def _factorize(K: np.ndarray) -> np.ndarray:
    top = float(np.max(np.diag(K))) if K.size else 0.0
    for j in JITTERS:
        try:
            L = np.linalg.cholesky(K + j * top * np.eye(len(K)) if j else K)
            if j:
                log.info("Cholesky needed diagonal jitter %g x max diagonal", j)
            return L
        except np.linalg.LinAlgError:
            continue
    lam = float(np.linalg.eigvalsh(K).min())
    raise SimulationError(f"Gram matrix not factorizable after jitter; minimum eigenvalue {lam:.3e}")


def cholesky_factor(spec: KernelSpec, grid: TimeGrid, allow_large: bool = False) -> np.ndarray:
    """Lower Cholesky factor of ``[R(t_i, t_j)]_{i,j >= 1}`` (cached)."""
    if grid.n > MAX_GRID and not allow_large:
        raise ParameterDomainError(f"grid of {grid.n} steps exceeds the cap {MAX_GRID}; pass allow_large")
    key = (spec, grid.n, grid.delta)
    with _factor_lock:
        L = _factor_cache.get(key)
        if L is None:
            L = _factorize(gram_matrix(spec, grid.points[1:]))
            L.setflags(write=False)
            if len(_factor_cache) > 16:
                _factor_cache.clear()
            _factor_cache[key] = L
    return L


def sample_gaussian_paths(spec: KernelSpec, grid: TimeGrid, base_seed: int, n_reps: int,
                          start: int = 0, workers: int = 1) -> np.ndarray:
    """Noise paths for replications ``start .. start + n_reps - 1``; shape ``(n_reps, n + 1)``."""
    L = cholesky_factor(spec, grid)
    reps = range(start, start + n_reps)

    # one matrix-vector product per replication: a batched product would let
    # BLAS round differently depending on the batch shape
    def chunk(idx):
        return np.stack([L @ replication_rng(base_seed, r).standard_normal(grid.n) for r in idx])

    if workers > 1 and n_reps > 1:
        parts = np.array_split(np.arange(start, start + n_reps), workers)
        with ThreadPoolExecutor(workers) as ex:
            blocks = list(ex.map(chunk, [p for p in parts if len(p)]))
        G = np.vstack(blocks)
    else:
        G = chunk(reps)
    out = np.zeros((n_reps, grid.n + 1))
    out[:, 1:] = G
    return out


def sample_gaussian_path(spec: KernelSpec, grid: TimeGrid, seed: int) -> GaussianPath:
    """One path; identical to replication 0 of ``sample_gaussian_paths`` with the same seed."""
    g = sample_gaussian_paths(spec, grid, seed, 1)[0]
    return GaussianPath(grid, g, seed, spec)


def _log_scale(theta: float, t: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``exp(theta t) * values`` as ``sign * exp(theta t + log|values|)``."""
    with np.errstate(divide="ignore"):
        mag = np.exp(theta * t + np.log(np.abs(values)))
    return np.sign(values) * mag


def ou_from_noise(G: np.ndarray, grid: TimeGrid, theta: float, rule: str = "left"
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(X, zeta, Z)`` on the grid from noise values; works on 1-D or batched 2-D input.

    ``zeta`` uses left-point (or midpoint) Riemann-Stieltjes sums of
    ``e^(-theta s) dG_s``, ``X = e^(theta t) zeta`` and ``Z`` is the
    trapezoidal integral of ``e^(-theta s) G_s``.
    """
    if theta <= 0:
        raise ParameterDomainError("theta must be positive")
    t = grid.points
    dG = np.diff(G, axis=-1)
    if rule == "left":
        w = np.exp(-theta * t[:-1])
    elif rule == "midpoint":
        w = np.exp(-theta * (t[:-1] + 0.5 * grid.delta))
    else:
        raise ValueError(f"unknown rule {rule!r}")
    zeta = np.zeros(G.shape)
    zeta[..., 1:] = np.cumsum(w * dG, axis=-1)
    X = _log_scale(theta, t, zeta)
    h = np.exp(-theta * t) * G
    Z = np.zeros(G.shape)
    Z[..., 1:] = np.cumsum(0.5 * grid.delta * (h[..., 1:] + h[..., :-1]), axis=-1)
    return X, zeta, Z


def build_ou_path(g: GaussianPath, theta: float, rule: str = "left") -> OUPath:
    X, zeta, Z = ou_from_noise(g.g_values, g.grid, theta, rule)
    return OUPath(g.grid, X, theta, g, Z, zeta)


def alternative_representation(path: OUPath) -> np.ndarray:
    """``G_t + theta e^(theta t) Z_t`` for comparison with ``x_values``."""
    t = path.grid.points
    return path.source.g_values + path.theta * _log_scale(path.theta, t, path.z_values)


def refine_path(g: GaussianPath, factor: int, seed: int) -> GaussianPath:
    """Fill ``factor - 1`` new points per step by sampling the Gaussian bridge.

    Conditioning is done on the existing values through the Schur complement
    of the Gram matrix on the refined grid; original values are kept exactly.
    """
    if factor < 2:
        raise ParameterDomainError("refinement factor must be at least 2")
    if g.spec is None:
        raise ParameterDomainError("refinement needs the kernel of the path")
    fine = TimeGrid(g.grid.n * factor, g.grid.delta / factor)
    t = fine.points
    idx = np.arange(fine.n + 1)
    old = idx[idx % factor == 0][1:]
    new = idx[idx % factor != 0]
    Lo = cholesky_factor(g.spec, g.grid)
    K_no = _cross(g.spec, t[new], t[old])
    # A = K_no K_oo^{-1}, via the cached factor of K_oo
    A = np.linalg.solve(Lo.T, np.linalg.solve(Lo, K_no.T)).T
    cond_cov = gram_matrix(g.spec, t[new]) - A @ K_no.T
    cond_cov = 0.5 * (cond_cov + cond_cov.T)
    Lc = _factorize(cond_cov)
    z = replication_rng(seed, 0).standard_normal(len(new))
    values = np.zeros(fine.n + 1)
    values[old] = g.g_values[1:]
    values[new] = A @ g.g_values[1:] + Lc @ z
    return GaussianPath(fine, values, seed, g.spec)


def _cross(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    from .kernels import eval_kernel

    return eval_kernel(spec, a[:, None], b[None, :])


def conditional_variances(g: GaussianPath, factor: int) -> np.ndarray:
    """Variances of the bridge at the new points of a ``factor`` refinement."""
    fine = TimeGrid(g.grid.n * factor, g.grid.delta / factor)
    t = fine.points
    idx = np.arange(fine.n + 1)
    old = idx[idx % factor == 0][1:]
    new = idx[idx % factor != 0]
    Lo = cholesky_factor(g.spec, g.grid)
    K_no = _cross(g.spec, t[new], t[old])
    W = np.linalg.solve(Lo, K_no.T)
    return np.diag(gram_matrix(g.spec, t[new])) - np.sum(W * W, axis=0)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_path_csv(path: OUPath, dest: str | Path) -> None:
    """Columns ``t, G, X, zeta, Z``; unavailable columns are left empty."""
    t = path.grid.points
    cols = {
        "G": None if path.source is None else path.source.g_values,
        "X": path.x_values,
        "zeta": path.zeta_values,
        "Z": path.z_values,
    }
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *cols])
        for i, ti in enumerate(t):
            w.writerow([_fmt(ti)] + ["" if v is None else _fmt(v[i]) for v in cols.values()])


def read_path_csv(src: str | Path) -> OUPath:
    """Read an observed path; needs ``t`` and ``X`` columns on a uniform grid from 0."""
    with open(src, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "t" not in rows[0] or "X" not in rows[0]:
        raise ParameterDomainError("path CSV needs 't' and 'X' columns")
    t = np.array([float(r["t"]) for r in rows])
    X = np.array([float(r["X"]) for r in rows])
    if len(t) < 2 or t[0] != 0.0:
        raise ParameterDomainError("path must start at t = 0 with at least two points")
    steps = np.diff(t)
    delta = float(t[-1] / (len(t) - 1))
    if np.max(np.abs(steps - delta)) > 1e-9 * max(1.0, t[-1]):
        raise ParameterDomainError("observation times must be equally spaced")
    return OUPath(TimeGrid(len(t) - 1, delta), X, None)
