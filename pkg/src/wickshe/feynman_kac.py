"""Monte Carlo realization of the path-integral representation.

The field at (t, x) is the path average of u0(B_t^x) exp(Psi) where, for a
fixed noise realization W, the exponent of a path with local-time profile L is

    Psi = int L dW - (1/2) int L^2 da,

discretized on a uniform level grid as sum_i L_i dW_i - (da/2) sum_i L_i^2
with dW_i ~ N(0, da).  The local-time profile is the occupation histogram of
the discrete path skeleton, normalized so that da * sum_i L_i = t exactly.

Estimator bias: the histogram carries O(da) binning bias and the skeleton
O(sqrt(dt)) time-discretization bias; ensemble checks quote a stated budget
of these orders next to the Monte Carlo error instead of hiding them.

All ensemble routines stream paths in fixed-size blocks; each block draws
from its own counter-based substream and blocks are reduced in index order,
so estimates are bit-identical no matter how many worker threads ran them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import GaussianCoordinates, hermite_function_table
from .kernels import InitialCondition
from .streams import substream

__all__ = [
    "BrownianPath",
    "LocalTimeProfile",
    "NoiseRealization",
    "PsiSample",
    "simulate_path",
    "local_time",
    "occupation_functional",
    "psi_sample",
    "fk_conditional_estimate",
    "s_transform_mc",
    "s_transform_dx_mc",
    "build_level_grid",
    "sample_noise",
    "local_time_ensemble_stats",
    "psi_law_stats",
]

DEFAULT_BLOCK = 2000


@dataclass(frozen=True)
class BrownianPath:
    """Discrete skeleton of a Brownian path started at x on a uniform grid
    (the final step may be shorter so the grid ends exactly at t)."""

    t_grid: np.ndarray
    positions: np.ndarray
    start: float

    def __post_init__(self):
        if self.t_grid.shape != self.positions.shape:
            raise ValueError("time grid and positions must align")
        if self.positions[0] != self.start or self.t_grid[0] != 0.0:
            raise ValueError("path must start at (0, x)")


@dataclass(frozen=True)
class LocalTimeProfile:
    """Occupation density on a uniform level grid (values are time/length)."""

    level_grid: np.ndarray
    values: np.ndarray
    elapsed: float

    def __post_init__(self):
        if self.level_grid.shape != self.values.shape:
            raise ValueError("level grid and values must align")
        if np.any(self.values < 0):
            raise ValueError("local time values must be non-negative")

    @property
    def delta_a(self) -> float:
        return float(self.level_grid[1] - self.level_grid[0])

    def total_mass(self) -> float:
        """da * sum(values); equals the elapsed time by construction."""
        return float(self.delta_a * self.values.sum())

    def quadratic(self) -> float:
        """Discrete int L^2 da."""
        return float(self.delta_a * np.dot(self.values, self.values))


@dataclass(frozen=True)
class NoiseRealization:
    """One white-noise sample in its two views.

    ``grid_increments`` are dW over the level bins (variance da each);
    ``mode_coords`` hold W_{e_j} = sum_i e_j(a_i) dW_i.  ``provenance``
    records which view was sampled ("grid" here; a mode-first realization
    only determines the grid view inside the sampled mode span).
    """

    level_grid: np.ndarray
    grid_increments: np.ndarray
    mode_coords: GaussianCoordinates
    provenance: str = "grid"


@dataclass(frozen=True)
class PsiSample:
    stochastic_integral: float
    quadratic_term: float

    def value(self) -> float:
        return self.stochastic_integral - self.quadratic_term


def simulate_path(t: float, dt: float, x: float, stream: np.random.Generator) -> BrownianPath:
    """Exact-law Gaussian skeleton of Brownian motion started at x."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    t_grid = _time_grid(t, dt)
    steps = np.diff(t_grid)
    inc = stream.standard_normal(steps.size) * np.sqrt(steps)
    positions = np.concatenate([[x], x + np.cumsum(inc)])
    return BrownianPath(t_grid=t_grid, positions=positions, start=x)


def _time_grid(t: float, dt: float) -> np.ndarray:
    n_full = int(math.floor(t / dt + 1e-12))
    grid = dt * np.arange(n_full + 1)
    if t - grid[-1] > 1e-12 * max(t, 1.0):
        grid = np.append(grid, t)
    grid[-1] = t
    return grid


def build_level_grid(t: float, x: float, delta_a: float,
                     mode_cover: Optional[int] = None) -> np.ndarray:
    """Uniform level grid (bin centers) covering the +-6 sqrt(t) path range
    around x, widened to the Hermite-mode support when a mode view up to
    ``mode_cover`` is needed."""
    lo, hi = x - 6.0 * math.sqrt(t), x + 6.0 * math.sqrt(t)
    if mode_cover is not None:
        reach = math.sqrt(2.0 * mode_cover + 1.0) + 4.0
        lo, hi = min(lo, -reach), max(hi, reach)
    k_lo = math.floor(lo / delta_a) - 3
    k_hi = math.ceil(hi / delta_a) + 3
    return delta_a * (np.arange(k_lo, k_hi + 1) + 0.5)


def local_time(path: BrownianPath, levels: np.ndarray) -> LocalTimeProfile:
    """Occupation-density histogram of the path skeleton.

    Each step contributes its dt to the bin of its right endpoint, so the
    identity da * sum L = t holds exactly (counting identity).
    """
    da = float(levels[1] - levels[0])
    lo = float(levels[0] - 0.5 * da)
    pos = path.positions[1:]
    if pos.min() < lo or pos.max() > levels[-1] + 0.5 * da:
        raise ValueError("level grid does not cover the path range")
    steps = np.diff(path.t_grid)
    idx = np.floor((pos - lo) / da).astype(np.int64)
    vals = np.bincount(idx, weights=steps, minlength=levels.size) / da
    return LocalTimeProfile(level_grid=levels, values=vals[:levels.size],
                            elapsed=float(path.t_grid[-1]))


def occupation_functional(path: BrownianPath, phi: Callable[[np.ndarray], np.ndarray]) -> float:
    """Left-endpoint Riemann sum of int_0^t phi(B_s) ds."""
    steps = np.diff(path.t_grid)
    vals = np.asarray(phi(path.positions[:-1]), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("phi returned non-finite values along the path")
    return float(np.dot(vals, steps))


def sample_noise(levels: np.ndarray, stream: np.random.Generator,
                 max_mode: int = 0) -> NoiseRealization:
    """Grid-first white-noise sample: dW_i ~ N(0, da) per bin, with the mode
    view W_{e_j} accumulated from the same increments so the chaos and path
    sides share one realization."""
    da = float(levels[1] - levels[0])
    dW = stream.standard_normal(levels.size) * math.sqrt(da)
    if max_mode > 0:
        E = hermite_function_table(max_mode, levels)
        modes = E @ dW
    else:
        modes = np.zeros(0)
    return NoiseRealization(level_grid=levels, grid_increments=dW,
                            mode_coords=GaussianCoordinates(modes), provenance="grid")


def psi_sample(profile: LocalTimeProfile, noise: NoiseRealization) -> PsiSample:
    """Psi = sum_i L_i dW_i - (da/2) sum_i L_i^2 for one path and one noise."""
    if (profile.level_grid.size != noise.level_grid.size
            or abs(profile.level_grid[0] - noise.level_grid[0]) > 1e-12):
        raise ValueError("noise grid does not match the profile grid")
    stoch = float(np.dot(profile.values, noise.grid_increments))
    quad = 0.5 * profile.quadratic()
    return PsiSample(stochastic_integral=stoch, quadratic_term=quad)


# ---------------------------------------------------------------------------
# blocked ensembles


def _block_ranges(n_paths: int, block: int) -> list[tuple[int, int]]:
    return [(b, min(b + block, n_paths)) for b in range(0, n_paths, block)]


def _run_blocks(fn, n_blocks: int, threads: int) -> list:
    """Run fn(block_index) for all blocks, results in block order."""
    if threads <= 1:
        return [fn(b) for b in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_blocks)))


def _ensemble_positions(nb: int, t_grid: np.ndarray, x: float,
                        stream: np.random.Generator) -> np.ndarray:
    steps = np.diff(t_grid)
    inc = stream.standard_normal((nb, steps.size)) * np.sqrt(steps)[None, :]
    return x + np.cumsum(inc, axis=1)  # positions at t_1..t_M


def _profiles_from_positions(pos: np.ndarray, steps: np.ndarray,
                             levels: np.ndarray) -> np.ndarray:
    """(n_paths, n_bins) histogram profiles; raises if a path escapes."""
    da = float(levels[1] - levels[0])
    lo = float(levels[0] - 0.5 * da)
    K = levels.size
    idx = np.floor((pos - lo) / da).astype(np.int64)
    if idx.min() < 0 or idx.max() >= K:
        raise ValueError("level grid does not cover the simulated paths")
    nb = pos.shape[0]
    flat = idx + K * np.arange(nb)[:, None]
    counts = np.bincount(flat.ravel(), weights=np.broadcast_to(steps, pos.shape).ravel(),
                         minlength=nb * K)
    return counts.reshape(nb, K) / da


def _jackknife_se(values: np.ndarray) -> float:
    n = values.size
    if n < 2:
        return float("nan")
    mean = values.mean()
    # delete-one jackknife of the sample mean
    return float(np.sqrt((n - 1) / n * np.sum(((mean * n - values) / (n - 1) - mean) ** 2)))


def fk_conditional_estimate(t: float, x: float, u0: InitialCondition,
                            noise: NoiseRealization, n_paths: int,
                            stream_seed: int, dt: float = 1e-3,
                            block: int = DEFAULT_BLOCK, threads: int = 1,
                            stream_label: str = "fk-paths") -> tuple[float, float]:
    """Path average of u0(B_t^x) exp(Psi) at a fixed noise realization.

    Returns (estimate, jackknife standard error).  This is one sample of the
    random field at (t, x); averaging estimates over independent noise draws
    converges to the heat-semigroup mean.
    """
    if n_paths < 100:
        raise ValueError("n_paths must be at least 100")
    t_grid = _time_grid(t, dt)
    steps = np.diff(t_grid)
    levels = noise.level_grid
    da = float(levels[1] - levels[0])
    ranges = _block_ranges(n_paths, block)

    def one_block(b: int) -> np.ndarray:
        lo_, hi_ = ranges[b]
        gen = substream(stream_seed, stream_label, b)
        pos = _ensemble_positions(hi_ - lo_, t_grid, x, gen)
        prof = _profiles_from_positions(pos, steps, levels)
        psi = prof @ noise.grid_increments - 0.5 * da * np.einsum("ij,ij->i", prof, prof)
        return u0(pos[:, -1]) * np.exp(psi)

    vals = np.concatenate(_run_blocks(one_block, len(ranges), threads))
    if n_paths > 1 and float(vals.std()) == 0.0:
        raise RuntimeError("degenerate path ensemble: all samples identical")
    return float(vals.mean()), _jackknife_se(vals)


def _s_transform_core(t: float, x: float, n_paths: int, stream_seed: int,
                      dt: float, block: int, threads: int, stream_label: str,
                      payload: Callable[[np.ndarray, np.ndarray], np.ndarray]
                      ) -> tuple[float, float]:
    t_grid = _time_grid(t, dt)
    steps = np.diff(t_grid)
    ranges = _block_ranges(n_paths, block)

    def one_block(b: int) -> np.ndarray:
        lo_, hi_ = ranges[b]
        gen = substream(stream_seed, stream_label, b)
        pos = _ensemble_positions(hi_ - lo_, t_grid, x, gen)
        # left endpoints: start point x plus all but the last position
        left = np.concatenate([np.full((pos.shape[0], 1), x), pos[:, :-1]], axis=1)
        return payload(left, pos)

    vals = np.concatenate(_run_blocks(one_block, len(ranges), threads))
    return float(vals.mean()), _jackknife_se(vals)


def s_transform_mc(t: float, x: float, u0: InitialCondition,
                   phi: Callable[[np.ndarray], np.ndarray], n_paths: int,
                   stream_seed: int, dt: float = 1e-3, block: int = DEFAULT_BLOCK,
                   threads: int = 1, phi_sup: Optional[float] = None,
                   stream_label: str = "stransform") -> tuple[float, float]:
    """Monte Carlo S-transform value E[u0(B_t^x) exp(int_0^t phi(B_s^x) ds)].

    ``phi_sup`` (when known) guards the exponent: sup|phi| * t > 50 would
    overflow far before Monte Carlo error matters.
    """
    if n_paths < 100:
        raise ValueError("n_paths must be at least 100")
    if phi_sup is not None and phi_sup * t > 50.0:
        raise ValueError(f"exponent guard: sup|phi| * t = {phi_sup * t} > 50")

    def payload(left: np.ndarray, pos: np.ndarray) -> np.ndarray:
        steps = np.diff(_time_grid(t, dt))
        occ = np.asarray(phi(left), dtype=float) @ steps
        return u0(pos[:, -1]) * np.exp(occ)

    return _s_transform_core(t, x, n_paths, stream_seed, dt, block, threads,
                             stream_label, payload)


def s_transform_dx_mc(t: float, x: float, u0: InitialCondition,
                      phi: Callable[[np.ndarray], np.ndarray],
                      phi_prime: Callable[[np.ndarray], np.ndarray],
                      n_paths: int, stream_seed: int, dt: float = 1e-3,
                      block: int = DEFAULT_BLOCK, threads: int = 1,
                      phi_sup: Optional[float] = None,
                      stream_label: str = "stransform-dx") -> tuple[float, float]:
    """Monte Carlo S-transform of the spatial-derivative field,

        E[ u0'(B_t^x) e^{int phi} + u0(B_t^x) e^{int phi} int_0^t phi'(B_s^x) ds ].
    """
    if not u0.has_derivative:
        raise ValueError("s_transform_dx_mc needs an initial condition with a derivative")
    if n_paths < 100:
        raise ValueError("n_paths must be at least 100")
    if phi_sup is not None and phi_sup * t > 50.0:
        raise ValueError(f"exponent guard: sup|phi| * t = {phi_sup * t} > 50")

    def payload(left: np.ndarray, pos: np.ndarray) -> np.ndarray:
        steps = np.diff(_time_grid(t, dt))
        grow = np.exp(np.asarray(phi(left), dtype=float) @ steps)
        occ_prime = np.asarray(phi_prime(left), dtype=float) @ steps
        end = pos[:, -1]
        return u0.derivative(end) * grow + u0(end) * grow * occ_prime

    return _s_transform_core(t, x, n_paths, stream_seed, dt, block, threads,
                             stream_label, payload)


# ---------------------------------------------------------------------------
# ensemble statistics used by the local-time verification targets


def local_time_ensemble_stats(t: float, dt: float, delta_a: float, n_paths: int,
                              stream_seed: int, x: float = 0.0,
                              block: int = DEFAULT_BLOCK, threads: int = 1,
                              stream_label: str = "localtime") -> dict:
    """Ensemble means of the occupation histogram at level x, of the
    quadratic functional int L^2 da, and the exact mass-identity defect.

    Returns means with standard errors plus the stated discretization-bias
    budget (binning O(da^2) at the symmetric level, skeleton O(sqrt(dt)))."""
    levels = build_level_grid(t, x, delta_a)
    t_grid = _time_grid(t, dt)
    steps = np.diff(t_grid)
    j0 = int(np.argmin(np.abs(levels - x)))
    ranges = _block_ranges(n_paths, block)

    def one_block(b: int):
        lo_, hi_ = ranges[b]
        gen = substream(stream_seed, stream_label, b)
        pos = _ensemble_positions(hi_ - lo_, t_grid, x, gen)
        prof = _profiles_from_positions(pos, steps, levels)
        mass_err = np.abs(delta_a * prof.sum(axis=1) - t).max()
        return prof[:, j0], delta_a * np.einsum("ij,ij->i", prof, prof), mass_err

    parts = _run_blocks(one_block, len(ranges), threads)
    L0 = np.concatenate([p[0] for p in parts])
    Q = np.concatenate([p[1] for p in parts])
    mass_defect = max(p[2] for p in parts)
    return {
        "mean_L_at_start": float(L0.mean()),
        "se_L_at_start": float(L0.std(ddof=1) / math.sqrt(L0.size)),
        "mean_int_L2": float(Q.mean()),
        "se_int_L2": float(Q.std(ddof=1) / math.sqrt(Q.size)),
        "mass_identity_defect": float(mass_defect),
        "bias_budget_L": math.sqrt(2.0 * dt / math.pi) + delta_a * delta_a,
        "bias_budget_L2": math.sqrt(dt) + 0.5 * delta_a,
    }


def psi_law_stats(t: float, dt: float, delta_a: float, n_paths_b: int, n_noise: int,
                  stream_seed: int, x: float = 0.0, threads: int = 1) -> dict:
    """Conditional-law and unit-mean checks of the exponent.

    For one fixed path, Psi over noise draws is Gaussian with mean
    -(1/2) int L^2 and variance int L^2 (exact at the discrete level); over
    independent (path, noise) pairs, E exp(Psi) = 1 exactly in expectation.
    """
    levels = build_level_grid(t, x, delta_a)
    da = float(levels[1] - levels[0])
    path = simulate_path(t, dt, x, substream(stream_seed, "psi-path"))
    prof = local_time(path, levels)
    q = prof.quadratic()

    gen = substream(stream_seed, "psi-noise")
    dW = gen.standard_normal((n_noise, levels.size)) * math.sqrt(da)
    psi = dW @ prof.values - 0.5 * q
    m, s = psi.mean(), psi.std(ddof=1)
    skew = float(np.mean(((psi - m) / s) ** 3))

    # unconditional E exp(Psi) over fresh (path, noise) pairs
    ranges = _block_ranges(n_paths_b, DEFAULT_BLOCK)
    t_grid = _time_grid(t, dt)
    steps = np.diff(t_grid)

    def one_block(b: int):
        lo_, hi_ = ranges[b]
        g1 = substream(stream_seed, "psi-pairs-path", b)
        g2 = substream(stream_seed, "psi-pairs-noise", b)
        pos = _ensemble_positions(hi_ - lo_, t_grid, x, g1)
        profs = _profiles_from_positions(pos, steps, levels)
        dWb = g2.standard_normal((hi_ - lo_, levels.size)) * math.sqrt(da)
        psi_b = np.einsum("ij,ij->i", profs, dWb) - 0.5 * da * np.einsum("ij,ij->i", profs, profs)
        return np.exp(psi_b)

    ew = np.concatenate(_run_blocks(one_block, len(ranges), threads))
    return {
        "conditional_mean": float(m), "conditional_mean_target": -0.5 * q,
        "conditional_se": float(s / math.sqrt(n_noise)),
        "conditional_var": float(s * s), "conditional_var_target": q,
        "conditional_var_se": float(s * s * math.sqrt(2.0 / (n_noise - 1))),
        "skewness": skew, "skew_se": math.sqrt(6.0 / n_noise),
        "exp_mean": float(ew.mean()),
        "exp_se": float(ew.std(ddof=1) / math.sqrt(ew.size)),
    }
