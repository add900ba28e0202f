"""Empirical regularity probes: second moments of field increments, log-log
exponent fits, and the local-time increment laws.

The fitted slope of E|F(p+h) - F(p)|^2 against the lag h is twice the
moment-level Hoelder exponent (the Kolmogorov-criterion reading).  Moment
curves are deterministic: they come either from a truncated coefficient
supplier (any initial datum) or, for constant initial data, from the exact
chain-pairing engine, which is free of mode truncation.  A truncation gate
refuses curves whose top-order mass share exceeds 5% of the total second
moment at any probed point, since order truncation biases slopes downward
before anything else does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from .chain_moments import space_increment_masses, time_increment_masses
from .chaos import ChaosCoefficients, order_norm, second_moment
from .feynman_kac import _block_ranges, _ensemble_positions, _profiles_from_positions, _run_blocks, _time_grid
from .streams import substream

__all__ = [
    "IncrementMomentCurve",
    "ExponentEstimate",
    "TruncationTailError",
    "increment_moments",
    "exact_increment_curve",
    "fit_exponent",
    "local_time_increment_check",
    "local_time_temporal_increment_check",
]

TAIL_SHARE_GATE = 0.05


class TruncationTailError(ValueError):
    """Raised when the top-order mass share says truncation would corrupt a slope."""


@dataclass(frozen=True)
class IncrementMomentCurve:
    """Second moments of field increments over a lag ladder.

    Moments are non-negative (a constant field yields all zeros); fitting an
    exponent additionally requires them strictly positive.
    """

    lags: np.ndarray
    moments: np.ndarray
    direction: Literal["space", "time"]
    base_point: tuple[float, float]
    tail_share: float = 0.0
    monotone: bool = True

    def __post_init__(self):
        if self.lags.size != self.moments.size:
            raise ValueError("lags and moments must align")
        if np.any(np.diff(self.lags) <= 0):
            raise ValueError("lags must be strictly increasing")
        if np.any(self.moments < 0):
            raise ValueError("moments must be non-negative")


@dataclass(frozen=True)
class ExponentEstimate:
    slope: float
    stderr: float
    r_squared: float
    fit_range: tuple[float, float]
    n_points: int
    low_r2: bool = False


def increment_moments(field: Callable[[float, float], ChaosCoefficients],
                      base: tuple[float, float],
                      direction: Literal["space", "time"],
                      lags: Sequence[float],
                      tail_gate: float = TAIL_SHARE_GATE) -> IncrementMomentCurve:
    """Moment curve from a per-point coefficient supplier.

    ``field(t, x)`` must return coefficient tables on one shared truncation.
    The moments are exact at that truncation (no sampling noise enters).
    """
    lags = np.asarray(sorted(float(h) for h in lags))
    t0, x0 = base
    points = [(t0, x0)]
    for h in lags:
        points.append((t0 + h, x0) if direction == "time" else (t0, x0 + h))
    tables = {}
    worst_share = 0.0
    spec = None
    for (t, x) in points:
        c = field(t, x)
        if spec is None:
            spec = c.spec
        elif c.spec != spec:
            raise ValueError("supplier changed truncation between probe points")
        total = second_moment(c)
        share = order_norm(c, spec.max_order) / total if total > 0 else 0.0
        worst_share = max(worst_share, share)
        tables[(t, x)] = c
    if worst_share > tail_gate:
        raise TruncationTailError(
            f"top-order mass share {worst_share:.3%} exceeds the {tail_gate:.0%} gate; "
            "raise the truncation order before fitting slopes")
    base_c = tables[points[0]]
    moments = []
    for h, p in zip(lags, points[1:]):
        c = tables[p]
        keys = set(base_c.values) | set(c.values)
        moments.append(sum((c.get(a) - base_c.get(a)) ** 2 for a in keys))
    moments = np.asarray(moments)
    monotone = bool(np.all(np.diff(moments) >= 0))
    return IncrementMomentCurve(lags=lags, moments=moments, direction=direction,
                                base_point=base, tail_share=worst_share,
                                monotone=monotone)


def exact_increment_curve(t: float, direction: Literal["space", "time"],
                          lags: Sequence[float], deriv: bool,
                          max_order: int = 4, rng_seed: int = 10103,
                          tail_gate: float = TAIL_SHARE_GATE) -> IncrementMomentCurve:
    """Moment curve for constant initial data from the chain-pairing engine
    (exact in the mode index; quadrature only over time simplices).

    The solution field's order-0 part is constant in both directions, so the
    per-order sums over |alpha| = 1..max_order are the whole increment
    moment; the truncation gate applies to the order cut alone.
    """
    lags = np.asarray(sorted(float(h) for h in lags))
    orders = range(1, max_order + 1)
    if direction == "space":
        inc, mass = space_increment_masses(t, lags, orders, deriv, rng_seed)
    else:
        inc = time_increment_masses(t, lags, orders, deriv, rng_seed)
        _, mass = space_increment_masses(t, np.asarray([1.0]), orders, deriv, rng_seed)
    total_mass = sum(mass.values()) + (0.0 if deriv else 1.0)  # order-0 of u is 1
    share = mass[max_order] / total_mass
    if share > tail_gate:
        raise TruncationTailError(
            f"top-order mass share {share:.3%} exceeds the {tail_gate:.0%} gate")
    moments = sum(inc.values())
    monotone = bool(np.all(np.diff(moments) >= 0))
    return IncrementMomentCurve(lags=lags, moments=np.asarray(moments),
                                direction=direction, base_point=(t, 0.0),
                                tail_share=share, monotone=monotone)


def fit_exponent(curve: IncrementMomentCurve, r2_flag: float = 0.98) -> ExponentEstimate:
    """Least-squares slope of log2(moment) against log2(lag).

    Fitting log2 ratios against the first point makes the slope invariant
    under any float-exact rescaling of the moments (scale equivariance up to
    IEEE product rounding otherwise).  Requires at least 6 points.
    """
    if curve.lags.size < 6:
        raise ValueError(f"need at least 6 lag points, got {curve.lags.size}")
    if np.any(curve.moments <= 0):
        raise ValueError("cannot fit an exponent to non-positive moments")
    lx = np.log2(curve.lags / curve.lags[0])
    ly = np.log2(curve.moments / curve.moments[0])
    if np.ptp(ly) == 0.0:
        raise ValueError("degenerate moment curve: no log range to regress on")
    n = lx.size
    mx, my = lx.mean(), ly.mean()
    sxx = np.sum((lx - mx) ** 2)
    slope = float(np.sum((lx - mx) * (ly - my)) / sxx)
    resid = ly - my - slope * (lx - mx)
    dof = max(n - 2, 1)
    stderr = float(math.sqrt(np.sum(resid ** 2) / dof / sxx))
    ss_tot = float(np.sum((ly - my) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentEstimate(slope=slope, stderr=stderr, r_squared=r2,
                            fit_range=(float(curve.lags[0]), float(curve.lags[-1])),
                            n_points=n, low_r2=r2 < r2_flag)


# ---------------------------------------------------------------------------
# local-time increment laws (Monte Carlo)


def local_time_increment_check(t: float, h_values: Sequence[float], n_paths: int,
                               stream_seed: int, dt: float = 1e-3,
                               delta_a: float = 0.025, x: float = 0.0,
                               block: int = 2000, threads: int = 1
                               ) -> list[tuple[float, float]]:
    """Table of (h, E int (L_a - L_{a-h})^2 da / h).

    The ratio approaches 4t as h decreases (linear local-time increment law).
    Every h must be a multiple of the level resolution delta_a with
    h >= 2 delta_a; h = 0 is allowed and returns exactly 0.
    """
    from .feynman_kac import build_level_grid
    shifts = {}
    for h in h_values:
        if h == 0.0:
            continue
        s = round(h / delta_a)
        if abs(s * delta_a - h) > 1e-9 or s < 2:
            raise ValueError(f"h={h} must be a multiple of delta_a={delta_a} with h >= 2 delta_a")
        shifts[float(h)] = s
    levels = build_level_grid(t, x, delta_a)
    t_grid = _time_grid(t, dt)
    steps = np.diff(t_grid)
    ranges = _block_ranges(n_paths, block)

    def one_block(b: int) -> dict:
        lo_, hi_ = ranges[b]
        gen = substream(stream_seed, "lt-increments", b)
        pos = _ensemble_positions(hi_ - lo_, t_grid, x, gen)
        prof = _profiles_from_positions(pos, steps, levels)
        out = {}
        for h, s in shifts.items():
            D = prof[:, s:] - prof[:, :-s]
            out[h] = float(np.sum(D * D) * delta_a)
        return out

    parts = _run_blocks(one_block, len(ranges), threads)
    table = []
    for h in sorted(float(v) for v in h_values):
        if h == 0.0:
            table.append((0.0, 0.0))
            continue
        total = sum(p[h] for p in parts)
        table.append((h, total / n_paths / h))
    return table


def local_time_temporal_increment_check(t_hi: float, lags: Sequence[float],
                                        n_paths: int, stream_seed: int,
                                        dt: float = 1e-3, delta_a: float = 0.025,
                                        x: float = 0.0, block: int = 2000,
                                        threads: int = 1) -> IncrementMomentCurve:
    """E int (L_a(t) - L_a(t - h))^2 da over a lag ladder (exponent 3/2 law).

    This is the exponent layer where the (t - s)^{3/2} scaling genuinely
    lives; the solution field itself is quadratically smooth in time.
    """
    from .feynman_kac import build_level_grid
    lags = np.asarray(sorted(float(h) for h in lags))
    levels = build_level_grid(t_hi, x, delta_a)
    t_grid = _time_grid(t_hi, dt)
    steps = np.diff(t_grid)
    ranges = _block_ranges(n_paths, block)
    cuts = [int(round((t_hi - h) / dt)) for h in lags]

    def one_block(b: int) -> np.ndarray:
        lo_, hi_ = ranges[b]
        gen = substream(stream_seed, "lt-temporal", b)
        pos = _ensemble_positions(hi_ - lo_, t_grid, x, gen)
        prof_full = _profiles_from_positions(pos, steps, levels)
        out = np.zeros(lags.size)
        for i, cut in enumerate(cuts):
            prof_cut = _profiles_from_positions(pos[:, :cut], steps[:cut], levels)
            D = prof_full - prof_cut
            out[i] = float(np.sum(D * D) * delta_a)
        return out

    parts = _run_blocks(one_block, len(ranges), threads)
    moments = sum(parts) / n_paths
    return IncrementMomentCurve(lags=lags, moments=moments, direction="time",
                                base_point=(t_hi, x), tail_share=0.0,
                                monotone=bool(np.all(np.diff(moments) >= 0)))
