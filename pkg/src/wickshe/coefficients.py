"""Deterministic quadrature of the iterated-kernel coefficient formulas.

For a multi-index alpha with |alpha| = n >= 1 and characteristic vector k,
the solution-field coefficient at (t, x) is

    u_alpha(t,x) = (alpha!)^{-1/2} sum_{sigma in P_n} C(k_sigma(1), ..., k_sigma(n)),

    C(m_1..m_n) = int_{0<=s_1<=...<=s_n<=t} int_{R^n}
                  p(t-s_n, x-y_n) p(s_n-s_{n-1}, y_n-y_{n-1}) ... p(s_2-s_1, y_2-y_1)
                  e_{m_1}(y_1) ... e_{m_n}(y_n) u_bar(s_1, y_1)  dy ds,

with u_bar(s, y) the heat semigroup of the initial datum.  The derivative
field replaces the leading kernel p(t - s_n, x - y_n) by its x-derivative;
the epsilon-regularized variant integrates s over [0, t - eps] only.

Spatial integrals run on a composite Gauss-Legendre grid; transfer operators
P(tau) between grid functions fall back to a panel-spectral Taylor
I + (tau/2) D2 + (tau^2/8) D2^2 once tau is below the width the grid can
resolve (per-coefficient integrands are regular there, the grid just cannot
represent a near-delta kernel).  One level sweep assembles C for all mode
tuples of the level at once, so computing every |alpha| = n coefficient
costs barely more than one.
"""

from __future__ import annotations

import math
from typing import Dict

import numpy as np

from .basis import (MultiIndex, TruncationSpec, ZERO_INDEX, _distinct_permutations,
                    enumerate_multiindices, hermite_function_table)
from .kernels import (InitialCondition, SimplexSpec, build_line_grid, simplex_map,
                      apply_heat_semigroup, apply_heat_semigroup_dx)

__all__ = [
    "CoefficientQuadrature",
    "cs_coefficient",
    "dx_coefficient",
    "cs_level_coefficients",
    "dx_level_coefficients",
]

QUADRATURE_ORDER_CAP = 3  # cost is (time nodes)^n (m^2) per level sweep


class CoefficientQuadrature:
    """Shared spatial grid, panel differentiation, and transfer operators."""

    def __init__(self, half_width: float = 12.0, panels: int = 48,
                 nodes_per_panel: int = 16, time_points: int = 12,
                 grading: float = 2.0):
        self.grid = build_line_grid(half_width, panels, nodes_per_panel)
        self.panels = panels
        self.npp = nodes_per_panel
        self.time_points = time_points
        self.grading = grading
        width = 2.0 * half_width / panels
        self.tau_res = (width / 5.0) ** 2
        self._D1 = self._panel_diff_matrix()
        self._D2 = self._D1 @ self._D1

    # -- panel-spectral differentiation on the composite Gauss grid ---------

    def _panel_diff_matrix(self) -> np.ndarray:
        m = self.grid.nodes.size
        D = np.zeros((m, m))
        for p in range(self.panels):
            sl = slice(p * self.npp, (p + 1) * self.npp)
            xs = self.grid.nodes[sl]
            D[sl, sl] = _lagrange_diff(xs)
        return D

    def _interp_weights(self, x: float) -> tuple[slice, np.ndarray]:
        """Barycentric interpolation weights within the panel containing x."""
        nodes = self.grid.nodes
        width = 2.0 * self.grid.half_width / self.panels
        p = int(np.clip((x + self.grid.half_width) // width, 0, self.panels - 1))
        sl = slice(p * self.npp, (p + 1) * self.npp)
        xs = nodes[sl]
        if np.any(np.abs(xs - x) < 1e-14):
            w = np.zeros(self.npp)
            w[int(np.argmin(np.abs(xs - x)))] = 1.0
            return sl, w
        bw = _bary_weights(xs)
        w = bw / (x - xs)
        return sl, w / w.sum()

    def point_eval(self, v: np.ndarray, x: float, deriv: int = 0) -> float:
        """v(x), v'(x) or v''(x) from grid values by panel interpolation."""
        sl, w = self._interp_weights(x)
        if deriv == 0:
            return float(w @ v[sl])
        D = self._D1[sl, sl]
        block = v[sl]
        for _ in range(deriv):
            block = D @ block
        return float(w @ block)

    # -- transfer operators --------------------------------------------------

    def kernel_matrix(self, tau: float) -> np.ndarray:
        """Matrix of P(tau) from grid functions to grid values (includes the
        quadrature weights); Taylor fallback below the resolvable width."""
        nodes, w = self.grid.nodes, self.grid.weights
        if tau >= self.tau_res:
            diff = nodes[:, None] - nodes[None, :]
            return np.exp(-diff * diff / (2.0 * tau)) / math.sqrt(2 * math.pi * tau) * w[None, :]
        m = nodes.size
        return np.eye(m) + (tau / 2.0) * self._D2 + (tau * tau / 8.0) * (self._D2 @ self._D2)

    def apply_P(self, tau: float, V: np.ndarray) -> np.ndarray:
        """P(tau) applied to rows-last arrays of grid functions."""
        return V @ self.kernel_matrix(tau).T

    def leading_row(self, tau: float, x: float, V: np.ndarray, deriv: bool) -> np.ndarray:
        """[P(tau) v](x) (or its x-derivative) for each grid function in the
        rows of V; small-tau limit handled by panel interpolation."""
        nodes, w = self.grid.nodes, self.grid.weights
        if tau >= self.tau_res:
            d = x - nodes
            row = np.exp(-d * d / (2.0 * tau)) / math.sqrt(2 * math.pi * tau) * w
            if deriv:
                row = row * (-(d / tau))
            return V @ row
        V2 = np.atleast_2d(V)
        if not deriv:
            out = np.array([self.point_eval(v, x) + (tau / 2.0) * self.point_eval(v, x, 2)
                            for v in V2])
        else:
            out = np.array([self.point_eval(v, x, 1) + (tau / 2.0) * self.point_eval(v, x, 3)
                            for v in V2])
        return out if V.ndim > 1 else out[0]

    def u0_on_grid(self, u0: InitialCondition, s: float) -> np.ndarray:
        """u_bar(s, .) on the grid (s = 0 allowed)."""
        base = u0(self.grid.nodes)
        if s <= 0.0:
            return base
        if s < self.tau_res:
            return base + (s / 2.0) * (self._D2 @ base) \
                + (s * s / 8.0) * (self._D2 @ (self._D2 @ base))
        return self.apply_P(s, base)

    def u0_at_point(self, u0: InitialCondition, s: float, x: float) -> float:
        if s <= 0.0:
            return float(u0(np.asarray([x]))[0])
        if s < self.tau_res:
            g = self.u0_on_grid(u0, s)
            return self.point_eval(g, x)
        return float(apply_heat_semigroup(u0, s, x, self.grid))


def _bary_weights(xs: np.ndarray) -> np.ndarray:
    w = np.ones_like(xs)
    for i in range(xs.size):
        w[i] = 1.0 / np.prod(xs[i] - np.delete(xs, i))
    return w


def _lagrange_diff(xs: np.ndarray) -> np.ndarray:
    """Spectral differentiation matrix on arbitrary distinct nodes."""
    n = xs.size
    bw = _bary_weights(xs)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = bw[j] / bw[i] / (xs[i] - xs[j])
        D[i, i] = -np.sum(D[i])
    return D


# ---------------------------------------------------------------------------
# level sweeps


def _level_sweep(n: int, t: float, x: float, u0: InitialCondition,
                 J: int, quad: CoefficientQuadrature, deriv: bool,
                 horizon: float | None = None) -> np.ndarray:
    """C[m_1, ..., m_n] for all mode tuples in {1..J}^n (0-based array).

    ``horizon`` < t gives the epsilon-regularized variant (s_n <= horizon)
    while the leading kernel keeps its t - s_n argument.
    """
    if n < 1:
        raise ValueError("level sweep needs n >= 1")
    if n > QUADRATURE_ORDER_CAP:
        raise ValueError(f"order {n} exceeds quadrature cap {QUADRATURE_ORDER_CAP}; "
                         "use the propagator or spectral engines")
    th = t if horizon is None else horizon
    if not 0 < th <= t:
        raise ValueError("horizon must lie in (0, t]")
    spec = SimplexSpec(order=n, horizon=th, points_per_axis=quad.time_points,
                       grading=quad.grading)
    pts, wts = simplex_map(spec)
    E = hermite_function_table(J, quad.grid.nodes)      # (J, m)
    out = np.zeros((J,) * n)
    # group nodes by shared inner times to reuse kernel matrices: iterate raw
    for idx in range(pts.shape[0]):
        s = pts[idx]
        w = wts[idx]
        V = E * quad.u0_on_grid(u0, s[0])[None, :]       # (J, m): e_{m1} u_bar(s1)
        shape = (J,)
        for k in range(1, n):
            V = quad.apply_P(s[k] - s[k - 1], V)
            V = (E[:, None, :] * V[None, ...]).reshape(-1, quad.grid.nodes.size)
            shape = (J,) + shape
        lead = quad.leading_row(t - s[n - 1], x, V, deriv)
        out += w * lead.reshape(shape).T if n > 1 else w * lead
    return out


def _assemble_from_sweep(C: np.ndarray, alpha: MultiIndex) -> float:
    """(alpha!)^{-1/2} sum over permutations of C at the characteristic vector."""
    k = alpha.characteristic_vector()
    total = 0.0
    for arrangement in _distinct_permutations(tuple(k)):
        total += float(C[tuple(m - 1 for m in arrangement)])
    afact = alpha.factorial()
    # each distinct arrangement stands for alpha! identical permutations
    return total * afact / math.sqrt(afact)


def cs_level_coefficients(n: int, t: float, x: float, u0: InitialCondition,
                          spec: TruncationSpec,
                          quad: CoefficientQuadrature | None = None) -> Dict[MultiIndex, float]:
    """All solution-field coefficients of degree n at (t, x) in one sweep."""
    quad = quad or CoefficientQuadrature()
    C = _level_sweep(n, t, x, u0, spec.max_mode, quad, deriv=False)
    out: Dict[MultiIndex, float] = {}
    for alpha in enumerate_multiindices(spec):
        if alpha.degree() == n:
            out[alpha] = _assemble_from_sweep(C, alpha)
    return out


def dx_level_coefficients(n: int, t: float, x: float, u0: InitialCondition,
                          spec: TruncationSpec,
                          quad: CoefficientQuadrature | None = None,
                          epsilon: float = 0.0) -> Dict[MultiIndex, float]:
    """All derivative-field coefficients of degree n at (t, x) in one sweep."""
    quad = quad or CoefficientQuadrature()
    horizon = None if epsilon == 0.0 else t - epsilon
    C = _level_sweep(n, t, x, u0, spec.max_mode, quad, deriv=True, horizon=horizon)
    out: Dict[MultiIndex, float] = {}
    for alpha in enumerate_multiindices(spec):
        if alpha.degree() == n:
            out[alpha] = _assemble_from_sweep(C, alpha)
    return out


def cs_coefficient(alpha: MultiIndex, t: float, x: float, u0: InitialCondition,
                   quad: CoefficientQuadrature | None = None) -> float:
    """Solution-field coefficient u_alpha(t, x) by simplex quadrature of the
    iterated-kernel formula; the (0)-coefficient is the plain heat semigroup."""
    if t <= 0:
        raise ValueError("cs_coefficient needs t > 0")
    quad = quad or CoefficientQuadrature()
    if alpha == ZERO_INDEX:
        return float(apply_heat_semigroup(u0, t, x, quad.grid))
    n = alpha.degree()
    J = len(alpha.entries)
    C = _level_sweep(n, t, x, u0, J, quad, deriv=False)
    return _assemble_from_sweep(C, alpha)


def dx_coefficient(alpha: MultiIndex, t: float, x: float, u0: InitialCondition,
                   epsilon: float = 0.0,
                   quad: CoefficientQuadrature | None = None,
                   check_convergence: bool = False,
                   convergence_tol: float = 1e-3) -> float:
    """Derivative-field coefficient K_alpha^eps(t, x).

    eps = 0 integrates up to the singular endpoint on the graded mesh; with
    ``check_convergence`` the value is recomputed on a refined mesh and a
    ValueError is raised if the two differ by more than ``convergence_tol``
    (relative, floored at the absolute tolerance).
    """
    if t <= 0:
        raise ValueError("dx_coefficient needs t > 0")
    if epsilon < 0 or epsilon >= t:
        raise ValueError("epsilon must lie in [0, t)")
    quad = quad or CoefficientQuadrature()
    if alpha == ZERO_INDEX:
        return float(apply_heat_semigroup_dx(u0, t, x, quad.grid))
    n = alpha.degree()
    J = len(alpha.entries)
    horizon = None if epsilon == 0.0 else t - epsilon
    C = _level_sweep(n, t, x, u0, J, quad, deriv=True, horizon=horizon)
    val = _assemble_from_sweep(C, alpha)
    if check_convergence:
        fine = CoefficientQuadrature(half_width=quad.grid.half_width, panels=quad.panels,
                                     nodes_per_panel=quad.npp,
                                     time_points=quad.time_points * 2,
                                     grading=quad.grading)
        C2 = _level_sweep(n, t, x, u0, J, fine, deriv=True, horizon=horizon)
        val2 = _assemble_from_sweep(C2, alpha)
        if abs(val - val2) > max(convergence_tol, convergence_tol * abs(val2)):
            raise ValueError(f"dx_coefficient did not converge on mesh refinement: "
                             f"{val} vs {val2}")
        val = val2
    return val
