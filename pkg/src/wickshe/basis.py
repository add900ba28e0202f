"""Hermite polynomials, Hermite functions, and the graded multi-index machinery.

Two Hermite conventions coexist and are exposed as distinct operations:

* ``hermite_poly(n, x)`` is the probabilists' polynomial H_n with weight
  exp(-x^2/2), H_0 = 1, H_1 = x, and recurrence H_{n+1} = x H_n - n H_{n-1}.
* ``hermite_function(j, x)`` is the j-th member (j >= 1) of the orthonormal
  L^2(R) basis e_j(x) = c_{j-1} H^phys_{j-1}(x) exp(-x^2/2) built on the
  physicists' weight exp(-x^2); e_j is the standard Hermite function of
  order j - 1.

Mixing the two conventions silently is the most likely implementation bug in
this problem family, hence the split API.

Multi-indices are finitely supported sequences of non-negative integers; the
enumeration of the degree-graded slice is part of the public contract
(graded lexicographic, deterministic) so that exported coefficient tables are
reproducible and diffable across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "MultiIndex",
    "TruncationSpec",
    "GaussianCoordinates",
    "hermite_poly",
    "hermite_function",
    "hermite_function_dx",
    "hermite_function_table",
    "enumerate_multiindices",
    "evaluate_sym_basis",
    "sample_xi",
]


@dataclass(frozen=True, order=False)
class MultiIndex:
    """A finitely supported sequence of non-negative integers.

    Entries are stored 1-based conceptually (entry j multiplies mode e_j) in a
    trailing-zero-trimmed tuple, so ``MultiIndex((1, 0))`` equals
    ``MultiIndex((1,))``.
    """

    entries: tuple[int, ...]

    def __init__(self, entries: Sequence[int] = ()):
        ent = tuple(int(v) for v in entries)
        if any(v < 0 for v in ent):
            raise ValueError(f"multi-index entries must be >= 0, got {ent}")
        while ent and ent[-1] == 0:
            ent = ent[:-1]
        object.__setattr__(self, "entries", ent)

    def degree(self) -> int:
        """|alpha| = sum of the entries."""
        return sum(self.entries)

    def factorial(self) -> int:
        """alpha! = product of entry factorials (exact integer, >= 1)."""
        out = 1
        for v in self.entries:
            out *= math.factorial(v)
        return out

    def characteristic_vector(self) -> tuple[int, ...]:
        """k_alpha: the non-decreasing length-|alpha| vector where mode j
        appears exactly alpha_j times, e.g. (2, 0, 1) -> (1, 1, 3)."""
        out: list[int] = []
        for j, v in enumerate(self.entries, start=1):
            out.extend([j] * v)
        return tuple(out)

    def support(self) -> tuple[int, ...]:
        """1-based mode indices with non-zero entry."""
        return tuple(j for j, v in enumerate(self.entries, start=1) if v > 0)

    def entry(self, j: int) -> int:
        """alpha_j for 1-based mode j (0 beyond the stored support)."""
        return self.entries[j - 1] if 1 <= j <= len(self.entries) else 0

    def lowered(self, j: int) -> "MultiIndex":
        """alpha with entry j lowered by one (alpha^-_(j)); floor at zero."""
        ent = list(self.entries) + [0] * max(0, j - len(self.entries))
        ent[j - 1] = max(ent[j - 1] - 1, 0)
        return MultiIndex(ent)

    def raised(self, j: int) -> "MultiIndex":
        """alpha with entry j raised by one (alpha^+_(j))."""
        ent = list(self.entries) + [0] * max(0, j - len(self.entries))
        ent[j - 1] += 1
        return MultiIndex(ent)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        n = max(len(self.entries), len(other.entries))
        return MultiIndex(tuple(self.entry(j) + other.entry(j) for j in range(1, n + 1)))

    def padded(self, width: int) -> tuple[int, ...]:
        return self.entries + (0,) * (width - len(self.entries))

    def __repr__(self) -> str:  # compact: (0), (1,0,2), ...
        return "(" + ",".join(map(str, self.entries)) + ")" if self.entries else "(0)"


ZERO_INDEX = MultiIndex(())


@dataclass(frozen=True)
class TruncationSpec:
    """Finite truncation of the multi-index set: degree <= max_order, support
    within modes {1..max_mode}."""

    max_order: int
    max_mode: int

    def __post_init__(self):
        if self.max_order < 0:
            raise ValueError("max_order must be >= 0")
        if self.max_mode < 1:
            raise ValueError("max_mode must be >= 1")

    def count(self) -> int:
        """Number of enumerated indices: sum_{n<=N} C(n+J-1, J-1)."""
        return sum(math.comb(n + self.max_mode - 1, self.max_mode - 1)
                   for n in range(self.max_order + 1))

    def contains(self, alpha: MultiIndex) -> bool:
        return alpha.degree() <= self.max_order and len(alpha.entries) <= self.max_mode


@dataclass(frozen=True)
class GaussianCoordinates:
    """Sampled coordinates (W_{e_1}, ..., W_{e_J}) of a noise realization."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.atleast_1d(np.asarray(self.values, dtype=float)))

    def __len__(self) -> int:
        return self.values.size


def hermite_poly(n: int, x) -> float | np.ndarray:
    """Probabilists' Hermite polynomial H_n(x) by the stable three-term
    recurrence H_{k+1} = x H_k - k H_{k-1}."""
    if n < 0:
        raise ValueError("order must be >= 0")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for k in range(1, n):
        h, h_prev = x * h - k * h_prev, h
    return h if h.ndim else float(h)


def _hermite_rows(j_max: int, x: np.ndarray) -> np.ndarray:
    """Leading axis 0..j_max-1 holds e_1(x)..e_{j_max}(x) (normalized
    recurrence), elementwise over any input shape."""
    E = np.empty((j_max,) + x.shape)
    E[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if j_max > 1:
        E[1] = np.sqrt(2.0) * x * E[0]
    for j in range(2, j_max):
        # e_{j+1}(x) = x sqrt(2/j) e_j(x) - sqrt((j-1)/j) e_{j-1}(x)
        E[j] = np.sqrt(2.0 / j) * x * E[j - 1] - np.sqrt((j - 1) / j) * E[j - 2]
    return E


def hermite_function(j: int, x) -> float | np.ndarray:
    """Orthonormal Hermite function e_j(x), j >= 1 (e_j is the standard
    Hermite function of order j-1; e_1(x) = pi^{-1/4} exp(-x^2/2)).

    Evaluated with the normalized recurrence; factorial formulas overflow
    beyond j ~ 85.
    """
    if j < 1:
        raise ValueError("hermite_function index starts at 1")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    out = _hermite_rows(j, xa)[j - 1]
    return out if np.ndim(x) else float(out.ravel()[0])


def hermite_function_dx(j: int, x) -> float | np.ndarray:
    """Derivative e_j'(x) = sqrt((j-1)/2) e_{j-1}(x) - sqrt(j/2) e_{j+1}(x)."""
    if j < 1:
        raise ValueError("hermite_function index starts at 1")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    E = _hermite_rows(j + 1, xa)
    out = -np.sqrt(j / 2.0) * E[j]
    if j > 1:
        out = out + np.sqrt((j - 1) / 2.0) * E[j - 2]
    return out if np.ndim(x) else float(out.ravel()[0])


def hermite_function_table(j_max: int, x: np.ndarray) -> np.ndarray:
    """(j_max, len(x)) table with row j-1 holding e_j on the given points."""
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    return _hermite_rows(j_max, np.asarray(x, dtype=float))


def enumerate_multiindices(spec: TruncationSpec, cap: int = 2_000_000) -> list[MultiIndex]:
    """All multi-indices with degree <= N and support in {1..J}, in graded
    lexicographic order (by degree, then descending lex on the entry tuples),
    duplicate-free and deterministic.

    Raises if the enumeration would exceed ``cap`` entries (memory guard).
    """
    total = spec.count()
    if total > cap:
        raise ValueError(f"enumeration size {total} exceeds cap {cap}")
    J = spec.max_mode
    out: list[MultiIndex] = []

    def compositions(n: int, slots: int) -> Iterator[tuple[int, ...]]:
        if slots == 1:
            yield (n,)
            return
        for head in range(n, -1, -1):
            for rest in compositions(n - head, slots - 1):
                yield (head,) + rest

    for n in range(spec.max_order + 1):
        if n == 0:
            out.append(ZERO_INDEX)
            continue
        out.extend(MultiIndex(c) for c in compositions(n, J))
    return out


def _distinct_permutations(seq: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    """Distinct permutations of a multiset, lexicographically descending."""
    pool = sorted(seq, reverse=True)
    n = len(pool)
    yield tuple(pool)
    while True:
        i = n - 2
        while i >= 0 and pool[i] <= pool[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while pool[j] >= pool[i]:
            j -= 1
        pool[i], pool[j] = pool[j], pool[i]
        pool[i + 1:] = reversed(pool[i + 1:])
        yield tuple(pool)


def evaluate_sym_basis(alpha: MultiIndex, y: Sequence[float]) -> float:
    """Symmetric tensor basis element evaluated at one point of R^n:

        e_alpha(y_1..y_n) = (n! alpha!)^{-1/2}
                            sum_{sigma in P_n} e_{k_sigma(1)}(y_1) ... e_{k_sigma(n)}(y_n)

    with k the characteristic vector of alpha.  The sum runs over distinct
    arrangements of k weighted by their multiplicity (alpha! copies each), so
    repeated modes cost far less than n! kernel products.
    """
    k = alpha.characteristic_vector()
    n = len(k)
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise ValueError(f"point must have length |alpha| = {n}, got shape {y.shape}")
    if n == 0:
        return 1.0
    jmax = max(k)
    table = _hermite_rows(jmax, y)  # table[j-1, i] = e_j(y_i)
    afact = alpha.factorial()
    total = 0.0
    for arrangement in _distinct_permutations(k):
        prod = 1.0
        for i, j in enumerate(arrangement):
            prod *= table[j - 1, i]
        total += prod
    # each distinct arrangement stands for alpha! identical permutations
    return float(total * afact / math.sqrt(math.factorial(n) * afact))


def sample_xi(alpha: MultiIndex, g: GaussianCoordinates) -> float:
    """Cameron-Martin basis variable xi_alpha = prod_j H_{alpha_j}(W_{e_j}) / sqrt(alpha_j!)
    evaluated at the given coordinates (deterministic given g)."""
    if alpha.entries and len(alpha.entries) > len(g):
        raise ValueError(
            f"support of alpha reaches mode {len(alpha.entries)} but only "
            f"{len(g)} coordinates were given")
    out = 1.0
    for j, aj in enumerate(alpha.entries, start=1):
        if aj:
            out *= hermite_poly(aj, float(g.values[j - 1])) / math.sqrt(math.factorial(aj))
    return float(out)


def sample_xi_batch(indices: list[MultiIndex], g_matrix: np.ndarray) -> np.ndarray:
    """xi_alpha for every alpha in ``indices`` at every coordinate row of
    ``g_matrix`` (draws, modes); returns (draws, len(indices)).

    Shares the per-mode Hermite tables across indices; used by Monte Carlo
    checks that need 1e5+ draws.
    """
    g_matrix = np.atleast_2d(np.asarray(g_matrix, dtype=float))
    n_draws, j_max = g_matrix.shape
    max_deg = max((a.degree() for a in indices), default=0)
    # H[d, draw, j] = H_d(g[draw, j]) / sqrt(d!)
    H = np.empty((max_deg + 1, n_draws, j_max))
    H[0] = 1.0
    if max_deg >= 1:
        H[1] = g_matrix
    for d in range(1, max_deg):
        H[d + 1] = g_matrix * H[d] - d * H[d - 1]
    for d in range(2, max_deg + 1):
        H[d] /= math.sqrt(math.factorial(d))
    out = np.ones((n_draws, len(indices)))
    for col, alpha in enumerate(indices):
        for j, aj in enumerate(alpha.entries, start=1):
            if aj:
                out[:, col] *= H[aj, :, j - 1]
    return out
