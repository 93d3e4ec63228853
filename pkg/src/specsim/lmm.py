"""Local moment matching on [0, B]: discretized feasibility LP plus
deterministic quantile rounding to a sorted vector.

The LP minimizes the largest normalized moment violation t over measures of
fixed total mass with nonnegative weights on a uniform grid, and accepts iff
the optimum satisfies t <= 1.  It is solved by a small dense two-phase
simplex with Bland's rule, so results are deterministic and need no external
solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DiscretizedMeasure",
    "Infeasible",
    "MomentConstraints",
    "default_grid_size",
    "lmm_error_bound",
    "round_measure",
    "solve_moment_lp",
]

ACCEPT_T = 1.0 + 1e-6
MASS_ATOL = 1e-8


class Infeasible(RuntimeError):
    """No grid measure satisfies the moment constraints (optimal t > 1)."""


@dataclass(frozen=True)
class MomentConstraints:
    """Estimated moments p_hat[k] with admissible errors V[k], k = 1..K."""

    k_max: int
    p_hat: np.ndarray
    v: np.ndarray
    upper_b: float
    mass: float

    def __post_init__(self) -> None:
        if self.k_max < 1:
            raise ValueError("need at least one moment")
        p = np.asarray(self.p_hat, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if p.size != self.k_max or v.size != self.k_max:
            raise ValueError("p_hat and v must have length k_max")
        if np.any(v < 0):
            raise ValueError("moment error bounds must be nonnegative")
        if self.upper_b <= 0:
            raise ValueError("upper endpoint must be positive")
        if self.mass <= 0:
            raise ValueError("total mass must be positive")
        p.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "p_hat", p)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class DiscretizedMeasure:
    """Nonnegative weights on a strictly increasing grid in [0, B]."""

    grid: np.ndarray
    weights: np.ndarray
    upper_b: float

    def __post_init__(self) -> None:
        g = np.asarray(self.grid, dtype=float)
        w = np.asarray(self.weights, dtype=float).copy()
        if g.size != w.size or g.size == 0:
            raise ValueError("grid and weights must have equal, positive length")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if g[0] < -1e-12 or g[-1] > self.upper_b + 1e-12:
            raise ValueError("grid must lie in [0, B]")
        if np.any(w < -1e-12):
            raise ValueError("weights must be nonnegative")
        np.clip(w, 0.0, None, out=w)
        g.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "weights", w)

    @property
    def mass(self) -> float:
        return float(math.fsum(self.weights))

    def moment(self, k: int) -> float:
        return float(np.dot(self.grid**k, self.weights))


def _simplex_min(
    a: np.ndarray, b: np.ndarray, c: np.ndarray, max_iter: int = 200_000
) -> np.ndarray:
    """Solve min c.x s.t. a x = b, x >= 0 with a two-phase dense simplex.

    Rows with negative rhs are negated on entry.  Bland's rule (lowest
    eligible index) keeps pivoting deterministic and cycle-free.
    """
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = a.shape
    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0

    # phase 1 tableau: [a | I] with artificial basis
    tab = np.zeros((m, n + m + 1))
    tab[:, :n] = a
    tab[:, n : n + m] = np.eye(m)
    tab[:, -1] = b
    basis = list(range(n, n + m))

    def pivot(row: int, col: int) -> None:
        tab[row] /= tab[row, col]
        factors = tab[:, col].copy()
        factors[row] = 0.0
        tab[:] = tab - np.outer(factors, tab[row])
        basis[row] = col

    def run(cost: np.ndarray, ncols: int) -> None:
        # Dantzig entering rule with deterministic ties; permanent switch to
        # Bland's rule after a degenerate stall, which guarantees termination
        stalled = 0
        bland = False
        last_obj = math.inf
        for _ in range(max_iter):
            y = cost[basis] @ tab[:, :ncols]
            reduced = cost[:ncols] - y
            eligible = np.nonzero(reduced < -1e-10)[0]
            if eligible.size == 0:
                return
            if bland:
                enter = int(eligible[0])
            else:
                enter = int(eligible[np.argmin(reduced[eligible])])
            col = tab[:, enter]
            best_ratio, leave = math.inf, -1
            for i in range(m):
                if col[i] > 1e-11:
                    ratio = tab[i, -1] / col[i]
                    if ratio < best_ratio - 1e-12 or (
                        abs(ratio - best_ratio) <= 1e-12
                        and (leave < 0 or basis[i] < basis[leave])
                    ):
                        best_ratio, leave = ratio, i
            if leave < 0:
                raise Infeasible("linear program is unbounded")
            pivot(leave, enter)
            obj = float(cost[basis] @ tab[:, -1])
            if obj >= last_obj - 1e-13:
                stalled += 1
                if stalled > 50:
                    bland = True
            else:
                stalled = 0
            last_obj = obj
        raise RuntimeError("simplex iteration limit reached")

    phase1_cost = np.concatenate([np.zeros(n), np.ones(m)])
    run(phase1_cost, n + m)
    if float(phase1_cost[basis] @ tab[:, -1]) > 1e-7 * max(1.0, float(np.abs(b).max())):
        raise Infeasible("no feasible point for the constraint rows")
    # drive any remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= n:
            for j in range(n):
                if abs(tab[i, j]) > 1e-9:
                    pivot(i, j)
                    break
    keep = [i for i in range(m) if basis[i] < n]
    if len(keep) < m:
        tab = tab[keep]
        basis = [basis[i] for i in keep]
        m = len(keep)
    run(np.concatenate([c, np.zeros(tab.shape[1] - 1 - n)]), n)
    x = np.zeros(n)
    for i, bi in enumerate(basis):
        if bi < n:
            x[bi] = tab[i, -1]
    return x


def default_grid_size(d: int) -> int:
    """Uniform grid resolution: max(512, 64 d) points."""
    return max(512, 64 * d)


def solve_moment_lp(constraints: MomentConstraints, grid_size: int | None = None) -> DiscretizedMeasure:
    """Find a grid measure of mass ``constraints.mass`` matching the moments.

    Minimizes the maximum normalized violation t, where moment k is allowed
    |sum x^k w - p_hat_k| <= t * max(V_k, k B^(k-1) (B/G) d, 1e-7 B^k); the
    middle term is the grid discretization allowance (snapping any mass-d
    measure to the grid moves moment k by at most that much), so a genuine
    moment vector is always feasible with t <= 1.  Raises
    :class:`Infeasible` when the optimum exceeds 1, which signals
    inconsistent moment estimates (the caller may widen V_k and retry).
    """
    kk = constraints.k_max
    b_up = constraints.upper_b
    mass = constraints.mass
    grid_n = default_grid_size(int(round(mass))) if grid_size is None else int(grid_size)
    if grid_n < 2:
        raise ValueError("grid must have at least 2 points")
    grid = np.linspace(0.0, b_up, grid_n)
    # work in units of B^k per moment row for conditioning
    xs = grid / b_up
    ks = np.arange(1, kk + 1)
    powers = np.vstack([xs**k for k in ks])
    p_scaled = constraints.p_hat / b_up**ks
    disc = ks * mass / grid_n
    scale = np.maximum(constraints.v / b_up**ks, np.maximum(disc, 1e-7))

    n_w = grid_n
    n_var = n_w + 1  # weights plus t
    rows = 1 + 2 * kk
    a = np.zeros((rows, n_var))
    rhs = np.zeros(rows)
    a[0, :n_w] = 1.0
    rhs[0] = mass
    slacks = np.zeros((rows, 2 * kk))
    for k in range(kk):
        r1 = 1 + 2 * k
        r2 = r1 + 1
        a[r1, :n_w] = powers[k]
        a[r1, n_w] = -scale[k]
        slacks[r1, 2 * k] = 1.0
        rhs[r1] = p_scaled[k]
        a[r2, :n_w] = -powers[k]
        a[r2, n_w] = -scale[k]
        slacks[r2, 2 * k + 1] = 1.0
        rhs[r2] = -p_scaled[k]
    a_full = np.hstack([a, slacks])
    cost = np.zeros(a_full.shape[1])
    cost[n_w] = 1.0
    x = _simplex_min(a_full, rhs, cost)
    t_opt = float(x[n_w])
    if t_opt > ACCEPT_T:
        raise Infeasible(f"optimal normalized violation {t_opt:.3g} exceeds 1")
    measure = DiscretizedMeasure(grid=grid, weights=x[:n_w], upper_b=b_up)
    _verify(measure, constraints, scale * b_up**ks)
    return measure


def _verify(
    measure: DiscretizedMeasure, constraints: MomentConstraints, bands: np.ndarray
) -> None:
    """Re-evaluate every constraint on the returned measure independently."""
    if abs(measure.mass - constraints.mass) > 1e-6 * max(1.0, constraints.mass):
        raise Infeasible(f"solver mass {measure.mass} drifted from {constraints.mass}")
    for k in range(1, constraints.k_max + 1):
        err = abs(measure.moment(k) - constraints.p_hat[k - 1])
        if err > bands[k - 1] * (1.0 + 2e-6):
            raise Infeasible(f"moment {k} violates its band after solve: {err:.3g}")


def round_measure(measure: DiscretizedMeasure, d: int) -> np.ndarray:
    """Deterministic quantile discretization to a sorted d-vector.

    Entry i is the inverse CDF of the normalized measure at (i - 1/2)/d;
    the output is sorted non-increasing.  Requires mass d (+- 1e-8).
    """
    if d < 1:
        raise ValueError("need at least one output entry")
    mass = measure.mass
    if abs(mass - d) > MASS_ATOL * max(1.0, d):
        raise ValueError(f"measure mass {mass} does not match dimension {d}")
    cum = np.cumsum(measure.weights)
    targets = (np.arange(1, d + 1) - 0.5) * (mass / d)
    idx = np.searchsorted(cum, np.minimum(targets, cum[-1]), side="left")
    np.clip(idx, 0, measure.grid.size - 1, out=idx)
    return measure.grid[idx][::-1].copy()


def lmm_error_bound(b_up: float, d: int, k_max: int, v) -> float:
    """Diagnostic error scale sqrt(B d)/K + 2^(9K/2) B sum_k B^(-k) V_k.

    Constant factor set to 1; used for parameter selection and plots, never
    asserted.
    """
    v = np.asarray(v, dtype=float)
    if v.size != k_max:
        raise ValueError("need one V_k per moment")
    bias = math.sqrt(b_up * d) / k_max
    variance = 2.0 ** (4.5 * k_max) * b_up * float(
        np.sum(v / b_up ** np.arange(1, k_max + 1))
    )
    return bias + variance
