"""Independent reference computations used to check the library.

Everything here is deliberately written from scratch against the underlying
mathematics (closed forms, image series, one global dense solve, a plain
queue-based flood fill) so the tests never share code paths with the
implementations they judge.
"""

import math
from collections import deque

import numpy as np
import scipy.linalg


def mode_eigenvalue(grid, k: int) -> float:
    """k-th eigenvalue of the second-difference matrix with Dirichlet ends."""
    L = grid.x_hi - grid.x_lo
    h = grid.h
    return 2.0 / h**2 * (1.0 - math.cos(k * math.pi * h / L))


def sine_mode(grid, k: int) -> np.ndarray:
    """k-th eigenvector samples of the Dirichlet second-difference matrix."""
    i = np.arange(1, grid.n + 1)
    return np.sin(k * math.pi * i / (grid.n + 1))


def unit_l2h(v: np.ndarray, h: float) -> np.ndarray:
    return v / math.sqrt(h * float(v @ v))


def interval_heat_kernel(x, y, tau, x_lo, x_hi, terms=60):
    """Dirichlet heat kernel on an interval by the method of images."""
    L = x_hi - x_lo
    xs, ys = x - x_lo, y - x_lo
    total = 0.0
    for r in range(-terms, terms + 1):
        total += math.exp(-(xs - ys - 2 * r * L) ** 2 / (4 * tau))
        total -= math.exp(-(xs + ys - 2 * r * L) ** 2 / (4 * tau))
    return total / math.sqrt(4 * math.pi * tau)


def dense_theta_trajectory(F, u0, forcing_values):
    """Solve the whole space-time system in one dense linear solve (theta = 1).

    Unknowns are the stacked states u^1..u^M; equation j couples levels j and
    j+1 through the implicit step.  Cross-checks sequential stepping.
    """
    spec = F.spec
    n, M, dt = spec.grid.n, spec.tgrid.M, spec.tgrid.dt
    assert spec.theta == 1.0
    big = np.zeros((n * M, n * M))
    rhs = np.zeros(n * M)
    for j in range(M):
        op = F.ops[j + 1]
        block = np.zeros((n, n))
        block[np.arange(n), np.arange(n)] = 1.0 + dt * (op.diag + F.lam * F.penalties[j + 1])
        block[np.arange(n - 1), np.arange(1, n)] = dt * op.upper[:-1]
        block[np.arange(1, n), np.arange(n - 1)] = dt * op.lower[1:]
        big[j * n:(j + 1) * n, j * n:(j + 1) * n] = block
        if j > 0:
            big[j * n:(j + 1) * n, (j - 1) * n:j * n] = -np.eye(n)
        rhs[j * n:(j + 1) * n] = dt * forcing_values[1:-1, j + 1]
    rhs[:n] += u0
    sol = np.linalg.solve(big, rhs)
    return [u0.copy()] + [sol[j * n:(j + 1) * n] for j in range(M)]


def flood_reachable(mask, start):
    """Plain queue-based reachability over +-1 horizontal and +1 level moves."""
    free = mask.free
    seen = np.zeros_like(free)
    q = deque([start])
    seen[start] = True
    n_nodes, n_levels = free.shape
    while q:
        i, j = q.popleft()
        for di, dj in ((1, 0), (-1, 0), (0, 1)):
            ii, jj = i + di, j + dj
            if 0 <= ii < n_nodes and 0 <= jj < n_levels and free[ii, jj] and not seen[ii, jj]:
                seen[ii, jj] = True
                q.append((ii, jj))
    return seen


def dense_period_map(F):
    """Period map assembled from explicit dense inverses (theta = 1 only)."""
    spec = F.spec
    n, M, dt = spec.grid.n, spec.tgrid.M, spec.tgrid.dt
    assert spec.theta == 1.0
    P = np.eye(n)
    for j in range(M):
        op = F.ops[j + 1]
        L = np.zeros((n, n))
        L[np.arange(n), np.arange(n)] = 1.0 + dt * (op.diag + F.lam * F.penalties[j + 1])
        L[np.arange(n - 1), np.arange(1, n)] = dt * op.upper[:-1]
        L[np.arange(1, n), np.arange(n - 1)] = dt * op.lower[1:]
        P = np.linalg.solve(L, P)
    return P
