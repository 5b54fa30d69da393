"""Kernel matrices of the discrete evolution maps and their Gaussian envelope.

The kernel between levels s < t is the matrix K with column j equal to the
evolved unit impulse e_j divided by h, so that

    (evolution of u)_i  =  sum_j K[i, j] u_j h

approximates the integral operator.  Entries are nonnegative whenever the
step maps are, they only decrease when the penalty grows, and for the plain
heat case they are dominated by a Gaussian profile

    M exp(omega tau) tau^(-1/2) exp(-c dx^2 / tau),      tau = t - s,

whose constants are recovered here by least squares over the kernel entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BadExponents, DimensionMismatch, InsufficientData, LevelMismatch, LevelOrder
from .evolve import StepFactorization, evolve_state

__all__ = [
    "KernelMatrix",
    "GaussianFit",
    "kernel_matrix",
    "apply_kernel",
    "check_monotone_in_lambda",
    "fit_gaussian",
    "envelope_violation",
    "smoothing_norm",
    "smoothing_exponent",
]

ENTRY_FLOOR = 1e-14      # entries below this never enter the log fit
ENVELOPE_SAFETY = 1.05   # multiplicative headroom on the fitted amplitude


@dataclass(frozen=True)
class KernelMatrix:
    """Kernel samples K[i, j] ~ k(x_i, x_j) between two time levels."""

    entries: np.ndarray
    s_level: int
    t_level: int
    lam: float
    h: float
    dt: float

    @property
    def tau(self) -> float:
        return (self.t_level - self.s_level) * self.dt

    def same_levels(self, other: "KernelMatrix") -> bool:
        return self.s_level == other.s_level and self.t_level == other.t_level


def kernel_matrix(F: StepFactorization, s_level: int, t_level: int) -> KernelMatrix:
    """Materialize the kernel by evolving all unit impulses at once."""
    if s_level >= t_level:
        raise LevelOrder(f"need s_level < t_level, got {s_level} >= {t_level}")
    n = F.n
    cols = evolve_state(F, np.eye(n), s_level, t_level) / F.spec.grid.h
    return KernelMatrix(cols, s_level, t_level, F.lam, F.spec.grid.h, F.tgrid.dt)


def apply_kernel(K: KernelMatrix, u: np.ndarray) -> np.ndarray:
    """Quadrature action sum_j K[i,j] u_j h; matches the direct evolution."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != K.entries.shape[1]:
        raise DimensionMismatch("state length does not match the kernel")
    return K.h * (K.entries @ u)


def check_monotone_in_lambda(K1: KernelMatrix, K2: KernelMatrix) -> float:
    """Largest positive excess of the stronger-penalty kernel over the weaker.

    Zero (up to rounding) certifies entrywise monotone decay in the penalty.
    """
    if not K1.same_levels(K2):
        raise LevelMismatch("kernels live on different level pairs")
    if K2.lam < K1.lam:
        raise LevelMismatch(f"expected lam1 <= lam2, got {K1.lam} > {K2.lam}")
    return float(max(0.0, float((K2.entries - K1.entries).max())))


@dataclass(frozen=True)
class GaussianFit:
    """Fitted envelope constants and the worst signed violation.

    max_violation <= 0 means every checked entry sits below the envelope
    (with the multiplicative safety factor applied).
    """

    Mconst: float
    omega: float
    cconst: float
    max_violation: float


def _fit_data(K: KernelMatrix):
    n = K.entries.shape[0]
    idx = np.arange(n)
    dx2 = (K.h * (idx[:, None] - idx[None, :])) ** 2
    tau = K.tau
    mask = K.entries >= ENTRY_FLOOR
    k = K.entries[mask]
    xi = dx2[mask] / tau
    y = np.log(k) + 0.5 * math.log(tau)
    return y, np.full(y.shape, tau), xi


def fit_gaussian(kernels) -> GaussianFit:
    """Least-squares Gaussian envelope over several level pairs.

    Needs at least three kernels whose time gaps span a factor >= 4.  The
    amplitude is calibrated so the envelope touches the data from above
    (never below 1), then reported with the safety factor folded into the
    violation check.
    """
    kernels = list(kernels)
    if len(kernels) < 3:
        raise InsufficientData(f"need >= 3 level pairs, got {len(kernels)}")
    taus = [K.tau for K in kernels]
    if max(taus) < 4.0 * min(taus):
        raise InsufficientData("time gaps must span a factor >= 4")

    ys, ts, xis = [], [], []
    for K in kernels:
        y, t, xi = _fit_data(K)
        ys.append(y)
        ts.append(t)
        xis.append(xi)
    y = np.concatenate(ys)
    t = np.concatenate(ts)
    xi = np.concatenate(xis)
    if y.size < 16:
        raise InsufficientData("too few kernel entries above the fit floor")

    design = np.column_stack([np.ones_like(t), t, -xi])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    _, omega, c = (float(v) for v in coef)

    # push the amplitude up until the envelope dominates every fitted entry
    log_m = float(np.max(y - omega * t + c * xi))
    m_const = max(math.exp(log_m), 1.0)

    fit = GaussianFit(m_const, omega, c, 0.0)
    violation = max(envelope_violation(fit, K) for K in kernels)
    return GaussianFit(m_const, omega, c, violation)


def envelope_violation(fit: GaussianFit, K: KernelMatrix) -> float:
    """Worst signed excess of kernel entries over the safety-factored envelope."""
    n = K.entries.shape[0]
    idx = np.arange(n)
    dx2 = (K.h * (idx[:, None] - idx[None, :])) ** 2
    tau = K.tau
    env = (ENVELOPE_SAFETY * fit.Mconst * math.exp(fit.omega * tau) / math.sqrt(tau)
           * np.exp(-fit.cconst * dx2 / tau))
    return float((K.entries - env).max())


def _colnorm(entries: np.ndarray, h: float, q: float) -> float:
    if math.isinf(q):
        return float(np.abs(entries).max())
    return float(np.max((h * np.sum(np.abs(entries) ** q, axis=0)) ** (1.0 / q)))


def _rownorm(entries: np.ndarray, h: float, p_dual: float) -> float:
    if math.isinf(p_dual):
        return float(np.abs(entries).max())
    return float(np.max((h * np.sum(np.abs(entries) ** p_dual, axis=1)) ** (1.0 / p_dual)))


def smoothing_norm(K: KernelMatrix, p: float, q: float) -> float:
    """Operator norm of the evolution map from lp(h) into lq(h).

    Exact whenever p = 1 (columns), q = inf (rows), or p = q = 2 (spectral
    norm); other pairs return the three-point interpolation upper bound
    through the (1,1), (1,inf), (inf,inf) corner norms.
    """
    p, q = float(p), float(q)
    if not (1.0 <= p <= q):
        raise BadExponents(f"need 1 <= p <= q, got p={p}, q={q}")
    E = K.entries
    h = K.h
    if p == 1.0:
        return _colnorm(E, h, q)
    if math.isinf(q):
        p_dual = 1.0 if math.isinf(p) else p / (p - 1.0)
        return _rownorm(E, h, p_dual)
    if p == 2.0 and q == 2.0:
        return float(scipy.linalg.svdvals(h * E)[0])
    n11 = _colnorm(E, h, 1.0)
    ninf = float(np.max(h * np.sum(np.abs(E), axis=1)))
    n1inf = float(np.abs(E).max())
    a = 1.0 / q
    b = 1.0 / p - 1.0 / q
    c = 1.0 - 1.0 / p
    return float(n11 ** a * n1inf ** b * ninf ** c)


def smoothing_exponent(kernels, p: float, q: float) -> float:
    """Log-log slope of the lp->lq norm against the time gap."""
    kernels = list(kernels)
    if len(kernels) < 3:
        raise InsufficientData("need >= 3 kernels for a slope fit")
    taus = np.array([K.tau for K in kernels])
    norms = np.array([smoothing_norm(K, p, q) for K in kernels])
    slope, _ = np.polyfit(np.log(taus), np.log(norms), 1)
    return float(slope)
