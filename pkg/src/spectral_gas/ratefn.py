"""Rate functions evaluated on piecewise-constant (grid) measures.

Atomic measures have infinite self-energy, so every rate function here takes
a :class:`GridMeasure`: uniform density inside each cell of a uniform grid.
The logarithmic energy of such a measure is exact up to rounding because the
cell-pair integrals of ``log|x - y|`` have a closed form through the second
antiderivative ``G2(u) = u^2/2 log|u| - 3u^2/4``.

Infeasible measures get ``math.inf``; callers branch on ``math.isinf``.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import matmul_toeplitz

from .special import (
    check_beta,
    check_exponent,
    model_constants,
    rate_constant_C,
    singular_rate_constant,
)

__all__ = [
    "EIGENVALUE",
    "EIGENVALUE_INF",
    "SINGULAR",
    "MOMENT_TOL",
    "GridMeasure",
    "log_kernel_cell_pair",
    "log_kernel_column",
    "log_kernel_matrix",
    "grid_log_energy",
    "grid_wasserstein1",
    "rate_spectral",
    "rate_gas",
    "rate_pair",
    "beta_rate",
]

EIGENVALUE = "eigenvalue"
EIGENVALUE_INF = "eigenvalue_inf"
SINGULAR = "singular"

# constraint slack so the discretized minimizer is not declared infeasible
MOMENT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Probability measure with constant density on each of ``N`` equal cells.

    Cell ``i`` is ``[left + i*width, left + (i+1)*width]`` and carries mass
    ``weights[i]``.
    """

    left: float
    width: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size < 1:
            raise ValueError("a grid measure needs at least one cell")
        if not (self.width > 0 and math.isfinite(self.width)) or not math.isfinite(self.left):
            raise ValueError("grid left/width must be finite with width > 0")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {w.sum()!r})")
        w.setflags(write=False)
        object.__setattr__(self, "left", float(self.left))
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "weights", w)

    @property
    def N(self):
        return self.weights.size

    @property
    def right(self):
        return self.left + self.N * self.width

    @property
    def edges(self):
        return self.left + self.width * np.arange(self.N + 1)

    @property
    def centers(self):
        return self.left + self.width * (np.arange(self.N) + 0.5)

    @classmethod
    def from_cdf(cls, cdf, left, right, N):
        """Cell masses ``cdf(e_{i+1}) - cdf(e_i)``, renormalized to the grid."""
        edges = np.linspace(left, right, N + 1)
        F = np.asarray(cdf(edges), dtype=float)
        w = np.clip(np.diff(F), 0.0, None)
        return cls(left, (right - left) / N, w / w.sum())

    @classmethod
    def from_law(cls, law, N, left=None, right=None, moment=None):
        """Cell masses of ``law``.

        Cell-averaging a density raises its ``|x|^q`` moment by ``O(width^2)``;
        ``moment=q`` rescales the result so the grid keeps the law's exact
        ``q``-th moment (1 for the limit laws at their natural ``q``).
        """
        lo, hi = law.support
        mu = cls.from_cdf(law.cdf, lo if left is None else left, hi if right is None else right, N)
        return mu if moment is None else mu.moment_normalized(moment)

    def moment_normalized(self, p, target=1.0):
        """Rescaled copy whose ``p``-th moment equals ``target``."""
        return self.scaled((target / self.moment(p)) ** (1.0 / p))

    def scaled(self, c):
        """Law of ``c X`` for ``X ~ self`` (``c > 0``)."""
        if not c > 0:
            raise ValueError("scale must be positive")
        return GridMeasure(self.left * c, self.width * c, self.weights)

    def cell_moments(self, p):
        """Exact ``(1/width) int_cell |x|^p dx`` for every cell."""
        check_exponent(p)
        e = self.edges
        F = np.sign(e) * np.abs(e) ** (p + 1) / (p + 1)
        return np.diff(F) / self.width

    def moment(self, p):
        return float(self.weights @ self.cell_moments(p))

    def mass_outside(self, lo, hi):
        e = self.edges
        inside = np.clip(np.minimum(e[1:], hi) - np.maximum(e[:-1], lo), 0.0, None) / self.width
        return float(max(0.0, 1.0 - self.weights @ inside))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        F = np.concatenate([[0.0], np.cumsum(self.weights)])
        return np.interp(x, self.edges, F, left=0.0, right=1.0)

    def to_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write("center,weight\n")
            for c, w in zip(self.centers, self.weights):
                fh.write(f"{float(c)!r},{float(w)!r}\n")

    @classmethod
    def from_csv(cls, path):
        centers, weights = [], []
        with open(path) as fh:
            header = fh.readline().strip().replace(" ", "")
            if header != "center,weight":
                raise ValueError(f"{path}:1: expected header 'center,weight', got {header!r}")
            for lineno, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                parts = line.strip().split(",")
                try:
                    if len(parts) != 2:
                        raise ValueError
                    c, w = float(parts[0]), float(parts[1])
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: expected two numbers 'center,weight', got {line.strip()!r}") from None
                if w < 0 or not math.isfinite(w) or not math.isfinite(c):
                    raise ValueError(f"{path}:{lineno}: invalid weight or center")
                centers.append(c)
                weights.append(w)
        if not centers:
            raise ValueError(f"{path}: no cells")
        centers = np.array(centers)
        if centers.size == 1:
            raise ValueError(f"{path}: a single cell does not determine the grid width")
        steps = np.diff(centers)
        width = float(centers[-1] - centers[0]) / (centers.size - 1)
        bad = np.flatnonzero(np.abs(steps - steps[0]) > 1e-9 * max(1.0, abs(steps[0])))
        if width <= 0 or steps[0] <= 0 or bad.size:
            line = int(bad[0]) + 3 if bad.size else 3
            raise ValueError(f"{path}:{line}: cell centers must be increasing and equally spaced")
        w = np.array(weights)
        total = w.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"{path}: weights sum to {total!r}, expected 1")
        return cls(float(centers[0] - width / 2), width, w / total)


def _G2(u):
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 0.5 * u * u * np.log(au) - 0.75 * u * u
    return np.where(au == 0.0, 0.0, val)


def log_kernel_cell_pair(a, b, c, d):
    """``int_a^b int_c^d log|x - y| dy dx`` by the four-corner formula."""
    if not (a < b and c < d):
        raise ValueError("cells must satisfy a < b and c < d")
    return float(_G2(b - c) - _G2(b - d) - _G2(a - c) + _G2(a - d))


def log_kernel_column(N, width):
    """Normalized kernel ``K_k`` for cells ``k`` apart on a uniform grid.

    ``K_k = (1/width^2) int int log|x - y|`` over two cells at offset ``k``;
    ``K_0 = log(width) - 3/2``.
    """
    k = np.arange(N, dtype=float)
    D = np.empty(N)
    D[0] = 0.0
    if N > 1:
        D[1] = 2.0 * math.log(2.0)
    if N > 2:
        kk = k[2:]
        # second difference of (k^2/2) log k, written to avoid O(k^2) cancellation
        D[2:] = np.log(kk) + 0.5 * ((kk + 1) ** 2 * np.log1p(1.0 / kk) + (kk - 1) ** 2 * np.log1p(-1.0 / kk))
    return math.log(width) + D - 1.5


def log_kernel_matrix(N, width):
    """Dense symmetric Toeplitz matrix of :func:`log_kernel_column`."""
    col = log_kernel_column(N, width)
    idx = np.arange(N)
    return col[np.abs(idx[:, None] - idx[None, :])]


def kernel_apply(col, w):
    """``K @ w`` for the symmetric Toeplitz kernel with first column ``col``."""
    if col.size < 64:
        return log_kernel_from_col(col) @ w
    return matmul_toeplitz((col, col), w)


def log_kernel_from_col(col):
    idx = np.arange(col.size)
    return col[np.abs(idx[:, None] - idx[None, :])]


def grid_log_energy(mu):
    """``int int log|x - y| mu(dx) mu(dy)``, exact for piecewise-constant densities."""
    col = log_kernel_column(mu.N, mu.width)
    w = mu.weights
    return float(w @ kernel_apply(col, w))


def grid_wasserstein1(mu, other, refine=8):
    """``int |F_mu - F_other| dx`` (the 1-d W1 distance).

    ``other`` is anything with a vectorized ``cdf`` (a LimitLaw or another
    GridMeasure) and a ``support`` or grid extent.
    """
    lo = [mu.left]
    hi = [mu.right]
    if isinstance(other, GridMeasure):
        lo.append(other.left)
        hi.append(other.right)
        step = min(mu.width, other.width) / refine
    else:
        a, b = other.support
        lo.append(a)
        hi.append(b)
        step = mu.width / refine
    a, b = min(lo), max(hi)
    m = int(math.ceil((b - a) / step))
    x = np.linspace(a, b, m + 1)
    diff = np.abs(mu.cdf(x) - np.asarray(other.cdf(x), dtype=float))
    return float(np.trapezoid(diff, x))


def rate_spectral(mu, p, beta, ensemble=EIGENVALUE, tol=MOMENT_TOL):
    """Spectral rate function of the ball/sphere spectrum.

    ``ensemble`` is ``"eigenvalue"`` (finite ``p``; ``p = inf`` is routed to
    the support-constrained variant), ``"eigenvalue_inf"`` or ``"singular"``
    (squared singular values, moment ``m_{p/2}``).
    """
    check_beta(beta)
    if ensemble == EIGENVALUE and math.isinf(p):
        ensemble = EIGENVALUE_INF
    if ensemble == EIGENVALUE:
        check_exponent(p)
        if mu.moment(p) > 1.0 + tol:
            return math.inf
        return -beta / 2 * grid_log_energy(mu) + rate_constant_C(p, beta)
    if ensemble == EIGENVALUE_INF:
        if mu.mass_outside(-1.0, 1.0) > tol:
            return math.inf
        return -beta / 2 * grid_log_energy(mu) - beta / 2 * math.log(2.0)
    if ensemble == SINGULAR:
        check_exponent(p, allow_inf=True)
        if mu.left < -1e-12:
            raise ValueError("singular-ensemble measures must live on [0, inf)")
        if math.isinf(p):
            feasible = mu.mass_outside(0.0, 1.0) <= tol
        else:
            feasible = mu.moment(p / 2) <= 1.0 + tol
        if not feasible:
            return math.inf
        return -beta / 2 * grid_log_energy(mu) + singular_rate_constant(p, beta)
    raise ValueError(f"unknown ensemble {ensemble!r}")


def rate_gas(mu, p, beta):
    """Rate of the gas empirical measure: ``-(beta/2) E(mu) + m_p(mu) + B``.

    ``B`` is the limiting free energy from :func:`model_constants`, so the
    value is zero at the gas minimizer.  Bounded grids always have finite
    moments, so the infinite branch is unreachable here.
    """
    c = model_constants(p, beta)
    return -beta / 2 * grid_log_energy(mu) + mu.moment(p) + c.B


def rate_pair(mu, m, p, beta, tol=MOMENT_TOL):
    """Joint rate of (empirical measure, empirical p-th moment)."""
    if m < 0:
        raise ValueError("m must be non-negative")
    c = model_constants(p, beta)
    if m < mu.moment(p) - tol:
        return math.inf
    return -beta / 2 * grid_log_energy(mu) + m + c.B


def beta_rate(y, a, b):
    """Speed-``n^s`` rate of Beta(a_n, b_n) variables with ``a_n/n^s -> a``, ``b_n/n^s -> b``."""
    if a < 0 or b < 0 or (a == 0 and b == 0):
        raise ValueError("need a, b >= 0, not both zero")
    if a > 0 and b > 0:
        if not 0.0 < y < 1.0:
            return math.inf
        return -a * math.log(y / a) - b * math.log((1.0 - y) / b) - (a + b) * math.log(a + b)
    if b == 0:
        if not 0.0 < y <= 1.0:
            return math.inf
        return -a * math.log(y)
    if not 0.0 <= y < 1.0:
        return math.inf
    return -b * math.log1p(-y)
