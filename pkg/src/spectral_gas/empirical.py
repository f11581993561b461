"""Empirical spectral measures and the ball/sphere normalization maps."""
import math
from dataclasses import dataclass

import numpy as np

from .special import check_beta, check_exponent, dims

__all__ = [
    "EmpiricalMeasure",
    "normalize_cone",
    "normalize_uniform",
    "normalize_singular",
    "singular_values",
    "p_moment",
    "log_energy_offdiag",
    "offdiag_log_sum",
    "pushforward_scale",
    "pushforward_square",
    "ks_distance",
    "wasserstein1",
]

_BLOCK = 1024


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Uniform probability measure on ``n`` real atoms, stored sorted."""

    atoms: np.ndarray

    def __post_init__(self):
        a = np.sort(np.asarray(self.atoms, dtype=float).ravel())
        if a.size < 1:
            raise ValueError("an empirical measure needs at least one atom")
        if not np.all(np.isfinite(a)):
            raise ValueError("atoms must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "atoms", a)

    @property
    def n(self):
        return self.atoms.size

    def __len__(self):
        return self.atoms.size

    def __eq__(self, other):
        return isinstance(other, EmpiricalMeasure) and np.array_equal(self.atoms, other.atoms)

    def to_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write("atom\n")
            for v in self.atoms:
                fh.write(f"{float(v)!r}\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "atom":
                raise ValueError(f"{path}:1: expected header 'atom', got {header!r}")
            vals = []
            for lineno, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                try:
                    vals.append(float(line))
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: cannot parse {line.strip()!r}") from None
        return cls(np.array(vals))


def _as_vector(x):
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1:
        raise ValueError("empty input vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("input vector has non-finite entries")
    return x


def _lp_norm(x, p):
    # scale first so |x|^p neither overflows nor underflows
    s = np.max(np.abs(x))
    return s * np.sum((np.abs(x) / s) ** p) ** (1.0 / p)


def normalize_cone(x, p):
    """Atoms ``n^(1/p) x_i / ||x||_p``: the cone-measure spectrum."""
    check_exponent(p)
    x = _as_vector(x)
    if not np.any(x):
        raise ValueError("cannot normalize the zero vector")
    n = x.size
    return EmpiricalMeasure(n ** (1.0 / p) * x / _lp_norm(x, p))


def normalize_uniform(x, u, p, beta):
    """Cone atoms shrunk by the radial factor ``u^(1/ell)``: the uniform-ball spectrum."""
    if not (0.0 < u <= 1.0):
        raise ValueError(f"u must lie in (0, 1], got {u!r}")
    check_beta(beta)
    x = _as_vector(x)
    ell, _ = dims(x.size, beta)
    cone = normalize_cone(x, p)
    return EmpiricalMeasure(cone.atoms * u ** (1.0 / ell))


def normalize_singular(x, p, beta, u=None):
    """Squared singular values ``n^(2/p) u^(1/(n+m)) x_i / ||x||_{p/2}``.

    ``u=None`` gives the cone-measure variant.  Use :func:`singular_values`
    for the square-root pushforward ``n^(1/p) s_j``.
    """
    check_exponent(p)
    check_beta(beta)
    x = _as_vector(x)
    if np.any(x <= 0):
        raise ValueError("singular-gas coordinates must be strictly positive")
    n = x.size
    atoms = n ** (2.0 / p) * x / _lp_norm(x, p / 2.0)
    if u is not None:
        if not (0.0 < u <= 1.0):
            raise ValueError(f"u must lie in (0, 1], got {u!r}")
        _, m = dims(n, beta)
        atoms = atoms * u ** (1.0 / (n + m))
    return EmpiricalMeasure(atoms)


def singular_values(mu):
    """Square-root pushforward of a squared-singular-value measure."""
    if np.any(mu.atoms < 0):
        raise ValueError("squared singular values must be non-negative")
    return EmpiricalMeasure(np.sqrt(mu.atoms))


def p_moment(mu, p):
    check_exponent(p)
    return float(np.mean(np.abs(mu.atoms) ** p))


def offdiag_log_sum(atoms, sign=-1.0):
    """``sum_{i != j} log|a_i + sign * a_j|``, accumulated in row blocks."""
    a = np.asarray(atoms, dtype=float).ravel()
    n = a.size
    total = 0.0
    for start in range(0, n, _BLOCK):
        rows = a[start:start + _BLOCK]
        d = np.abs(rows[:, None] + sign * a[None, :])
        idx = np.arange(rows.size)
        d[idx, start + idx] = 1.0  # diagonal contributes log 1 = 0
        with np.errstate(divide="ignore"):
            total += float(np.sum(np.log(d)))
    return total


def log_energy_offdiag(mu):
    """U-statistic ``(1/(n(n-1))) sum_{i != j} log|a_i - a_j|``."""
    a = mu.atoms
    n = a.size
    if n < 2:
        raise ValueError("off-diagonal energy needs at least two atoms")
    if np.any(np.diff(a) == 0):
        raise ValueError("duplicate atoms: the atomic log-energy is -inf")
    return offdiag_log_sum(a) / (n * (n - 1))


def pushforward_scale(mu, c, p):
    """``F_p(mu, c)``: the measure ``A -> mu(c^(1/p) A)``, i.e. atoms ``/ c^(1/p)``."""
    check_exponent(p)
    if not (c > 0 and math.isfinite(c)):
        raise ValueError(f"scale c must be positive and finite, got {c!r}")
    return EmpiricalMeasure(mu.atoms / c ** (1.0 / p))


def pushforward_square(mu):
    return EmpiricalMeasure(mu.atoms**2)


def ks_distance(mu, law):
    """Kolmogorov-Smirnov distance between ``mu`` and ``law.cdf``."""
    a = mu.atoms
    n = a.size
    F = np.asarray(law.cdf(a), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def wasserstein1(mu, law):
    """Quantile-coupling W1: ``mean_i |a_(i) - Q((i - 1/2)/n)|``."""
    a = mu.atoms
    n = a.size
    q = law.quantile((np.arange(n) + 0.5) / n)
    return float(np.mean(np.abs(a - q)))
