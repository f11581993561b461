"""Ullman and arcsine limit laws.

The unit-support Ullman density is

    h_p(x) = (p/pi) * int_{|x|}^1 t^(p-1) / sqrt(t^2 - x^2) dt,   |x| <= 1.

With ``t = |x| cosh(u)`` the integrand becomes ``(|x| cosh u)^(p-1)`` on
``[0, arccosh(1/|x|)]``, which is smooth, so plain adaptive quadrature is
accurate to ~1e-12.  Swapping the order of integration gives the half-CDF

    G(y) = int_0^y h_p = y^p / 2 + (p/pi) * int_y^1 t^(p-1) arcsin(y/t) dt,

which is what the CDF tables are built from.  ``p = 1``, ``p = 2`` and
``p = inf`` use closed forms.
"""
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .special import INF, check_exponent, model_constants

__all__ = [
    "EIGENVALUE",
    "SINGULAR",
    "LimitLaw",
    "h_density",
    "half_cdf",
    "limit_density",
    "log_energy_limit",
    "quantile",
    "sample",
]

EIGENVALUE = "eigenvalue"
SINGULAR = "singular"
ENSEMBLES = (EIGENVALUE, SINGULAR)

_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=200)


def _h_generic(p, ax):
    upper = math.acosh(1.0 / ax)
    val, _ = quad(lambda u: (ax * math.cosh(u)) ** (p - 1.0), 0.0, upper, **_QUAD_OPTS)
    return p / math.pi * val


def h_density(p, x):
    """Unit-support Ullman density ``h_p(x)``; ``inf`` at ``x = 0`` when ``p <= 1``."""
    check_exponent(p)
    ax = abs(float(x))
    if ax >= 1.0:
        return 0.0
    if ax == 0.0:
        return p / (math.pi * (p - 1.0)) if p > 1 else INF
    if p == 1:
        return math.log((1.0 + math.sqrt(1.0 - ax * ax)) / ax) / math.pi
    if p == 2:
        return 2.0 / math.pi * math.sqrt(1.0 - ax * ax)
    return _h_generic(p, ax)


def half_cdf(p, y):
    """``G(y) = int_0^y h_p(x) dx`` for ``0 <= y <= 1`` (so ``G(1) = 1/2``)."""
    check_exponent(p)
    y = float(y)
    if y <= 0.0:
        return 0.0
    if y >= 1.0:
        return 0.5
    if p == 1:
        return (math.asin(y) + y * math.acosh(1.0 / y)) / math.pi
    if p == 2:
        return (y * math.sqrt(1.0 - y * y) + math.asin(y)) / math.pi
    tail, _ = quad(lambda t: t ** (p - 1.0) * math.asin(min(1.0, y / t)), y, 1.0, **_QUAD_OPTS)
    return y**p / 2.0 + p / math.pi * tail


@lru_cache(maxsize=64)
def _half_table(p, resolution):
    nodes = np.linspace(0.0, 1.0, resolution + 1)
    values = np.array([half_cdf(p, y) for y in nodes])
    values[0], values[-1] = 0.0, 0.5
    values = np.maximum.accumulate(values)
    return nodes, values


@dataclass(frozen=True)
class LimitLaw:
    """Limiting spectral law for exponent ``p`` (``math.inf`` allowed).

    ``ensemble="eigenvalue"`` is the Ullman law on ``[-b_p, b_p]`` (arcsine on
    ``[-1, 1]`` for ``p = inf``); ``ensemble="singular"`` is the law of its
    absolute value on ``[0, b_p]``.  ``resolution`` is the number of cells of
    the half-CDF table used for quantile inversion.
    """

    p: float
    ensemble: str = EIGENVALUE
    resolution: int = 4096

    def __post_init__(self):
        check_exponent(self.p, allow_inf=True)
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"ensemble must be one of {ENSEMBLES}, got {self.ensemble!r}")
        if self.resolution < 16:
            raise ValueError("resolution must be at least 16")

    @property
    def is_arcsine(self):
        return math.isinf(self.p)

    @cached_property
    def scale(self):
        """Right endpoint of the support (``b_p``, or 1 for ``p = inf``)."""
        if self.is_arcsine:
            return 1.0
        return model_constants(self.p, 1.0).b_p

    @property
    def support(self):
        if self.ensemble == SINGULAR:
            return (0.0, self.scale)
        return (-self.scale, self.scale)

    @cached_property
    def _interp(self):
        nodes, values = _half_table(float(self.p), self.resolution)
        # drop flat stretches so the inverse stays a function
        keep = np.concatenate([[True], np.diff(values) > 0])
        return PchipInterpolator(nodes, values), PchipInterpolator(values[keep], nodes[keep])

    def _half_cdf_unit(self, y):
        y = np.clip(np.abs(y), 0.0, 1.0)
        if self.is_arcsine:
            return np.arcsin(y) / np.pi
        return self._interp[0](y)

    def _half_quantile_unit(self, g):
        g = np.clip(g, 0.0, 0.5)
        if self.is_arcsine:
            return np.sin(np.pi * g)
        return np.clip(self._interp[1](g), 0.0, 1.0)

    def density(self, x):
        """Density at ``x`` (scalar or array); zero outside the support."""
        x = np.asarray(x, dtype=float)
        y = x / self.scale
        inside = (np.abs(y) < 1.0) if self.ensemble == EIGENVALUE else ((y >= 0.0) & (y < 1.0))
        out = np.zeros_like(y)
        if self.is_arcsine:
            with np.errstate(divide="ignore"):
                out[inside] = 1.0 / (np.pi * np.sqrt(1.0 - y[inside] ** 2))
        else:
            out[inside] = [h_density(self.p, v) for v in y[inside]]
            out /= self.scale
        if self.ensemble == SINGULAR:
            out *= 2.0
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        y = x / self.scale
        g = self._half_cdf_unit(y)
        if self.ensemble == SINGULAR:
            out = np.where(y <= 0.0, 0.0, 2.0 * g)
        else:
            out = 0.5 + np.sign(y) * g
        out = np.where(y >= 1.0, 1.0, out)
        return out if out.ndim else float(out)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u < 0.0) | (u > 1.0)) or np.any(np.isnan(u)):
            raise ValueError("quantile levels must lie in [0, 1]")
        if self.ensemble == SINGULAR:
            y = self._half_quantile_unit(u / 2.0)
        else:
            y = np.sign(u - 0.5) * self._half_quantile_unit(np.abs(u - 0.5))
        out = self.scale * y
        return out if out.ndim else float(out)

    def sample(self, rng, count):
        """``count`` iid draws by inversion, consuming ``rng.random(count)``."""
        return self.quantile(rng.random(count))

    def tabulate(self, points):
        """Cell-midpoint tabulation ``(x, density)`` with ``points`` rows."""
        lo, hi = self.support
        x = lo + (np.arange(points) + 0.5) * (hi - lo) / points
        return x, np.atleast_1d(self.density(x))


def limit_density(law, x):
    return law.density(x)


def quantile(law, u):
    return law.quantile(u)


def sample(law, rng, count):
    return law.sample(rng, count)


def log_energy_limit(p):
    """Logarithmic energy of the eigenvalue limit law.

    ``log(b_p/2) - 1/(2p)`` for finite ``p`` and ``-log 2`` (arcsine) for
    ``p = inf``.
    """
    check_exponent(p, allow_inf=True)
    if math.isinf(p):
        return -math.log(2.0)
    return math.log(model_constants(p, 1.0).b_p / 2.0) - 1.0 / (2.0 * p)
