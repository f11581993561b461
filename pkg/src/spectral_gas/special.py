"""Closed-form constants of the |x|^p Coulomb gas and its limiting laws.

All gamma-function arithmetic is done with ``gammaln`` so that exponents up
to ~1e6 stay finite.  The exponent ``p = math.inf`` is a distinguished value
(not a large float): only :func:`rate_constant_C` and the helpers that
explicitly document it accept it.
"""
import math
from dataclasses import dataclass

from scipy.special import gammaln

INF = math.inf

__all__ = [
    "INF",
    "ModelConstants",
    "model_constants",
    "rate_constant_C",
    "singular_rate_constant",
    "dims",
    "parse_exponent",
    "check_exponent",
    "check_beta",
]


def parse_exponent(value):
    """Parse ``"inf"``/``"infinity"``/numbers into a float exponent."""
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "+inf", "infinity", "+infinity", "oo"):
            return INF
        value = float(s)
    p = float(value)
    check_exponent(p, allow_inf=True)
    return p


def check_exponent(p, allow_inf=False):
    if isinstance(p, bool) or not isinstance(p, (int, float)):
        raise TypeError(f"exponent must be a real number, got {p!r}")
    if math.isnan(p) or p <= 0:
        raise ValueError(f"exponent p must be positive, got {p!r}")
    if math.isinf(p) and not allow_inf:
        raise ValueError("p = inf is not allowed here")


def check_beta(beta):
    if isinstance(beta, bool) or not isinstance(beta, (int, float)):
        raise TypeError(f"beta must be a real number, got {beta!r}")
    if not math.isfinite(beta) or beta <= 0:
        raise ValueError(f"beta must be finite and positive, got {beta!r}")


def _log_ullman_ratio(p):
    # log( sqrt(pi) * p * Gamma(p/2) / Gamma((p+1)/2) )
    return 0.5 * math.log(math.pi) + math.log(p) + gammaln(p / 2) - gammaln((p + 1) / 2)


@dataclass(frozen=True)
class ModelConstants:
    """Scalars attached to an exponent/temperature pair.

    Attributes
    ----------
    p, beta : float
        Exponent of the confining potential and inverse temperature.
    b_p : float
        Support radius of the Ullman law with unit p-th moment.
    alpha_p : float
        p-th moment of the unit-support Ullman density ``h_p``.
    r_p : float
        Support radius of the minimizer of the gas rate function.
    B : float
        Limiting free energy ``lim n^-2 log C_{n,beta,p}``.
    C : float
        Additive constant of the spectral rate function.
    """

    p: float
    beta: float
    b_p: float
    alpha_p: float
    r_p: float
    B: float
    C: float

    def as_dict(self):
        return {
            "p": self.p,
            "beta": self.beta,
            "b_p": self.b_p,
            "alpha_p": self.alpha_p,
            "r_p": self.r_p,
            "B": self.B,
            "C": self.C,
        }


def model_constants(p, beta):
    """Evaluate ``b_p``, ``alpha_p``, ``r_p``, ``B`` and ``C`` for finite ``p``."""
    check_exponent(p)
    check_beta(beta)
    p = float(p)
    beta = float(beta)
    log_ratio = _log_ullman_ratio(p)
    b_p = math.exp(log_ratio / p)
    alpha_p = math.exp(-log_ratio)
    t = beta / (2 * p)
    r_p = math.exp((math.log(t) + log_ratio) / p)
    B = (
        t * (math.log(beta / 2) + 0.5 * math.log(math.pi) + gammaln(p / 2) - gammaln((p + 1) / 2))
        - beta / 2 * math.log(2)
        - 3 * beta / (4 * p)
    )
    C = _rate_constant_finite(p, beta)
    return ModelConstants(p=p, beta=beta, b_p=b_p, alpha_p=alpha_p, r_p=r_p, B=B, C=C)


def _rate_constant_finite(p, beta):
    log_arg = _log_ullman_ratio(p) - p * math.log(2) - 0.5
    return beta / (2 * p) * log_arg


def rate_constant_C(p, beta):
    """Constant term of the eigenvalue rate function.

    ``(beta/2p) log(sqrt(pi) p Gamma(p/2) / (2^p sqrt(e) Gamma((p+1)/2)))``
    for finite ``p`` and ``-(beta/2) log 2`` for ``p = inf``.
    """
    check_exponent(p, allow_inf=True)
    check_beta(beta)
    if math.isinf(p):
        return -beta / 2 * math.log(2)
    return _rate_constant_finite(float(p), float(beta))


def singular_rate_constant(p, beta):
    """Constant term of the squared-singular-value rate function.

    Twice :func:`rate_constant_C`; at ``p = inf`` this is the limit
    ``-beta log 2``, which is what makes the rate vanish on the squared
    absolute-arcsine law.
    """
    return 2.0 * rate_constant_C(p, beta)


def dims(n, beta):
    """Radial exponents ``(ell, m)`` for the ball representations.

    ``ell = beta n(n-1)/2 + beta n`` is the real dimension of the self-adjoint
    matrix space, ``m = beta n(n-1)/2 + n(beta/2 - 1)`` the homogeneity degree
    of the singular-value weight.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    check_beta(beta)
    n = int(n)
    pairs = beta * n * (n - 1) / 2
    return pairs + beta * n, pairs + n * (beta / 2 - 1)
