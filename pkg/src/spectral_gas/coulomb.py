"""Metropolis sampler for the n-particle Coulomb gas with |x|^p confinement.

Eigenvalue gas:  exp(-n sum |x_i|^p) prod_{i<j} |x_i - x_j|^beta          on R^n
Singular gas:    exp(-n sum x_i^(p/2)) prod_{i<j} |x_i - x_j|^beta
                 * prod x_i^(beta/2 - 1)                                  on (0, inf)^n

Single-site random-walk Metropolis with a pairwise log-distance cache, so a
proposal costs O(n) and a sweep O(n^2).  The singular gas walks in ``log x``,
which keeps coordinates positive and removes the ``x^(beta/2 - 1)`` pole.
The proposal scale is adapted toward 30% acceptance during burn-in only.  ``rejection_oracle`` is an exact iid
sampler for n <= 3 used as ground truth.
"""
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
from numba import njit
from scipy.special import gammainccinv

from .special import check_beta, check_exponent, model_constants
from .ullman import EIGENVALUE, SINGULAR, LimitLaw

__all__ = [
    "GasConfig",
    "GasChain",
    "make_rng",
    "log_density_unnormalized",
    "initial_state",
    "mcmc_run",
    "rejection_oracle",
    "TARGET_ACCEPTANCE",
    "SIGMA_FLOOR",
]

TARGET_ACCEPTANCE = 0.3
SIGMA_FLOOR = 1e-3
_MOVES_PER_CHUNK = 1 << 20


def make_rng(seed, *stream):
    """Counter-based (Philox) generator keyed by ``seed`` and a stream path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


@dataclass(frozen=True)
class GasConfig:
    n: int
    p: float
    beta: float
    ensemble: str = EIGENVALUE
    sweeps: int = 2000
    burn_in: int = 500
    thin: int = 1
    proposal_sigma: float | None = None
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        check_exponent(self.p)
        check_beta(self.beta)
        if self.ensemble not in (EIGENVALUE, SINGULAR):
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        if self.sweeps < 1 or not 0 <= self.burn_in < self.sweeps:
            raise ValueError("need sweeps >= 1 and 0 <= burn_in < sweeps")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.proposal_sigma is not None and not self.proposal_sigma > 0:
            raise ValueError("proposal_sigma must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        # plain Python scalars so to_kv round-trips exactly
        for name, kind in (("n", int), ("p", float), ("beta", float), ("sweeps", int),
                           ("burn_in", int), ("thin", int), ("seed", int)):
            object.__setattr__(self, name, kind(getattr(self, name)))
        if self.proposal_sigma is not None:
            object.__setattr__(self, "proposal_sigma", float(self.proposal_sigma))

    @property
    def singular(self):
        return self.ensemble == SINGULAR

    @property
    def bulk_radius(self):
        """Support radius of the limiting gas density (of ``x``, not ``x^2``)."""
        if self.singular:
            # squares of the beta -> 2 beta eigenvalue minimizer
            return model_constants(self.p, 2 * self.beta).r_p
        return model_constants(self.p, self.beta).r_p

    def default_sigma(self):
        """Initial proposal scale: additive for the eigenvalue gas, log-scale for the singular gas."""
        if self.singular:
            return 2.0 / max(self.n, 2)
        return 2 * self.bulk_radius / max(self.n, 2)

    def to_kv(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={'none' if v is None else v!r}".replace("'", ""))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_kv(cls, text):
        raw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            raw[k] = v
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        conv = dict(n=int, p=float, beta=float, ensemble=str, sweeps=int, burn_in=int, thin=int, seed=int)
        kwargs = {}
        for k, v in raw.items():
            if k == "proposal_sigma":
                kwargs[k] = None if v.lower() == "none" else float(v)
            else:
                kwargs[k] = conv[k](v)
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class GasChain:
    """Retained (post burn-in, thinned) states, one row per state."""

    states: np.ndarray
    acceptance_rate: float
    config: GasConfig
    final_sigma: float

    def pooled(self):
        return self.states.ravel()

    def to_csv(self, path):
        n = self.states.shape[1]
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(f"x{i}" for i in range(n)) + "\n")
            for row in self.states:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def log_density_unnormalized(state, config):
    """Unnormalized log-density of the gas; ``-inf`` off its support."""
    x = np.asarray(state, dtype=float)
    if x.ndim != 1 or x.size != config.n:
        raise ValueError(f"state must be a vector of length {config.n}")
    n = config.n
    if config.singular:
        if np.any(x <= 0):
            return -math.inf
        val = -n * float(np.sum(x ** (config.p / 2))) + (config.beta / 2 - 1) * float(np.sum(np.log(x)))
    else:
        val = -n * float(np.sum(np.abs(x) ** config.p))
    if n > 1:
        i, j = np.triu_indices(n, 1)
        d = np.abs(x[i] - x[j])
        if np.any(d == 0):
            return -math.inf
        val += config.beta * float(np.sum(np.log(d)))
    return val


def initial_state(config, rng):
    """iid draws from the limiting bulk (squared for the singular gas)."""
    if config.singular:
        law = LimitLaw(config.p, SINGULAR)
    else:
        law = LimitLaw(config.p, EIGENVALUE)
    factor = config.bulk_radius / law.scale
    while True:
        x = law.sample(rng, config.n) * factor
        if config.singular:
            x = x * x
            ok = np.all(x > 0)
        else:
            ok = True
        if ok and np.unique(x).size == x.size:
            return x


@njit(cache=True)
def _log_dist_matrix(x):
    n = x.size
    L = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            v = math.log(abs(x[i] - x[j]))
            L[i, j] = v
            L[j, i] = v
    return L


@njit(cache=True)
def _metropolis(x, L, sigma, z, u, thin, out, coef, pot_exp, beta, w_exp, singular):
    """Run ``z.shape[0]`` sweeps in place; return the number of accepted moves."""
    n = x.size
    sweeps = z.shape[0]
    new = np.empty(n)
    accepted = 0
    k = 0
    for s in range(sweeps):
        for i in range(n):
            xi = x[i]
            if singular:
                # walk in log x; the Jacobian adds one power of x to the weight
                step = sigma * z[s, i]
                y = xi * math.exp(step)
                if y <= 0.0 or y == math.inf:
                    continue
                d = -coef * (y**pot_exp - xi**pot_exp) + (w_exp + 1.0) * step
            else:
                y = xi + sigma * z[s, i]
                d = -coef * (abs(y) ** pot_exp - abs(xi) ** pot_exp)
            ok = True
            inter = 0.0
            for j in range(n):
                if j == i:
                    continue
                dist = abs(y - x[j])
                if dist == 0.0:
                    ok = False
                    break
                v = math.log(dist)
                new[j] = v
                inter += v - L[i, j]
            if not ok:
                continue
            d += beta * inter
            if math.log(u[s, i]) < d:
                x[i] = y
                accepted += 1
                for j in range(n):
                    if j != i:
                        L[i, j] = new[j]
                        L[j, i] = new[j]
        if out.shape[0] > 0 and (s + 1) % thin == 0:
            out[k, :] = x
            k += 1
    return accepted


def _sweep_block(x, L, sigma, rng, sweeps, thin, out, config):
    n = config.n
    z = rng.standard_normal((sweeps, n))
    u = rng.random((sweeps, n))
    if config.singular:
        pot_exp, w_exp = config.p / 2, config.beta / 2 - 1
    else:
        pot_exp, w_exp = config.p, 0.0
    return _metropolis(x, L, sigma, z, u, thin, out, float(n), float(pot_exp),
                       float(config.beta), float(w_exp), config.singular)


def mcmc_run(config, rng=None):
    """Sample the gas; deterministic given ``config.seed`` (or the passed ``rng``)."""
    if not isinstance(config, GasConfig):
        raise TypeError("config must be a GasConfig")
    if rng is None:
        rng = make_rng(config.seed)
    n = config.n
    x = initial_state(config, rng)
    L = _log_dist_matrix(x)
    sigma = config.proposal_sigma or config.default_sigma()
    empty = np.empty((0, n))

    batch = max(1, math.ceil(200 / n))
    done = 0
    k = 0
    log_sigma = math.log(sigma)
    while done < config.burn_in:
        m = min(batch, config.burn_in - done)
        acc = _sweep_block(x, L, sigma, rng, m, 1, empty, config)
        rate = acc / (m * n)
        log_sigma += (rate - TARGET_ACCEPTANCE) / math.sqrt(1.0 + k / 10.0)
        sigma = max(math.exp(log_sigma), SIGMA_FLOOR)
        log_sigma = math.log(sigma)
        done += m
        k += 1
        if k % 64 == 0:
            L = _log_dist_matrix(x)  # drop accumulated rounding

    remaining = config.sweeps - config.burn_in
    keep = remaining // config.thin
    states = np.empty((keep, n))
    chunk = max(config.thin, (_MOVES_PER_CHUNK // n) // config.thin * config.thin)
    accepted = 0
    row = 0
    done = 0
    while done < remaining:
        m = min(chunk, remaining - done)
        n_out = m // config.thin
        out = np.empty((n_out, n))
        accepted += _sweep_block(x, L, sigma, rng, m, config.thin, out, config)
        states[row:row + n_out] = out
        row += n_out
        done += m
        L = _log_dist_matrix(x)
    return GasChain(states=states, acceptance_rate=accepted / (remaining * n), config=config, final_sigma=sigma)


def _truncation_radius(config, tail=1e-12):
    # P(single-particle proposal > R) = tail, proposals are Gamma-distributed in n x^q
    n = config.n
    if config.singular:
        shape, q = config.beta / config.p, config.p / 2
    else:
        shape, q = 1.0 / config.p, config.p
    return (gammainccinv(shape, tail) / n) ** (1.0 / q)


def rejection_oracle(config, count, rng, max_proposals=10**9):
    """Exact iid gas samples for ``n <= 3`` by rejection from the product proposal.

    Proposals are iid from the one-particle factor (including ``x^(beta/2-1)``
    for the singular gas), truncated to radius ``R``; a proposal is accepted
    with probability ``prod |x_i - x_j|^beta / M`` where ``M`` bounds the
    Vandermonde on the truncation box.  The box bound is loose for the
    singular gas at ``n = 3`` (acceptance near 1e-9), so that case is slow.
    """
    n = config.n
    if n > 3:
        raise ValueError("rejection oracle supports n <= 3 only")
    R = _truncation_radius(config)
    span = R if config.singular else 2 * R
    # max of prod |x_i - x_j| over an interval of length s: s (n = 2), s^3/4 (n = 3)
    log_M = config.beta * {1: 0.0, 2: math.log(span), 3: 3 * math.log(span) - math.log(4.0)}[n]
    if config.singular:
        shape, power = config.beta / config.p, 2.0 / config.p
    else:
        shape, power = 1.0 / config.p, 1.0 / config.p

    out = np.empty((count, n))
    got = 0
    proposed = 0
    rate = 1.0
    while got < count:
        want = count - got
        size = int(min(max(1024, 1.2 * want / max(rate, 1e-6)), 4_000_000 // n))
        g = rng.gamma(shape, 1.0, size=(size, n))
        x = (g / n) ** power
        if not config.singular:
            x = x * np.where(rng.random((size, n)) < 0.5, -1.0, 1.0)
        u = rng.random(size)
        inside = np.all(np.abs(x) <= R, axis=1)
        if config.singular:
            inside &= np.all(x > 0, axis=1)
        logw = np.zeros(size)
        for i in range(n):
            for j in range(i + 1, n):
                with np.errstate(divide="ignore"):
                    logw += config.beta * np.log(np.abs(x[:, i] - x[:, j]))
        acc = inside & (np.log(u) < logw - log_M)
        acc &= np.isfinite(logw)
        picked = x[acc][:want]
        out[got:got + picked.shape[0]] = picked
        got += picked.shape[0]
        proposed += size
        rate = max(got / proposed, 1e-6)
        if proposed > max_proposals:
            raise RuntimeError("rejection oracle exceeded its proposal budget")
    return out


def with_seed(config, seed):
    return replace(config, seed=int(seed))


def config_dict(config):
    return asdict(config)
