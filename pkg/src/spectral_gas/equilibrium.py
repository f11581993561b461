"""Constrained log-energy minimization on a grid by Frank-Wolfe.

Minimizes ``f(w) = -(beta/2) w'Kw + const`` over

    { w >= 0, sum w = 1, sum w_i c_i <= 1 }

where ``K`` is the exact cell-averaged log kernel and ``c_i`` the exact
per-cell moment.  On the affine slice ``sum w = 1`` the objective is convex
(the log kernel is conditionally negative definite), so the Frank-Wolfe gap
``<grad f(w), w - s>`` bounds ``f(w) - min f``.

The linear oracle is exact: the minimum of ``<g, w>`` over the feasible set is
the lower convex hull of the points ``(c_i, g_i)`` evaluated at ``c = 1`` (or
its lowest vertex when that lies at ``c <= 1``), i.e. a single cell or a
two-cell blend that saturates the moment.  With ``p = inf`` the moment row is
dropped and the grid is ``[-1, 1]`` (or ``[0, 1]``).
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import brentq

from .ratefn import GridMeasure, kernel_apply, log_kernel_column
from .special import check_beta, check_exponent, model_constants, rate_constant_C, singular_rate_constant

__all__ = ["SolveReport", "solve_equilibrium", "fw_linear_oracle", "SYMMETRIC", "POSITIVE"]

SYMMETRIC = "symmetric"
POSITIVE = "positive"


@dataclass(frozen=True, eq=False)
class SolveReport:
    minimizer: GridMeasure
    objective: float
    fw_gap: float
    iterations: int
    moment: float
    converged: bool
    history: np.ndarray  # (iteration, objective, gap) rows, sparse

    def as_dict(self):
        return {
            "objective": self.objective,
            "fw_gap": self.fw_gap,
            "iterations": self.iterations,
            "moment": self.moment,
            "converged": self.converged,
            "N": self.minimizer.N,
            "left": self.minimizer.left,
            "right": self.minimizer.right,
        }


@njit(cache=True)
def _hull_oracle(g, c, order):
    """Return ``(i, j, lam)``: vertex ``lam e_i + (1 - lam) e_j``; ``i = -1`` if infeasible."""
    n = g.size
    hx = np.empty(n)
    hy = np.empty(n)
    hi = np.empty(n, np.int64)
    m = 0
    k = 0
    while k < n:
        best = order[k]
        cx = c[best]
        k2 = k + 1
        while k2 < n and c[order[k2]] == cx:
            if g[order[k2]] < g[best]:
                best = order[k2]
            k2 += 1
        k = k2
        py = g[best]
        while m >= 2 and (hx[m - 1] - hx[m - 2]) * (py - hy[m - 2]) - (hy[m - 1] - hy[m - 2]) * (cx - hx[m - 2]) <= 0.0:
            m -= 1
        hx[m] = cx
        hy[m] = py
        hi[m] = best
        m += 1
    if hx[0] > 1.0:
        return -1, -1, 0.0
    low = 0
    for t in range(1, m):
        if hy[t] < hy[low]:
            low = t
    if hx[low] <= 1.0:
        return hi[low], hi[low], 1.0
    t = low
    while hx[t - 1] > 1.0:
        t -= 1
    i = hi[t - 1]
    j = hi[t]
    return i, j, (c[j] - 1.0) / (c[j] - c[i])


def fw_linear_oracle(gradient, c):
    """Exact minimizer of ``<gradient, w>`` over ``{w >= 0, sum w = 1, <c, w> <= 1}``."""
    g = np.ascontiguousarray(gradient, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    if g.shape != c.shape or g.ndim != 1:
        raise ValueError("gradient and c must be vectors of equal length")
    order = np.argsort(c, kind="stable")
    i, j, lam = _hull_oracle(g, c, order)
    if i < 0:
        raise ValueError("infeasible: every c_i exceeds 1")
    s = np.zeros_like(g)
    s[i] += lam
    s[j] += 1.0 - lam
    return s


@njit(cache=True)
def _kcol(col, i, out, scale):
    n = col.size
    for t in range(n):
        out[t] += scale * col[abs(t - i)]


@njit(cache=True)
def _fw_plain(col, c, order, w, Kw, beta, max_iter, tol, hist):
    n = w.size
    wKw = 0.0
    for t in range(n):
        wKw += w[t] * Kw[t]
    Ks = np.empty(n)
    gap = np.inf
    h = 0
    it = 0
    every = max(1, max_iter // hist.shape[0])
    while it < max_iter:
        g = -beta * Kw
        i, j, lam = _hull_oracle(g, c, order)
        gw = 0.0
        for t in range(n):
            gw += g[t] * w[t]
        gap = gw - (lam * g[i] + (1.0 - lam) * g[j])
        if h < hist.shape[0] and it % every == 0:
            hist[h, 0] = it
            hist[h, 1] = -beta / 2 * wKw
            hist[h, 2] = gap
            h += 1
        if gap <= tol:
            break
        Ks[:] = 0.0
        _kcol(col, i, Ks, lam)
        _kcol(col, j, Ks, 1.0 - lam)
        sKs = lam * Ks[i] + (1.0 - lam) * Ks[j]
        wKs = 0.0
        for t in range(n):
            wKs += w[t] * Ks[t]
        dKd = sKs - 2.0 * wKs + wKw
        q = -beta / 2 * dKd
        gam = 1.0 if q <= 0.0 else min(1.0, gap / (2.0 * q))
        for t in range(n):
            w[t] *= 1.0 - gam
            Kw[t] += gam * (Ks[t] - Kw[t])
        w[i] += gam * lam
        w[j] += gam * (1.0 - lam)
        wKw += 2.0 * gam * (wKs - wKw) + gam * gam * dKd
        it += 1
    return it, gap, h


@njit(cache=True)
def _fw_pairwise(col, c, order, w, Kw, beta, max_iter, tol, hist):
    # atoms: (i, j, lam, weight); atom 0 is the initial point itself (i = -1)
    n = w.size
    cap = 4 * n + 16
    ai = np.empty(cap, np.int64)
    aj = np.empty(cap, np.int64)
    al = np.empty(cap)
    aw = np.empty(cap)
    w0 = w.copy()
    Kw0 = Kw.copy()
    w0Kw0 = 0.0
    for t in range(n):
        w0Kw0 += w0[t] * Kw0[t]
    ai[0] = -1
    aj[0] = -1
    al[0] = 1.0
    aw[0] = 1.0
    m = 1
    Ks = np.empty(n)
    Kv = np.empty(n)
    gap = np.inf
    h = 0
    it = 0
    every = max(1, max_iter // hist.shape[0])
    while it < max_iter:
        g = -beta * Kw
        i, j, lam = _hull_oracle(g, c, order)
        gw = 0.0
        for t in range(n):
            gw += g[t] * w[t]
        gs = lam * g[i] + (1.0 - lam) * g[j]
        gap = gw - gs
        if h < hist.shape[0] and it % every == 0:
            wKw = 0.0
            for t in range(n):
                wKw += w[t] * Kw[t]
            hist[h, 0] = it
            hist[h, 1] = -beta / 2 * wKw
            hist[h, 2] = gap
            h += 1
        if gap <= tol:
            break
        # away atom: largest <g, v> over the active set
        a = 0
        best = -np.inf
        for k in range(m):
            if ai[k] < 0:
                gv = 0.0
                for t in range(n):
                    gv += g[t] * w0[t]
            else:
                gv = al[k] * g[ai[k]] + (1.0 - al[k]) * g[aj[k]]
            if gv > best:
                best = gv
                a = k
        gd = gs - best
        if gd >= 0.0:
            it += 1
            continue
        Ks[:] = 0.0
        _kcol(col, i, Ks, lam)
        _kcol(col, j, Ks, 1.0 - lam)
        sKs = lam * Ks[i] + (1.0 - lam) * Ks[j]
        if ai[a] < 0:
            Kv[:] = Kw0
            vKv = w0Kw0
            sKv = lam * Kw0[i] + (1.0 - lam) * Kw0[j]
        else:
            Kv[:] = 0.0
            _kcol(col, ai[a], Kv, al[a])
            _kcol(col, aj[a], Kv, 1.0 - al[a])
            vKv = al[a] * Kv[ai[a]] + (1.0 - al[a]) * Kv[aj[a]]
            sKv = lam * Kv[i] + (1.0 - lam) * Kv[j]
        dKd = sKs - 2.0 * sKv + vKv
        q = -beta / 2 * dKd
        gmax = aw[a]
        gam = gmax if q <= 0.0 else min(gmax, -gd / (2.0 * q))
        # move mass from the away atom to the oracle vertex
        if ai[a] < 0:
            for t in range(n):
                w[t] -= gam * w0[t]
        else:
            w[ai[a]] -= gam * al[a]
            w[aj[a]] -= gam * (1.0 - al[a])
        w[i] += gam * lam
        w[j] += gam * (1.0 - lam)
        for t in range(n):
            Kw[t] += gam * (Ks[t] - Kv[t])
        found = -1
        for k in range(m):
            if ai[k] == i and aj[k] == j:
                found = k
                break
        if found < 0:
            if m == cap:
                # restart the decomposition from the current iterate
                for t in range(n):
                    w0[t] = w[t]
                    Kw0[t] = Kw[t]
                w0Kw0 = 0.0
                for t in range(n):
                    w0Kw0 += w0[t] * Kw0[t]
                ai[0] = -1
                aj[0] = -1
                al[0] = 1.0
                aw[0] = 1.0
                m = 1
                it += 1
                continue
            ai[m] = i
            aj[m] = j
            al[m] = lam
            aw[m] = 0.0
            found = m
            m += 1
        aw[found] += gam
        aw[a] -= gam
        if gam >= gmax:
            # drop step: remove the exhausted atom
            m -= 1
            ai[a] = ai[m]
            aj[a] = aj[m]
            al[a] = al[m]
            aw[a] = aw[m]
        it += 1
    return it, gap, h


def _saturating_start(edges, c_of, target=1.0):
    """Uniform density on ``[lo, hi]`` sub-interval with moment exactly ``target``."""
    lo_dom, hi_dom = edges[0], edges[-1]
    symmetric = lo_dom < 0

    def weights(a):
        lo, hi = (-a, a) if symmetric else (0.0, a)
        ov = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
        return ov / ov.sum()

    full = weights(hi_dom)
    if full @ c_of <= target:
        return full
    width = edges[1] - edges[0]
    a_min = width if symmetric else 2 * width
    if weights(a_min) @ c_of > target:
        raise ValueError("grid too coarse: no uniform start satisfies the moment constraint")
    a = brentq(lambda a: weights(a) @ c_of - target, a_min, hi_dom, xtol=1e-15)
    w = weights(a)
    return w


def solve_equilibrium(
    p,
    beta,
    L=None,
    N=1024,
    max_iter=500_000,
    gap_tol=1e-5,
    domain=SYMMETRIC,
    away_steps=False,
    margin=0.1,
):
    """Minimize the spectral rate function over grid measures.

    ``domain="symmetric"`` works on ``[-L, L]`` with the eigenvalue rate
    function; ``domain="positive"`` on ``[0, L]`` with the squared singular
    value rate function (moment ``m_{p/2}``).  ``L`` defaults to the known
    support end times ``1 + margin``.  ``away_steps=True`` switches to
    pairwise Frank-Wolfe steps.
    """
    check_exponent(p, allow_inf=True)
    check_beta(beta)
    if domain not in (SYMMETRIC, POSITIVE):
        raise ValueError(f"domain must be {SYMMETRIC!r} or {POSITIVE!r}")
    if N < 64:
        raise ValueError("N must be at least 64")
    positive = domain == POSITIVE
    if math.isinf(p):
        lo, hi = (0.0, 1.0) if positive else (-1.0, 1.0)
        const = singular_rate_constant(p, beta) if positive else rate_constant_C(p, beta)
    else:
        b = model_constants(p, 1.0).b_p
        end = b * b if positive else b
        if L is None:
            L = end * (1.0 + margin)
        if L < end:
            raise ValueError(f"domain half-width L={L} is below the support end {end}")
        lo, hi = (0.0, float(L)) if positive else (-float(L), float(L))
        const = singular_rate_constant(p, beta) if positive else rate_constant_C(p, beta)

    width = (hi - lo) / N
    edges = lo + width * np.arange(N + 1)
    if math.isinf(p):
        c = np.zeros(N)
    else:
        q = p / 2 if positive else p
        F = np.sign(edges) * np.abs(edges) ** (q + 1) / (q + 1)
        c = np.diff(F) / width
    order = np.argsort(c, kind="stable")
    col = log_kernel_column(N, width)

    w = _saturating_start(edges, c) if not math.isinf(p) else np.full(N, 1.0 / N)
    Kw = kernel_apply(col, w)
    hist = np.zeros((512, 3))
    run = _fw_pairwise if away_steps else _fw_plain
    iterations, gap, h = run(col, c, order, w, Kw, float(beta), int(max_iter), float(gap_tol), hist)

    w = np.clip(w, 0.0, None)
    w /= w.sum()
    mu = GridMeasure(lo, width, w)
    Kw = kernel_apply(col, w)
    objective = -beta / 2 * float(w @ Kw) + const
    moment = float(w @ c) if not math.isinf(p) else 0.0
    return SolveReport(
        minimizer=mu,
        objective=objective,
        fw_gap=float(gap),
        iterations=int(iterations),
        moment=moment,
        converged=bool(gap <= gap_tol),
        history=hist[:h].copy(),
    )
