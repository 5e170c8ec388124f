"""Quadrature benchmarks for the best estimator of ``X_7(T) = G(X_2(tau1))``.

With ``X_2 = Z + Y`` (``Z`` observable, ``Y ~ N(0, s^2)`` independent) the
best ``L2`` estimator is ``m(Z) = E[G(Z + Y) | Z]`` and the best ``L1``
estimator is the conditional median. Both error integrals have a
logarithmically slow tail in ``z`` that extends to ``|z| ~ 1/s``. So:

* every outer integral runs in ``u = ln z`` past that point, with a tail check;
* inner Gaussian integrals use Gauss-Hermite rules recentred at the mode of
  ``k log G(z + y) - y^2 / 2s^2``;
* differences like ``G(z+y) - G(z)`` are formed from ``log_G_increment``
  and ``expm1``, never by subtracting two large numbers.

The symmetrisation bound compares ``G(Y1 + Y2)`` with ``G(Y1 - Y2)``, where
``Y2`` is the bridge contribution over a node-free gap of width
``tau1 / (2(n+1))`` next to ``tau1 / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf, ndtr

from .coefficients import CoefficientSet, f_prime_sq_extrema
from .exact_solution import (
    _bracket,
    d2log_G,
    dlog_G,
    gaussian_G_moment,
    log_G,
    log_G_increment,
    log_G_times_gauss,
)
from .gaussian_model import VarianceTable, bridge_variances
from .quadrature import (
    QuadratureError,
    composite_nodes,
    gauss_hermite,
    gauss_legendre_unit,
    log_gauss_expectation,
)

# outer integrals stop at z = CUTOFF_SIGMAS / s, where the integrands are ~e^-400
CUTOFF_SIGMAS = 40.0
# |z| s below this uses plain Hermite sums of expm1 terms, above it log-space sums
SMALL_SHIFT = 1.0
TAIL_TOL = 1e-14
GH_ORDER = 201
# per-point oracles work through long inputs in pieces of this many points
POINT_CHUNK = 1 << 14


# ---------------------------------------------------------------------------
# shape of G: local max at 0, minimum at x_c, increasing afterwards


@lru_cache(maxsize=None)
def critical_point() -> float:
    """Positive minimiser ``x_c`` of ``G`` (the same for every ``p``)."""
    return brentq(lambda x: _bracket(x * x), 0.1, 5.0, xtol=1e-15)


@lru_cache(maxsize=None)
def level_crossing() -> float:
    """``b > x_c`` with ``G(b) = G(0)`` (again independent of ``p``)."""
    return brentq(lambda x: float(log_G(1.0, x) - log_G(1.0, 0.0)), critical_point(), 10.0, xtol=1e-15)


def _bisect(fn, lo, hi, iters=200, atol=0.0):
    """Vectorised bisection for ``fn`` increasing, ``fn(lo) < 0 <= fn(hi)``.

    Stops once every bracket is within a few ulps of its end or below ``atol``.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if np.any(fn(lo) >= 0) or np.any(fn(hi) < 0):
        raise QuadratureError("root is not bracketed")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = fn(mid) >= 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= 4 * np.finfo(float).eps * np.abs(hi) + atol):
            break
    return hi


def decreasing_branch_inverse(log_v):
    """``x in [0, x_c]`` with ``log G_1(x) = log_v`` (``p = 1`` scale of ``log G``)."""
    xc = critical_point()
    # rounding can put the level a hair outside the branch's range
    log_v = np.clip(np.asarray(log_v, dtype=float), log_G(1.0, xc), log_G(1.0, 0.0))
    # log G decreases on [0, x_c]: bisect on -log G
    return _bisect(lambda x: log_v - log_G(1.0, x), np.zeros_like(log_v), np.full_like(log_v, xc), atol=1e-16)


# ---------------------------------------------------------------------------
# Gaussian expectations of exp(k D(z, Y)), D = log G(z + y) - log G(z)


def _mode(p, z, s2, k, iters=60):
    """Mode and curvature of ``k log G(z + y) - y^2 / (2 s2)`` in ``y`` (Newton)."""
    z = np.asarray(z, dtype=float)
    y = k * z * s2 / (p - k * s2)
    for _ in range(iters):
        x = z + y
        grad = k * dlog_G(p, x) - y / s2
        curv = k * d2log_G(p, x) - 1.0 / s2
        step = np.where(curv < 0, grad / curv, 0.0)
        y = y - step
        if np.all(np.abs(step) <= 1e-14 * (np.abs(y) + np.sqrt(s2))):
            break
    curv = k * d2log_G(p, z + y) - 1.0 / s2
    return y, curv


def log_mean_exp_increment(p, z, s2, k=1.0, order=GH_ORDER):
    """``log E[exp(k D(z, Y))]`` for ``Y ~ N(0, s2)`` by recentred Hermite sums."""
    z = np.asarray(z, dtype=float)
    sigma = np.sqrt(s2)
    mode, curv = _mode(p, z, s2, k)
    if np.any(curv >= 0):
        raise QuadratureError("log-integrand is not concave at its mode")
    return log_gauss_expectation(
        lambda y: k * log_G_increment(p, z[..., None], y),
        np.broadcast_to(sigma, z.shape),
        mode=mode,
        curvature=curv,
        order=order,
    )


def _plain_rule(s2, order=GH_ORDER):
    x, logw = gauss_hermite(order)
    return np.sqrt(2.0 * s2) * x, np.exp(logw) / np.sqrt(np.pi)


def conditional_mean(p, z, s2, order=GH_ORDER):
    """``m(z) = E[G(z + Y)]``, ``Y ~ N(0, s2)``."""
    z = np.asarray(z, dtype=float)
    if z.size > POINT_CHUNK:
        flat = z.ravel()
        parts = [conditional_mean(p, flat[i : i + POINT_CHUNK], s2, order) for i in range(0, flat.size, POINT_CHUNK)]
        return np.concatenate(parts).reshape(z.shape)
    with np.errstate(over="ignore"):
        return np.exp(log_G(p, z) + log_mean_exp_increment(p, z, s2, 1.0, order))


def conditional_variance_ratio(p, z, s2, order=GH_ORDER):
    """``Var(G(z + Y)) / G(z)^2`` without cancellation for small ``|z| s``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty(z.shape)
    small = np.abs(z) * np.sqrt(s2) < SMALL_SHIFT
    if small.any():
        y, w = _plain_rule(s2, order)
        e = np.expm1(log_G_increment(p, z[small, None], y))
        mean = e @ w
        out[small] = (e * e) @ w - mean * mean
    big = ~small
    if big.any():
        la = log_mean_exp_increment(p, z[big], s2, 2.0, order)
        lb = log_mean_exp_increment(p, z[big], s2, 1.0, order)
        with np.errstate(over="ignore"):
            out[big] = np.exp(la) * -np.expm1(2.0 * lb - la)
    return out


# ---------------------------------------------------------------------------
# outer integration over z >= 0


def _half_line_rule(z_cut, head_panels=8, per_unit=8, order=15):
    """Nodes and log-weights on ``[0, z_cut]``: linear on ``[0, 1]``, ``ln z`` after."""
    z_cut = float(z_cut)
    if z_cut <= 1.0:
        nodes, wts = composite_nodes(np.linspace(0.0, z_cut, head_panels + 1), order)
        return nodes.ravel(), np.log(wts.ravel())
    nodes, wts = composite_nodes(np.linspace(0.0, 1.0, head_panels + 1), order)
    u_end = np.log(z_cut)
    edges = np.linspace(0.0, u_end, max(int(np.ceil(u_end * per_unit)), 1) + 1)
    u, wu = composite_nodes(edges, order)
    z = np.concatenate([nodes.ravel(), np.exp(u.ravel())])
    logw = np.concatenate([np.log(wts.ravel()), np.log(wu.ravel()) + u.ravel()])
    return z, logw


def _check_tail(log_h, z, scale, what):
    # integrand mass per unit of ln z at the cut, relative to the total
    edge = np.exp(log_h[-1] + np.log(z[-1]))
    if not edge <= TAIL_TOL * max(scale, 1e-300):
        raise QuadratureError(f"{what}: tail beyond the cut is not negligible ({edge:.3e})")


def _log_normal_pdf(z, var):
    return -0.5 * z * z / var - 0.5 * np.log(2 * np.pi * var)


def _log_pdf_times_G(z, k, p, s2):
    """``log(phi_v(z) G(z)^k)`` with ``v = 1 - s2``.

    The two quadratic terms are merged before evaluation: at ``|z| ~ 1e11``
    each alone is ``~1e22`` and their float difference would be noise.
    """
    z = np.asarray(z, dtype=float)
    var = 1.0 - s2
    quad = ((p - k) + k * s2) / (2.0 * p * var)
    x2 = z * z
    return (
        -quad * x2
        - (k / (2 * p)) * np.log1p(x2)
        - (2 * k / p) * np.log(np.log(2.0 + x2))
        - 0.5 * np.log(2 * np.pi * var)
    )


# ---------------------------------------------------------------------------
# L2: conditional mean


def _require_p(p, allowed):
    if p not in allowed:
        raise ValueError(f"oracle needs p in {sorted(allowed)}, got {p}")


def mean_error_from_sigma(p: float, s2: float, z_max: float | None = None, order: int = GH_ORDER) -> float:
    """``L2`` error of the conditional mean when ``Var(Y) = s2`` and ``Var(Z) = 1 - s2``.

    Full domain: ``E[G(X)^2] - E[m(Z)^2]``, where the first term carries the
    slow tail in closed form and the second decays past ``|z| ~ 1/s``. With
    ``z_max`` the error restricted to ``|Z| <= z_max`` is returned instead,
    integrating ``Var(G(z + Y))`` pointwise.
    """
    if not 0.0 < s2 < 1.0:
        if s2 == 0.0:
            return 0.0
        raise ValueError("need 0 <= s2 < 1")
    if z_max is not None:
        nodes, wts = composite_nodes(np.linspace(0.0, z_max, 4 * int(np.ceil(z_max)) + 1), 15)
        z = nodes.ravel()
        logh = _log_pdf_times_G(z, 2.0, p, s2)
        val = 2.0 * np.sum(np.exp(logh) * conditional_variance_ratio(p, z, s2, order) * wts.ravel())
        return float(np.sqrt(max(val, 0.0)))
    z, logw = _half_line_rule(CUTOFF_SIGMAS / np.sqrt(s2))
    logh = _log_pdf_times_G(z, 2.0, p, s2) + 2.0 * log_mean_exp_increment(p, z, s2, 1.0, order)
    second = 2.0 * np.sum(np.exp(logh + logw))
    _check_tail(logh, z, second, "E[m(Z)^2]")
    total = gaussian_G_moment(2.0, p)
    err2 = total - second
    if err2 < -1e-12:
        raise QuadratureError(f"negative squared error {err2:.3e}")
    return float(np.sqrt(max(err2, 0.0)))


def conditional_mean_error(cs: CoefficientSet, vt: VarianceTable, n: int, z_max: float | None = None) -> float:
    """Smallest ``L2`` error of any estimator of ``X_7(T)`` from ``W`` on ``i tau1 / n``."""
    if cs.p < 2:
        raise ValueError("the L2 error of X_7 is infinite for p < 2")
    return mean_error_from_sigma(cs.p, vt.sigma2(n), z_max)


# ---------------------------------------------------------------------------
# L1: conditional median


@dataclass(frozen=True)
class MedianSummary:
    """Per-``z`` pieces of ``E|G(z+Y) - med(z)|``, all divided by ``G(z)``."""

    y_median: np.ndarray
    log_median_ratio: np.ndarray  # log(med / G(z))
    mean_minus_median: np.ndarray  # (E[G(z+Y)] - med) / G(z)
    shortfall: np.ndarray  # E[(med - G(z+Y))_+] / G(z)

    @property
    def abs_dev(self):
        return self.mean_minus_median + 2.0 * self.shortfall


def _preimage_low(p, z, y_m):
    """Inner radius ``x_lo`` of ``{G <= G(z + y_m)}`` (0 when that level is above ``G(0)``)."""
    log_v1 = p * log_G(p, z + y_m)  # rescaled to the p = 1 log G
    below = log_v1 < log_G(1.0, 0.0)
    x_lo = np.zeros_like(log_v1)
    if below.any():
        x_lo[below] = decreasing_branch_inverse(log_v1[below])
    return x_lo


def _median_cdf(p, z, s, y_m):
    x_lo = _preimage_low(p, z, y_m)
    x_hi = z + y_m
    return (
        ndtr(y_m / s)
        - ndtr((x_lo - z) / s)
        + ndtr((-x_lo - z) / s)
        - ndtr((-x_hi - z) / s)
    )


def conditional_median(p: float, z, s2: float, order: int = 64) -> MedianSummary:
    """Median of ``G(z + Y)`` and the pieces of the absolute deviation about it.

    The distribution function of ``G(z + Y)`` at level ``v`` is the Gaussian
    mass of ``{x : G(x) <= v}``, a symmetric interval or a pair of intervals
    whose endpoints come from the monotone branches of ``G``. The median is
    located by bisection on ``y_m = x_hi - z``.
    """
    z = np.abs(np.atleast_1d(np.asarray(z, dtype=float))).ravel()
    if z.size > POINT_CHUNK:
        parts = [conditional_median(p, z[i : i + POINT_CHUNK], s2, order) for i in range(0, z.size, POINT_CHUNK)]
        return MedianSummary(*(np.concatenate([getattr(m, f) for m in parts]) for f in MedianSummary.__dataclass_fields__))
    s = np.sqrt(s2)
    xc, bbar = critical_point(), level_crossing()
    lo = xc - z
    hi = np.maximum(bbar, z) - z + CUTOFF_SIGMAS * s
    y_m = _bisect(lambda y: _median_cdf(p, z, s, y) - 0.5, lo, hi, atol=1e-15 * s)
    d_m = log_G_increment(p, z, y_m)

    # E[G(z+Y)]/G(z) - med/G(z)
    mean_minus = np.empty_like(z)
    small = z * s < SMALL_SHIFT
    if small.any():
        y, w = _plain_rule(s2)
        e = np.expm1(log_G_increment(p, z[small, None], y)) @ w
        mean_minus[small] = e - np.expm1(d_m[small])
    if (~small).any():
        lb = log_mean_exp_increment(p, z[~small], s2, 1.0)
        with np.errstate(over="ignore"):
            mean_minus[~small] = np.exp(lb) - np.exp(d_m[~small])

    # E[(med - G(z+Y))_+] over {G(z+y) <= med}: y in [x_lo - z, y_m] and its mirror
    x_lo = _preimage_low(p, z, y_m)
    x_hi = z + y_m
    gl_x, gl_w = gauss_legendre_unit(order)
    shortfall = np.zeros_like(z)
    window = CUTOFF_SIGMAS * s
    for a, b in ((x_lo - z, y_m), (-x_hi - z, -x_lo - z)):
        a = np.clip(a, -window, window)
        b = np.clip(b, -window, window)
        width = np.maximum(b - a, 0.0)
        y = a[:, None] + width[:, None] * gl_x
        gap = -np.expm1(log_G_increment(p, z[:, None], y) - d_m[:, None])
        dens = np.exp(-0.5 * (y / s) ** 2) / (s * np.sqrt(2 * np.pi))
        shortfall += np.exp(d_m) * width * ((np.maximum(gap, 0.0) * dens) @ gl_w)
    return MedianSummary(y_m, d_m, mean_minus, shortfall)


def median_error_from_sigma(p: float, s2: float, z_max: float | None = None) -> float:
    """``L1`` error of the conditional median; ``z_max`` restricts to ``|Z| <= z_max``.

    Full domain: ``E[G(X)] - E[med(Z)] + 2 E[(med(Z) - G(X))_+]``; only the
    first term has a slow tail, and it is known in closed form.
    """
    if s2 == 0.0:
        return 0.0
    if z_max is not None:
        nodes, wts = composite_nodes(np.linspace(0.0, z_max, 4 * int(np.ceil(z_max)) + 1), 15)
        z = nodes.ravel()
        ms = conditional_median(p, z, s2)
        dens = np.exp(_log_pdf_times_G(z, 1.0, p, s2))
        return float(2.0 * np.sum(dens * ms.abs_dev * wts.ravel()))
    z, logw = _half_line_rule(CUTOFF_SIGMAS / np.sqrt(s2))
    ms = conditional_median(p, z, s2)
    logh = _log_pdf_times_G(z, 1.0, p, s2)
    with np.errstate(over="ignore"):
        part = np.exp(ms.log_median_ratio) - 2.0 * ms.shortfall
    integrand = np.exp(logh + logw) * part
    kept = 2.0 * np.sum(integrand)
    _check_tail(logh + ms.log_median_ratio, z, kept, "E[med(Z)]")
    return float(gaussian_G_moment(1.0, p) - kept)


def conditional_median_error(cs: CoefficientSet, vt: VarianceTable, n: int, z_max: float | None = None) -> float:
    """Smallest ``L1`` error of any estimator of ``X_7(T)`` from ``W`` on ``i tau1 / n``."""
    return median_error_from_sigma(cs.p, vt.sigma2(n), z_max)


# ---------------------------------------------------------------------------
# symmetrisation lower bound


@lru_cache(maxsize=16)
def slope_extrema(cs: CoefficientSet) -> tuple[float, float]:
    """``(alpha, beta)``: inf and sup of ``f'^2`` on ``[0, tau1 / 2]``."""
    return f_prime_sq_extrema(cs, 0.0, 0.5 * cs.tau1)


@dataclass(frozen=True)
class GapConstruction:
    n: int
    t0: float
    t1: float
    sigma2_sq: float
    sigma1_sq: float
    alpha: float
    beta: float
    n0: int

    @classmethod
    def build(cs_cls, cs: CoefficientSet, n: int) -> "GapConstruction":
        if n < 1:
            raise ValueError("n must be >= 1")
        t1 = 0.5 * cs.tau1
        t0 = t1 - cs.tau1 / (2.0 * (n + 1))
        s2 = float(bridge_variances(cs, np.array([t0, t1]))[0])
        alpha, beta = slope_extrema(cs)
        n0 = int(np.ceil(0.5 * cs.tau1 * (beta / 6.0) ** (1.0 / 3.0) - 1.0))
        return cs_cls(n, t0, t1, s2, 1.0 - s2, alpha, beta, n0)

    @property
    def width(self) -> float:
        return self.t1 - self.t0

    def bracket(self) -> tuple[float, float]:
        cube = self.width**3 / 12.0
        return self.alpha * cube, self.beta * cube


def _sym_sq_pointwise(p, y1, s2, order=GH_ORDER):
    """``E[(G(y1+Y2) - G(y1-Y2))^2] / G(y1)^2`` for ``Y2 ~ N(0, s2)``."""
    y1 = np.atleast_1d(np.asarray(y1, dtype=float))
    out = np.empty(y1.shape)
    small = np.abs(y1) * np.sqrt(s2) < SMALL_SHIFT
    if small.any():
        y, w = _plain_rule(s2, order)
        dp = log_G_increment(p, y1[small, None], y)
        dm = log_G_increment(p, y1[small, None], -y)
        diff = np.exp(dm) * np.expm1(dp - dm)
        out[small] = (diff * diff) @ w
    big = ~small
    if big.any():
        la = log_mean_exp_increment(p, y1[big], s2, 2.0, order)
        lc = _log_cross(p, y1[big], s2, order)
        with np.errstate(over="ignore"):
            out[big] = 2.0 * np.exp(la) * -np.expm1(lc - la)
    return out


def _log_cross(p, y1, s2, order=GH_ORDER):
    """``log E[G(y1+Y2) G(y1-Y2)] - 2 log G(y1)``; the integrand is even in ``Y2``."""
    return log_gauss_expectation(
        lambda y: log_G_increment(p, y1[..., None], y) + log_G_increment(p, y1[..., None], -y),
        np.broadcast_to(np.sqrt(s2), np.shape(y1)),
        order=order,
    )


def _sym_l2(p, gap: GapConstruction, y1_max=None):
    s1sq, s2sq = gap.sigma1_sq, gap.sigma2_sq
    if y1_max is not None:
        nodes, wts = composite_nodes(np.linspace(0.0, y1_max, 4 * int(np.ceil(y1_max)) + 1), 15)
        y1 = nodes.ravel()
        logh = _log_pdf_times_G(y1, 2.0, p, s2sq)
        return 2.0 * float(np.sum(np.exp(logh) * _sym_sq_pointwise(p, y1, s2sq) * wts.ravel()))
    y1, logw = _half_line_rule(CUTOFF_SIGMAS * np.sqrt(s1sq / s2sq))
    logh = _log_pdf_times_G(y1, 2.0, p, s2sq) + _log_cross(p, y1, s2sq)
    cross = 2.0 * np.sum(np.exp(logh + logw))
    _check_tail(logh, y1, cross, "E[G(Y1+Y2) G(Y1-Y2)]")
    val = 2.0 * (gaussian_G_moment(2.0, p) - cross)
    if val < -1e-12:
        raise QuadratureError(f"negative second moment {val:.3e}")
    return max(val, 0.0)


def _sym_l1(p, gap: GapConstruction, y1_max=None):
    """``E|G(Y1+Y2) - G(Y1-Y2)|`` (optionally on ``|Y1| <= y1_max``).

    By symmetry it is four times the first-quadrant integral. There the
    difference is nonnegative once ``y1 + y2 >= b`` (``G(b) = G(0)``), so
    ``|d| = d + 2 (-d)_+`` with the correction confined to a triangle; the
    quadrant integral of ``d`` reduces to a single integral against ``G phi``.
    """
    s1, s2 = np.sqrt(gap.sigma1_sq), np.sqrt(gap.sigma2_sq)
    r = s2 / s1
    if y1_max is not None:
        return _sym_l1_truncated(p, gap, y1_max)
    # int_0^inf G phi erf(x r / sqrt 2)
    x, logw = _half_line_rule(np.exp(40.0))
    head = np.sum(np.exp(log_G_times_gauss(x, 1.0, p) + logw) * erf(x * r / np.sqrt(2.0)))
    if p == 1.0:
        head += 1.0 / (4.0 * np.sqrt(2 * np.pi) * 40.0)
    # 2 int_0^inf G phi Phi(-x / r), concentrated on x <~ r
    v, wv = composite_nodes(np.linspace(0.0, CUTOFF_SIGMAS, 81), 15)
    v, wv = v.ravel(), wv.ravel()
    near = 2.0 * r * np.sum(np.exp(log_G_times_gauss(r * v, 1.0, p)) * ndtr(-v) * wv)
    quadrant_d = head - near
    return 4.0 * quadrant_d + 8.0 * _negative_part(p, s1, s2)


def _negative_part(p, s1, s2, y1_panels=256, order=15, inner=64):
    """``E[(G(Y1-Y2) - G(Y1+Y2))_+; Y1, Y2 >= 0]`` on the triangle ``y1 + y2 < b``."""
    xc, bbar = critical_point(), level_crossing()
    edges = np.concatenate([np.linspace(0.0, xc, y1_panels // 2 + 1), np.linspace(xc, bbar, y1_panels // 2 + 1)[1:]])
    y1, w1 = composite_nodes(edges, order)
    y1, w1 = y1.ravel(), w1.ravel()
    vmax = np.minimum((bbar - y1) / s2, CUTOFF_SIGMAS)
    gx, gw = composite_nodes(np.linspace(0.0, 1.0, 5), inner // 4)
    gx, gw = gx.ravel(), gw.ravel()
    v = vmax[:, None] * gx
    y2 = s2 * v
    neg = np.expm1(log_G(p, y1[:, None] - y2) - log_G(p, y1[:, None] + y2))
    neg = np.maximum(neg, 0.0) * np.exp(log_G(p, y1[:, None] + y2))
    inner_int = (neg * np.exp(-0.5 * v * v) / np.sqrt(2 * np.pi)) @ gw * vmax
    outer = np.exp(_log_normal_pdf(y1, s1 * s1)) * inner_int
    return float(np.sum(outer * w1))


def _sym_l1_truncated(p, gap, y1_max):
    # |d| is even in y2 and has a kink at y2 = 0, so integrate y2 >= 0 by Gauss-Legendre
    s2 = np.sqrt(gap.sigma2_sq)
    nodes, wts = composite_nodes(np.linspace(0.0, y1_max, 16 * int(np.ceil(y1_max)) + 1), 15)
    y1 = nodes.ravel()
    v, wv = composite_nodes(np.linspace(0.0, 12.0, 25), 15)
    v, wv = v.ravel(), wv.ravel()
    dp = log_G(p, y1[:, None] + s2 * v)
    dm = log_G(p, y1[:, None] - s2 * v)
    absdiff = 2.0 * (np.abs(np.exp(dm) * np.expm1(dp - dm)) * np.exp(-0.5 * v * v) / np.sqrt(2 * np.pi)) @ wv
    dens = np.exp(_log_normal_pdf(y1, gap.sigma1_sq))
    return 2.0 * float(np.sum(dens * absdiff * wts.ravel()))


def symmetrization_bound(
    cs: CoefficientSet, n: int, p: int | None = None, y1_max: float | None = None
) -> float:
    """``(E|G(Y1+Y2) - G(Y1-Y2)|^p)^(1/p) / 2`` for the gap built for ``n`` nodes.

    ``G`` uses the model's ``p``; the argument ``p`` is the error moment
    (1 or 2, default the model's ``p``). ``y1_max`` restricts to
    ``|Y1| <= y1_max`` (for Monte Carlo comparisons).
    """
    p = cs.p if p is None else p
    _require_p(p, {1, 2})
    gap = GapConstruction.build(cs, n)
    if p == 2:
        return 0.5 * float(np.sqrt(_sym_l2(cs.p, gap, y1_max)))
    return 0.5 * float(_sym_l1(cs.p, gap, y1_max))


def constant_curve(cs: CoefficientSet, n, p: float | None = None):
    """``C ln^(-2/p)(12 n^3)``, the explicit lower-bound curve, for ``n >= max(3, n0)``."""
    p = cs.p if p is None else p
    alpha, beta = slope_extrema(cs)
    tau1 = cs.tau1
    c_p = (
        (tau1**3 * alpha) ** (p / 2)
        / (2 ** (5 * p + 1.5) * 3 ** (p / 2) * p**p * (p + 1) * np.pi * np.sqrt(np.e))
        * np.exp(-beta * tau1**3 / 24.0)
    )
    n = np.asarray(n, dtype=float)
    return c_p ** (1.0 / p) * np.log(12.0 * n**3) ** (-2.0 / p)


def constant_threshold(cs: CoefficientSet) -> int:
    """Smallest ``n`` for which the explicit constant applies: ``max(3, n0)``."""
    _, beta = slope_extrema(cs)
    n0 = int(np.ceil(0.5 * cs.tau1 * (beta / 6.0) ** (1.0 / 3.0) - 1.0))
    return max(3, n0)
