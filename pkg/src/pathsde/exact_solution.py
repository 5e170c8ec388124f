"""Closed-form solution of the 7-dimensional SDE and the terminal map ``G``.

``X(T)`` is a deterministic function of the single Gaussian ``X_2(tau1)``:

    X(T) = (T, x, x^2, 0, exp(x^2/4p), 0, G(x)),
    G(x) = exp(x^2/2p) / ((1 + x^2)^(1/2p) * ln^(2/p)(2 + x^2)).

``G`` overflows double precision around ``|x| = 53`` for ``p = 2``, while the
oracle integrals probe ``|x|`` up to ``1e15``; most work therefore happens on
``log G`` and on the increment ``log G(z + y) - log G(z)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .coefficients import CoefficientSet, eval_g, eval_h
from .quadrature import adaptive_gauss_legendre, composite_nodes

LOG_SPACE_CUTOFF = 30.0


def log_G(p: float, x):
    x = np.asarray(x, dtype=float)
    x2 = x * x
    return x2 / (2 * p) - np.log1p(x2) / (2 * p) - (2 / p) * np.log(np.log(2.0 + x2))


def eval_G(p: float, x):
    """``G(x)``; beyond ``|x| > 30`` it is evaluated through ``log G``."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    small = np.abs(x) <= LOG_SPACE_CUTOFF
    direct = np.exp(np.where(small, x2, 0.0) / (2 * p)) / (
        (1.0 + x2) ** (1 / (2 * p)) * np.log(2.0 + x2) ** (2 / p)
    )
    with np.errstate(over="ignore"):
        out = np.where(small, direct, np.exp(log_G(p, x)))
    return float(out) if out.ndim == 0 else out


def _bracket(x2):
    return 1.0 - 1.0 / (1.0 + x2) - 4.0 / ((2.0 + x2) * np.log(2.0 + x2))


def eval_G_prime(p: float, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = (x / p) * eval_G(p, x) * _bracket(x * x)
    out = np.where(x == 0.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def dlog_G(p: float, x):
    """First derivative of ``log G``."""
    x = np.asarray(x, dtype=float)
    return (x / p) * _bracket(x * x)


def d2log_G(p: float, x):
    """Second derivative of ``log G``."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    L = np.log(2.0 + x2)
    return (1.0 / p) * (
        1.0
        - (1.0 - x2) / (1.0 + x2) ** 2
        - 4.0 * ((2.0 - x2) * L - 2.0 * x2) / ((2.0 + x2) ** 2 * L**2)
    )


def log_G_increment(p: float, z, y):
    """``log G(z + y) - log G(z)`` without forming ``z + y``.

    At ``z ~ 1e7`` and ``y ~ 1e-6`` the sum ``z + y`` keeps only a few digits
    of ``y``; writing every term through ``log1p`` of ``2zy + y^2`` does not.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    s = y * (2.0 * z + y)
    L = np.log(2.0 + z * z)
    return (
        s / (2 * p)
        - np.log1p(s / (1.0 + z * z)) / (2 * p)
        - (2 / p) * np.log1p(np.log1p(s / (2.0 + z * z)) / L)
    )


def log_G_times_gauss(x, r: float, p: float):
    """``log(G(x)^r * phi(x))`` with the ``x^2`` terms cancelled analytically."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    return (
        0.5 * x2 * (r / p - 1.0)
        - (r / (2 * p)) * np.log1p(x2)
        - (2 * r / p) * np.log(np.log(2.0 + x2))
        - 0.5 * np.log(2 * np.pi)
    )


def gaussian_G_moment(r: float, p: float, log_x_max: float = 40.0, panels_per_unit: int = 8):
    """``E[G(X)^r]`` for ``X ~ N(0, 1)`` and ``r <= p``.

    For ``r = p`` the integrand decays only like ``1/(x ln^2 x)``. The
    integral runs over ``[0, 1]`` in ``x`` and over ``u = ln x`` up to
    ``log_x_max``; past that point ``ln(2 + x^2) = 2u`` to double precision
    and the remainder ``int du / (4 u^2)`` is added in closed form.
    """
    if r > p:
        return np.inf
    nodes, wts = composite_nodes(np.linspace(0.0, 1.0, 9), 15)
    head = np.sum(np.exp(log_G_times_gauss(nodes, r, p)) * wts)
    edges = np.linspace(0.0, log_x_max, int(log_x_max * panels_per_unit) + 1)
    u, wu = composite_nodes(edges, 15)
    body = np.sum(np.exp(log_G_times_gauss(np.exp(u), r, p) + u) * wu)
    tail = 1.0 / (4.0 * np.sqrt(2 * np.pi) * log_x_max) if r == p else 0.0
    return 2.0 * (head + body + tail)


@dataclass(frozen=True)
class SolutionVector:
    """Seven solution components; ``values`` has shape ``(..., 7)``."""

    values: np.ndarray

    def __getitem__(self, i):
        return self.values[..., i]

    x1 = property(lambda self: self.values[..., 0])
    x2 = property(lambda self: self.values[..., 1])
    x3 = property(lambda self: self.values[..., 2])
    x4 = property(lambda self: self.values[..., 3])
    x5 = property(lambda self: self.values[..., 4])
    x6 = property(lambda self: self.values[..., 5])
    x7 = property(lambda self: self.values[..., 6])


def terminal_vector(T: float, p: float, x2, x7=None) -> np.ndarray:
    """``(T, x, x^2, 0, exp(x^2/4p), 0, G(x))`` stacked on the last axis.

    ``x7`` overrides the last component (the adaptive scheme refines it).
    """
    x2 = np.asarray(x2, dtype=float)
    out = np.zeros(x2.shape + (7,))
    out[..., 0] = T
    out[..., 1] = x2
    out[..., 2] = x2 * x2
    with np.errstate(over="ignore"):
        out[..., 4] = np.exp(x2 * x2 / (4 * p))
    out[..., 6] = eval_G(p, x2) if x7 is None else x7
    return out


def solution_at_T(cs: CoefficientSet, x2) -> SolutionVector:
    return SolutionVector(terminal_vector(cs.T, cs.p, x2))


def _cumulative(func, a, b, tol):
    return adaptive_gauss_legendre(func, a, b, tol) if b > a else 0.0


def solution_at_time(cs: CoefficientSet, t: float, x2_at_min_t_tau1: float, x2_at_tau1: float) -> SolutionVector:
    """All seven components at time ``t`` from the two values of ``X_2``."""
    if not 0.0 <= t <= cs.T:
        raise ValueError(f"t must lie in [0, T], got {t}")
    p = cs.p
    xs = float(x2_at_tau1)
    xt = float(x2_at_min_t_tau1) if t < cs.tau1 else xs
    tol = cs.quad_tol
    int_g_t = _cumulative(lambda s: eval_g(cs, s), cs.tau1, min(t, cs.tau2), tol)
    int_g_tau2 = _cumulative(lambda s: eval_g(cs, s), cs.tau1, cs.tau2, tol)
    int_h_t = _cumulative(lambda s: eval_h(cs, s), cs.tau2, t, tol)
    x5_tau2 = np.exp(xs * xs * int_g_tau2 / (4 * p))
    denom = (1.0 + xs * xs) ** (1 / (2 * p)) * np.log(2.0 + xs * xs) ** (2 / p)
    vals = np.array(
        [
            t,
            xt,
            xt * xt,
            xs * xs * eval_g(cs, t) / (4 * p),
            np.exp(xs * xs * int_g_t / (4 * p)),
            x5_tau2 * eval_h(cs, t) / denom,
            x5_tau2**2 * int_h_t / denom,
        ]
    )
    return SolutionVector(vals)


def _log_moment_integrand(x, p, q):
    x2 = x * x
    return (
        (q - p) * x2 / (2 * p)
        - (q / (2 * p)) * np.log1p(x2)
        - (2 * q / p) * np.log(np.log(2.0 + x2))
    )


def _log_moment_integral(p, q, R, panels=400):
    nodes, wts = composite_nodes(np.linspace(0.0, R, panels + 1), 15)
    return logsumexp(_log_moment_integrand(nodes, p, q) + np.log(wts)) + 0.5 * np.log(2 / np.pi)


def moment_integral(p: float, q: float, R: float = 20.0, ratio_threshold: float = 10.0):
    """Truncated ``E[X_7(T)^q]`` integral on ``[0, R]`` and a divergence flag.

    The flag is raised when ``q > p`` and doubling ``R`` multiplies the
    truncated value by more than ``ratio_threshold``; the value is then only
    a lower bound.
    """
    if q < 0 or R <= 0:
        raise ValueError("need q >= 0 and R > 0")
    log_v = _log_moment_integral(p, q, R)
    log_v2 = _log_moment_integral(p, q, 2 * R)
    diverging = bool(q > p and (log_v2 - log_v) > np.log(ratio_threshold))
    with np.errstate(over="ignore"):
        return float(np.exp(log_v)), diverging


def x5_moment(p: float, q: float) -> float:
    """``E[X_5(T)^q] = sqrt(2p / (2p - q))`` for ``0 <= q < 2p``."""
    if q >= 2 * p:
        raise ValueError(f"E[X5^q] is infinite for q >= 2p (q={q}, p={p})")
    return float(np.sqrt(2 * p / (2 * p - q)))
