"""Quadrature building blocks shared by the coefficient, variance and oracle code.

Everything here is deterministic and vectorised over numpy arrays. The
integrands met in this package are smooth but extremely flat near the
support boundaries of the coefficient functions, and Gaussian-weighted
integrals of ``G`` carry a logarithmically slow tail, so the helpers lean on
composite Gauss-Legendre rules and log-space Gauss-Hermite sums.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as _leg
from scipy.special import logsumexp


class QuadratureError(RuntimeError):
    """Raised when a quadrature does not reach its tolerance within budget."""


@lru_cache(maxsize=None)
def gauss_legendre_unit(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = _leg.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_hermite(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Physicists' Gauss-Hermite nodes and log-weights.

    Log-weights keep the large-order rules usable: the weights of a 201-point
    rule span several hundred orders of magnitude.
    """
    x, w = np.polynomial.hermite.hermgauss(order)
    return x, np.log(w)


@lru_cache(maxsize=None)
def spectral_integration_matrix(order: int) -> np.ndarray:
    """Matrix ``S`` with ``S[j, i] = int_0^{x_j} L_i(u) du`` on [0, 1].

    ``L_i`` is the Lagrange basis polynomial of the ``i``-th Gauss-Legendre
    node, so ``S @ g(x)`` integrates the interpolant of ``g`` from 0 up to
    every node.
    """
    x, _ = gauss_legendre_unit(order)
    vander = _leg.legvander(2.0 * x - 1.0, order - 1)
    coeffs = np.linalg.inv(vander)  # column i: Legendre coefficients of L_i
    out = np.empty((order, order))
    for i in range(order):
        antideriv = _leg.legint(coeffs[:, i], lbnd=-1.0)
        out[:, i] = 0.5 * _leg.legval(2.0 * x - 1.0, antideriv)
    return out


def composite_nodes(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights of a composite Gauss-Legendre rule on consecutive panels.

    Returns arrays of shape ``(len(edges) - 1, order)``.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre_unit(order)
    width = np.diff(edges)
    nodes = edges[:-1, None] + width[:, None] * x[None, :]
    weights = width[:, None] * w[None, :]
    return nodes, weights


def adaptive_gauss_legendre(
    func,
    a: float,
    b: float,
    tol: float = 1e-12,
    order: int = 15,
    max_panels: int = 200_000,
) -> float:
    """Adaptive composite Gauss-Legendre quadrature by recursive bisection.

    ``func`` must accept a numpy array. A panel is accepted once its
    one-panel estimate and the sum over its two halves agree within the
    panel's share of ``tol``; the finer estimate is kept.
    """
    if b <= a:
        if b == a:
            return 0.0
        return -adaptive_gauss_legendre(func, b, a, tol, order, max_panels)
    x, w = gauss_legendre_unit(order)
    total_width = b - a
    lo = np.array([a])
    hi = np.array([b])

    def panel_sums(left, right):
        width = right - left
        nodes = left[:, None] + width[:, None] * x[None, :]
        vals = np.asarray(func(nodes.ravel()), dtype=float).reshape(nodes.shape)
        return (vals * w[None, :]).sum(axis=1) * width

    coarse = panel_sums(lo, hi)
    accepted = 0.0
    seen = 0
    while lo.size:
        mid = 0.5 * (lo + hi)
        fine = panel_sums(np.concatenate([lo, mid]), np.concatenate([mid, hi]))
        left_half, right_half = fine[: lo.size], fine[lo.size:]
        refined = left_half + right_half
        share = tol * (hi - lo) / total_width
        ok = np.abs(refined - coarse) <= np.maximum(share, 0.0)
        # bisection below float resolution cannot improve anything
        ok |= (hi - lo) <= 64 * np.finfo(float).eps * max(abs(a), abs(b), 1.0)
        accepted += float(np.sum(refined[ok]))
        seen += lo.size
        if seen > max_panels:
            raise QuadratureError(
                f"adaptive quadrature on [{a}, {b}] exceeded {max_panels} panels"
            )
        keep = ~ok
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        coarse = np.concatenate([left_half[keep], right_half[keep]])
    return accepted


def log_gauss_expectation(log_f, sigma, mode=None, curvature=None, order: int = 201):
    """``log E[exp(log_f(Y))]`` for ``Y ~ N(0, sigma**2)``, elementwise.

    ``log_f`` maps an array of ``y`` values (broadcast against the leading
    shape of ``sigma``/``mode``) to log-integrand values. When ``mode`` is
    given the Hermite rule is recentred at the maximiser of
    ``log_f(y) - y**2 / (2 sigma**2)`` with scale ``1/sqrt(-curvature)``
    (adaptive Gauss-Hermite); otherwise the plain rule scaled by ``sigma``
    is used.
    """
    x, logw = gauss_hermite(order)
    sigma = np.asarray(sigma, dtype=float)
    if mode is None:
        y = np.sqrt(2.0) * sigma[..., None] * x
        return logsumexp(log_f(y) + logw, axis=-1) - 0.5 * np.log(np.pi)
    mode = np.asarray(mode, dtype=float)
    scale = 1.0 / np.sqrt(-np.asarray(curvature, dtype=float))
    y = mode[..., None] + np.sqrt(2.0) * scale[..., None] * x
    log_gauss = -0.5 * (y / sigma[..., None]) ** 2 - np.log(sigma[..., None] * np.sqrt(2 * np.pi))
    terms = log_f(y) + log_gauss + logw + x**2
    return logsumexp(terms, axis=-1) + np.log(np.sqrt(2.0) * scale)
