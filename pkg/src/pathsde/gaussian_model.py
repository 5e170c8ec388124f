"""Gaussian decomposition ``X_2(tau1) = Z + Y`` for grids on ``[0, tau1]``.

``Z`` is the integral of ``-f'`` against the piecewise-linear interpolant of
the observed Brownian values, a fixed linear functional ``sum_i w_i W(t_i)``.
``Y`` is the same integral against the bridge remainder; it is independent
of the observations. Two routes are kept apart on purpose: ``Var(Z)`` comes
from the weights, ``Var(Y)`` from per-cell bridge double integrals, and the
identity ``Var(Z) + Var(Y) = 1`` checks one against the other.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientSet, eval_f, eval_f_prime, gamma_sup
from .quadrature import QuadratureError, gauss_legendre_unit, spectral_integration_matrix

HAT_ORDER = 15
BRIDGE_ORDER = 8
# finest panel width (in units of tau1) used inside wide cells
HAT_PANEL = 1.0 / 512
BRIDGE_PANEL = 1.0 / 256
CHUNK_CELLS = 1 << 15
# above this many cells sigma^2_m is scaled from sigma^2_M by (M/m)^2
ASYMPTOTIC_CELLS = 1 << 21


@dataclass(frozen=True)
class GridFunctional:
    nodes: np.ndarray
    weights: np.ndarray
    built_from: CoefficientSet = field(repr=False, compare=False)

    @property
    def variance(self) -> float:
        """``Var(sum_i w_i W(t_i))`` via the independent-increment form."""
        tail = np.cumsum(self.weights[::-1])[::-1]
        steps = np.diff(np.concatenate([[0.0], self.nodes]))
        return float(np.sum(tail**2 * steps))

    def variance_quadratic_form(self) -> float:
        """Same variance as ``w^T K w`` with ``K_ij = min(t_i, t_j)``; O(n^2)."""
        K = np.minimum.outer(self.nodes, self.nodes)
        return float(self.weights @ K @ self.weights)

    def __call__(self, values):
        return np.asarray(values) @ self.weights


def _panels_per_cell(widths, panel_width):
    return max(1, int(np.ceil(np.max(widths) / panel_width - 1e-9)))


def _hat_moments(cs: CoefficientSet, edges: np.ndarray):
    """Per cell: ``int f'(t) (t - a)/D dt`` and ``int f'(t) (b - t)/D dt``."""
    x, w = gauss_legendre_unit(HAT_ORDER)
    a_all, b_all = edges[:-1], edges[1:]
    k = _panels_per_cell(b_all - a_all, HAT_PANEL * cs.tau1)
    rising = np.empty(a_all.size)
    falling = np.empty(a_all.size)
    sub = (np.arange(k)[:, None] + x[None, :]) / k  # (k, order) in [0, 1]
    for lo in range(0, a_all.size, CHUNK_CELLS):
        a = a_all[lo : lo + CHUNK_CELLS, None, None]
        b = b_all[lo : lo + CHUNK_CELLS, None, None]
        width = b - a
        t = a + width * sub
        fp = eval_f_prime(cs, t)
        wt = (width / k) * w
        rising[lo : lo + CHUNK_CELLS] = np.sum(fp * (t - a) * wt, axis=(1, 2)) / width[:, 0, 0]
        falling[lo : lo + CHUNK_CELLS] = np.sum(fp * (b - t) * wt, axis=(1, 2)) / width[:, 0, 0]
    return rising, falling


def build_functional(cs: CoefficientSet, node_set) -> GridFunctional:
    """Weights ``w_i = -int f'(t) Lambda_i(t) dt`` for the hat functions of ``node_set``.

    Beyond the last node (if it falls short of ``tau1``) the interpolant is
    held at the last observed value.
    """
    nodes = np.asarray(node_set, dtype=float)
    if nodes.ndim != 1 or nodes.size == 0:
        raise ValueError("node_set must be a nonempty 1-d sequence")
    if np.any(np.diff(nodes) <= 0):
        raise ValueError("node_set must be sorted and distinct")
    if nodes[0] <= 0.0 or nodes[-1] > cs.tau1 * (1 + 1e-12):
        raise ValueError("nodes must lie in (0, tau1]")
    edges = np.concatenate([[0.0], nodes])
    rising, falling = _hat_moments(cs, edges)
    weights = -rising.copy()
    weights[:-1] -= falling[1:]
    if nodes[-1] < cs.tau1 * (1 - 1e-12):
        warnings.warn(
            "last node is short of tau1; holding the interpolant constant on the rest",
            stacklevel=2,
        )
        weights[-1] += eval_f(cs, nodes[-1])
    return GridFunctional(nodes, weights, cs)


def equidistant_functional(cs: CoefficientSet, m: int) -> GridFunctional:
    return build_functional(cs, cs.tau1 * np.arange(1, m + 1) / m)


def bridge_variances(cs: CoefficientSet, edges) -> np.ndarray:
    """``Var(int_cell f'(t) B(t) dt)`` for each cell, ``B`` the cell's bridge.

    Each cell's double integral against ``(min(s,t) - a)(b - max(s,t))/D`` is
    folded into ``(2/D) int f'(t)(b - t) phi(t) dt`` with
    ``phi(t) = int_a^t f'(s)(s - a) ds``; ``phi`` at the outer nodes comes
    from the spectral integration matrix of the same 8-point rule.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre_unit(BRIDGE_ORDER)
    S = spectral_integration_matrix(BRIDGE_ORDER)
    a_all, b_all = edges[:-1], edges[1:]
    k = _panels_per_cell(b_all - a_all, BRIDGE_PANEL * cs.tau1)
    out = np.empty(a_all.size)
    for lo in range(0, a_all.size, CHUNK_CELLS):
        a = a_all[lo : lo + CHUNK_CELLS, None, None]
        b = b_all[lo : lo + CHUNK_CELLS, None, None]
        width = b - a
        hp = width / k
        t = a + hp * (np.arange(k)[:, None] + x[None, :])
        fp = eval_f_prime(cs, t)
        g = fp * (t - a)
        panel_int = hp[..., 0] * (g @ w)  # (cells, k)
        prefix = np.cumsum(panel_int, axis=1) - panel_int
        phi = prefix[..., None] + hp * np.einsum("ji,cki->ckj", S, g)
        outer = np.sum(fp * (b - t) * phi * (hp * w), axis=(1, 2))
        out[lo : lo + CHUNK_CELLS] = 2.0 * outer / width[:, 0, 0]
    return out


def sigma_squared(cs: CoefficientSet, m: int) -> float:
    """``Var(Y_m)`` for the equidistant grid ``i tau1 / m``."""
    if m < 1:
        raise ValueError("grid size must be >= 1")
    edges = cs.tau1 * np.arange(m + 1) / m
    v = bridge_variances(cs, edges)
    if not np.all(np.isfinite(v)):
        raise QuadratureError(f"bridge variance quadrature failed for m={m}")
    return float(np.sum(v))


class VarianceTable:
    """Memoised ``(nu^2_m, sigma^2_m)`` per equidistant grid size ``m``.

    Entries are computed lazily under a lock, so worker threads can share
    one table.
    """

    def __init__(self, cs: CoefficientSet):
        self.cs = cs
        self.gamma = gamma_sup(cs)
        self._sigma2: dict[int, float] = {}
        self._lock = threading.Lock()

    def sigma2(self, m: int) -> float:
        m = int(m)
        if m < 1:
            raise ValueError("grid size must be >= 1")
        val = self._sigma2.get(m)
        if val is None:
            if m > ASYMPTOTIC_CELLS:
                # cells are so fine that sigma^2 ~ const/m^2 to ~1e-7 relative,
                # and the values involved are below 1e-13 in absolute terms
                val = self.sigma2(ASYMPTOTIC_CELLS) * (ASYMPTOTIC_CELLS / m) ** 2
            else:
                val = sigma_squared(self.cs, m)
            with self._lock:
                self._sigma2.setdefault(m, val)
            if val >= 1.0:
                warnings.warn(f"degenerate grid functional: nu^2_{m} <= 0", stacklevel=2)
        return val

    def nu2(self, m: int) -> float:
        return 1.0 - self.sigma2(m)

    def increment_variance(self, n: int, ell: int) -> float:
        """``Var(Z_{ell n} - Z_n) = sigma^2_n - sigma^2_{ell n}``."""
        return max(self.sigma2(n) - self.sigma2(ell * n), 0.0)

    def bound(self, m: int) -> float:
        return self.gamma * self.cs.tau1**3 / (12.0 * m * m)

    def sigma2_many(self, ms) -> np.ndarray:
        ms = np.asarray(ms, dtype=np.int64)
        uniq, inv = np.unique(ms, return_inverse=True)
        vals = np.array([self.sigma2(m) for m in uniq])
        return vals[inv].reshape(ms.shape)

    def entries(self) -> dict[int, tuple[float, float]]:
        with self._lock:
            return {m: (1.0 - s, s) for m, s in sorted(self._sigma2.items())}


def sample_exact_pair(cs: CoefficientSet, vt: VarianceTable, n: int, rng, size=None):
    """Draw ``(Z_n, X_2)`` with ``X_2 = Z_n + Y_n``, independent parts."""
    sig2 = vt.sigma2(n)
    z = np.sqrt(1.0 - sig2) * rng.standard_normal(size)
    y = np.sqrt(sig2) * rng.standard_normal(size)
    return z, z + y


def extend_to_level(cs: CoefficientSet, vt: VarianceTable, n: int, ell, z_n, rng):
    """Refine ``Z_n`` to ``Z_{ell n}`` and draw the matching ``X_2``.

    ``ell`` and ``z_n`` broadcast together; the increment variance is
    ``sigma^2_n - sigma^2_{ell n}``.
    """
    ell = np.asarray(ell, dtype=np.int64)
    if np.any(ell < 1):
        raise ValueError("refinement level must be >= 1")
    z_n = np.asarray(z_n, dtype=float)
    ell, z_n = np.broadcast_arrays(ell, z_n)
    s2_fine = vt.sigma2_many(ell * n)
    incr_var = np.maximum(vt.sigma2(n) - s2_fine, 0.0)
    shape = z_n.shape
    z_fine = z_n + np.sqrt(incr_var) * rng.standard_normal(shape)
    x2 = z_fine + np.sqrt(s2_fine) * rng.standard_normal(shape)
    if z_fine.ndim == 0:
        return float(z_fine), float(x2)
    return z_fine, x2
