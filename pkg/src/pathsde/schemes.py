"""Approximation schemes for ``X(T)``, each coupled with an exact sample.

* ``interp_scheme``: integrate ``-f'`` against the piecewise-linear
  interpolant of ``W`` on ``n`` equidistant nodes of ``[0, tau1]``.
* ``adaptive_scheme``: same first six components, but the seventh uses a
  grid refined by the factor ``ell`` chosen from ``|Z_n|``.
* ``euler_maruyama``: the plain 7-dimensional Euler recursion on ``[0, T]``.

All three accept ``size`` and then return a batch of independent
replications; the truth is drawn from the exact Gaussian decomposition, so
error estimates carry no reference-solution bias.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .coefficients import (
    CoefficientSet,
    eval_f,
    eval_g,
    eval_g_prime,
    eval_h_prime,
)
from .exact_solution import SolutionVector, eval_G, terminal_vector
from .gaussian_model import VarianceTable, build_functional, extend_to_level, sample_exact_pair

X0 = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
DEFAULT_LEVEL_CAP = 1 << 20
# largest level representable without overflow in cost = ell * n
MAX_LEVEL = 1 << 52


def _denominator(p, x2):
    x2sq = x2 * x2
    return (1.0 + x2sq) ** (1 / (2 * p)) * np.log(2.0 + x2sq) ** (2 / p)


def drift(cs: CoefficientSet, x) -> np.ndarray:
    """Drift ``mu(x)``; ``x`` has shape ``(..., 7)``."""
    x = np.asarray(x, dtype=float)
    p = cs.p
    t = x[..., 0]
    out = np.zeros_like(x)
    out[..., 0] = 1.0
    out[..., 2] = np.asarray(eval_f(cs, t)) ** 2
    out[..., 3] = eval_g_prime(cs, t) * x[..., 2] / (4 * p)
    out[..., 4] = x[..., 3] * x[..., 4]
    out[..., 5] = eval_h_prime(cs, t) * x[..., 4] / _denominator(p, x[..., 1])
    out[..., 6] = x[..., 4] * x[..., 5]
    return out


def diffusion(cs: CoefficientSet, x) -> np.ndarray:
    """Diffusion column ``sigma(x)``; only components 2 and 3 are nonzero."""
    x = np.asarray(x, dtype=float)
    ft = eval_f(cs, x[..., 0])
    out = np.zeros_like(x)
    out[..., 1] = ft
    out[..., 2] = 2.0 * x[..., 1] * ft
    return out


@dataclass(frozen=True)
class LevelThresholds:
    """Cutoffs ``a_ell = 2 sqrt(ln ell)`` on ``|Z_n|``."""

    max_level: int = MAX_LEVEL

    def a(self, ell):
        ell = np.asarray(ell, dtype=float)
        return 2.0 * np.sqrt(np.log(ell))


def level_select(thresholds: LevelThresholds, z):
    """The ``ell >= 1`` with ``a_ell <= |z| < a_{ell+1}``, clipped to ``max_level``."""
    z = np.abs(np.asarray(z, dtype=float))
    if not np.all(np.isfinite(z)):
        raise ValueError("level selection needs finite z")
    log_cap = np.log(float(thresholds.max_level))
    expo = np.minimum(z * z / 4.0, log_cap)
    ell = np.maximum(np.floor(np.exp(expo)), 1.0).astype(np.int64)
    ell = np.minimum(ell, thresholds.max_level)
    # the closed-form inverse can be off by one at the edges in floating point
    while True:
        up = (ell < thresholds.max_level) & (thresholds.a(ell + 1) <= z)
        if not up.any():
            break
        ell = ell + up
    while True:
        down = (ell > 1) & (thresholds.a(ell) > z)
        if not down.any():
            break
        ell = ell - down
    return int(ell) if ell.ndim == 0 else ell


@dataclass(frozen=True)
class SchemeOutput:
    approx: SolutionVector
    exact: SolutionVector
    cost: np.ndarray
    level: np.ndarray
    truncated_level: np.ndarray

    def errors(self) -> np.ndarray:
        return self.approx.values - self.exact.values


def _pack(cs, approx, exact_x2, cost, level, truncated):
    exact = SolutionVector(terminal_vector(cs.T, cs.p, exact_x2))
    return SchemeOutput(
        SolutionVector(approx),
        exact,
        np.asarray(cost, dtype=np.int64),
        np.asarray(level, dtype=np.int64),
        np.asarray(truncated, dtype=bool),
    )


def interp_output(cs: CoefficientSet, n: int, z_n, x2) -> SchemeOutput:
    """Assemble the non-adaptive output from given ``(Z_n, X_2)`` draws."""
    z_n = np.asarray(z_n, dtype=float)
    ones = np.ones(z_n.shape, dtype=np.int64)
    return _pack(cs, terminal_vector(cs.T, cs.p, z_n), x2, n * ones, ones, ones == 0)


def interp_scheme(cs: CoefficientSet, vt: VarianceTable, n: int, rng, size=None) -> SchemeOutput:
    if n < 1:
        raise ValueError("n must be >= 1")
    z_n, x2 = sample_exact_pair(cs, vt, n, rng, size)
    return interp_output(cs, n, z_n, x2)


def adaptive_scheme(
    cs: CoefficientSet,
    vt: VarianceTable,
    n: int,
    rng,
    level_cap: int = DEFAULT_LEVEL_CAP,
    size=None,
    thresholds: LevelThresholds = LevelThresholds(),
) -> SchemeOutput:
    if n < 1 or level_cap < 1:
        raise ValueError("need n >= 1 and level_cap >= 1")
    z_n = np.sqrt(vt.nu2(n)) * rng.standard_normal(size)
    wanted = np.asarray(level_select(thresholds, z_n))
    truncated = wanted > level_cap
    ell = np.minimum(wanted, level_cap)
    z_fine, x2 = extend_to_level(cs, vt, n, ell, z_n, rng)
    approx = terminal_vector(cs.T, cs.p, z_n, x7=eval_G(cs.p, z_fine))
    return _pack(cs, approx, x2, ell * n, ell, truncated)


@lru_cache(maxsize=64)
def _euler_functional(cs: CoefficientSet, n_tau1: int):
    return build_functional(cs, cs.tau1 * np.arange(1, n_tau1 + 1) / n_tau1)


def euler_steps_to_tau1(cs: CoefficientSet, n: int) -> int:
    """Index of ``tau1`` on the grid ``i T / n``; raises if it is not a node."""
    k = n * cs.tau1 / cs.T
    k_int = int(round(k))
    if k_int < 1 or abs(k - k_int) > 1e-9 * max(k, 1.0):
        raise ValueError(f"Euler grid with n={n} steps on [0, {cs.T}] misses tau1={cs.tau1}")
    return k_int


def euler_maruyama(cs: CoefficientSet, vt: VarianceTable, n: int, rng, size=None) -> SchemeOutput:
    """Euler-Maruyama on ``n`` uniform steps of ``[0, T]`` with exact coupled truth.

    The truth uses the Euler grid's own Brownian values: ``Z`` from the
    functional on the nodes in ``(0, tau1]`` plus an independent Gaussian
    with the bridge variance of that grid.
    """
    k = euler_steps_to_tau1(cs, n)
    batch = () if size is None else (int(size),)
    dt = cs.T / n
    dw = np.sqrt(dt) * rng.standard_normal(batch + (n,))
    x = np.broadcast_to(X0, batch + (7,)).copy()
    for i in range(n):
        step = drift(cs, x) * dt + diffusion(cs, x) * dw[..., i, None]
        x = x + step
        # the clock component is kept on the grid so that x1 hits T exactly
        x[..., 0] = cs.T * (i + 1) / n
    w_nodes = np.cumsum(dw[..., :k], axis=-1)
    z = _euler_functional(cs, k)(w_nodes)
    # nodes i T / n, i <= k, are the equidistant grid i tau1 / k
    x2 = z + np.sqrt(vt.sigma2(k)) * rng.standard_normal(np.shape(z))
    ones = np.ones(np.shape(z), dtype=np.int64)
    return _pack(cs, x, x2, n * ones, ones, ones == 0)


def single_euler_step(cs: CoefficientSet, x, dt: float, dw) -> np.ndarray:
    return np.asarray(x, dtype=float) + drift(cs, x) * dt + diffusion(cs, x) * dw


SCHEMES = {"interp": interp_scheme, "adaptive": adaptive_scheme, "euler": euler_maruyama}
