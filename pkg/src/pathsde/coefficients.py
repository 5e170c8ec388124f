"""Smooth bump coefficients ``f``, ``g``, ``h`` and their normalisation.

``f`` lives on ``(-inf, tau1]`` and has unit ``L2`` mass on ``[0, tau1]``;
``g`` and ``h`` are nonnegative bumps with unit integral on ``[tau1, tau2]``
and ``[tau2, T]``. All evaluators take scalars or arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import adaptive_gauss_legendre

# exp() of anything below this is returned as an exact zero
EXP_FLOOR = -700.0


@dataclass(frozen=True)
class ModelParams:
    tau1: float = 1.0
    tau2: float = 2.0
    T_final: float = 3.0
    p: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.tau1 < self.tau2 < self.T_final):
            raise ValueError(
                f"need 0 < tau1 < tau2 < T, got {self.tau1}, {self.tau2}, {self.T_final}"
            )
        if not self.p >= 1.0:
            raise ValueError(f"moment order p must be >= 1, got {self.p}")

    def to_dict(self) -> dict:
        return {"tau1": self.tau1, "tau2": self.tau2, "T_final": self.T_final, "p": self.p}


@dataclass(frozen=True)
class CoefficientSet:
    params: ModelParams
    c_f: float
    c_g: float
    c_h: float
    quad_tol: float = 1e-12

    @property
    def p(self) -> float:
        return self.params.p

    @property
    def tau1(self) -> float:
        return self.params.tau1

    @property
    def tau2(self) -> float:
        return self.params.tau2

    @property
    def T(self) -> float:
        return self.params.T_final


def _bump(t, lo, hi, scale, left_open):
    """``scale * exp(expo)`` and ``d expo/dt`` on the open support, 0 elsewhere.

    ``left_open`` selects the one-sided bump ``exp(1/(t - hi))`` used for f.
    """
    t = np.asarray(t, dtype=float)
    inside = (t < hi) if left_open else ((t > lo) & (t < hi))
    ts = np.where(inside, t, 0.5 * (lo + hi) if not left_open else hi - 1.0)
    if left_open:
        expo = 1.0 / (ts - hi)
        dexpo = -1.0 / (ts - hi) ** 2
    else:
        expo = 1.0 / (lo - ts) + 1.0 / (ts - hi)
        dexpo = 1.0 / (lo - ts) ** 2 - 1.0 / (ts - hi) ** 2
    live = inside & (expo >= EXP_FLOOR)
    val = np.where(live, scale * np.exp(np.where(live, expo, 0.0)), 0.0)
    return val, np.where(live, dexpo, 0.0)


def _scalar_out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _raw_f(t, tau1, c=1.0):
    return _bump(t, -np.inf, tau1, c, left_open=True)


def eval_f(cs: CoefficientSet, t):
    val, _ = _raw_f(t, cs.tau1, cs.c_f)
    return _scalar_out(val, t)


def eval_f_prime(cs: CoefficientSet, t):
    val, dexpo = _raw_f(t, cs.tau1, cs.c_f)
    return _scalar_out(val * dexpo, t)


def eval_g(cs: CoefficientSet, t):
    val, _ = _bump(t, cs.tau1, cs.tau2, cs.c_g, left_open=False)
    return _scalar_out(val, t)


def eval_g_prime(cs: CoefficientSet, t):
    val, dexpo = _bump(t, cs.tau1, cs.tau2, cs.c_g, left_open=False)
    return _scalar_out(val * dexpo, t)


def eval_h(cs: CoefficientSet, t):
    val, _ = _bump(t, cs.tau2, cs.T, cs.c_h, left_open=False)
    return _scalar_out(val, t)


def eval_h_prime(cs: CoefficientSet, t):
    val, dexpo = _bump(t, cs.tau2, cs.T, cs.c_h, left_open=False)
    return _scalar_out(val * dexpo, t)


def normalize(params: ModelParams, quad_tol: float = 1e-12) -> CoefficientSet:
    """Compute ``c_f, c_g, c_h`` so that the three unit-integral conditions hold."""
    tau1, tau2, T = params.tau1, params.tau2, params.T_final

    def f2(t):
        return _raw_f(t, tau1)[0] ** 2

    def g_raw(t):
        return _bump(t, tau1, tau2, 1.0, left_open=False)[0]

    def h_raw(t):
        return _bump(t, tau2, T, 1.0, left_open=False)[0]

    # integrals are O(1e-2), so relative accuracy needs a scaled tolerance
    i_f = adaptive_gauss_legendre(f2, 0.0, tau1, tol=quad_tol * 1e-3)
    i_g = adaptive_gauss_legendre(g_raw, tau1, tau2, tol=quad_tol * 1e-3)
    i_h = adaptive_gauss_legendre(h_raw, tau2, T, tol=quad_tol * 1e-3)
    for name, val in (("f^2", i_f), ("g", i_g), ("h", i_h)):
        if not val > 0.0:
            raise ValueError(f"raw integral of {name} vanished; check the time parameters")
    return CoefficientSet(
        params=params,
        c_f=float(1.0 / np.sqrt(i_f)),
        c_g=float(1.0 / i_g),
        c_h=float(1.0 / i_h),
        quad_tol=quad_tol,
    )


def unit_integrals(cs: CoefficientSet, tol: float | None = None) -> dict:
    """The three normalised integrals, recomputed by adaptive quadrature."""
    tol = cs.quad_tol if tol is None else tol
    return {
        "int_f2": adaptive_gauss_legendre(lambda t: eval_f(cs, t) ** 2, 0.0, cs.tau1, tol),
        "int_g": adaptive_gauss_legendre(lambda t: eval_g(cs, t), cs.tau1, cs.tau2, tol),
        "int_h": adaptive_gauss_legendre(lambda t: eval_h(cs, t), cs.tau2, cs.T, tol),
    }


def f_prime_sq_extrema(cs: CoefficientSet, lo: float, hi: float, grid: int = 100_001):
    """(inf, sup) of ``f'(t)**2`` over ``[lo, hi]``: dense grid plus local refinement."""
    from scipy.optimize import minimize_scalar

    t = np.linspace(lo, hi, grid)
    v = eval_f_prime(cs, t) ** 2
    out = []
    for sign, idx in ((1.0, int(np.argmin(v))), (-1.0, int(np.argmax(v)))):
        a = t[max(idx - 1, 0)]
        b = t[min(idx + 1, grid - 1)]
        best_v = v[idx]
        if b > a:
            res = minimize_scalar(
                lambda s: sign * eval_f_prime(cs, s) ** 2,
                bounds=(a, b),
                method="bounded",
                options={"xatol": 1e-14},
            )
            cand = eval_f_prime(cs, res.x) ** 2
            if sign * cand < sign * best_v:
                best_v = cand
        out.append(float(best_v))
    return out[0], out[1]


def gamma_sup(cs: CoefficientSet) -> float:
    """``sup |f'|^2`` over ``[0, tau1]``."""
    return f_prime_sq_extrema(cs, 0.0, cs.tau1)[1]


def derivative_growth_scan(cs: CoefficientSet, sample_box, rel_step: float = 1e-6) -> float:
    """Max over ``sample_box`` of the summed Jacobian entries of drift and
    diffusion divided by ``1 + |x|`` (central finite differences)."""
    from .schemes import diffusion, drift

    pts = np.atleast_2d(np.asarray(sample_box, dtype=float))
    best = 0.0
    for x in pts:
        total = 0.0
        for j in range(7):
            step = rel_step * max(1.0, abs(x[j]))
            xp = x.copy()
            xm = x.copy()
            xp[j] += step
            xm[j] -= step
            span = xp[j] - xm[j]
            total += np.abs((drift(cs, xp) - drift(cs, xm)) / span).sum()
            total += np.abs((diffusion(cs, xp) - diffusion(cs, xm)) / span).sum()
        best = max(best, total / (1.0 + np.linalg.norm(x)))
    return float(best)
