"""Monte Carlo error estimation, rate fitting and cost profiles.

Replications are processed in blocks of ``BLOCK`` draws. Each block has its
own generator derived from ``(master_seed, n, block index)`` and its moments
are merged in block order, so results are bit-identical for any number of
worker threads.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .brownian import derive_stream
from .coefficients import ModelParams, normalize
from .gaussian_model import VarianceTable
from .schemes import DEFAULT_LEVEL_CAP, SCHEMES

BLOCK = 4096
DEFAULT_SEED = 0x5DE5DE
Z95 = 1.959963984540054
CSV_COLUMNS = (
    ["n"] + [f"err{i}" for i in range(1, 8)] + ["err_vec", "ci", "mean_cost", "max_level", "truncated_count"]
)


@dataclass
class ExperimentConfig:
    scheme: str = "adaptive"
    r: float = 2.0
    n_list: list = field(default_factory=lambda: [16, 32, 64])
    replications: int = 10_000
    master_seed: int = DEFAULT_SEED
    worker_count: int = 1
    params: ModelParams = field(default_factory=ModelParams)
    output: str | None = None
    level_cap: int = DEFAULT_LEVEL_CAP

    def __post_init__(self):
        if isinstance(self.params, dict):
            self.params = ModelParams(**self.params)
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {sorted(SCHEMES)}")
        if not self.r > 0:
            raise ValueError("error order r must be positive")
        if self.r > self.params.p:
            raise ValueError(f"r = {self.r} > p = {self.params.p}: the error of X_7 is infinite")
        if self.r == self.params.p and self.scheme != "adaptive":
            warnings.warn(
                f"r = p for the {self.scheme} scheme: the error is finite but heavy-tailed, "
                "and Monte Carlo estimates will understate it",
                stacklevel=2,
            )
        if self.replications < 1 or self.worker_count < 1 or self.level_cap < 1:
            raise ValueError("replications, worker_count and level_cap must be >= 1")
        self.n_list = [int(n) for n in self.n_list]
        if not self.n_list or min(self.n_list) < 1:
            raise ValueError("n_list must hold positive integers")

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = self.params.to_dict()
        return out


class StreamingMoments:
    """Count, mean, and 2nd/3rd central sums of a vector-valued stream.

    Blocks are merged with the pairwise update formulas, which avoid the
    cancellation of naive power sums.
    """

    def __init__(self, dim: int):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)
        self.m3 = np.zeros(dim)

    @staticmethod
    def of_block(x: np.ndarray) -> "StreamingMoments":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = StreamingMoments(x.shape[1])
        out.count = x.shape[0]
        out.mean = x.mean(axis=0)
        dev = x - out.mean
        out.m2 = np.sum(dev * dev, axis=0)
        out.m3 = np.sum(dev * dev * dev, axis=0)
        return out

    def merge(self, other: "StreamingMoments") -> "StreamingMoments":
        na, nb = self.count, other.count
        if nb == 0:
            return self
        if na == 0:
            self.count, self.mean, self.m2, self.m3 = nb, other.mean.copy(), other.m2.copy(), other.m3.copy()
            return self
        n = na + nb
        delta = other.mean - self.mean
        self.m3 = (
            self.m3
            + other.m3
            + delta**3 * na * nb * (na - nb) / n**2
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n
        )
        self.m2 = self.m2 + other.m2 + delta**2 * na * nb / n
        self.mean = self.mean + delta * nb / n
        self.count = n
        return self

    @property
    def variance(self) -> np.ndarray:
        return self.m2 / max(self.count - 1, 1)

    @property
    def skewness(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sqrt(self.count) * self.m3 / self.m2**1.5


@dataclass
class ErrorRow:
    n: int
    err: np.ndarray  # r-th mean error per component
    err_vec: float  # r-th mean of the Euclidean norm of the error vector
    ci: float  # 95% half-width for err_vec
    mean_cost: float
    max_level: int
    truncated_count: int
    replications: int = 0
    ci_components: np.ndarray | None = None
    cost_ci: float = 0.0
    skewness: float = 0.0
    level_counts: dict = field(default_factory=dict)

    def csv_fields(self) -> list[str]:
        vals = [str(self.n)] + [repr(float(e)) for e in self.err]
        vals += [repr(float(self.err_vec)), repr(float(self.ci)), repr(float(self.mean_cost))]
        vals += [str(int(self.max_level)), str(int(self.truncated_count))]
        return vals


@dataclass(frozen=True)
class RateFit:
    model: str
    params: dict
    residual: float


def _block_summary(config, cs, vt, n, block, size):
    rng = derive_stream(config.master_seed, (n, block), config.scheme)
    scheme = SCHEMES[config.scheme]
    if config.scheme == "adaptive":
        out = scheme(cs, vt, n, rng, level_cap=config.level_cap, size=size)
    else:
        out = scheme(cs, vt, n, rng, size=size)
    e = np.abs(out.errors())
    with np.errstate(over="ignore"):
        cols = np.column_stack([e**config.r, np.linalg.norm(e, axis=1) ** config.r, out.cost.astype(float)])
    levels, counts = np.unique(out.level, return_counts=True)
    return (
        StreamingMoments.of_block(cols),
        int(out.level.max()),
        int(out.truncated_level.sum()),
        dict(zip(levels.tolist(), counts.tolist())),
    )


def _error_row(config, n, moments: StreamingMoments, max_level, truncated, level_counts) -> ErrorRow:
    r = config.r
    N = moments.count
    mom = moments.mean[:8]
    se = np.sqrt(moments.variance[:8] / N)
    err = mom ** (1.0 / r)
    # delta method for the 1/r power; a zero moment has a zero-width interval
    with np.errstate(divide="ignore", invalid="ignore"):
        ci = np.where(mom > 0, Z95 * se * err / (r * mom), 0.0)
    return ErrorRow(
        n=n,
        err=err[:7],
        err_vec=float(err[7]),
        ci=float(ci[7]),
        mean_cost=float(moments.mean[8]),
        max_level=max_level,
        truncated_count=truncated,
        replications=N,
        ci_components=ci[:7],
        cost_ci=float(Z95 * np.sqrt(moments.variance[8] / N)),
        skewness=float(moments.skewness[7]),
        level_counts=level_counts,
    )


def estimate_row(config: ExperimentConfig, n: int, cs=None, vt=None) -> ErrorRow:
    cs = normalize(config.params) if cs is None else cs
    vt = VarianceTable(cs) if vt is None else vt
    sizes = [BLOCK] * (config.replications // BLOCK)
    if config.replications % BLOCK:
        sizes.append(config.replications % BLOCK)

    def job(b):
        return _block_summary(config, cs, vt, n, b, sizes[b])

    if config.worker_count > 1:
        with ThreadPoolExecutor(config.worker_count) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(b) for b in range(len(sizes))]
    total = StreamingMoments(9)
    max_level, truncated, counts = 1, 0, {}
    for mom, ml, tr, lc in parts:  # fixed block order
        total.merge(mom)
        max_level = max(max_level, ml)
        truncated += tr
        for k, v in lc.items():
            counts[k] = counts.get(k, 0) + v
    return _error_row(config, n, total, max_level, truncated, dict(sorted(counts.items())))


def run_convergence(config: ExperimentConfig, cs=None, vt=None) -> list[ErrorRow]:
    cs = normalize(config.params) if cs is None else cs
    vt = VarianceTable(cs) if vt is None else vt
    rows = [estimate_row(config, n, cs, vt) for n in config.n_list]
    if config.output:
        with open(config.output, "w", newline="", encoding="utf-8") as fh:
            fh.write(rows_to_csv(rows))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def _pairs(rows, column="err_vec"):
    if len(rows) < 3:
        raise ValueError("rate fits need at least 3 rows")
    pairs = []
    for row in rows:
        if isinstance(row, ErrorRow):
            pairs.append((row.n, getattr(row, column) if column != "err7" else row.err[6]))
        else:
            pairs.append(tuple(row))
    n, e = (np.array(v, dtype=float) for v in zip(*pairs))
    if np.any(e <= 0) or np.any(n <= 0):
        raise ValueError("rate fits need positive n and errors")
    return n, e


def fit_power(rows, column: str = "err_vec") -> RateFit:
    """Least squares of ``log err`` on ``log n``: ``err ~ c n^s``."""
    n, e = _pairs(rows, column)
    A = np.column_stack([np.log(n), np.ones_like(n)])
    coef, *_ = np.linalg.lstsq(A, np.log(e), rcond=None)
    resid = float(np.linalg.norm(A @ coef - np.log(e)))
    return RateFit("power", {"slope": float(coef[0]), "intercept": float(coef[1])}, resid)


def fit_log(rows, p: float, column: str = "err_vec") -> RateFit:
    """Scale ``c`` minimising ``sum (1 - c m_i / e_i)^2`` for ``m = ln^(-2/p)(n+1)``."""
    n, e = _pairs(rows, column)
    ratio = np.log(n + 1.0) ** (-2.0 / p) / e
    c = float(ratio.sum() / (ratio * ratio).sum())
    resid = float(np.linalg.norm(1.0 - c * ratio))
    return RateFit("log", {"c": c, "p": float(p)}, resid)


def cost_tail_bound(nu2: float) -> float:
    """Bound on ``E[cost] / n`` from the tail estimate of ``P(ell = k)``."""
    return float(np.sqrt(2.0 / (np.pi * np.log(2.0))) * (np.pi**2 / 6.0) / np.sqrt(nu2))


def level_tail_bound(k, nu2: float):
    """Bound on ``P(ell = k)``: ``(1/nu) 2^(3/2) / sqrt(pi ln 2) k^(-3)``."""
    k = np.asarray(k, dtype=float)
    return 2**1.5 / np.sqrt(np.pi * np.log(2.0)) / np.sqrt(nu2) * k**-3.0


@dataclass(frozen=True)
class CostRow:
    n: int
    mean_cost: float
    ci: float
    cost_over_n: float
    max_level: int
    bound: float


def cost_profile(config: ExperimentConfig, rows=None, cs=None, vt=None) -> list[CostRow]:
    """Per-``n`` mean cost, its CI, ``cost / n``, max level and the tail-sum bound."""
    cs = normalize(config.params) if cs is None else cs
    vt = VarianceTable(cs) if vt is None else vt
    rows = run_convergence(config, cs, vt) if rows is None else rows
    out = []
    for row in rows:
        bound = cost_tail_bound(vt.nu2(row.n)) if config.scheme == "adaptive" else 1.0
        out.append(
            CostRow(row.n, row.mean_cost, row.cost_ci, row.mean_cost / row.n, row.max_level, bound)
        )
    return out


__all__ = [
    "ExperimentConfig",
    "ErrorRow",
    "RateFit",
    "CostRow",
    "StreamingMoments",
    "run_convergence",
    "estimate_row",
    "rows_to_csv",
    "fit_power",
    "fit_log",
    "cost_profile",
    "cost_tail_bound",
    "level_tail_bound",
]
