"""Brownian paths on finite grids, bridge refinement and seeded streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# purpose tags folded into stream derivation
PURPOSE = {"interp": 1, "adaptive": 2, "euler": 3, "path": 4, "refine": 5, "pair": 6}


def derive_stream(master_seed: int, index, purpose: int | str) -> np.random.Generator:
    """Independent generator for ``(master_seed, index, purpose)``.

    ``index`` is an int or a tuple of ints (e.g. ``(n, block)``).
    The triple is hashed by ``SeedSequence`` and drives a counter-based
    Philox bit generator, so a replication block draws the same numbers no
    matter which worker runs it.
    """
    tag = PURPOSE[purpose] if isinstance(purpose, str) else int(purpose)
    idx = (index,) if np.ndim(index) == 0 else tuple(index)
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(tag,) + tuple(int(i) for i in idx))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class TimeGrid:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size == 0:
            raise ValueError("a grid needs at least one node")
        if nodes[0] <= 0.0 or np.any(np.diff(nodes) <= 0.0):
            raise ValueError("grid nodes must be positive and strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def equidistant(cls, n: int, end: float) -> "TimeGrid":
        return cls(end * np.arange(1, n + 1) / n)

    def __len__(self):
        return self.nodes.size

    def spacing(self, rtol: float = 1e-9) -> float | None:
        """Common step if the grid is ``i * h, i = 1..n``, else ``None``."""
        n = self.nodes.size
        h = self.nodes[-1] / n
        if np.allclose(self.nodes, h * np.arange(1, n + 1), rtol=rtol, atol=rtol * h):
            return h
        return None


@dataclass(frozen=True)
class BrownianPath:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[-1] != len(self.grid):
            raise ValueError("one value per grid node is required")
        object.__setattr__(self, "values", vals)


def sample_path(grid: TimeGrid, rng: np.random.Generator, size: int | None = None) -> BrownianPath:
    """Brownian values at the grid nodes (``W(0) = 0`` implied).

    With ``size`` the values get a leading batch axis of independent paths.
    """
    steps = np.diff(np.concatenate([[0.0], grid.nodes]))
    shape = steps.shape if size is None else (size,) + steps.shape
    incr = rng.standard_normal(shape) * np.sqrt(steps)
    return BrownianPath(grid, np.cumsum(incr, axis=-1))


def refine_equidistant(path: BrownianPath, factor: int, rng: np.random.Generator) -> BrownianPath:
    """Bridge-sample ``factor - 1`` new equidistant points inside every cell.

    Points are drawn left to right, each conditioned on its left neighbour
    and the cell's right endpoint. Coarse values are copied, not recomputed.
    """
    factor = int(factor)
    if factor < 1:
        raise ValueError("refinement factor must be >= 1")
    h = path.grid.spacing()
    if h is None:
        raise ValueError("refine_equidistant needs nodes i*h, i = 1..n")
    if factor == 1:
        return path
    n = len(path.grid)
    coarse = path.values
    batch = coarse.shape[:-1]
    left = np.concatenate([np.zeros(batch + (1,)), coarse[..., :-1]], axis=-1)
    right = coarse
    fine = np.empty(batch + (n, factor))
    fine[..., -1] = right
    dt = h / factor
    cur = left
    for k in range(1, factor):
        remaining = h - (k - 1) * dt  # from the previous point to the right endpoint
        mean = cur + (dt / remaining) * (right - cur)
        var = dt * (remaining - dt) / remaining
        cur = mean + np.sqrt(var) * rng.standard_normal(cur.shape)
        fine[..., k - 1] = cur
    grid = TimeGrid.equidistant(n * factor, path.grid.nodes[-1])
    return BrownianPath(grid, fine.reshape(batch + (n * factor,)))
