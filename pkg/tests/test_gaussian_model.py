import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathsde.brownian import TimeGrid, derive_stream, refine_equidistant, sample_path
from pathsde.coefficients import eval_f_prime, f_prime_sq_extrema
from pathsde.gaussian_model import (
    bridge_variances,
    build_functional,
    equidistant_functional,
    extend_to_level,
    sample_exact_pair,
    sigma_squared,
)

# mpmath, 30 digits: int_0^1 f(t) dt, which is -int_0^1 f'(t) t dt by parts
W_SINGLE = 0.766477434083914312892
# mpmath double integral of f'(s) f'(t) (min(s,t) - st) over [0,1]^2
SIGMA2_ONE = 0.412512343040138789550


def test_single_node_weight(cs):
    fn = build_functional(cs, [cs.tau1])
    assert fn.weights[0] == pytest.approx(W_SINGLE, rel=1e-13)


def test_sigma2_one_cell(cs, vt):
    assert vt.sigma2(1) == pytest.approx(SIGMA2_ONE, rel=1e-13)


def test_sigma2_one_cell_by_bridge_simulation(cs):
    # Y_1 = -int f'(t) B(t) dt, B the bridge on [0, 1]; trapezoid rule on a fine grid
    m, N, chunk = 2048, 200_000, 20_000
    t = np.arange(1, m) / m
    w = -eval_f_prime(cs, t) / m
    rng = derive_stream(21, 0, "path")
    ys = []
    for _ in range(N // chunk):
        W = np.cumsum(rng.standard_normal((chunk, m)), axis=1) / np.sqrt(m)
        ys.append((W[:, :-1] - t * W[:, -1:]) @ w)
    y = np.concatenate(ys)
    se = y.var() * np.sqrt(2.0 / N)
    assert abs(y.var() - SIGMA2_ONE) <= 3 * se


def test_quadratic_form_matches_monte_carlo(cs):
    fn = equidistant_functional(cs, 8)
    assert fn.variance == pytest.approx(fn.variance_quadratic_form(), rel=1e-12)
    N = 1_000_000
    W = sample_path(TimeGrid(fn.nodes), derive_stream(22, 0, "path"), size=N).values
    z = fn(W)
    assert abs(z.var() - fn.variance) <= 3 * fn.variance * np.sqrt(2.0 / N)


@pytest.mark.parametrize("m", [2**k for k in range(11)])
def test_variance_identity(cs, vt, m):
    assert abs(equidistant_functional(cs, m).variance + vt.sigma2(m) - 1.0) <= 1e-8


def test_large_grid_bound(vt):
    assert vt.nu2(4096) >= 1.0 - vt.bound(4096)


@pytest.mark.parametrize("m", [1, 3, 8, 50])
def test_sigma2_bracket(cs, m):
    edges = cs.tau1 * np.arange(m + 1) / m
    per_cell = bridge_variances(cs, edges)
    for a, b, v in zip(edges[:-1], edges[1:], per_cell):
        lo, hi = f_prime_sq_extrema(cs, a, b, grid=20_001)
        d3 = (b - a) ** 3 / 12.0
        assert lo * d3 * (1 - 1e-9) <= v <= hi * d3 * (1 + 1e-9)


def test_sigma2_matches_direct(cs, vt):
    assert vt.sigma2(37) == sigma_squared(cs, 37)


def test_short_last_node_warns(cs):
    with pytest.warns(UserWarning):
        fn = build_functional(cs, [0.25, 0.5])
    # holding W(0.5) on [0.5, 1] adds f(0.5) to its weight; the total still integrates f
    assert fn.variance < 1.0


def test_build_functional_rejects_bad_nodes(cs):
    for nodes in ([], [0.5, 0.25], [0.0, 1.0], [0.5, 1.5]):
        with pytest.raises(ValueError):
            build_functional(cs, nodes)


def test_exact_pair_law(cs, vt):
    N = 1_000_000
    z, x2 = sample_exact_pair(cs, vt, 64, derive_stream(23, 0, "pair"), size=N)
    assert 0.99 <= x2.var() <= 1.01
    assert abs(np.corrcoef(z, x2 - z)[0, 1]) <= 0.003


def test_degenerate_remainder(cs, vt):
    class Zero:
        def sigma2(self, m):
            return 0.0

    z, x2 = sample_exact_pair(cs, Zero(), 4, derive_stream(24, 0, "pair"), size=10)
    assert np.array_equal(z, x2)


def test_level_one_keeps_z(cs, vt):
    z = np.linspace(-2, 2, 11)
    z_fine, _ = extend_to_level(cs, vt, 16, 1, z, derive_stream(25, 0, "pair"))
    assert np.array_equal(z_fine, z)
    with pytest.raises(ValueError):
        extend_to_level(cs, vt, 16, 0, z, derive_stream(25, 0, "pair"))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=300), st.integers(min_value=1, max_value=40))
def test_nu2_increases_under_refinement(n, ell):
    from pathsde.coefficients import ModelParams, normalize
    from pathsde.gaussian_model import VarianceTable

    vt = _shared_table(normalize, ModelParams, VarianceTable)
    assert vt.nu2(ell * n) - vt.nu2(n) == pytest.approx(vt.increment_variance(n, ell), abs=1e-15)
    assert vt.increment_variance(n, ell) >= 0.0
    assert vt.sigma2(n) <= vt.bound(n)


_TABLE = {}


def _shared_table(normalize, ModelParams, VarianceTable):
    if "vt" not in _TABLE:
        _TABLE["vt"] = VarianceTable(normalize(ModelParams()))
    return _TABLE["vt"]


def test_chain_matches_path_level_refinement(cs, vt):
    """(Z_n, Z_{ln}) from extend_to_level vs refining actual Brownian paths."""
    n, ell, N = 4, 3, 400_000
    coarse = sample_path(TimeGrid.equidistant(n, cs.tau1), derive_stream(26, 0, "path"), size=N)
    fine = refine_equidistant(coarse, ell, derive_stream(26, 0, "refine"))
    zn_path = equidistant_functional(cs, n)(coarse.values)
    zf_path = equidistant_functional(cs, n * ell)(fine.values)

    rng = derive_stream(26, 1, "pair")
    zn = np.sqrt(vt.nu2(n)) * rng.standard_normal(N)
    zf, _ = extend_to_level(cs, vt, n, ell, zn, rng)

    for a, b in [(zn_path, zn), (zf_path, zf), (zf_path - zn_path, zf - zn)]:
        va, vb = a.var(), b.var()
        se = np.sqrt(2.0 / N) * np.sqrt(va**2 + vb**2)
        assert abs(va - vb) <= 3 * se
    cov_path = np.cov(zn_path, zf_path - zn_path)[0, 1]
    cov_chain = np.cov(zn, zf - zn)[0, 1]
    se = np.sqrt(vt.nu2(n) * vt.increment_variance(n, ell) * 2.0 / N)
    assert abs(cov_path - cov_chain) <= 3 * se
