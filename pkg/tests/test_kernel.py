import math

import numpy as np
import pytest

import oracles
import perevo
from perevo.errors import BadExponents, InsufficientData, LevelMismatch, LevelOrder
from perevo.evolve import evolve_state, prepare
from perevo.kernel import (apply_kernel, check_monotone_in_lambda, envelope_violation,
                           fit_gaussian, kernel_matrix, smoothing_exponent,
                           smoothing_norm)


@pytest.fixture(scope="module")
def fine_heat():
    # midpoint node sits exactly at the center; gaps used below are exact levels
    return perevo.builtin_scenario("heat_baseline", n=127, M=800)


@pytest.fixture(scope="module")
def fine_F(fine_heat):
    return prepare(fine_heat, 0.0)


def test_level_order_required(fine_F):
    with pytest.raises(LevelOrder):
        kernel_matrix(fine_F, 5, 5)


def test_impulse_consistency(fine_F, fine_heat):
    K = kernel_matrix(fine_F, 0, 40)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(fine_heat.grid.n)
    direct = evolve_state(fine_F, u, 0, 40)
    via_kernel = apply_kernel(K, u)
    assert np.abs(direct - via_kernel).max() <= 1e-12 * np.abs(direct).max()


def test_positive_entries_at_zero_penalty(fine_F):
    K = kernel_matrix(fine_F, 0, 40)
    assert K.entries.min() > 0.0


def test_peak_matches_image_series(fine_F, fine_heat):
    K = kernel_matrix(fine_F, 0, 40)  # tau = 0.05
    mid = fine_heat.grid.n // 2
    x = fine_heat.grid.interior()[mid]
    ref = oracles.interval_heat_kernel(x, x, 0.05, 0.0, math.pi)
    assert abs(K.entries[mid, mid] - ref) <= 0.03 * ref


def test_entries_match_image_series_bulk(fine_F, fine_heat):
    K = kernel_matrix(fine_F, 0, 160)  # tau = 0.2
    xs = fine_heat.grid.interior()
    for i in (20, 63, 100):
        for j in (30, 63, 90):
            ref = oracles.interval_heat_kernel(xs[i], xs[j], 0.2, 0.0, math.pi)
            assert K.entries[i, j] == pytest.approx(ref, rel=0.02, abs=1e-9)


def test_chapman_kolmogorov(fine_F):
    K_ts = kernel_matrix(fine_F, 0, 80)
    K_tm = kernel_matrix(fine_F, 32, 80)
    K_ms = kernel_matrix(fine_F, 0, 32)
    composed = K_tm.entries @ (fine_F.spec.grid.h * K_ms.entries)
    assert np.abs(composed - K_ts.entries).max() <= 1e-10 * K_ts.entries.max()


def test_symmetry_time_independent(fine_F):
    K = kernel_matrix(fine_F, 0, 40)
    assert np.abs(K.entries - K.entries.T).max() <= 1e-10 * K.entries.max()


def test_monotone_in_penalty_pairwise(du_peng_small):
    lams = [0.0, 1.0, 10.0, 100.0, 1e3, 1e4]
    Ks = [kernel_matrix(prepare(du_peng_small, lam), 0, du_peng_small.tgrid.M)
          for lam in lams]
    scale = Ks[0].entries.max()
    for K1, K2 in zip(Ks, Ks[1:]):
        assert check_monotone_in_lambda(K1, K2) <= 1e-12 * scale
    assert check_monotone_in_lambda(Ks[0], Ks[0]) == 0.0


def test_monotone_level_mismatch(du_peng_small):
    F = prepare(du_peng_small, 0.0)
    K1 = kernel_matrix(F, 0, 8)
    K2 = kernel_matrix(F, 0, 16)
    with pytest.raises(LevelMismatch):
        check_monotone_in_lambda(K1, K2)


def test_penalty_annihilates_blocked_columns():
    # the worst leak sits at the wall node and scales like 1/penalty: at 1e6
    # it is ~4e-4 of the peak on this grid, and ~4e-7 by 1e9
    spec = perevo.builtin_scenario("du_peng", n=64, M=512)
    s_level = 257  # one step past the switch
    xs = spec.grid.interior()
    blocked = xs >= 0.5
    ratios = {}
    for lam in (1e6, 1e7, 1e9):
        K = kernel_matrix(prepare(spec, lam), s_level, spec.tgrid.M)
        ratios[lam] = K.entries[:, blocked].max() / K.entries.max()
    assert ratios[1e9] <= 1e-6
    assert ratios[1e7] == pytest.approx(0.1 * ratios[1e6], rel=0.05)


def test_fit_gaussian_constants(fine_F):
    kernels = [kernel_matrix(fine_F, 0, g) for g in (80, 160, 320, 640)]
    fit = fit_gaussian(kernels)
    assert 0.20 <= fit.cconst <= 0.25
    assert fit.Mconst >= 1.0
    assert fit.max_violation <= 0.0
    # decay rate of the slowest mode is about -1 on this domain
    assert -1.3 <= fit.omega <= -0.7


def test_fit_gaussian_requires_spread(fine_F):
    with pytest.raises(InsufficientData):
        fit_gaussian([kernel_matrix(fine_F, 0, g) for g in (80, 120, 160)])
    with pytest.raises(InsufficientData):
        fit_gaussian([kernel_matrix(fine_F, 0, 80)])


def test_envelope_dominates_penalized_kernels(fine_heat, fine_F):
    kernels = [kernel_matrix(fine_F, 0, g) for g in (80, 160, 320, 640)]
    fit = fit_gaussian(kernels)
    F_pen = prepare(fine_heat, 10.0)  # weight is zero; kernel unchanged
    K_pen = kernel_matrix(F_pen, 0, 160)
    assert envelope_violation(fit, K_pen) <= 0.0


def test_diagonal_decay_uniformly_bounded(fine_F, fine_heat):
    mid = fine_heat.grid.n // 2
    vals = []
    for g in (8, 16, 40, 80, 200, 400):
        K = kernel_matrix(fine_F, 0, g)
        vals.append(K.entries[mid, mid] * math.sqrt(K.tau))
    assert max(vals) <= 0.32  # free-space constant is (4 pi)^(-1/2) ~ 0.282


def test_smoothing_norm_contractions(fine_F):
    K = kernel_matrix(fine_F, 0, 40)
    for p in (1.0, 2.0, math.inf):
        assert smoothing_norm(K, p, p) <= 1.0 + 1e-10


def test_smoothing_norm_one_to_inf_is_max_entry(fine_F):
    K = kernel_matrix(fine_F, 0, 40)
    assert smoothing_norm(K, 1, math.inf) == pytest.approx(K.entries.max())


def test_smoothing_norm_interpolation_upper_bound(fine_F):
    K = kernel_matrix(fine_F, 0, 40)
    # interpolated bound must dominate the exact (2,2) norm
    exact = smoothing_norm(K, 2, 2)
    n11 = smoothing_norm(K, 1, 1)
    ninf = smoothing_norm(K, math.inf, math.inf)
    n1inf = smoothing_norm(K, 1, math.inf)
    bound = n11 ** 0.5 * n1inf ** 0.0 * ninf ** 0.5
    assert exact <= bound + 1e-12
    # a strictly intermediate pair returns something between trivial bounds
    val = smoothing_norm(K, 1.5, 3.0)
    assert 0 < val <= max(n11, ninf, n1inf) * 2


def test_smoothing_norm_bad_exponents(fine_F):
    K = kernel_matrix(fine_F, 0, 40)
    with pytest.raises(BadExponents):
        smoothing_norm(K, 2, 1)
    with pytest.raises(BadExponents):
        smoothing_norm(K, 0.5, 2)


def test_smoothing_exponent_one_to_inf(fine_F):
    kernels = [kernel_matrix(fine_F, 0, g) for g in (10, 20, 40, 80)]
    slope = smoothing_exponent(kernels, 1, math.inf)
    assert abs(slope + 0.5) <= 0.1


def test_penalized_norms_dominated(du_peng_small):
    M = du_peng_small.tgrid.M
    K0 = kernel_matrix(prepare(du_peng_small, 0.0), 0, M)
    K1 = kernel_matrix(prepare(du_peng_small, 1e3), 0, M)
    for p, q in ((1, 1), (1, 2), (1, math.inf), (2, 2), (2, math.inf),
                 (math.inf, math.inf)):
        assert smoothing_norm(K1, p, q) <= smoothing_norm(K0, p, q) + 1e-12
