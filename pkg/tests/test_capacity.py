import math

import numpy as np
import pytest

from irslab import (
    CENTRALIZED,
    DISTRIBUTED,
    ValidationError,
    asymptotic_sum_rates,
    capacity_region_centralized,
    capacity_region_distributed,
    centralized_sum_rate,
    distributed_sum_rate,
    distributed_tdma_sum_rate,
    distributed_user_rate,
    dof,
    g_curve,
    make_config,
    solve_c_th,
    sum_rate_crossover,
    threshold_report,
)
from irslab.capacity import gamma0_tilde


def _cfg(**over):
    kw = dict(
        m_antennas=5,
        k_clusters=4,
        l_users_per_cluster=1,
        n_total_elements=200,
        bs_irs_pathloss=1e-7,
        irs_user_pathloss=1e-7,
        p_max=1.0,
        noise_power=1e-12,
    )
    kw.update(over)
    return make_config(**kw)


def _cent(**over):
    over.setdefault("architecture", CENTRALIZED)
    return _cfg(**over)


def test_distributed_user_rate_zero_power():
    assert distributed_user_rate(_cfg(), 0.0, 0) == 0.0


def test_distributed_user_rate_reference_point():
    # p = 0.25, M = 5, N = 200, rho^2 = 1e-14, sigma^2 = 1e-12, K = 4:
    # SNR = 0.25 * 5 * 4e4 * 1e-14 / (16 * 1e-12) = 31.25
    rate = distributed_user_rate(_cfg(), 0.25, 0)
    assert rate == pytest.approx(math.log2(1 + 31.25), rel=1e-12)


def test_distributed_user_rate_n_squared_scaling():
    base = _cfg()
    doubled = _cfg(n_total_elements=400)
    snr = lambda cfg: 2 ** distributed_user_rate(cfg, 0.25, 0) - 1
    assert snr(doubled) == pytest.approx(4 * snr(base), rel=1e-9)


def test_distributed_requires_k_le_m():
    with pytest.raises(ValidationError):
        distributed_user_rate(_cfg(m_antennas=3), 0.1, 0)


def test_distributed_sum_rate_operating_point():
    report = distributed_sum_rate(_cfg())
    assert report.sum_rate == pytest.approx(4 * math.log2(32.25), rel=1e-12)
    assert np.allclose(report.power_allocation, 0.25)
    assert report.architecture == DISTRIBUTED


def test_distributed_sum_rate_rejects_inhomogeneous():
    cfg = _cfg(k_clusters=2, irs_user_pathloss=[[1e-7], [1e-8]])
    with pytest.raises(ValidationError):
        distributed_sum_rate(cfg)


def test_centralized_sum_rate_operating_point():
    report = centralized_sum_rate(_cent())
    assert report.sum_rate == pytest.approx(math.log2(2001), rel=1e-12)
    assert np.allclose(report.time_shares, 0.25)
    assert "asymptotic-N" in report.notes


def test_sum_rates_coincide_at_k_1():
    dist = _cfg(k_clusters=1)
    cent = _cent(k_clusters=1)
    assert distributed_sum_rate(dist).sum_rate == pytest.approx(
        centralized_sum_rate(cent).sum_rate, rel=1e-12)


def test_quantization_factor_scales_snr():
    cont = centralized_sum_rate(_cent()).sum_rate
    b1 = centralized_sum_rate(_cent(quant_bits=1)).sum_rate
    q1 = (2 / math.pi) ** 2
    assert 2**b1 - 1 == pytest.approx((2**cont - 1) * q1, rel=1e-9)


def test_tdma_baseline_loses_to_centralized():
    # same time-sharing structure but only N/K elements of local gain
    dist = distributed_tdma_sum_rate(_cfg())
    cent = centralized_sum_rate(_cent())
    assert dist.sum_rate < cent.sum_rate


def test_region_distributed_grid_structure():
    cfg = _cfg(k_clusters=2)
    powers, rates = capacity_region_distributed(cfg, 3)
    assert sorted(map(tuple, powers.tolist())) == [
        (0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]
    assert np.all(rates >= 0)
    # corner point: all power to user 1 matches the single-user formula
    idx = next(i for i, p in enumerate(powers) if p[0] == 1.0)
    assert rates[idx][0] == pytest.approx(distributed_user_rate(cfg, 1.0, 0), rel=1e-12)
    assert rates[idx][1] == 0.0


def test_region_distributed_boundary_is_maximal():
    cfg = _cfg(k_clusters=2)
    _, rates = capacity_region_distributed(cfg, 9)
    for i, r in enumerate(rates):
        dominated = np.all(rates >= r - 1e-12, axis=1) & np.any(rates > r + 1e-12, axis=1)
        assert not dominated.any()


def test_region_centralized_constant_sum():
    cfg = _cent(k_clusters=2)
    shares, rates = capacity_region_centralized(cfg, 11)
    sums = rates.sum(axis=1)
    assert np.allclose(sums, sums[0], rtol=1e-12)
    corner = next(i for i, s in enumerate(shares) if s[0] == 1.0)
    assert rates[corner][0] == pytest.approx(centralized_sum_rate(cfg).sum_rate, rel=1e-12)


def test_region_rejects_tiny_grid():
    with pytest.raises(ValidationError):
        capacity_region_distributed(_cfg(k_clusters=2), 1)


def test_dof():
    assert dof(DISTRIBUTED, 4) == 4
    assert dof(CENTRALIZED, 4) == 1
    assert dof(DISTRIBUTED, 1) == dof(CENTRALIZED, 1) == 1


def test_dof_matches_high_snr_slope():
    # finite-difference slope of sum rate over log2 P at high SNR
    for arch, want in ((DISTRIBUTED, 4), (CENTRALIZED, 1)):
        if arch == DISTRIBUTED:
            f = lambda p: distributed_sum_rate(_cfg(p_max=p)).sum_rate
        else:
            f = lambda p: centralized_sum_rate(_cent(p_max=p)).sum_rate
        p0 = 1e8  # SNR far above 1e6
        slope = (f(2 * p0) - f(p0)) / 1.0
        assert slope == pytest.approx(want, rel=0.02)


def test_g_curve_shape_and_root():
    assert g_curve(2.0) < 0
    assert g_curve(1e6) > 0
    xs = np.linspace(2.0, 100.0, 400)
    assert np.all(np.diff([g_curve(x) for x in xs]) > 0)
    root = solve_c_th(1e-9)
    assert 15.7 < root < 15.9
    assert abs(g_curve(root)) <= 1e-9


def test_threshold_report_reference_point():
    cfg = _cfg(k_clusters=2)
    report = threshold_report(cfg)
    # sqrt(sigma^2/(P M rho^2)) * 2^3 = sqrt(20) * 8
    assert report.n_th == pytest.approx(math.sqrt(20) * 8, rel=1e-9)
    assert report.distributed_bound / report.centralized_bound == pytest.approx(
        5**1.5, rel=1e-12)


def test_threshold_monotonicities():
    n_th = lambda **kw: threshold_report(_cfg(**kw)).n_th
    values_k = [n_th(k_clusters=k) for k in (2, 3, 4, 5)]
    assert all(a < b for a, b in zip(values_k, values_k[1:]))
    assert n_th(k_clusters=2, m_antennas=8) < n_th(k_clusters=2, m_antennas=5)
    assert n_th(k_clusters=2, quant_bits=2) > n_th(k_clusters=2, quant_bits=3)
    assert n_th(k_clusters=2, p_max=2.0) < n_th(k_clusters=2, p_max=1.0)


def test_threshold_absent_for_single_cluster():
    assert threshold_report(_cfg(k_clusters=1)).n_th is None


def test_theorem_bounds_order_sum_rates():
    cfg = _cfg(k_clusters=2)
    report = threshold_report(cfg)
    m = cfg.m_antennas
    for k in range(1, m + 1):
        low = _with_k_and_n(cfg, k, max(int(report.centralized_bound), 1))
        high = _with_k_and_n(cfg, k, int(math.ceil(report.distributed_bound)) + 1)
        assert distributed_sum_rate(low).sum_rate <= centralized_sum_rate(
            _to_cent(low)).sum_rate + 1e-9
        assert distributed_sum_rate(high).sum_rate >= centralized_sum_rate(
            _to_cent(high)).sum_rate - 1e-9


def _with_k_and_n(cfg, k, n):
    return make_config(
        m_antennas=cfg.m_antennas,
        k_clusters=k,
        l_users_per_cluster=1,
        n_total_elements=n,
        quant_bits=cfg.quant_bits,
        p_max=cfg.p_max,
        noise_power=cfg.noise_power,
        bs_irs_pathloss=cfg.bs_irs_pathloss[0],
        irs_user_pathloss=cfg.irs_user_pathloss[0][0],
    )


def _to_cent(cfg):
    return make_config(
        m_antennas=cfg.m_antennas,
        k_clusters=cfg.k_clusters,
        l_users_per_cluster=1,
        n_total_elements=cfg.n_total_elements,
        quant_bits=cfg.quant_bits,
        p_max=cfg.p_max,
        noise_power=cfg.noise_power,
        bs_irs_pathloss=cfg.bs_irs_pathloss[0],
        irs_user_pathloss=cfg.irs_user_pathloss[0][0],
        architecture=CENTRALIZED,
    )


def test_asymptotic_rates_ratio_approaches_k():
    # the ratio K (base - 3 log2 K) / base converges to K only
    # logarithmically in N, so the limit is probed at an astronomical N
    cfg = _cfg(n_total_elements=10**6)
    k = cfg.k_clusters
    dist, cent = asymptotic_sum_rates(cfg)
    base = 2 * math.log2(cfg.n_total_elements) + math.log2(gamma0_tilde(cfg))
    assert dist / cent == pytest.approx(k * (1 - 3 * math.log2(k) / base), rel=1e-12)
    huge = _cfg(n_total_elements=10**80)
    dist, cent = asymptotic_sum_rates(huge)
    assert dist / cent == pytest.approx(k, rel=0.02)


def test_asymptotics_converge_to_exact():
    cfg = _cfg(n_total_elements=2_000_000)  # SNR >= 1e4 per user
    snr = gamma0_tilde(cfg) * cfg.n_total_elements**2 / cfg.k_clusters**3
    assert snr >= 1e4
    dist_tilde, cent_tilde = asymptotic_sum_rates(cfg)
    assert abs(distributed_sum_rate(cfg).sum_rate - dist_tilde) <= 0.01
    assert abs(centralized_sum_rate(_to_cent(cfg)).sum_rate - cent_tilde) <= 0.01


def test_asymptotics_warn_at_low_snr():
    cfg = _cfg(p_max=1e-4)
    with pytest.warns(UserWarning):
        asymptotic_sum_rates(cfg)


def test_crossover_scale_free_location():
    # the exact crossover solves K log2(1 + y/K^3) = log2(1 + y) with
    # y = gamma0 N^2; for K = 2, squaring gives y^2/64 = 3y/4, so y = 48
    for p_max in (1.0, 100.0):
        cfg = _cfg(k_clusters=2, p_max=p_max)
        n_cross = sum_rate_crossover(cfg)
        assert gamma0_tilde(cfg) * n_cross**2 == pytest.approx(48.0, rel=1e-6)


def test_crossover_matches_brute_scan():
    # independent check: scan integer N for the sign change of R_D - R_C
    cfg = _cfg(k_clusters=2)
    n_cross = sum_rate_crossover(cfg)
    below = math.floor(n_cross)
    above = math.ceil(n_cross) + 1

    def gap(n):
        d = _cfg(k_clusters=2, n_total_elements=n)
        c = _cent(k_clusters=2, n_total_elements=n)
        return distributed_sum_rate(d).sum_rate - centralized_sum_rate(c).sum_rate

    assert gap(below) < 0 < gap(above)


def test_crossover_requires_k_ge_2():
    with pytest.raises(ValidationError):
        sum_rate_crossover(_cfg(k_clusters=1))
