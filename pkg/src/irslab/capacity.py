"""Closed-form sum rates, capacity regions, DoF, and deployment thresholds.

All formulas assume pure-LoS channels; the distributed ones additionally
assume the ideal AoD deployment (orthogonal BS steering vectors) and an
even N/K element split.  Rates are bits/s/Hz (log base 2 throughout).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .beamform import quantization_gain
from .config import (
    CENTRALIZED,
    DISTRIBUTED,
    GuardExceededError,
    SystemConfig,
    ValidationError,
)

REGION_GUARD = 10 ** 6
HIGH_SNR_WARN = 1e3


@dataclass(frozen=True)
class RateReport:
    """Rates achieved by one scheme, with the allocation that produced them."""

    architecture: str
    user_rates: np.ndarray            # bits/s/Hz per cluster's typical user
    sum_rate: float
    power_allocation: np.ndarray | None = None   # watts per user (SDMA)
    time_shares: np.ndarray | None = None        # slot fractions (TDMA)
    snr_coefficient: float | None = None         # gamma0 = P M rho^2 q / sigma^2
    notes: tuple = ()

    def __post_init__(self):
        rates = np.asarray(self.user_rates, dtype=float)
        if np.any(rates < 0):
            raise ValidationError("rates must be nonnegative")
        total = float(rates.sum())
        if abs(total - self.sum_rate) > 1e-9 * max(1.0, abs(self.sum_rate)):
            raise ValidationError(
                f"sum rate {self.sum_rate} does not match the per-user total {total}")


@dataclass(frozen=True)
class ThresholdReport:
    """Element-count thresholds of the architecture comparison theorems."""

    c_th: float                  # root of g(x) = ln(1+x) - 3 + 3/(1+x)
    centralized_bound: float     # N below this: centralized wins for all K <= M
    distributed_bound: float     # N above this: distributed wins for all K <= M
    n_th: float | None           # exact high-SNR crossover (needs K >= 2)
    m_antennas: int
    k_clusters: int
    quant_bits: object
    p_max: float
    noise_power: float
    concatenated_gain: float

    def __post_init__(self):
        if self.distributed_bound < self.centralized_bound - 1e-9:
            raise ValidationError("threshold bounds are inconsistent")


def _common_gain(cfg: SystemConfig, context: str) -> float:
    """The homogeneous concatenated gain (rho_g rho_r)^2 shared by all users."""
    gains = cfg.concatenated_gains()
    ref = float(gains.flat[0])
    if not np.all(np.abs(gains - ref) <= 1e-12 * abs(ref)):
        raise ValidationError(
            f"{context} assumes homogeneous channels; per-user concatenated gains "
            "differ -- use the scheduler/allocation routines for heterogeneous setups")
    return ref


def _check_capacity_preconditions(cfg: SystemConfig) -> None:
    if cfg.k_clusters > cfg.m_antennas:
        raise ValidationError(
            f"capacity formulas need K <= M (rank assumption), got K={cfg.k_clusters}, "
            f"M={cfg.m_antennas}")


def gamma0_tilde(cfg: SystemConfig, gain: float | None = None) -> float:
    """SNR coefficient P M rho^2 q(b) / sigma^2 of the homogeneous setup."""
    if gain is None:
        gain = _common_gain(cfg, "gamma0")
    q = quantization_gain(cfg.quant_bits)
    return cfg.p_max * cfg.m_antennas * gain * q / cfg.noise_power


def distributed_user_rate(cfg: SystemConfig, p_k: float, k: int) -> float:
    """Rate of cluster k's typical user under SDMA with power p_k.

    log2(1 + p_k M N^2 (rho_g,k rho_r,k)^2 q / (K^2 sigma^2)); assumes LoS,
    ideal deployment, and the even N/K split (N^2/K^2 = N_k^2).
    """
    _check_capacity_preconditions(cfg)
    if p_k < 0:
        raise ValidationError("power must be nonnegative")
    gain = cfg.bs_irs_pathloss[k] * cfg.irs_user_pathloss[k][0]
    q = quantization_gain(cfg.quant_bits)
    snr = (
        p_k * cfg.m_antennas * cfg.n_total_elements ** 2 * gain * q
        / (cfg.k_clusters ** 2 * cfg.noise_power)
    )
    return math.log2(1.0 + snr)


def distributed_sum_rate(cfg: SystemConfig) -> RateReport:
    """Maximum SDMA sum rate of the distributed deployment.

    Homogeneity collapses water-filling to the equal split P/K, giving
    K log2(1 + P M N^2 rho^2 q / (K^3 sigma^2)).
    """
    _check_capacity_preconditions(cfg)
    gain = _common_gain(cfg, "distributed_sum_rate")
    k = cfg.k_clusters
    p_each = cfg.p_max / k
    rate = distributed_user_rate(cfg, p_each, 0)
    return RateReport(
        architecture=DISTRIBUTED,
        user_rates=np.full(k, rate),
        sum_rate=k * rate,
        power_allocation=np.full(k, p_each),
        snr_coefficient=gamma0_tilde(cfg, gain),
    )


def centralized_sum_rate(cfg: SystemConfig) -> RateReport:
    """Maximum TDMA sum rate of the centralized deployment (large-N form).

    log2(1 + P M N^2 rho^2 q / sigma^2), achieved by equal time sharing;
    the closed form is exact only asymptotically in N, which is recorded
    as a note rather than an error.
    """
    gain = _common_gain(cfg, "centralized_sum_rate")
    k = cfg.k_clusters
    q = quantization_gain(cfg.quant_bits)
    snr = cfg.p_max * cfg.m_antennas * cfg.n_total_elements ** 2 * gain * q / cfg.noise_power
    rate = math.log2(1.0 + snr)
    return RateReport(
        architecture=CENTRALIZED,
        user_rates=np.full(k, rate / k),
        sum_rate=rate,
        time_shares=np.full(k, 1.0 / k),
        snr_coefficient=gamma0_tilde(cfg, gain),
        notes=("asymptotic-N",),
    )


def distributed_tdma_sum_rate(cfg: SystemConfig) -> RateReport:
    """TDMA baseline under the distributed deployment.

    Each user is served in its own slot through its local N/K-element IRS
    only, so the passive gain drops from N^2 to (N/K)^2.
    """
    gain = _common_gain(cfg, "distributed_tdma_sum_rate")
    k = cfg.k_clusters
    q = quantization_gain(cfg.quant_bits)
    n_k = cfg.n_total_elements / k
    snr = cfg.p_max * cfg.m_antennas * n_k ** 2 * gain * q / cfg.noise_power
    rate = math.log2(1.0 + snr)
    return RateReport(
        architecture=DISTRIBUTED,
        user_rates=np.full(k, rate / k),
        sum_rate=rate,
        time_shares=np.full(k, 1.0 / k),
        snr_coefficient=gamma0_tilde(cfg, gain),
        notes=("tdma-baseline",),
    )


def _simplex_grid(k: int, grid_points: int) -> np.ndarray:
    """All fractions (w_1..w_k), w_i >= 0, sum 1, on a simplex lattice."""
    if grid_points < 2:
        raise ValidationError("grid_points must be >= 2")
    steps = grid_points - 1
    count = math.comb(steps + k - 1, k - 1)
    if count > REGION_GUARD:
        raise GuardExceededError(
            f"simplex grid would have {count} points, exceeding {REGION_GUARD}")
    out = np.empty((count, k))
    for i, cuts in enumerate(itertools.combinations(range(steps + k - 1), k - 1)):
        prev = -1
        parts = []
        for c in list(cuts) + [steps + k - 1]:
            parts.append(c - prev - 1)
            prev = c
        out[i] = parts
    return out / steps


def capacity_region_distributed(cfg: SystemConfig, grid_points: int):
    """Boundary rate tuples of the distributed region over a power grid.

    Sweeps power allocations p >= 0 with sum P over a simplex lattice;
    since interference is nulled, each user's coordinate depends only on
    its own p_k, so the region is a box swept by its corner allocations.

    Returns (powers, rates), both (points x K).
    """
    _check_capacity_preconditions(cfg)
    weights = _simplex_grid(cfg.k_clusters, grid_points)
    powers = weights * cfg.p_max
    rates = np.empty_like(powers)
    for i, p in enumerate(powers):
        rates[i] = [distributed_user_rate(cfg, p[k], k) for k in range(cfg.k_clusters)]
    return powers, rates


def capacity_region_centralized(cfg: SystemConfig, grid_points: int):
    """Boundary rate tuples of the centralized region over time shares.

    Coordinate k is rho_k log2(1 + P M N^2 (rho_g rho_r,k)^2 q / sigma^2).

    Returns (time_shares, rates), both (points x K).
    """
    _check_capacity_preconditions(cfg)
    q = quantization_gain(cfg.quant_bits)
    shares = _simplex_grid(cfg.k_clusters, grid_points)
    single = np.array([
        math.log2(
            1.0
            + cfg.p_max * cfg.m_antennas * cfg.n_total_elements ** 2
            * cfg.bs_irs_pathloss[0] * cfg.irs_user_pathloss[k][0] * q
            / cfg.noise_power
        )
        for k in range(cfg.k_clusters)
    ])
    return shares, shares * single[None, :]


def dof(architecture: str, k: int) -> int:
    """Spatial multiplexing gain: K parallel streams distributed, 1 centralized."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    if architecture == DISTRIBUTED:
        return int(k)
    if architecture == CENTRALIZED:
        return 1
    raise ValidationError(f"unknown architecture {architecture!r}")


def g_curve(x: float) -> float:
    """g(x) = ln(1+x) - 3 + 3/(1+x); strictly increasing on [2, inf)."""
    return math.log1p(x) - 3.0 + 3.0 / (1.0 + x)


def solve_c_th(tolerance: float = 1e-9) -> float:
    """Root of g on (2, 1e6) by bisection, to |g(root)| <= tolerance.

    The bracket is guaranteed: g(2) < 0, g is strictly increasing beyond 2,
    and g grows without bound, so the root is unique.  Both bracket signs
    are asserted before solving.
    """
    if tolerance <= 0:
        raise ValidationError("tolerance must be positive")
    lo, hi = 2.0, 1e6
    g_lo, g_hi = g_curve(lo), g_curve(hi)
    if not (g_lo < 0.0 < g_hi):
        raise ValidationError("bisection bracket lost; g is malformed")
    while True:
        mid = 0.5 * (lo + hi)
        g_mid = g_curve(mid)
        if abs(g_mid) <= tolerance:
            return mid
        if g_mid < 0.0:
            lo = mid
        else:
            hi = mid


def threshold_report(cfg: SystemConfig, tolerance: float = 1e-12) -> ThresholdReport:
    """Element-count thresholds for the distributed/centralized comparison.

    centralized_bound = sqrt(C_th sigma^2 / (P M rho^2 q)): below it the
    centralized deployment wins for every K <= M.  distributed_bound is
    M^{3/2} larger: above it the distributed deployment wins for every
    K <= M.  n_th = K^{3K/(2(K-1))} / sqrt(gamma0/N^2) is the exact
    high-SNR crossover for the configured K (absent when K = 1, where the
    two architectures coincide).
    """
    gain = _common_gain(cfg, "threshold_report")
    q = quantization_gain(cfg.quant_bits)
    c_th = solve_c_th(tolerance)
    base = cfg.noise_power / (cfg.p_max * gain * q)
    bound_cent = math.sqrt(c_th * base / cfg.m_antennas)
    bound_dist = cfg.m_antennas * math.sqrt(c_th * base)
    k = cfg.k_clusters
    n_th = None
    if k >= 2:
        n_th = math.sqrt(base / cfg.m_antennas) * k ** (3.0 * k / (2.0 * (k - 1)))
    return ThresholdReport(
        c_th=c_th,
        centralized_bound=bound_cent,
        distributed_bound=bound_dist,
        n_th=n_th,
        m_antennas=cfg.m_antennas,
        k_clusters=k,
        quant_bits=cfg.quant_bits,
        p_max=cfg.p_max,
        noise_power=cfg.noise_power,
        concatenated_gain=gain,
    )


def asymptotic_sum_rates(cfg: SystemConfig) -> tuple[float, float]:
    """High-SNR asymptotes of the two sum rates.

    (K (2 log2 N + log2 g0 - 3 log2 K), 2 log2 N + log2 g0) with
    g0 = P M rho^2 q / sigma^2.  Warns when P rho^2 / sigma^2 is below
    1e3, where the asymptotes are loose.
    """
    gain = _common_gain(cfg, "asymptotic_sum_rates")
    if cfg.p_max * gain / cfg.noise_power < HIGH_SNR_WARN:
        warnings.warn(
            "asymptotic sum rates requested at low SNR; the approximation is loose",
            stacklevel=2)
    g0 = gamma0_tilde(cfg, gain)
    k = cfg.k_clusters
    n = cfg.n_total_elements
    base = 2.0 * math.log2(n) + math.log2(g0)
    return k * (base - 3.0 * math.log2(k)), base


def sum_rate_crossover(cfg: SystemConfig, rtol: float = 1e-12) -> float:
    """Continuous element count N at which the exact sum rates coincide.

    Solves K log2(1 + g0(N)/K^3) = log2(1 + g0(N)) by bisection over N,
    where g0(N) = gamma0 N^2.  The difference is negative for small N and
    positive for large N; K = 1 has no crossover (identical formulas).
    """
    gain = _common_gain(cfg, "sum_rate_crossover")
    k = cfg.k_clusters
    if k < 2:
        raise ValidationError("the two architectures coincide at K = 1; no crossover")
    coeff = gamma0_tilde(cfg, gain)  # g0(N) = coeff * N^2

    def diff(n):
        y = coeff * n * n
        return k * math.log2(1.0 + y / k ** 3) - math.log2(1.0 + y)

    lo = 1e-6
    hi = 1.0
    while diff(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e15:
            raise ValidationError("no crossover found below N = 1e15")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if diff(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
