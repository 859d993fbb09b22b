"""Element- and power-allocation solvers for the distributed deployment.

The boundary user of each cluster (index L-1) represents its cluster; all
solvers work on the per-cluster SNR coefficients Gamma_k = M rho^2 q / s^2
so that a user's receive SNR is p_k Gamma_k N_k^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beamform import quantization_gain
from .config import (
    DISTRIBUTED,
    GuardExceededError,
    SystemConfig,
    ValidationError,
)

SUM_RATE = "sum_rate"
MIN_RATE = "min_rate"
WATER_FILLING = "water_filling"
EQUALIZING = "equalizing"

SEARCH_GUARD = 10 ** 6


@dataclass(frozen=True)
class AllocationResult:
    """Element split and powers produced by one allocation rule."""

    element_shares: np.ndarray   # continuous relaxation N~_k
    element_counts: np.ndarray   # integers, summing exactly to N
    powers: np.ndarray           # watts per boundary user, summing to P_max
    objective: float             # bits/s/Hz (min rate or sum rate)
    user_snrs: np.ndarray        # receive SNRs Upsilon_k at the objective point
    objective_kind: str
    notes: tuple = ()

    def __post_init__(self):
        n = int(round(float(np.sum(self.element_shares))))
        if abs(float(np.sum(self.element_shares)) - n) > 1e-9 * max(n, 1):
            raise ValidationError("continuous element shares must sum to N")
        if int(np.sum(self.element_counts)) != n:
            raise ValidationError("integer element counts must sum exactly to N")
        if np.any(self.powers < -1e-15):
            raise ValidationError("powers must be nonnegative")


def snr_coefficient(cfg: SystemConfig, k: int) -> float:
    """Gamma_k = M (rho_g,k rho_r,kL)^2 q(b) / sigma^2 for the boundary user."""
    if cfg.architecture != DISTRIBUTED:
        raise ValidationError("element allocation applies to the distributed deployment")
    gain = cfg.bs_irs_pathloss[k] * cfg.irs_user_pathloss[k][-1]
    return cfg.m_antennas * gain * quantization_gain(cfg.quant_bits) / cfg.noise_power


def _gammas(cfg: SystemConfig) -> np.ndarray:
    return np.array([snr_coefficient(cfg, k) for k in range(cfg.k_clusters)])


def equalizing_powers(gammas, counts, p_total) -> tuple[np.ndarray, float]:
    """Powers that equalize the receive SNRs for a fixed element split.

    p_k = U / (Gamma_k N_k^2) with the common SNR
    U = P / sum_j 1/(Gamma_j N_j^2); the max-min-optimal rule for any split.
    """
    gammas = np.asarray(gammas, dtype=float)
    counts = np.asarray(counts, dtype=float)
    denom = gammas * counts ** 2
    if np.any(denom <= 0):
        raise ValidationError("equalizing powers need positive Gamma_k N_k^2")
    common = p_total / np.sum(1.0 / denom)
    return common / denom, float(common)


def maxmin_allocation(cfg: SystemConfig) -> AllocationResult:
    """Closed-form jointly optimal split and powers for the min-rate objective.

    Continuous shares scale with the inverse-cube-root concatenated gain,
    N~_k = (2/c_k)^{1/3} N / sum_j (2/c_j)^{1/3}, and the powers equalize
    all receive SNRs.  Integer counts are attached via largest-remainder
    rounding; shares, powers, SNRs, and the objective are those of the
    continuous optimum.
    """
    gains = np.array(
        [cfg.bs_irs_pathloss[k] * cfg.irs_user_pathloss[k][-1] for k in range(cfg.k_clusters)])
    if np.any(gains <= 0):
        raise ValidationError("concatenated path losses must be positive")
    weights = (2.0 / gains) ** (1.0 / 3.0)
    shares = weights / weights.sum() * cfg.n_total_elements
    gammas = _gammas(cfg)
    powers, common_snr = equalizing_powers(gammas, shares, cfg.p_max)
    return AllocationResult(
        element_shares=shares,
        element_counts=round_elements(shares, cfg.n_total_elements),
        powers=powers,
        objective=math.log2(1.0 + common_snr),
        user_snrs=np.full(cfg.k_clusters, common_snr),
        objective_kind=MIN_RATE,
    )


def round_elements(shares, n_total: int) -> np.ndarray:
    """Largest-remainder rounding of continuous shares to integers.

    Floors every share, then hands the leftover units to the largest
    fractional parts (ties to the lower index).  Any cluster with a
    positive share that would end at zero takes one unit from the current
    largest holder, so it keeps at least one element.
    """
    shares = np.asarray(shares, dtype=float)
    if np.any(shares < 0):
        raise ValidationError("element shares must be nonnegative")
    if abs(shares.sum() - n_total) > 1e-6 * max(n_total, 1):
        raise ValidationError(
            f"shares sum to {shares.sum():.9g}, expected {n_total}")
    out = np.floor(shares).astype(int)
    fracs = shares - out
    remaining = int(n_total - out.sum())
    order = sorted(range(len(shares)), key=lambda i: (-fracs[i], i))
    for i in order[:remaining]:
        out[i] += 1
    positive = shares > 0
    if positive.sum() > n_total:
        raise ValidationError(
            f"cannot give {int(positive.sum())} clusters an element each out of {n_total}")
    while np.any(positive & (out == 0)):
        needy = int(np.flatnonzero(positive & (out == 0))[0])
        donor = int(np.argmax(out))
        if out[donor] <= 1:
            raise ValidationError("element budget too small to repair zero allocations")
        out[donor] -= 1
        out[needy] += 1
    return out


def water_filling(gains, p_total: float) -> np.ndarray:
    """Water-filling powers p_k = max(u - 1/g_k, 0) with sum p = p_total.

    The water level is found exactly by closing the active set over the
    gains sorted in descending order; no iterative tolerance is involved.
    """
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0:
        raise ValidationError("water filling needs at least one channel")
    if np.any(gains <= 0) or p_total <= 0:
        raise ValidationError("gains and the power budget must be positive")
    order = np.argsort(-gains)
    sorted_gains = gains[order]
    inv = 1.0 / sorted_gains
    powers = np.zeros_like(gains)
    for active in range(gains.size, 0, -1):
        level = (p_total + inv[:active].sum()) / active
        if level - inv[active - 1] > 0.0:
            powers[order[:active]] = level - inv[:active]
            return powers
    raise ValidationError("water filling found no feasible active set")  # pragma: no cover


def sumrate_equal_allocation(cfg: SystemConfig) -> AllocationResult:
    """Equal element split and equal powers (asymptotically sum-rate optimal).

    Exact optimality holds as N grows; a note flags small budgets
    (N < 10 K) where the equal rule can be visibly loose.
    """
    k = cfg.k_clusters
    counts = round_elements(np.full(k, cfg.n_total_elements / k), cfg.n_total_elements)
    powers = np.full(k, cfg.p_max / k)
    gammas = _gammas(cfg)
    snrs = powers * gammas * counts.astype(float) ** 2
    notes = ("small-N",) if cfg.n_total_elements < 10 * k else ()
    return AllocationResult(
        element_shares=np.full(k, cfg.n_total_elements / k),
        element_counts=counts,
        powers=powers,
        objective=float(np.sum(np.log2(1.0 + snrs))),
        user_snrs=snrs,
        objective_kind=SUM_RATE,
        notes=notes,
    )


def _objective_for_split(counts, gammas, p_total, objective, power_rule):
    """(objective value, powers, snrs) for one integer split; None if hopeless."""
    counts = counts.astype(float)
    link_gains = gammas * counts ** 2
    if objective == MIN_RATE:
        if np.any(link_gains <= 0):
            return 0.0, np.zeros_like(gammas), np.zeros_like(gammas)
        if power_rule == WATER_FILLING:
            powers = water_filling(link_gains, p_total)
            snrs = powers * link_gains
            return float(np.min(np.log2(1.0 + snrs))), powers, snrs
        powers, common = equalizing_powers(gammas, counts, p_total)
        return math.log2(1.0 + common), powers, powers * link_gains
    # sum rate: clusters with zero elements simply receive no power
    live = link_gains > 0
    powers = np.zeros_like(gammas)
    if np.any(live):
        powers[live] = water_filling(link_gains[live], p_total)
    if power_rule == EQUALIZING and np.all(live):
        powers, _ = equalizing_powers(gammas, counts, p_total)
    snrs = powers * link_gains
    return float(np.sum(np.log2(1.0 + snrs))), powers, snrs


def exhaustive_element_search(
    cfg: SystemConfig,
    objective: str = SUM_RATE,
    power_rule: str | None = None,
    step: int = 1,
    guard: int = SEARCH_GUARD,
) -> AllocationResult:
    """Scan integer element splits and return the best one found.

    K = 2 scans every split (N_1 = 0..N in ``step`` increments); K = 3
    scans the two free counts on the same stride.  For each split the
    powers follow ``power_rule``: water filling for the sum-rate objective,
    SNR equalizing for the min-rate objective (the defaults).  Ties keep
    the lexicographically smallest split.
    """
    if objective not in (SUM_RATE, MIN_RATE):
        raise ValidationError(f"unknown objective {objective!r}")
    if power_rule is None:
        power_rule = WATER_FILLING if objective == SUM_RATE else EQUALIZING
    if power_rule not in (WATER_FILLING, EQUALIZING):
        raise ValidationError(f"unknown power rule {power_rule!r}")
    k = cfg.k_clusters
    if k not in (2, 3):
        raise ValidationError("exhaustive search supports K = 2 or 3 only")
    if step < 1:
        raise ValidationError("step must be >= 1")
    n = cfg.n_total_elements
    per_axis = n // step + 1
    combos = per_axis if k == 2 else per_axis * per_axis
    if combos > guard:
        raise GuardExceededError(
            f"{combos} candidate splits exceed the guard of {guard}")

    gammas = _gammas(cfg)
    best = None
    if k == 2:
        candidates = ((n1, n - n1) for n1 in range(0, n + 1, step))
    else:
        candidates = (
            (n1, n2, n - n1 - n2)
            for n1 in range(0, n + 1, step)
            for n2 in range(0, n - n1 + 1, step)
        )
    for split in candidates:
        counts = np.array(split)
        value, powers, snrs = _objective_for_split(
            counts, gammas, cfg.p_max, objective, power_rule)
        if best is None or value > best[0]:
            best = (value, counts, powers, snrs)

    value, counts, powers, snrs = best
    return AllocationResult(
        element_shares=counts.astype(float),
        element_counts=counts,
        powers=powers,
        objective=value,
        user_snrs=snrs,
        objective_kind=objective,
        notes=(f"exhaustive-step-{step}",),
    )
