"""Hybrid SDMA-TDMA transmission, channel correlation, and ergodic rates.

The hybrid scheme partitions the L users of every cluster into L time
slots; slot l serves group {user l of each cluster} via SDMA with MRT
beams and phase patterns aligned to each scheduled user's LoS direction
(statistical CSI only).  Monte-Carlo routines draw one independent
sub-seed per trial, so results do not depend on trial execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beamform import BeamformerSet, mrt_beamformer, optimal_phase_pattern, quantization_gain
from .capacity import RateReport
from .channel import (
    ChannelRealization,
    complex_normal,
    default_angles,
    effective_channel,
    ideal_aod_set,
    irs_steering,
    los_bs_irs,
    los_irs_user,
    synth_channels,
    ula_response,
    upa_response,
)
from .config import (
    DISTRIBUTED,
    LOS,
    AngleSet,
    SystemConfig,
    ValidationError,
    derive_trial_seed,
    generator_from_seed,
    upa_factors,
)

INTRA_CLUSTER = "intra"
INTER_CLUSTER = "inter"

LOW_TRIAL_WARNING = 100


@dataclass(frozen=True)
class SlotPlan:
    """Beam and reflection configuration of one time slot.

    ``users[k]`` is the user index of cluster k scheduled in this slot;
    the beams and per-surface phase patterns live in ``beamformers``.
    """

    slot: int
    users: tuple
    beamformers: BeamformerSet
    powers: np.ndarray

    def __post_init__(self):
        total = float(np.sum(self.powers))
        budget = self.beamformers.total_power()
        if abs(total - budget) > 1e-9 * max(total, budget, 1e-300):
            raise ValidationError("slot powers must match the beam norms")


@dataclass(frozen=True)
class CorrelationEstimate:
    """Closed form vs Monte Carlo for one user-pair correlation."""

    kind: str
    closed_form: float
    monte_carlo: float
    trials: int
    seed: int
    notes: tuple = ()


def _common_delta(cfg: SystemConfig):
    deltas = set(cfg.rician_bs_irs)
    if len(deltas) != 1:
        raise ValidationError(
            "this analysis assumes a common BS-IRS Rician factor across clusters")
    return next(iter(deltas))


def _eta(delta) -> float:
    """LoS power fraction delta/(delta+1); exactly 1 for the los sentinel."""
    if delta == LOS:
        return 1.0
    return float(delta) / (float(delta) + 1.0)


def build_slot_plans(cfg: SystemConfig, angles: AngleSet, powers=None) -> list[SlotPlan]:
    """Slot configurations of the hybrid scheme for one coherence block.

    Slot l serves user l of every cluster: each surface's phase pattern
    aligns the scheduled user's LoS IRS->user direction with the BS
    arrival direction, and cluster k gets the MRT beam toward its own
    AoD with power p_kl (default P/K).
    """
    if cfg.architecture != DISTRIBUTED:
        raise ValidationError("the hybrid scheme runs on the distributed deployment")
    k_clusters, l_users = cfg.k_clusters, cfg.l_users_per_cluster
    if powers is None:
        powers = np.full(k_clusters, cfg.p_max / k_clusters)
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (k_clusters,):
        raise ValidationError(f"need one power per cluster, got shape {powers.shape}")
    if abs(powers.sum() - cfg.p_max) > 1e-9 * max(cfg.p_max, 1e-300):
        raise ValidationError("slot powers must sum to the power budget")

    plans = []
    for l in range(l_users):
        patterns = []
        beams = []
        for k in range(k_clusters):
            pattern = optimal_phase_pattern(
                los_irs_user(cfg, angles, k, l), irs_steering(cfg, angles, k), cfg.quant_bits)
            patterns.append(pattern)
            beams.append(
                mrt_beamformer(angles.bs_aod[k], cfg.m_antennas, powers[k], cfg.d_over_lambda))
        plans.append(
            SlotPlan(
                slot=l,
                users=tuple([l] * k_clusters),
                beamformers=BeamformerSet(beams=tuple(beams), patterns=tuple(patterns)),
                powers=powers.copy(),
            )
        )
    return plans


def slot_sinr(cfg: SystemConfig, realization: ChannelRealization, plan: SlotPlan, k: int) -> float:
    """Receive SINR of cluster k's scheduled user in one slot.

    |h^H w_k|^2 / (sum_{m != k} |h^H w_m|^2 + sigma^2) where h is the
    user's effective channel through its own surface's pattern.
    """
    l = plan.users[k]
    surface = realization.surface_of_cluster(k)
    h = effective_channel(
        realization.irs_user[k][l],
        plan.beamformers.patterns[surface],
        realization.bs_irs[surface],
    )
    powers = [abs(np.vdot(h, w)) ** 2 for w in plan.beamformers.beams]
    signal = powers[k]
    interference = sum(p for m, p in enumerate(powers) if m != k)
    return float(signal / (interference + cfg.noise_power))


def hybrid_sum_rate(cfg: SystemConfig, angles: AngleSet, trials: int, seed=None) -> RateReport:
    """Monte-Carlo ergodic sum rate of the hybrid SDMA-TDMA scheme.

    Averages (1/L) sum_l sum_k log2(1 + SINR_kl) over ``trials`` channel
    realizations.  Trial t draws from derive_trial_seed(seed, t), so the
    estimate is reproducible and independent of evaluation order; the
    reduction is numpy's pairwise mean over the trial axis.
    """
    if trials < 1:
        raise ValidationError("need at least one trial")
    master = cfg.seed if seed is None else int(seed)
    plans = build_slot_plans(cfg, angles)
    k_clusters, l_users = cfg.k_clusters, cfg.l_users_per_cluster
    rates = np.empty((trials, k_clusters, l_users))
    for t in range(trials):
        realization = synth_channels(cfg, angles, derive_trial_seed(master, t))
        for plan in plans:
            for k in range(k_clusters):
                rates[t, k, plan.slot] = math.log2(1.0 + slot_sinr(cfg, realization, plan, k))
    user_rates = rates.mean(axis=0) / l_users
    return RateReport(
        architecture=DISTRIBUTED,
        user_rates=user_rates.ravel(),
        sum_rate=float(user_rates.sum()),
        power_allocation=plans[0].powers,
        notes=(f"monte-carlo-{trials}",),
    )


def correlation_closed_form(delta, m: int, kind: str) -> float:
    """Large-N squared correlation of two users' effective channels.

    Inter-cluster pairs: (2 delta + 1) / ((delta + 1)^2 M).  Intra-cluster
    pairs add delta^2/(delta+1)^2.  The los sentinel gives the limits 0
    and 1.
    """
    if kind not in (INTRA_CLUSTER, INTER_CLUSTER):
        raise ValidationError(f"unknown pair kind {kind!r}")
    eta = _eta(delta)
    inter = (1.0 - eta * eta) / m  # equals (2d+1)/((d+1)^2 m)
    if kind == INTER_CLUSTER:
        return inter
    return inter + eta * eta


def correlation_monte_carlo(
    cfg: SystemConfig, kind: str, trials: int, seed=None
) -> CorrelationEstimate:
    """Estimate E|h1^H h2|^2 / (E||h1||^2 E||h2||^2) for a user pair.

    Per the correlation analysis hypothesis: reflection phases are drawn
    uniformly over [0, 2pi) (continuous, not grid-quantized), BS AoDs
    follow the ideal deployment rule, and the IRS->user links are treated
    as pure LoS regardless of the configured epsilon.  The pair's LoS
    directions are redrawn uniformly every trial, estimating the
    ensemble the closed form describes; an intra pair shares its
    cluster's phase pattern and BS->IRS draw, an inter pair spans two
    independent surfaces.
    """
    if kind not in (INTRA_CLUSTER, INTER_CLUSTER):
        raise ValidationError(f"unknown pair kind {kind!r}")
    if cfg.architecture != DISTRIBUTED:
        raise ValidationError("the correlation analysis is for the distributed deployment")
    if trials < 1:
        raise ValidationError("need at least one trial")
    if kind == INTRA_CLUSTER and cfg.l_users_per_cluster < 2:
        raise ValidationError("an intra-cluster pair needs at least two users per cluster")
    if kind == INTER_CLUSTER and cfg.k_clusters < 2:
        raise ValidationError("an inter-cluster pair needs at least two clusters")
    delta = _common_delta(cfg)
    eta = _eta(delta)
    m = cfg.m_antennas
    master = cfg.seed if seed is None else int(seed)

    counts = cfg.element_counts()
    clusters = (0, 0) if kind == INTRA_CLUSTER else (0, 1)
    aods = ideal_aod_set(m, cfg.k_clusters, cfg.d_over_lambda)
    a_m = [ula_response(m, aods[k], cfg.d_over_lambda) for k in clusters]

    # Path-loss scalars cancel exactly in the ratio of expectations, so the
    # pair is synthesized at unit large-scale gain.
    cross = np.empty(trials)
    norm1 = np.empty(trials)
    norm2 = np.empty(trials)
    for t in range(trials):
        rng = generator_from_seed(derive_trial_seed(master, t))
        h_pair = []
        shared = None
        for j, k in enumerate(clusters):
            n_k = int(counts[k])
            nv, nh = upa_factors(n_k)
            direction = upa_response(nv, nh, rng.uniform(-1, 1), rng.uniform(-1, 1),
                                     cfg.d_over_lambda)
            if j == 0 or kind == INTER_CLUSTER:
                a_s = upa_response(nv, nh, rng.uniform(-1, 1), rng.uniform(-1, 1),
                                   cfg.d_over_lambda)
                g_bar = np.outer(a_s, a_m[j].conj())
                if eta < 1.0:
                    g = math.sqrt(eta) * g_bar + math.sqrt(1.0 - eta) * complex_normal(
                        rng, (n_k, m))
                else:
                    g = g_bar
                theta = rng.uniform(0.0, 2.0 * np.pi, n_k)
                shared = (theta, g)
            theta, g = shared
            h_pair.append(effective_channel(direction, theta, g))
        cross[t] = abs(np.vdot(h_pair[0], h_pair[1])) ** 2
        norm1[t] = np.linalg.norm(h_pair[0]) ** 2
        norm2[t] = np.linalg.norm(h_pair[1]) ** 2

    estimate = float(cross.mean() / (norm1.mean() * norm2.mean()))
    notes = ("low-trial-count",) if trials < LOW_TRIAL_WARNING else ()
    return CorrelationEstimate(
        kind=kind,
        closed_form=correlation_closed_form(delta, m, kind),
        monte_carlo=estimate,
        trials=trials,
        seed=master,
        notes=notes,
    )


def _require_los_users(cfg: SystemConfig, context: str) -> None:
    for row in cfg.rician_irs_user:
        for eps in row:
            if eps != LOS:
                raise ValidationError(
                    f"{context} assumes pure-LoS IRS->user links (epsilon = 'los')")


def ergodic_rate_closed_form(cfg: SystemConfig, k: int, l: int, powers) -> float:
    """Approximate ergodic rate of user (k, l) under the hybrid scheme.

    log2(1 + S/(I + sigma^2)) with the expected signal power
    S = p_kl rho^2 (eta M N_k^2 q(b) + (1 - eta) N_k) and expected
    interference I = rho^2 (1 - eta) N_k sum_{i != k} p_il, where
    eta = delta/(delta+1).  Assumes a common delta and pure-LoS IRS->user
    links; exact in the LoS limit, where the interference vanishes.
    """
    _require_los_users(cfg, "the ergodic-rate closed form")
    delta = _common_delta(cfg)
    eta = _eta(delta)
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (cfg.k_clusters,):
        raise ValidationError("need one slot power per cluster")
    n_k = float(cfg.element_counts()[k])
    gain = cfg.bs_irs_pathloss[k] * cfg.irs_user_pathloss[k][l]
    q = quantization_gain(cfg.quant_bits)
    signal = powers[k] * gain * (eta * cfg.m_antennas * n_k ** 2 * q + (1.0 - eta) * n_k)
    other = float(powers.sum() - powers[k])
    interference = gain * other * (1.0 - eta) * n_k
    return math.log2(1.0 + signal / (interference + cfg.noise_power))


def ergodic_rate_monte_carlo(
    cfg: SystemConfig, k: int, l: int, powers, trials: int, seed=None, angles: AngleSet = None
) -> float:
    """Monte-Carlo ergodic rate of user (k, l) in its slot.

    Draws the user's own cluster channel per trial (interfering beams act
    through that same channel) under the slot's beam configuration, and
    averages log2(1 + SINR).  Deterministic given the seed.
    """
    if trials < 1:
        raise ValidationError("need at least one trial")
    _require_los_users(cfg, "the ergodic-rate Monte Carlo")
    _common_delta(cfg)
    if angles is None:
        angles = default_angles(cfg)
    master = cfg.seed if seed is None else int(seed)
    powers = np.asarray(powers, dtype=float)
    plans = build_slot_plans(cfg, angles, powers=powers)
    plan = plans[l]

    pattern = plan.beamformers.patterns[k]
    direction = los_irs_user(cfg, angles, k, l)
    rho_r = math.sqrt(cfg.irs_user_pathloss[k][l])
    rho_g = math.sqrt(cfg.bs_irs_pathloss[k])
    w_los, w_nlos = (1.0, 0.0) if cfg.rician_bs_irs[k] == LOS else (
        math.sqrt(_eta(cfg.rician_bs_irs[k])),
        math.sqrt(1.0 - _eta(cfg.rician_bs_irs[k])),
    )
    g_bar = los_bs_irs(cfg, angles, k)
    n_k = int(cfg.element_counts()[k])

    values = np.empty(trials)
    for t in range(trials):
        rng = generator_from_seed(derive_trial_seed(master, t))
        g = w_los * g_bar
        if w_nlos > 0.0:
            g = g + w_nlos * complex_normal(rng, (n_k, cfg.m_antennas))
        h = effective_channel(rho_r * direction, pattern, rho_g * g)
        beam_powers = [abs(np.vdot(h, w)) ** 2 for w in plan.beamformers.beams]
        signal = beam_powers[k]
        interference = sum(p for m_, p in enumerate(beam_powers) if m_ != k)
        values[t] = math.log2(1.0 + signal / (interference + cfg.noise_power))
    return float(values.mean())
