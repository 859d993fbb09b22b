"""Array responses and Rician/LoS channel synthesis for both architectures.

Conventions: channels toward a user are stored as column vectors ``h``
whose conjugate transpose ``h^H`` is the physical 1 x N (or 1 x M) row.
A BS->IRS matrix has shape (elements, antennas).  All functions are pure;
Monte-Carlo callers pass distinct derived seeds per trial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import (
    DISTRIBUTED,
    AngleSet,
    InfeasibleError,
    SystemConfig,
    ValidationError,
    derive_trial_seed,
    generator_from_seed,
    rician_weights,
    upa_factors,
)

_ANGLE_STREAM = 0x0A17  # fixed sub-stream index for config-derived angle draws


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circular complex Gaussian CN(0, 1) samples.

    Box-Muller over the generator's uniforms: sqrt(-ln u1) * exp(2j pi u2).
    Spelled out (rather than relying on the generator's own normal method)
    so that realizations are bit-reproducible across platforms and numpy
    releases for a given bit-generator stream.
    """
    u1 = 1.0 - rng.random(shape)  # in (0, 1]: keeps the log finite
    u2 = rng.random(shape)
    return np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)


def ula_response(n: int, x: float, d_over_lambda: float = 0.5) -> np.ndarray:
    """Uniform-linear-array response for directional cosine ``x``.

    Entry i is exp(j 2 pi (d/lambda) x i), i = 0..n-1; the squared norm is
    exactly n.
    """
    if n < 1:
        raise ValidationError(f"array size must be >= 1, got {n}")
    if abs(x) > 1.0 + 1e-12:
        raise ValidationError(f"directional cosine out of [-1, 1]: {x}")
    return np.exp(2j * np.pi * d_over_lambda * x * np.arange(n))


def upa_response(nv: int, nh: int, x: float, y: float, d_over_lambda: float = 0.5) -> np.ndarray:
    """Planar-array response: Kronecker product of two ULA responses."""
    return np.kron(ula_response(nv, x, d_over_lambda), ula_response(nh, y, d_over_lambda))


def steering_inner_product(m: int, x1: float, x2: float, d_over_lambda: float = 0.5) -> complex:
    """a_M^H(x1) . a_M(x2) between two BS steering directions.

    Its magnitude follows the Dirichlet kernel |sin(pi d/l M D) / sin(pi d/l D)|
    with D = x1 - x2, and equals m when the directions coincide.
    """
    a1 = ula_response(m, x1, d_over_lambda)
    a2 = ula_response(m, x2, d_over_lambda)
    return complex(np.vdot(a1, a2))


def ideal_aod_set(m: int, k: int, d_over_lambda: float = 0.5) -> np.ndarray:
    """BS AoD sines making the k cluster steering vectors mutually orthogonal.

    Adjacent sines differ by 1/(m d_over_lambda), i.e. consecutive integer
    multiples of lambda/(d M) between clusters, which nulls every pairwise
    steering inner product.  The set is centered around 0 to maximize the
    feasibility margin; it must fit inside [-1, 1].
    """
    if k < 1:
        raise ValidationError("need at least one cluster")
    if k > m:
        raise ValidationError(f"ideal deployment needs k <= m, got k={k}, m={m}")
    spacing = 1.0 / (m * d_over_lambda)
    span = (k - 1) * spacing
    if span > 2.0 + 1e-12:
        raise InfeasibleError(
            f"{k} orthogonal AoDs with spacing {spacing:.4f} do not fit in [-1, 1]")
    return -span / 2.0 + spacing * np.arange(k)


@dataclass(frozen=True)
class PhasePattern:
    """Reflection phases of one IRS (the diagonal of its pattern matrix).

    For b-bit quantization every phase is a grid point 2 pi q / 2^b and
    ``indices`` holds the integers q; continuous patterns carry arbitrary
    phases and no indices.  ``zero_flags`` counts elements whose target
    phase was undefined (zero-magnitude channel entry, treated as phase 0).
    """

    phases: np.ndarray
    bits: object = "continuous"
    indices: np.ndarray | None = None
    zero_flags: int = 0

    def __len__(self):
        return len(self.phases)

    def unit_gains(self) -> np.ndarray:
        """The diagonal entries exp(j theta_n); always unit modulus."""
        return np.exp(1j * np.asarray(self.phases))


def _phases_of(theta) -> np.ndarray:
    if isinstance(theta, PhasePattern):
        return np.asarray(theta.phases, dtype=float)
    return np.asarray(theta, dtype=float)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of all channel matrices for one architecture.

    ``bs_irs[s]`` is the (N_s x M) matrix of surface s (K surfaces when
    distributed, a single one when centralized); ``irs_user[k][l]`` is the
    length-N_s vector whose conjugate transpose is the IRS->user row of
    user l in cluster k (s = k when distributed, s = 0 when centralized).
    """

    architecture: str
    bs_irs: tuple
    irs_user: tuple
    seed: int
    config_hash: str

    def surface_of_cluster(self, k: int) -> int:
        return k if self.architecture == DISTRIBUTED else 0


def default_angles(cfg: SystemConfig, seed=None, ideal_bs: bool = True) -> AngleSet:
    """Build an AngleSet for a scenario.

    BS AoDs follow the ideal deployment rule by default; IRS AoAs and the
    per-user IRS->user AoDs are drawn uniformly over directional cosines
    from a fixed sub-stream of the scenario seed, so the same config always
    carries the same geometry.
    """
    rng = generator_from_seed(
        derive_trial_seed(cfg.seed if seed is None else seed, _ANGLE_STREAM))
    K, L = cfg.k_clusters, cfg.l_users_per_cluster
    if ideal_bs:
        bs = tuple(ideal_aod_set(cfg.m_antennas, K, cfg.d_over_lambda))
    else:
        bs = tuple(rng.uniform(-1, 1, K))
    aoa = tuple((rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(K))
    user = tuple(
        tuple((rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(L)) for _ in range(K))
    return AngleSet(
        bs_aod=bs,
        irs_aoa=aoa,
        irs_user_aod=user,
        centralized_aod=float(rng.uniform(-1, 1)),
    )


def los_bs_irs(cfg: SystemConfig, angles: AngleSet, surface: int) -> np.ndarray:
    """Unit-amplitude LoS BS->IRS matrix a_S(aoa) a_M^H(aod) of one surface."""
    n = cfg.element_counts()[surface]
    nv, nh = upa_factors(int(n))
    if cfg.architecture == DISTRIBUTED:
        aod = angles.bs_aod[surface]
        aoa = angles.irs_aoa[surface]
    else:
        aod = angles.centralized_aod
        aoa = angles.irs_aoa[0]
    a_s = upa_response(nv, nh, aoa[0], aoa[1], cfg.d_over_lambda)
    a_m = ula_response(cfg.m_antennas, aod, cfg.d_over_lambda)
    return np.outer(a_s, a_m.conj())


def los_irs_user(cfg: SystemConfig, angles: AngleSet, k: int, l: int) -> np.ndarray:
    """Unit-amplitude LoS IRS->user vector (column) for user l of cluster k."""
    surface = k if cfg.architecture == DISTRIBUTED else 0
    n = cfg.element_counts()[surface]
    nv, nh = upa_factors(int(n))
    pair = angles.irs_user_aod[k][l]
    return upa_response(nv, nh, pair[0], pair[1], cfg.d_over_lambda)


def irs_steering(cfg: SystemConfig, angles: AngleSet, surface: int) -> np.ndarray:
    """The IRS-side arrival response a_S of one surface (alignment target)."""
    n = cfg.element_counts()[surface]
    nv, nh = upa_factors(int(n))
    aoa = angles.irs_aoa[surface if cfg.architecture == DISTRIBUTED else 0]
    return upa_response(nv, nh, aoa[0], aoa[1], cfg.d_over_lambda)


def synth_channels(cfg: SystemConfig, angles: AngleSet, seed: int) -> ChannelRealization:
    """Draw one Rician realization of every channel in the scenario.

    LoS parts are steering-vector outer products; NLoS entries are i.i.d.
    CN(0, 1), mixed with weights sqrt(k/(k+1)) and sqrt(1/(k+1)) and scaled
    by the amplitude path loss rho.  Draw order is fixed (all BS->IRS
    matrices by surface index, then IRS->user vectors in (cluster, user)
    order) so a given (config, angles, seed) is bit-reproducible.  The
    "los" sentinel suppresses the NLoS draw entirely, making each BS->IRS
    matrix exactly rank one.
    """
    rng = generator_from_seed(seed)
    n_surfaces = cfg.k_clusters if cfg.architecture == DISTRIBUTED else 1
    counts = cfg.element_counts()

    g_mats = []
    for s in range(n_surfaces):
        rho = np.sqrt(cfg.bs_irs_pathloss[s])
        w_los, w_nlos = rician_weights(cfg.rician_bs_irs[s])
        g = w_los * los_bs_irs(cfg, angles, s)
        if w_nlos > 0.0:
            g = g + w_nlos * complex_normal(rng, (int(counts[s]), cfg.m_antennas))
        g_mats.append(rho * g)

    h_rows = []
    for k in range(cfg.k_clusters):
        surface = k if cfg.architecture == DISTRIBUTED else 0
        row = []
        for l in range(cfg.l_users_per_cluster):
            rho = np.sqrt(cfg.irs_user_pathloss[k][l])
            w_los, w_nlos = rician_weights(cfg.rician_irs_user[k][l])
            h = w_los * los_irs_user(cfg, angles, k, l)
            if w_nlos > 0.0:
                h = h + w_nlos * complex_normal(rng, int(counts[surface]))
            row.append(rho * h)
        h_rows.append(tuple(row))

    return ChannelRealization(
        architecture=cfg.architecture,
        bs_irs=tuple(g_mats),
        irs_user=tuple(h_rows),
        seed=int(seed),
        config_hash=cfg.stable_hash(),
    )


def effective_channel(h_r: np.ndarray, theta, g: np.ndarray) -> np.ndarray:
    """BS->user channel through a reflection pattern.

    Returns the column h such that h^H = h_r^H diag(exp(j theta)) G, which
    is the 1 x M row seen by the user.
    """
    h_r = np.asarray(h_r)
    phases = _phases_of(theta)
    g = np.asarray(g)
    if h_r.shape[0] != phases.shape[0] or g.shape[0] != h_r.shape[0]:
        raise ValidationError(
            f"dimension mismatch: h_r {h_r.shape}, theta {phases.shape}, g {g.shape}")
    row = (h_r.conj() * np.exp(1j * phases)) @ g
    return row.conj()


def dump_realization(realization: ChannelRealization, path) -> None:
    """Write a realization as plain text, one complex entry 'a+bi' per cell.

    Debug format: blocks are separated by a blank line and announced by a
    '# bs_irs <surface>' or '# irs_user <cluster> <user>' line; rows are
    comma-separated, row-major.
    """
    def fmt(z):
        return f"{z.real:.17g}{z.imag:+.17g}i"

    with open(path, "w") as fh:
        fh.write(f"# architecture {realization.architecture}\n")
        fh.write(f"# seed {realization.seed}\n")
        fh.write(f"# config {realization.config_hash}\n")
        for s, g in enumerate(realization.bs_irs):
            fh.write(f"\n# bs_irs {s}\n")
            for row in np.atleast_2d(g):
                fh.write(",".join(fmt(z) for z in row) + "\n")
        for k, row_k in enumerate(realization.irs_user):
            for l, h in enumerate(row_k):
                fh.write(f"\n# irs_user {k} {l}\n")
                fh.write(",".join(fmt(z) for z in h) + "\n")
