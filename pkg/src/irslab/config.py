"""Scenario data model, unit conversions, validation, and seed derivation.

All powers and path losses are stored internally in linear watts / linear
power ratios.  dB and dBm values are accepted only at the configuration
boundary (scenario files and CLI flags), which keeps every downstream
formula unit-free.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, fields

import numpy as np

# Sentinels used throughout: an infinite Rician factor is the explicit
# "los" string (so eta = delta/(delta+1) evaluates to exactly 1), and
# unquantized phases are the "continuous" string.
LOS = "los"
CONTINUOUS = "continuous"

DISTRIBUTED = "distributed"
CENTRALIZED = "centralized"

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15  # golden-ratio increment of SplitMix64


class ValidationError(ValueError):
    """A configuration or argument violates its contract (CLI exit code 2)."""


class InfeasibleError(ValueError):
    """The request is valid but has no solution, e.g. ideal AoDs that do
    not fit in [-1, 1] (CLI exit code 3)."""


class GuardExceededError(ValueError):
    """A brute-force search would exceed its combination guard (CLI exit
    code 4)."""


# ---------------------------------------------------------------------------
# unit conversions
# ---------------------------------------------------------------------------

def db_to_linear(x_db: float) -> float:
    """Convert a dB value to a linear power ratio, 10^(x/10)."""
    if not math.isfinite(x_db):
        raise ValidationError(f"dB value must be finite, got {x_db!r}")
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0 or not math.isfinite(x):
        raise ValidationError(f"linear ratio must be positive and finite, got {x!r}")
    return 10.0 * math.log10(x)


def dbm_to_watts(x_dbm: float) -> float:
    """Convert dBm to watts (0 dBm = 1 mW)."""
    return db_to_linear(x_dbm) * 1e-3


def watts_to_dbm(x_w: float) -> float:
    return linear_to_db(x_w * 1e3)


# ---------------------------------------------------------------------------
# deterministic seeding
# ---------------------------------------------------------------------------

def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Derive an independent 64-bit sub-seed for one trial.

    SplitMix64: the output is the xor-shift/multiply finalizer applied to
    ``master + (index + 1) * GAMMA`` (mod 2^64).  The finalizer is a
    bijection on 64-bit integers, so for a fixed master seed distinct
    trial indices can never collide.  The mapping is a pure function of
    its inputs, which makes Monte-Carlo results independent of trial
    execution order and of how trials are distributed across workers.
    """
    z = (int(master_seed) + (int(trial_index) + 1) * _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def generator_from_seed(seed: int) -> np.random.Generator:
    """PCG64 generator for the given 64-bit seed (the one RNG used here)."""
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


# ---------------------------------------------------------------------------
# scenario types
# ---------------------------------------------------------------------------

def _is_los(value) -> bool:
    return isinstance(value, str) and value == LOS


def rician_weights(factor) -> tuple[float, float]:
    """(LoS, NLoS) amplitude weights sqrt(k/(k+1)), sqrt(1/(k+1)).

    The "los" sentinel gives exactly (1, 0); a factor of 0 gives (0, 1).
    """
    if _is_los(factor):
        return 1.0, 0.0
    f = float(factor)
    if f < 0:
        raise ValidationError(f"Rician factor must be >= 0 or 'los', got {factor!r}")
    return math.sqrt(f / (f + 1.0)), math.sqrt(1.0 / (f + 1.0))


def upa_factors(n: int) -> tuple[int, int]:
    """Most-square (vertical, horizontal) factorization of an element count.

    The vertical size is the largest divisor of n not exceeding sqrt(n);
    primes degenerate to a 1 x n 'planar' array.
    """
    if n < 1:
        raise ValidationError(f"element count must be >= 1, got {n}")
    nv = 1
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            nv = d
    return nv, n // nv


@dataclass(frozen=True)
class SystemConfig:
    """Full scenario description.  Immutable; safe to share across threads."""

    m_antennas: int             # M, BS antennas (ULA)
    k_clusters: int             # K, user clusters
    l_users_per_cluster: int    # L, users per cluster
    n_total_elements: int       # N, total IRS element budget
    quant_bits: object          # b >= 1, or "continuous"
    p_max: float                # transmit power budget, watts
    noise_power: float          # sigma^2, watts
    element_split: tuple        # per-surface element counts, summing to N
    bs_irs_pathloss: tuple      # (rho_g)^2 linear, one per surface
    irs_user_pathloss: tuple    # (rho_r)^2 linear, [cluster][user]
    rician_bs_irs: tuple        # delta per surface, float or "los"
    rician_irs_user: tuple      # epsilon per (cluster, user)
    d_over_lambda: float = 0.5  # spacing over wavelength, BS and IRS alike
    architecture: str = DISTRIBUTED
    seed: int = 0

    def __post_init__(self):
        for name in ("m_antennas", "k_clusters", "l_users_per_cluster", "n_total_elements"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.architecture not in (DISTRIBUTED, CENTRALIZED):
            raise ValidationError(f"unknown architecture {self.architecture!r}")
        if self.quant_bits != CONTINUOUS and int(self.quant_bits) < 1:
            raise ValidationError("quant_bits must be >= 1 or 'continuous'")
        if self.p_max < 0 or self.noise_power <= 0:
            raise ValidationError("p_max must be >= 0 and noise_power > 0")
        if self.d_over_lambda <= 0:
            raise ValidationError("d_over_lambda must be positive")
        n_surfaces = self.k_clusters if self.architecture == DISTRIBUTED else 1
        if len(self.element_split) != n_surfaces:
            raise ValidationError(
                f"element_split has {len(self.element_split)} entries, expected {n_surfaces}")
        if any(int(n) < 1 for n in self.element_split):
            raise ValidationError("every element count must be >= 1")
        if sum(self.element_split) != self.n_total_elements:
            raise ValidationError(
                f"element_split sums to {sum(self.element_split)}, expected {self.n_total_elements}")
        if len(self.bs_irs_pathloss) != n_surfaces or len(self.rician_bs_irs) != n_surfaces:
            raise ValidationError("BS-IRS path loss / Rician entries must match the surface count")
        if len(self.irs_user_pathloss) != self.k_clusters or len(self.rician_irs_user) != self.k_clusters:
            raise ValidationError("IRS-user entries must have one row per cluster")
        for row in list(self.irs_user_pathloss) + list(self.rician_irs_user):
            if len(row) != self.l_users_per_cluster:
                raise ValidationError("IRS-user entries must have one column per user")
        if any(p <= 0 for p in self.bs_irs_pathloss):
            raise ValidationError("path losses must be positive linear power gains")
        for row in self.irs_user_pathloss:
            if any(p <= 0 for p in row):
                raise ValidationError("path losses must be positive linear power gains")
        for f in list(self.rician_bs_irs) + [x for row in self.rician_irs_user for x in row]:
            rician_weights(f)  # raises on negative

    # -- derived views ------------------------------------------------------

    def quantization_levels(self):
        """Number of grid points Q = 2^b, or None for continuous phases."""
        if self.quant_bits == CONTINUOUS:
            return None
        return 2 ** int(self.quant_bits)

    def element_counts(self) -> np.ndarray:
        return np.asarray(self.element_split, dtype=int)

    def concatenated_gains(self) -> np.ndarray:
        """(K, L) array of twin-hop linear power gains (rho_g rho_r)^2."""
        out = np.empty((self.k_clusters, self.l_users_per_cluster))
        for k in range(self.k_clusters):
            g = self.bs_irs_pathloss[k if self.architecture == DISTRIBUTED else 0]
            for l in range(self.l_users_per_cluster):
                out[k, l] = g * self.irs_user_pathloss[k][l]
        return out

    def stable_hash(self) -> str:
        """Short content hash, stable across processes and platforms."""
        parts = []
        for f in fields(self):
            parts.append(f"{f.name}={getattr(self, f.name)!r}")
        digest = hashlib.sha256("|".join(parts).encode()).hexdigest()
        return digest[:16]


@dataclass(frozen=True)
class AngleSet:
    """Directional cosines for every LoS link of one scenario."""

    bs_aod: tuple                # sin(theta_T,k) per cluster
    irs_aoa: tuple               # (cos phi, sin phi sin theta) per cluster
    irs_user_aod: tuple          # [cluster][user] pairs for IRS->user LoS
    centralized_aod: float = 0.0  # sin(theta_T) of the single BS->IRS link

    def __post_init__(self):
        flat = list(self.bs_aod) + [self.centralized_aod]
        for pair in list(self.irs_aoa) + [p for row in self.irs_user_aod for p in row]:
            flat.extend(pair)
        if any(abs(x) > 1.0 + 1e-12 for x in flat):
            raise ValidationError("directional cosines must lie in [-1, 1]")


def make_config(
    m_antennas,
    k_clusters,
    l_users_per_cluster,
    n_total_elements,
    quant_bits=CONTINUOUS,
    p_max=1.0,
    noise_power=1e-12,
    element_split="equal",
    bs_irs_pathloss=1.0,
    irs_user_pathloss=1.0,
    rician_bs_irs=LOS,
    rician_irs_user=LOS,
    d_over_lambda=0.5,
    architecture=DISTRIBUTED,
    seed=0,
) -> SystemConfig:
    """Build a validated SystemConfig, resolving broadcasts and directives.

    Scalars given for per-cluster or per-(cluster, user) fields are
    broadcast; ``element_split="equal"`` splits N over the K surfaces as
    evenly as possible (remainder to the lowest cluster indices).
    """
    K, L, N = int(k_clusters), int(l_users_per_cluster), int(n_total_elements)
    n_surfaces = K if architecture == DISTRIBUTED else 1

    if isinstance(element_split, str):
        if element_split != "equal":
            raise ValidationError(f"unknown element_split directive {element_split!r}")
        base, extra = divmod(N, n_surfaces)
        split = tuple(base + (1 if i < extra else 0) for i in range(n_surfaces))
    else:
        split = tuple(int(n) for n in np.atleast_1d(element_split))

    def per_surface(value):
        arr = np.atleast_1d(np.asarray(value, dtype=object))
        if arr.size == 1:
            return tuple([arr[0]] * n_surfaces)
        return tuple(arr.tolist())

    def per_user(value):
        if np.isscalar(value) or isinstance(value, str):
            return tuple(tuple([value] * L) for _ in range(K))
        rows = [np.atleast_1d(np.asarray(r, dtype=object)) for r in value]
        if len(rows) == 1 and K > 1:
            rows = rows * K
        if len(rows) != K:
            raise ValidationError(f"expected {K} per-cluster rows, got {len(rows)}")
        out = []
        for r in rows:
            if r.size == 1:
                out.append(tuple([r[0]] * L))
            else:
                out.append(tuple(r.tolist()))
        return tuple(out)

    def as_float_rows(rows):
        return tuple(tuple(float(x) for x in r) for r in rows)

    return SystemConfig(
        m_antennas=int(m_antennas),
        k_clusters=K,
        l_users_per_cluster=L,
        n_total_elements=N,
        quant_bits=quant_bits if quant_bits == CONTINUOUS else int(quant_bits),
        p_max=float(p_max),
        noise_power=float(noise_power),
        element_split=split,
        bs_irs_pathloss=tuple(float(x) for x in per_surface(bs_irs_pathloss)),
        irs_user_pathloss=as_float_rows(per_user(irs_user_pathloss)),
        rician_bs_irs=tuple(x if _is_los(x) else float(x) for x in per_surface(rician_bs_irs)),
        rician_irs_user=tuple(
            tuple(x if _is_los(x) else float(x) for x in row) for row in per_user(rician_irs_user)
        ),
        d_over_lambda=float(d_over_lambda),
        architecture=architecture,
        seed=int(seed),
    )


def validate_homogeneous(*configs: SystemConfig, rtol: float = 1e-12) -> bool:
    """Check the homogeneous-channel assumption over one or more scenarios.

    True iff every concatenated twin-hop gain (rho_g rho_r)^2 -- across
    clusters, users, and all the configs given (e.g. a distributed and a
    centralized variant of the same deployment) -- agrees within ``rtol``.
    A mismatch is a legal False, not an error.
    """
    if not configs:
        raise ValidationError("validate_homogeneous needs at least one config")
    products = np.concatenate([cfg.concatenated_gains().ravel() for cfg in configs])
    ref = products[0]
    return bool(np.all(np.abs(products - ref) <= rtol * abs(ref)))


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

_SECTION_FIELDS = {
    "system": (
        "m_antennas", "k_clusters", "l_users_per_cluster", "n_total_elements",
        "quant_bits", "p_max", "noise_power", "element_split", "d_over_lambda",
        "architecture", "seed",
    ),
    "pathloss": ("bs_irs_pathloss", "irs_user_pathloss"),
    "rician": ("rician_bs_irs", "rician_irs_user"),
    "angles": ("bs_aod", "irs_aoa", "irs_user_aod", "centralized_aod"),
    "experiment": ("trials", "grid_points", "start", "stop", "step"),
}


def _parse_power(text: str) -> float:
    t = text.strip().lower()
    if t.endswith("dbm"):
        return dbm_to_watts(float(t[:-3]))
    if t.endswith("w"):
        return float(t[:-1])
    return float(t)


def _parse_gain(text: str) -> float:
    t = text.strip().lower()
    if t.endswith("db"):
        return db_to_linear(float(t[:-2]))
    return float(t)


def _parse_rician(text: str):
    t = text.strip().lower()
    return LOS if t == LOS else float(t)


def _split_list(text: str, item):
    return [item(tok) for tok in text.split(",") if tok.strip()]


def _split_rows(text: str, item):
    return [_split_list(row, item) for row in text.split(";") if row.strip()]


def load_scenario(path) -> tuple[SystemConfig, dict]:
    """Parse a scenario file into a SystemConfig plus experiment extras.

    The format is INI-style with sections [system], [pathloss], [rician],
    [angles], and [experiment]; keys are named exactly as the SystemConfig
    fields.  Unknown sections or keys are an error: scenario files are
    parsed strictly so typos cannot silently fall back to defaults.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise ValidationError(f"cannot read scenario file {path!r}")

    for section in parser.sections():
        if section not in _SECTION_FIELDS:
            raise ValidationError(f"unknown section [{section}] in {path!r}")
        for key in parser[section]:
            if key not in _SECTION_FIELDS[section]:
                raise ValidationError(f"unknown key {key!r} in section [{section}]")

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    sys_kw = {}
    for key in ("m_antennas", "k_clusters", "l_users_per_cluster", "n_total_elements", "seed"):
        val = get("system", key)
        if val is not None:
            sys_kw[key] = int(val)
    if get("system", "quant_bits") is not None:
        raw = get("system", "quant_bits").strip()
        sys_kw["quant_bits"] = CONTINUOUS if raw == CONTINUOUS else int(raw)
    if get("system", "p_max") is not None:
        sys_kw["p_max"] = _parse_power(get("system", "p_max"))
    if get("system", "noise_power") is not None:
        sys_kw["noise_power"] = _parse_power(get("system", "noise_power"))
    if get("system", "d_over_lambda") is not None:
        sys_kw["d_over_lambda"] = float(get("system", "d_over_lambda"))
    if get("system", "architecture") is not None:
        sys_kw["architecture"] = get("system", "architecture").strip().lower()
    if get("system", "element_split") is not None:
        raw = get("system", "element_split").strip()
        sys_kw["element_split"] = raw if raw == "equal" else _split_list(raw, int)

    if get("pathloss", "bs_irs_pathloss") is not None:
        sys_kw["bs_irs_pathloss"] = _split_list(get("pathloss", "bs_irs_pathloss"), _parse_gain)
    if get("pathloss", "irs_user_pathloss") is not None:
        sys_kw["irs_user_pathloss"] = _split_rows(get("pathloss", "irs_user_pathloss"), _parse_gain)
    if get("rician", "rician_bs_irs") is not None:
        sys_kw["rician_bs_irs"] = _split_list(get("rician", "rician_bs_irs"), _parse_rician)
    if get("rician", "rician_irs_user") is not None:
        sys_kw["rician_irs_user"] = _split_rows(get("rician", "rician_irs_user"), _parse_rician)

    try:
        cfg = make_config(**sys_kw)
    except TypeError as exc:
        raise ValidationError(f"scenario file is missing required fields: {exc}") from exc

    extras = {}
    if parser.has_section("angles"):
        for key in parser["angles"]:
            extras.setdefault("angles", {})[key] = parser.get("angles", key)
    if parser.has_section("experiment"):
        for key in parser["experiment"]:
            extras[key] = parser.get("experiment", key)
    return cfg, extras
