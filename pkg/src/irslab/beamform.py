"""Passive-beamforming optimization, MRT beams, and a brute-force oracle.

Gains are kept in linear scale throughout; logs are taken only when rates
are computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import CONTINUOUS, GuardExceededError, ValidationError
from .channel import PhasePattern, _phases_of, ula_response

BRUTE_FORCE_GUARD = 2 ** 20


def quantization_gain(bits) -> float:
    """Mean-alignment power factor ((2^b/pi) sin(pi/2^b))^2 of b-bit phases.

    Continuous phases give exactly 1.  The factor is the squared mean of
    cos(r) for a residual r uniform on [-pi/2^b, pi/2^b].
    """
    if bits == CONTINUOUS:
        return 1.0
    b = int(bits)
    if b < 1:
        raise ValidationError(f"quantization bits must be >= 1, got {bits!r}")
    q = 2 ** b
    return (q / math.pi * math.sin(math.pi / q)) ** 2


def optimal_phase_pattern(h_r, a_s, bits) -> PhasePattern:
    """Per-element phase alignment of h_r^H diag(e^j theta) a_s.

    The unquantized optimum is theta_n = arg(h_r[n]) - arg(a_s[n]); with b
    bits each phase snaps to the nearest point of {2 pi q / 2^b}, breaking
    exact halfway ties toward the lower index.  Every residual then lies
    within +-pi/2^b.  Zero-magnitude entries have no defined target; their
    phase is taken as 0 and counted in ``zero_flags``.
    """
    h_r = np.asarray(h_r)
    a_s = np.asarray(a_s)
    if h_r.shape != a_s.shape:
        raise ValidationError(f"length mismatch: {h_r.shape} vs {a_s.shape}")
    zero = (h_r == 0) | (a_s == 0)
    target = np.where(zero, 0.0, np.angle(h_r) - np.angle(a_s))
    if bits == CONTINUOUS:
        return PhasePattern(phases=target, bits=CONTINUOUS, zero_flags=int(zero.sum()))
    if int(bits) < 1:
        raise ValidationError(f"quantization bits must be >= 1, got {bits!r}")
    q_levels = 2 ** int(bits)
    # ceil(x - 1/2) rounds to nearest with halfway ties toward the lower index
    idx = np.ceil(target * q_levels / (2 * np.pi) - 0.5).astype(int) % q_levels
    return PhasePattern(
        phases=2 * np.pi * idx / q_levels,
        bits=int(bits),
        indices=idx,
        zero_flags=int(zero.sum()),
    )


def passive_gain(h_r, theta, a_s) -> float:
    """Reflected power gain |h_r^H diag(e^j theta) a_s|^2."""
    h_r = np.asarray(h_r)
    a_s = np.asarray(a_s)
    phases = _phases_of(theta)
    if not (h_r.shape == a_s.shape == phases.shape):
        raise ValidationError(
            f"dimension mismatch: h_r {h_r.shape}, theta {phases.shape}, a_s {a_s.shape}")
    return float(abs(np.sum(h_r.conj() * np.exp(1j * phases) * a_s)) ** 2)


def brute_force_phase_search(h_r, a_s, bits, guard: int = BRUTE_FORCE_GUARD):
    """Exact maximizer of passive_gain over the full Q^N phase grid.

    Oracle for small instances: enumerates every index vector in
    lexicographic order and keeps the first maximizer, so ties resolve to
    the lexicographically smallest pattern.  Refuses instances with more
    than ``guard`` combinations.

    Returns (PhasePattern, gain).
    """
    if bits == CONTINUOUS:
        raise ValidationError("brute force needs a finite quantization grid")
    h_r = np.asarray(h_r)
    a_s = np.asarray(a_s)
    n = len(h_r)
    q_levels = 2 ** int(bits)
    total = q_levels ** n
    if total > guard:
        raise GuardExceededError(
            f"search space {q_levels}^{n} = {total} exceeds the guard of {guard}")
    coeff = h_r.conj() * a_s
    weights = q_levels ** np.arange(n - 1, -1, -1)

    best_gain = -1.0
    best_idx = None
    chunk = 1 << 16
    for start in range(0, total, chunk):
        pats = np.arange(start, min(start + chunk, total))
        digits = (pats[:, None] // weights[None, :]) % q_levels
        gains = np.abs(np.exp(2j * np.pi * digits / q_levels) @ coeff) ** 2
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            best_gain = float(gains[i])
            best_idx = digits[i].copy()

    pattern = PhasePattern(
        phases=2 * np.pi * best_idx / q_levels, bits=int(bits), indices=best_idx)
    return pattern, best_gain


def mrt_beamformer(sin_aod: float, m: int, power: float, d_over_lambda: float = 0.5) -> np.ndarray:
    """Maximum-ratio transmit beam sqrt(power) a_M(sin_aod)/sqrt(m).

    The squared norm equals ``power`` exactly.
    """
    if power < 0:
        raise ValidationError(f"beam power must be >= 0, got {power}")
    return np.sqrt(power / m) * ula_response(m, sin_aod, d_over_lambda)


@dataclass(frozen=True)
class BeamformerSet:
    """Per-cluster (or per-slot) BS beams plus one phase pattern per IRS."""

    beams: tuple          # M-vectors, one per cluster; ||w_k||^2 = p_k
    patterns: tuple       # PhasePattern per surface

    def total_power(self) -> float:
        return float(sum(np.linalg.norm(w) ** 2 for w in self.beams))

    def check_budget(self, p_max: float, rtol: float = 1e-9) -> None:
        total = self.total_power()
        if total > p_max * (1.0 + rtol):
            raise ValidationError(
                f"beam powers sum to {total:.6g}, exceeding the budget {p_max:.6g}")
