"""Scenario runner: maps subcommands to named experiment presets as CSV sweeps.

Every run embeds the resolved configuration and master seed in ``#``
metadata lines, and all randomness flows through per-trial derived seeds,
so re-running a command with the same inputs reproduces the data rows
byte for byte.

Exit codes: 0 success, 2 validation error, 3 infeasible geometry,
4 search guard exceeded.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import allocation, capacity, scheduler
from .beamform import quantization_gain
from .channel import default_angles, ideal_aod_set
from .config import (
    CENTRALIZED,
    CONTINUOUS,
    DISTRIBUTED,
    AngleSet,
    GuardExceededError,
    InfeasibleError,
    SystemConfig,
    ValidationError,
    dbm_to_watts,
    db_to_linear,
    load_scenario,
    make_config,
    watts_to_dbm,
)

SWEEP_VARIABLES = ("power_dbm", "n_elements", "rician_delta", "pathloss_gap_db")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a variable, its range, a base scenario, and the schemes."""

    variable: str
    start: float
    stop: float
    step: float
    base: SystemConfig
    schemes: tuple
    trials: int = 10000
    label: str = ""
    angles: AngleSet | None = None  # explicit geometry; None draws from the seed

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValidationError(f"unknown sweep variable {self.variable!r}")
        if self.step <= 0 or self.start > self.stop or not self.schemes:
            raise ValidationError("sweep needs step > 0, start <= stop, and schemes")

    def values(self) -> np.ndarray:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


# ---------------------------------------------------------------------------
# preset scenarios (homogeneous and heterogeneous experiment baselines)
# ---------------------------------------------------------------------------

def _homogeneous_base(**over) -> SystemConfig:
    kw = dict(
        m_antennas=5,
        k_clusters=4,
        l_users_per_cluster=1,
        n_total_elements=200,
        quant_bits=CONTINUOUS,
        p_max=dbm_to_watts(30),
        noise_power=dbm_to_watts(-90),
        bs_irs_pathloss=db_to_linear(-70),
        irs_user_pathloss=db_to_linear(-70),
        rician_bs_irs="los",
        rician_irs_user="los",
        architecture=DISTRIBUTED,
        seed=0,
    )
    kw.update(over)
    return make_config(**kw)


def _hetero_base(gap_db: float = 10.0, **over) -> SystemConfig:
    user_loss = [[db_to_linear(-70)], [db_to_linear(-70 - gap_db)]]
    return _homogeneous_base(
        k_clusters=2, irs_user_pathloss=user_loss, **over)


PRESETS = {
    "fig2": dict(subcommand="sweep-power", variable="power_dbm",
                 start=10, stop=40, step=2,
                 schemes=("dist-opt", "cent-opt", "dist-tdma")),
    "fig3": dict(subcommand="sweep-elements", variable="n_elements",
                 start=10, stop=600, step=10,
                 schemes=("dist-opt", "cent-opt", "dist-tdma")),
    "fig4": dict(subcommand="threshold-map"),
    "fig5": dict(subcommand="sweep-elements", variable="n_elements",
                 start=50, stop=600, step=50, hetero=True,
                 schemes=("alloc-minrate-opt", "alloc-minrate-eq", "alloc-minrate-cent")),
    "fig6": dict(subcommand="alloc-minrate", variable="pathloss_gap_db",
                 start=0, stop=16, step=2, hetero=True,
                 schemes=("alloc-minrate-opt", "alloc-minrate-eq", "alloc-minrate-cent")),
    "fig7": dict(subcommand="sweep-elements", variable="n_elements",
                 start=50, stop=600, step=50, hetero=True,
                 schemes=("alloc-sumrate-opt", "alloc-sumrate-eq", "alloc-sumrate-cent")),
    "fig8": dict(subcommand="alloc-sumrate", variable="pathloss_gap_db",
                 start=0, stop=16, step=2, hetero=True,
                 schemes=("alloc-sumrate-opt", "alloc-sumrate-eq", "alloc-sumrate-cent")),
    "fig9": dict(subcommand="sweep-rician", variable="rician_delta",
                 start=1, stop=19, step=3, hetero=False, k_clusters=2,
                 schemes=("hybrid-cf", "hybrid-mc")),
}


def _to_architecture(cfg: SystemConfig, architecture: str) -> SystemConfig:
    """The same deployment scenario under the other architecture.

    The BS-side path loss and Rician factor of surface 0 carry over to the
    single centralized surface, so concatenated gains are preserved
    whenever the BS-IRS losses are common across clusters.
    """
    if cfg.architecture == architecture:
        return cfg
    if architecture == CENTRALIZED:
        return replace(
            cfg,
            architecture=CENTRALIZED,
            element_split=(cfg.n_total_elements,),
            bs_irs_pathloss=(cfg.bs_irs_pathloss[0],),
            rician_bs_irs=(cfg.rician_bs_irs[0],),
        )
    base, extra = divmod(cfg.n_total_elements, cfg.k_clusters)
    return replace(
        cfg,
        architecture=DISTRIBUTED,
        element_split=tuple(
            base + (1 if i < extra else 0) for i in range(cfg.k_clusters)),
        bs_irs_pathloss=tuple([cfg.bs_irs_pathloss[0]] * cfg.k_clusters),
        rician_bs_irs=tuple([cfg.rician_bs_irs[0]] * cfg.k_clusters),
    )


# ---------------------------------------------------------------------------
# scheme evaluators
# ---------------------------------------------------------------------------

def _centralized_single_user_rates(cfg: SystemConfig) -> np.ndarray:
    """Full-power TDMA slot rate of each user under the centralized surface."""
    cent = _to_architecture(cfg, CENTRALIZED)
    q = quantization_gain(cent.quant_bits)
    gains = cent.concatenated_gains()[:, -1]
    snr = cent.p_max * cent.m_antennas * cent.n_total_elements ** 2 * gains * q / cent.noise_power
    return np.log2(1.0 + snr)


def parse_angles(cfg: SystemConfig, raw: dict) -> AngleSet:
    """AngleSet from a scenario file's [angles] section.

    Missing keys fall back to the seed-derived defaults; ``bs_aod`` accepts
    the "ideal" directive.  Pair-valued fields use "x:y" pairs, commas
    between users, semicolons between clusters.
    """
    defaults = default_angles(cfg)
    kw = {
        "bs_aod": defaults.bs_aod,
        "irs_aoa": defaults.irs_aoa,
        "irs_user_aod": defaults.irs_user_aod,
        "centralized_aod": defaults.centralized_aod,
    }
    if "bs_aod" in raw:
        text = raw["bs_aod"].strip()
        if text != "ideal":
            kw["bs_aod"] = tuple(float(t) for t in text.split(",") if t.strip())
    if "irs_aoa" in raw:
        kw["irs_aoa"] = tuple(
            tuple(float(t) for t in row.split(","))
            for row in raw["irs_aoa"].split(";") if row.strip())
    if "irs_user_aod" in raw:
        kw["irs_user_aod"] = tuple(
            tuple(
                tuple(float(x) for x in pair.split(":"))
                for pair in row.split(",") if pair.strip())
            for row in raw["irs_user_aod"].split(";") if row.strip())
    if "centralized_aod" in raw:
        kw["centralized_aod"] = float(raw["centralized_aod"])
    if len(kw["bs_aod"]) != cfg.k_clusters or len(kw["irs_user_aod"]) != cfg.k_clusters:
        raise ValidationError("angle entries must have one row per cluster")
    if any(len(row) != cfg.l_users_per_cluster for row in kw["irs_user_aod"]):
        raise ValidationError("irs_user_aod needs one pair per user")
    return AngleSet(**kw)


def _evaluate_scheme(scheme: str, cfg: SystemConfig, trials: int, angles=None):
    """(objective, per-user rates) of one named scheme on one scenario."""
    if scheme == "dist-opt":
        report = capacity.distributed_sum_rate(_to_architecture(cfg, DISTRIBUTED))
        return report.sum_rate, report.user_rates
    if scheme == "cent-opt":
        report = capacity.centralized_sum_rate(_to_architecture(cfg, CENTRALIZED))
        return report.sum_rate, report.user_rates
    if scheme == "dist-tdma":
        report = capacity.distributed_tdma_sum_rate(_to_architecture(cfg, DISTRIBUTED))
        return report.sum_rate, report.user_rates
    if scheme == "alloc-minrate-opt":
        result = allocation.maxmin_allocation(cfg)
        rates = np.log2(1.0 + result.user_snrs)
        return float(rates.min()), rates
    if scheme == "alloc-minrate-eq":
        counts = allocation.round_elements(
            np.full(cfg.k_clusters, cfg.n_total_elements / cfg.k_clusters),
            cfg.n_total_elements)
        gammas = np.array([allocation.snr_coefficient(cfg, k) for k in range(cfg.k_clusters)])
        powers, common = allocation.equalizing_powers(gammas, counts, cfg.p_max)
        rates = np.log2(1.0 + powers * gammas * counts.astype(float) ** 2)
        return float(rates.min()), rates
    if scheme == "alloc-minrate-cent":
        single = _centralized_single_user_rates(cfg)
        # max-min optimal time shares are proportional to 1/R_k
        min_rate = 1.0 / np.sum(1.0 / single)
        return float(min_rate), np.full(cfg.k_clusters, float(min_rate))
    if scheme == "alloc-sumrate-opt":
        result = allocation.exhaustive_element_search(cfg, allocation.SUM_RATE)
        return result.objective, np.log2(1.0 + result.user_snrs)
    if scheme == "alloc-sumrate-eq":
        result = allocation.sumrate_equal_allocation(cfg)
        return result.objective, np.log2(1.0 + result.user_snrs)
    if scheme == "alloc-sumrate-cent":
        single = _centralized_single_user_rates(cfg)
        k_best = int(np.argmax(single))
        rates = np.zeros(cfg.k_clusters)
        rates[k_best] = single[k_best]
        return float(single[k_best]), rates
    if scheme == "hybrid-cf":
        powers = np.full(cfg.k_clusters, cfg.p_max / cfg.k_clusters)
        rates = np.array([
            scheduler.ergodic_rate_closed_form(cfg, k, l, powers) / cfg.l_users_per_cluster
            for k in range(cfg.k_clusters)
            for l in range(cfg.l_users_per_cluster)
        ])
        return float(rates.sum()), rates
    if scheme == "hybrid-mc":
        geometry = angles if angles is not None else default_angles(cfg)
        report = scheduler.hybrid_sum_rate(cfg, geometry, trials, seed=cfg.seed)
        return report.sum_rate, report.user_rates
    raise ValidationError(
        f"unknown scheme {scheme!r}; valid ids: dist-opt, cent-opt, dist-tdma, "
        "alloc-minrate-opt, alloc-minrate-eq, alloc-minrate-cent, alloc-sumrate-opt, "
        "alloc-sumrate-eq, alloc-sumrate-cent, hybrid-cf, hybrid-mc")


def _apply_sweep_value(spec: SweepSpec, value: float) -> SystemConfig:
    cfg = spec.base
    if spec.variable == "power_dbm":
        return replace(cfg, p_max=dbm_to_watts(value))
    if spec.variable == "n_elements":
        n = int(round(value))
        base, extra = divmod(n, len(cfg.element_split))
        return replace(
            cfg,
            n_total_elements=n,
            element_split=tuple(
                base + (1 if i < extra else 0) for i in range(len(cfg.element_split))),
        )
    if spec.variable == "rician_delta":
        return replace(
            cfg, rician_bs_irs=tuple([float(value)] * len(cfg.rician_bs_irs)))
    # pathloss_gap_db: cluster 0 stays put, later clusters drop by the gap
    rows = [cfg.irs_user_pathloss[0]]
    for k in range(1, cfg.k_clusters):
        rows.append(tuple(
            cfg.irs_user_pathloss[0][l] * db_to_linear(-value)
            for l in range(cfg.l_users_per_cluster)))
    return replace(cfg, irs_user_pathloss=tuple(rows))


def run_sweep(spec: SweepSpec):
    """Evaluate every scheme at every swept value.

    Returns (header, rows); one row per (value, scheme), with the
    objective, per-user rates, and the seed that produced the point.
    """
    n_users = spec.base.k_clusters * spec.base.l_users_per_cluster
    header = ["swept_value", "scheme", "objective"] + [
        f"rate_u{i + 1}" for i in range(n_users)] + ["seed"]
    rows = []
    for value in spec.values():
        cfg = _apply_sweep_value(spec, value)
        for scheme in spec.schemes:
            objective, rates = _evaluate_scheme(scheme, cfg, spec.trials, spec.angles)
            rates = list(np.asarray(rates, dtype=float).ravel())
            rates += [0.0] * (n_users - len(rates))
            rows.append(
                [_num(value), scheme, _num(objective)]
                + [_num(r) for r in rates]
                + [str(cfg.seed)]
            )
    return header, rows


def run_threshold_map(base: SystemConfig, k_range, b_range, p_dbm_range):
    """Threshold table: exact high-SNR N and empirical crossover per combo."""
    header = ["k_clusters", "bits", "p_dbm", "n_th_ceil", "crossover_n"]
    rows = []
    notes = []
    for k in k_range:
        if k < 2:
            notes.append(f"# skipped k={k}: the architectures coincide at K = 1")
            continue
        for bits in b_range:
            for p_dbm in p_dbm_range:
                cfg = replace(
                    _to_architecture(base, DISTRIBUTED),
                    quant_bits=bits if bits == CONTINUOUS else int(bits),
                    p_max=dbm_to_watts(p_dbm),
                )
                cfg = _resize_clusters(cfg, int(k))
                report = capacity.threshold_report(cfg)
                crossover = capacity.sum_rate_crossover(cfg)
                rows.append([
                    str(k), str(bits), _num(p_dbm),
                    str(math.ceil(report.n_th)), _num(crossover),
                ])
    return header, rows, notes


def _resize_clusters(cfg: SystemConfig, k: int) -> SystemConfig:
    """Homogeneous re-clustering used by the threshold map."""
    base, extra = divmod(cfg.n_total_elements, k)
    return replace(
        cfg,
        k_clusters=k,
        element_split=tuple(base + (1 if i < extra else 0) for i in range(k)),
        bs_irs_pathloss=tuple([cfg.bs_irs_pathloss[0]] * k),
        irs_user_pathloss=tuple([cfg.irs_user_pathloss[0]] * k),
        rician_bs_irs=tuple([cfg.rician_bs_irs[0]] * k),
        rician_irs_user=tuple([cfg.rician_irs_user[0]] * k),
    )


def run_allocation_report(cfg: SystemConfig, objective: str) -> str:
    """Human-readable allocation summary for one scenario."""
    lines = [f"allocation report ({objective}), N={cfg.n_total_elements}, "
             f"K={cfg.k_clusters}, P={watts_to_dbm(cfg.p_max):.6g} dBm"]
    if objective == allocation.MIN_RATE:
        closed = allocation.maxmin_allocation(cfg)
        lines.append(f"  closed-form shares: {_vec(closed.element_shares)}")
        lines.append(f"  rounded counts:     {_vec(closed.element_counts)}")
        lines.append(f"  powers (W):         {_vec(closed.powers)}")
        lines.append(f"  min rate:           {closed.objective:.6f} bits/s/Hz")
    else:
        equal = allocation.sumrate_equal_allocation(cfg)
        lines.append(f"  equal counts:       {_vec(equal.element_counts)}")
        lines.append(f"  equal powers (W):   {_vec(equal.powers)}")
        lines.append(f"  sum rate:           {equal.objective:.6f} bits/s/Hz")
    if cfg.k_clusters <= 3:
        best = allocation.exhaustive_element_search(cfg, objective)
        lines.append(f"  exhaustive counts:  {_vec(best.element_counts)}")
        lines.append(f"  exhaustive value:   {best.objective:.6f} bits/s/Hz")
    return "\n".join(lines)


def run_region(cfg: SystemConfig, grid_points: int):
    """Capacity-region boundary dump for both architectures."""
    k = cfg.k_clusters
    header = (["architecture"] + [f"weight_{i + 1}" for i in range(k)]
              + [f"rate_{i + 1}" for i in range(k)])
    rows = []
    dist = _to_architecture(cfg, DISTRIBUTED)
    powers, rates = capacity.capacity_region_distributed(dist, grid_points)
    for p, r in zip(powers / dist.p_max, rates):  # budget fractions
        rows.append([DISTRIBUTED] + [_num(x) for x in p] + [_num(x) for x in r])
    cent = _to_architecture(cfg, CENTRALIZED)
    shares, rates = capacity.capacity_region_centralized(cent, grid_points)
    for s, r in zip(shares, rates):
        rows.append([CENTRALIZED] + [_num(x) for x in s] + [_num(x) for x in r])
    return header, rows


# ---------------------------------------------------------------------------
# CSV plumbing
# ---------------------------------------------------------------------------

def _num(x) -> str:
    return f"{float(x):.12g}"


def _vec(v) -> str:
    return "[" + ", ".join(_num(x) for x in np.asarray(v).ravel()) + "]"


def _config_line(cfg: SystemConfig) -> str:
    parts = [f"{f.name}={getattr(cfg, f.name)!r}" for f in fields(cfg)]
    return "; ".join(parts)


def _emit(out_path, meta_lines, header, rows, extra_comments=()):
    lines = [f"# {m}" for m in meta_lines]
    lines += list(extra_comments)
    lines.append(",".join(header))
    lines += [",".join(row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irslab",
        description="IRS deployment experiments: closed forms, thresholds, "
                    "allocation, and Monte-Carlo sweeps emitted as CSV.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in (
        ("sweep-power", "sum rate vs transmit power (fig2 preset)"),
        ("sweep-elements", "sum or min rate vs element budget (fig3/5/7 presets)"),
        ("threshold-map", "N thresholds for distributed to win (fig4 preset)"),
        ("alloc-minrate", "min-rate allocation vs path-loss gap (fig6 preset)"),
        ("alloc-sumrate", "sum-rate allocation vs path-loss gap (fig8 preset)"),
        ("sweep-rician", "hybrid scheme closed form vs Monte Carlo (fig9 preset)"),
        ("region", "capacity-region boundary dump for both architectures"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="scenario file overriding the preset")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--trials", type=int, help="Monte-Carlo trials")
        p.add_argument("--bits", help="phase quantization bits, or 'continuous'")
        p.add_argument("--preset", choices=sorted(PRESETS), help="experiment preset")
    return parser


_DEFAULT_PRESET = {
    "sweep-power": "fig2",
    "sweep-elements": "fig3",
    "threshold-map": "fig4",
    "alloc-minrate": "fig6",
    "alloc-sumrate": "fig8",
    "sweep-rician": "fig9",
    "region": None,
}


def _resolve(args):
    """Preset -> scenario file -> flag overrides, in that order."""
    preset_name = args.preset or _DEFAULT_PRESET[args.subcommand]
    preset = dict(PRESETS[preset_name]) if preset_name else {}
    if preset and preset.get("subcommand") != args.subcommand:
        raise ValidationError(
            f"preset {preset_name} belongs to subcommand {preset.get('subcommand')!r}")

    if preset.get("hetero"):
        cfg = _hetero_base()
    elif preset_name == "fig9":
        cfg = _homogeneous_base(k_clusters=2)
    else:
        cfg = _homogeneous_base()

    extras = {}
    if args.config:
        cfg, extras = load_scenario(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=int(args.seed))
    if args.bits is not None:
        bits = args.bits.strip()
        cfg = replace(cfg, quant_bits=CONTINUOUS if bits == CONTINUOUS else int(bits))
    trials = args.trials or int(extras.get("trials", 10000))

    for key in ("start", "stop", "step"):
        if key in extras:
            preset[key] = float(extras[key])
    if "grid_points" in extras:
        preset["grid_points"] = int(extras["grid_points"])
    return preset_name, preset, cfg, trials, extras


def _spec_from_preset(preset, cfg, trials, preset_name, extras) -> SweepSpec:
    angles = parse_angles(cfg, extras["angles"]) if "angles" in extras else None
    return SweepSpec(
        variable=preset["variable"], start=preset["start"],
        stop=preset["stop"], step=preset["step"], base=cfg,
        schemes=tuple(preset["schemes"]), trials=trials, label=preset_name,
        angles=angles)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        preset_name, preset, cfg, trials, extras = _resolve(args)
        meta = [
            f"irslab {args.subcommand} preset={preset_name or 'none'}",
            f"config: {_config_line(cfg)}",
            f"seed: {cfg.seed}",
            f"trials: {trials}",
        ]
        if args.subcommand == "threshold-map":
            header, rows, notes = run_threshold_map(
                cfg,
                k_range=range(1, cfg.m_antennas + 1),
                b_range=(1, 2, 3, CONTINUOUS),
                p_dbm_range=np.arange(10.0, 41.0, 5.0),
            )
            _emit(args.out, meta, header, rows, extra_comments=notes)
        elif args.subcommand == "region":
            grid = int(preset.get("grid_points", extras.get("grid_points", 11)))
            header, rows = run_region(cfg, grid)
            _emit(args.out, meta, header, rows)
        elif args.subcommand in ("alloc-minrate", "alloc-sumrate"):
            objective = (allocation.MIN_RATE if args.subcommand == "alloc-minrate"
                         else allocation.SUM_RATE)
            print(run_allocation_report(cfg, objective))
            header, rows = run_sweep(_spec_from_preset(preset, cfg, trials, preset_name, extras))
            if args.out is None:
                print()
            _emit(args.out, meta, header, rows)
        else:
            header, rows = run_sweep(_spec_from_preset(preset, cfg, trials, preset_name, extras))
            _emit(args.out, meta, header, rows)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except GuardExceededError as exc:
        print(f"guard exceeded: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
