"""Monte Carlo ensembles, resource accounting, and table-style figure outputs.

Ensembles execute ``batches * trials_per_batch`` independent trials, record
the running estimate at each checkpoint, and aggregate the periodic (Holevo)
variance per batch.  Summaries carry the analytic overlays (fixed-time
reference, best-case bound, and the step bound with its out-of-interval
floor) evaluated on the deterministic schedule, ready to plot against the
simulation.

All emitted files are deterministic byte-for-byte given the master seed: the
per-trial random streams do not depend on chunking, the reducers run in trial
order, and no timestamps are written.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from .adaptive import AtfeConfig, run_trials, trial_omega_uniform
from .errors import ConfigurationError, DomainError, UsageError
from .inference import holevo_variance_empirical, log_likelihood_eval
from .probe import (
    OMEGA_MAX,
    MeasurementRecord,
    ProbeConfig,
    ProbeMode,
    sample_outcome,
)

ARTIFACT_VERSION = "0.1.0"

CSV_COLUMNS = (
    "nu",
    "holevo_var",
    "holevo_stderr",
    "cum_time",
    "total_qubits",
    "bound_fixed_qcrb",
    "bound_ideal",
    "bound_eq31",
)

_MAX_CHUNK = 1000  # trials per vectorized block; bounds peak memory


@dataclass(frozen=True)
class ExperimentPlan:
    """One ensemble: a run configuration plus sampling and aggregation choices."""

    config: AtfeConfig
    checkpoints: tuple
    trials_per_batch: int = 1000
    batches: int = 5
    omega_policy: str = "uniform"
    omega_fixed: float = 0.0
    omega_low: float = -0.9
    omega_high: float = 0.9
    holevo_period: float = 2.0
    grid_points: int = 4096

    def __post_init__(self):
        cps = tuple(int(c) for c in self.checkpoints)
        if len(cps) == 0:
            raise ConfigurationError("checkpoints must be nonempty")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ConfigurationError("checkpoints must be strictly increasing")
        if cps[0] < 1 or cps[-1] > self.config.nu_total:
            raise ConfigurationError("checkpoints must lie in [1, nu_total]")
        object.__setattr__(self, "checkpoints", cps)
        if self.trials_per_batch < 1 or self.batches < 1:
            raise ConfigurationError("trials_per_batch and batches must be >= 1")
        if self.omega_policy not in ("uniform", "fixed"):
            raise ConfigurationError(f"unknown omega_policy: {self.omega_policy!r}")
        if self.omega_policy == "fixed" and not -1.0 <= self.omega_fixed < 1.0:
            raise ConfigurationError("omega_fixed must lie in [-1, 1)")
        if self.omega_policy == "uniform" and not -1.0 <= self.omega_low < self.omega_high < 1.0:
            raise ConfigurationError("omega_low/omega_high must satisfy -1 <= low < high < 1")
        if not self.holevo_period > 0.0:
            raise ConfigurationError("holevo_period must be positive")
        if self.grid_points < 16:
            raise ConfigurationError("grid_points must be >= 16")


@dataclass
class EnsembleSummary:
    """Per-checkpoint aggregation of one ensemble."""

    plan: ExperimentPlan
    nu: np.ndarray
    holevo_var: np.ndarray
    holevo_stderr: np.ndarray
    cum_time: np.ndarray
    total_qubits: np.ndarray
    bound_fixed_qcrb: np.ndarray
    bound_ideal: np.ndarray
    bound_eq31: np.ndarray
    inf_batches: np.ndarray
    batch_variances: np.ndarray  # (n_checkpoints, batches), diagnostics


def plan_to_dict(plan: ExperimentPlan) -> dict:
    """Flat, JSON-ready echo of a plan (keys mirror the config field names)."""
    cfg = plan.config
    return {
        "mode": cfg.probe.mode.value,
        "n_qubits": cfg.probe.n_qubits,
        "confidence_level": cfg.confidence_level,
        "nu_initial": cfg.nu_initial,
        "nu_total": cfg.nu_total,
        "update_ci": cfg.update_ci,
        "t1_scale": cfg.t1_scale,
        "seed": cfg.seed,
        "checkpoints": list(plan.checkpoints),
        "trials_per_batch": plan.trials_per_batch,
        "batches": plan.batches,
        "omega_policy": plan.omega_policy,
        "omega_fixed": plan.omega_fixed,
        "omega_low": plan.omega_low,
        "omega_high": plan.omega_high,
        "holevo_period": plan.holevo_period,
        "grid_points": plan.grid_points,
    }


def plan_from_dict(data: dict) -> ExperimentPlan:
    """Inverse of :func:`plan_to_dict`; unknown keys are rejected."""
    known = {
        "mode", "n_qubits", "confidence_level", "nu_initial", "nu_total",
        "update_ci", "t1_scale", "seed", "checkpoints", "trials_per_batch",
        "batches", "omega_policy", "omega_fixed", "omega_low", "omega_high",
        "holevo_period", "grid_points", "tag",
    }
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown configuration keys: {sorted(unknown)}")
    if "nu_total" not in data:
        raise UsageError("nu_total required")
    nu_total = int(data["nu_total"])
    probe = ProbeConfig(
        mode=ProbeMode(data.get("mode", "single")),
        n_qubits=int(data.get("n_qubits", 1)),
    )
    config = AtfeConfig(
        confidence_level=float(data.get("confidence_level", 0.999)),
        nu_initial=int(data.get("nu_initial", 20)),
        nu_total=nu_total,
        probe=probe,
        update_ci=bool(data.get("update_ci", True)),
        t1_scale=float(data.get("t1_scale", 1.0)),
        seed=int(data.get("seed", 0)),
    )
    checkpoints = tuple(data.get("checkpoints", (nu_total,)))
    return ExperimentPlan(
        config=config,
        checkpoints=checkpoints,
        trials_per_batch=int(data.get("trials_per_batch", 1000)),
        batches=int(data.get("batches", 5)),
        omega_policy=data.get("omega_policy", "uniform"),
        omega_fixed=float(data.get("omega_fixed", 0.0)),
        omega_low=float(data.get("omega_low", -0.9)),
        omega_high=float(data.get("omega_high", 0.9)),
        holevo_period=float(data.get("holevo_period", 2.0)),
        grid_points=int(data.get("grid_points", 4096)),
    )


def _trial_frequencies(plan: ExperimentPlan, n_trials: int) -> np.ndarray:
    if plan.omega_policy == "fixed":
        return np.full(n_trials, plan.omega_fixed)
    return trial_omega_uniform(plan.config.seed, plan.omega_low, plan.omega_high, n_trials)


def _run_all_trials(plan: ExperimentPlan, n_trials: int, omega: np.ndarray, workers: int):
    """Run the ensemble in fixed chunks; concatenation order never varies."""
    starts = list(range(0, n_trials, _MAX_CHUNK))
    spans = [(a, min(a + _MAX_CHUNK, n_trials)) for a in starts]
    cfg = plan.config

    def _one(span):
        a, b = span
        return run_trials(
            cfg, omega[a:b], trial_offset=a,
            checkpoints=plan.checkpoints, grid_points=plan.grid_points,
        )

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_one, spans))
    else:
        parts = [_one(s) for s in spans]
    estimates = np.concatenate([p.checkpoint_estimates for p in parts], axis=1)
    cum_time = np.concatenate([p.checkpoint_cum_time for p in parts], axis=1)
    return estimates, cum_time


def run_ensemble(plan: ExperimentPlan, workers: int = 1) -> EnsembleSummary:
    """Execute the plan and aggregate per-checkpoint variance and resources.

    The empirical Holevo variance is computed per batch over the batch's
    trials and averaged over batches; its standard error is the spread across
    batches.  Batches whose variance hits the infinite sentinel (vanishing
    mean phasor) are excluded from the mean and counted in ``inf_batches``.
    """
    cfg = plan.config
    n_trials = plan.trials_per_batch * plan.batches
    omega = _trial_frequencies(plan, n_trials)
    estimates, cum_time = _run_all_trials(plan, n_trials, omega, workers)

    n_cp = len(plan.checkpoints)
    batch_var = np.empty((n_cp, plan.batches))
    for c in range(n_cp):
        for b in range(plan.batches):
            sl = slice(b * plan.trials_per_batch, (b + 1) * plan.trials_per_batch)
            batch_var[c, b] = holevo_variance_empirical(
                estimates[c, sl], omega[sl], plan.holevo_period
            )

    holevo_var = np.empty(n_cp)
    holevo_stderr = np.empty(n_cp)
    inf_batches = np.zeros(n_cp, dtype=np.int64)
    for c in range(n_cp):
        finite = batch_var[c][np.isfinite(batch_var[c])]
        inf_batches[c] = plan.batches - finite.size
        if finite.size == 0:
            holevo_var[c] = math.inf
            holevo_stderr[c] = 0.0
        else:
            holevo_var[c] = finite.mean()
            holevo_stderr[c] = (
                finite.std(ddof=1) / math.sqrt(finite.size) if finite.size > 1 else 0.0
            )

    curve = bounds_mod.schedule_curve(
        cfg.nu_total, cfg.confidence_level, cfg.nu_initial,
        cfg.probe.n_qubits, cfg.probe.mode, cfg.t1_scale,
    )
    cp = np.array(plan.checkpoints, dtype=np.int64)
    idx = cp - 1
    return EnsembleSummary(
        plan=plan,
        nu=cp,
        holevo_var=holevo_var,
        holevo_stderr=holevo_stderr,
        cum_time=cum_time.mean(axis=1),
        total_qubits=cp * cfg.probe.n_qubits,
        bound_fixed_qcrb=curve.bound_fixed[idx],
        bound_ideal=curve.bound_ideal[idx],
        bound_eq31=curve.bound_eq31[idx],
        inf_batches=inf_batches,
        batch_variances=batch_var,
    )


@dataclass
class GhzProductComparison:
    """Variance and qubit-count ratios on a shared grid of cumulative times."""

    cum_time: np.ndarray
    var_ratio_prod_over_ghz: np.ndarray
    qubit_ratio_ghz_over_prod: np.ndarray
    sqrt_n: float
    ghz: EnsembleSummary
    product: EnsembleSummary


def compare_ghz_vs_product(
    plan_ghz: ExperimentPlan, plan_product: ExperimentPlan, workers: int = 1
) -> GhzProductComparison:
    """Run both ensembles and tabulate ratios against cumulative sensing time.

    The grid is the product plan's checkpoint times restricted to the overlap
    of both time ranges; the GHZ curve is interpolated onto it (log-log for
    the variance, linear for qubit counts).
    """
    cg, cp = plan_ghz.config, plan_product.config
    if cg.probe.mode is not ProbeMode.GHZ or cp.probe.mode is not ProbeMode.PRODUCT:
        raise ConfigurationError("plans must be (GHZ, product) in that order")
    for name in ("confidence_level", "nu_initial", "t1_scale"):
        if getattr(cg, name) != getattr(cp, name):
            raise ConfigurationError(f"plans disagree on {name}")
    if cg.probe.n_qubits != cp.probe.n_qubits:
        raise ConfigurationError("plans disagree on n_qubits")

    ghz = run_ensemble(plan_ghz, workers)
    product = run_ensemble(plan_product, workers)
    if not (np.isfinite(ghz.holevo_var).all() and np.isfinite(product.holevo_var).all()):
        raise DomainError(
            "infinite empirical variance at a checkpoint; ratios are undefined "
            "(increase trials or move checkpoints)"
        )
    t_lo = max(ghz.cum_time[0], product.cum_time[0])
    t_hi = min(ghz.cum_time[-1], product.cum_time[-1])
    mask = (product.cum_time >= t_lo) & (product.cum_time <= t_hi)
    if not mask.any():
        raise UsageError("plans have no overlapping range of cumulative time")
    grid_t = product.cum_time[mask]

    log_var_ghz = np.interp(np.log(grid_t), np.log(ghz.cum_time), np.log(ghz.holevo_var))
    qubits_ghz = np.interp(grid_t, ghz.cum_time, ghz.total_qubits.astype(float))
    var_ratio = product.holevo_var[mask] / np.exp(log_var_ghz)
    qubit_ratio = qubits_ghz / product.total_qubits[mask].astype(float)
    return GhzProductComparison(
        cum_time=grid_t,
        var_ratio_prod_over_ghz=var_ratio,
        qubit_ratio_ghz_over_prod=qubit_ratio,
        sqrt_n=math.sqrt(cg.probe.n_qubits),
        ghz=ghz,
        product=product,
    )


def _format(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf"
    return format(x, ".12g")


def write_summary_csv(summary: EnsembleSummary, path) -> Path:
    """Emit the fixed-schema per-checkpoint table."""
    path = Path(path)
    lines = [",".join(CSV_COLUMNS)]
    for i in range(len(summary.nu)):
        row = (
            summary.nu[i],
            summary.holevo_var[i],
            summary.holevo_stderr[i],
            summary.cum_time[i],
            summary.total_qubits[i],
            summary.bound_fixed_qcrb[i],
            summary.bound_ideal[i],
            summary.bound_eq31[i],
        )
        lines.append(",".join(_format(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_ratio_csv(comparison: GhzProductComparison, path) -> Path:
    path = Path(path)
    lines = ["cum_time,var_ratio_prod_over_ghz,qubit_ratio_ghz_over_prod,sqrt_n"]
    for i in range(len(comparison.cum_time)):
        lines.append(
            ",".join(
                _format(v)
                for v in (
                    comparison.cum_time[i],
                    comparison.var_ratio_prod_over_ghz[i],
                    comparison.qubit_ratio_ghz_over_prod[i],
                    comparison.sqrt_n,
                )
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def write_sidecar(path, master_seed: int, plans: dict, files, extra: dict | None = None) -> Path:
    """JSON echo of everything needed to regenerate the neighbouring CSVs."""
    path = Path(path)
    payload = {
        "artifact_version": ARTIFACT_VERSION,
        "master_seed": master_seed,
        "plans": plans,
        "files": [Path(f).name for f in files],
    }
    if extra:
        payload.update(extra)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def _derived_seed(master: int, index: int) -> int:
    ss = np.random.SeedSequence(entropy=(int(master), int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


FIGURE_IDS = ("fig2_likelihood", "fig3", "fig5", "fig6")

_FIG_CONFIDENCE = 0.999
_FIG_NU_INITIAL = 20
_FIG_CHECKPOINTS = (5, 10, 15, 20, 25, 30, 40, 50, 60)


def _fig2(output_dir: Path, seed: int) -> list:
    """Normalized log-likelihoods of 64 outcomes at three sensing times.

    The true frequency sits inside the estimation domain, where the three
    times produce 1, 2, and 3 likelihood maxima respectively.
    """
    taus = (0.25, 0.5, 0.75)
    omega_true = 0.15
    g = 0.0
    n_outcomes = 64
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 2002)))
    grid = np.linspace(-1.0, OMEGA_MAX, 2001)
    columns = []
    zero_counts = []
    for tau in taus:
        records = [
            MeasurementRecord(
                sample_outcome(g, tau, omega_true, ProbeMode.SINGLE, 1, rng), g, tau
            )
            for _ in range(n_outcomes)
        ]
        zero_counts.append(sum(1 for r in records if r.outcome == 0))
        ll = log_likelihood_eval(records, grid)
        columns.append(ll - ll.max())
    csv_path = output_dir / "reproduce_fig2_likelihood.csv"
    lines = ["omega,loglik_t_quarter,loglik_t_half,loglik_t_three_quarters"]
    for i in range(grid.size):
        lines.append(
            ",".join(_format(v) for v in (grid[i], columns[0][i], columns[1][i], columns[2][i]))
        )
    csv_path.write_text("\n".join(lines) + "\n")
    sidecar = write_sidecar(
        output_dir / "reproduce_fig2_likelihood.json",
        seed,
        {
            "sensing_times": list(taus),
            "omega_true": omega_true,
            "guess": g,
            "n_outcomes": n_outcomes,
            "note": "true frequency chosen inside the estimation domain [-1, 1)",
        },
        [csv_path],
        extra={"zero_counts": zero_counts},
    )
    return [csv_path, sidecar]


def _fig3_plan(seed: int, update_ci: bool, trials: int, checkpoints) -> ExperimentPlan:
    config = AtfeConfig(
        confidence_level=_FIG_CONFIDENCE,
        nu_initial=_FIG_NU_INITIAL,
        nu_total=60,
        probe=ProbeConfig(mode=ProbeMode.SINGLE, n_qubits=1),
        update_ci=update_ci,
        seed=seed,
    )
    return ExperimentPlan(config=config, checkpoints=tuple(checkpoints), trials_per_batch=trials)


def _fig3(output_dir: Path, seed: int, workers: int, dense_tail: bool) -> list:
    plans = {
        "atfe_update": _fig3_plan(_derived_seed(seed, 0), True, 1000, _FIG_CHECKPOINTS),
        "atfe_noupdate": _fig3_plan(_derived_seed(seed, 1), False, 1000, _FIG_CHECKPOINTS),
    }
    files = []
    rows_by_tag = {}
    for tag, plan in plans.items():
        summary = run_ensemble(plan, workers)
        rows_by_tag[tag] = summary
        files.append(write_summary_csv(summary, output_dir / f"reproduce_fig3_{tag}.csv"))
    plan_echo = {tag: plan_to_dict(p) for tag, p in plans.items()}
    if dense_tail:
        # Re-estimate the tail of the no-update series with 10x the trials.
        tail_plan = _fig3_plan(_derived_seed(seed, 2), False, 10000, (40, 50, 60))
        tail = run_ensemble(tail_plan, workers)
        base = rows_by_tag["atfe_noupdate"]
        for i, nu in enumerate(tail.nu):
            j = int(np.where(base.nu == nu)[0][0])
            base.holevo_var[j] = tail.holevo_var[i]
            base.holevo_stderr[j] = tail.holevo_stderr[i]
            base.cum_time[j] = tail.cum_time[i]
            base.inf_batches[j] = tail.inf_batches[i]
        write_summary_csv(base, output_dir / "reproduce_fig3_atfe_noupdate.csv")
        plan_echo["atfe_noupdate_tail"] = plan_to_dict(tail_plan)
    sidecar = write_sidecar(output_dir / "reproduce_fig3.json", seed, plan_echo, files)
    return files + [sidecar]


def _fig5(output_dir: Path, seed: int, workers: int) -> list:
    files = []
    plan_echo = {}
    for idx, n in enumerate((1, 5, 10)):
        config = AtfeConfig(
            confidence_level=_FIG_CONFIDENCE,
            nu_initial=_FIG_NU_INITIAL,
            nu_total=60,
            probe=ProbeConfig(mode=ProbeMode.GHZ, n_qubits=n),
            update_ci=True,
            seed=_derived_seed(seed, idx),
        )
        plan = ExperimentPlan(config=config, checkpoints=_FIG_CHECKPOINTS)
        summary = run_ensemble(plan, workers)
        files.append(write_summary_csv(summary, output_dir / f"reproduce_fig5_ghz_n{n}.csv"))
        plan_echo[f"ghz_n{n}"] = plan_to_dict(plan)
    sidecar = write_sidecar(output_dir / "reproduce_fig5.json", seed, plan_echo, files)
    return files + [sidecar]


def matched_ghz_nu(n_qubits: int, nu_product: int, confidence_level: float, nu_initial: int) -> int:
    """Measurements a GHZ run needs to reach the product run's scheduled time."""
    target = bounds_mod.schedule_curve(
        nu_product, confidence_level, nu_initial, n_qubits, ProbeMode.PRODUCT
    ).cum_time[-1]
    nu = nu_product
    while True:
        curve = bounds_mod.schedule_curve(
            nu, confidence_level, nu_initial, n_qubits, ProbeMode.GHZ
        )
        if curve.cum_time[-1] >= target:
            return int(np.searchsorted(curve.cum_time, target) + 1)
        nu *= 2


def _fig6(output_dir: Path, seed: int, workers: int) -> list:
    # A short warm-up buries the entangled-register variance under the rare
    # warm-up basin failures long before the sqrt(N) asymptote; the published
    # trend needs the cleaned setting (longer warm-up, interior fixed truth).
    nu_initial = 60
    files = []
    plan_echo = {}
    prod_checkpoints = (80, 120, 160, 200, 250)
    omega_kwargs = dict(omega_policy="fixed", omega_fixed=0.25)
    for idx, n in enumerate((5, 10, 15)):
        probe_kwargs = {"n_qubits": n}
        prod_config = AtfeConfig(
            confidence_level=_FIG_CONFIDENCE,
            nu_initial=nu_initial,
            nu_total=prod_checkpoints[-1],
            probe=ProbeConfig(mode=ProbeMode.PRODUCT, **probe_kwargs),
            seed=_derived_seed(seed, 10 + idx),
        )
        prod_plan = ExperimentPlan(
            config=prod_config, checkpoints=prod_checkpoints,
            trials_per_batch=500, batches=3, **omega_kwargs,
        )
        nu_ghz = matched_ghz_nu(n, prod_checkpoints[-1], _FIG_CONFIDENCE, nu_initial)
        ghz_curve = bounds_mod.schedule_curve(
            nu_ghz, _FIG_CONFIDENCE, nu_initial, n, ProbeMode.GHZ
        )
        prod_curve = bounds_mod.schedule_curve(
            prod_checkpoints[-1], _FIG_CONFIDENCE, nu_initial, n, ProbeMode.PRODUCT
        )
        ghz_cps = sorted(
            {
                int(np.searchsorted(ghz_curve.cum_time, prod_curve.cum_time[c - 1]) + 1)
                for c in prod_checkpoints
            }
        )
        ghz_cps = tuple(min(c, nu_ghz) for c in ghz_cps)
        ghz_config = AtfeConfig(
            confidence_level=_FIG_CONFIDENCE,
            nu_initial=nu_initial,
            nu_total=nu_ghz,
            probe=ProbeConfig(mode=ProbeMode.GHZ, **probe_kwargs),
            seed=_derived_seed(seed, 20 + idx),
        )
        ghz_plan = ExperimentPlan(
            config=ghz_config, checkpoints=ghz_cps, trials_per_batch=500, batches=3,
            **omega_kwargs,
        )
        comparison = compare_ghz_vs_product(ghz_plan, prod_plan, workers)
        files.append(write_ratio_csv(comparison, output_dir / f"reproduce_fig6_ratios_n{n}.csv"))
        files.append(write_summary_csv(comparison.ghz, output_dir / f"reproduce_fig6_ghz_n{n}.csv"))
        files.append(
            write_summary_csv(comparison.product, output_dir / f"reproduce_fig6_product_n{n}.csv")
        )
        plan_echo[f"ghz_n{n}"] = plan_to_dict(ghz_plan)
        plan_echo[f"product_n{n}"] = plan_to_dict(prod_plan)
    sidecar = write_sidecar(output_dir / "reproduce_fig6.json", seed, plan_echo, files)
    return files + [sidecar]


def reproduce_figure(
    fig_id: str,
    output_dir,
    seed: int = 1,
    workers: int = 1,
    dense_tail: bool = False,
) -> list:
    """Emit the data tables behind one of the reference figures.

    Returns the list of written paths (CSV series plus one JSON sidecar).
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    if fig_id == "fig2_likelihood":
        return _fig2(output_dir, seed)
    if fig_id == "fig3":
        return _fig3(output_dir, seed, workers, dense_tail)
    if fig_id == "fig5":
        return _fig5(output_dir, seed, workers)
    if fig_id == "fig6":
        return _fig6(output_dir, seed, workers)
    raise UsageError(f"unknown figure id {fig_id!r}; choose from {FIGURE_IDS}")
