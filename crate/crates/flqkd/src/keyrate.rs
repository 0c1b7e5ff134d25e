//! Secret-key-rate assembly and optimization: combines the receiver's
//! Shannon rate with the adversary's Holevo bound, optimizes the operating
//! point over brightness and modulation rate, and drives the distance,
//! injection-fraction, and brightness sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::{
    entanglement_assisted_capacity, holevo_active_ub, holevo_asymptotic_ub, holevo_optimum_ub,
    monitor_leak_ratio, passive_ub,
};
use crate::error::{Error, Result};
use crate::receiver::{error_probability, homodyne_moments, shannon_rate};
use crate::terminals::SystemParams;

/// Reconciliation codes are assumed available only up to this error rate.
pub const PR_E_MAX: f64 = 0.1;
/// Quantified form of "the active attack is almost as powerful as the
/// optimum" at low brightness.
pub const ACTIVE_OPTIMUM_GAP_MAX: f64 = 0.25;
/// Quantified form of "the passive attack makes the dominant contribution"
/// at high brightness.
pub const PASSIVE_DOMINANCE_MIN: f64 = 0.7;

/// How a computed operating point should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStatus {
    /// Positive key rate at an admissible error rate.
    Ok,
    /// Admissible error rate but the Holevo bound eats the whole rate.
    ZeroRate,
    /// Error rate above the reconciliation limit.
    ErrorConstraint,
    /// No admissible point exists at all.
    Infeasible,
}

/// A fully evaluated operating point.
#[derive(Debug, Clone, Serialize)]
pub struct OperatingPoint {
    pub n_s_opt: f64,
    pub r_opt: f64,
    pub pr_e: f64,
    pub i_ab_bps: f64,
    /// Holevo bound rate actually charged against the key (folded when the
    /// detection-time correction is enabled).
    pub chi_ub_bps: f64,
    pub chi_asym_bps: f64,
    pub skr_lb_bps: f64,
    /// beta I_AB - chi before the floor at zero; the optimizer's tie-break.
    pub margin_bps: f64,
    pub ppb_tx: f64,
    pub ppb_rx: f64,
    pub eff_per_use: f64,
    pub eff_per_mode: f64,
    pub pirandola_bound: f64,
    pub kappa_s: f64,
    /// Detection-time leak correction factor at this point.
    pub leak_ratio: f64,
    pub status: PointStatus,
}

impl OperatingPoint {
    fn infeasible(params: &SystemParams) -> Self {
        let kappa_s = params.kappa_s();
        OperatingPoint {
            n_s_opt: 0.0,
            r_opt: 0.0,
            pr_e: 0.5,
            i_ab_bps: 0.0,
            chi_ub_bps: 0.0,
            chi_asym_bps: 0.0,
            skr_lb_bps: 0.0,
            margin_bps: 0.0,
            ppb_tx: 0.0,
            ppb_rx: 0.0,
            eff_per_use: 0.0,
            eff_per_mode: 0.0,
            pirandola_bound: pirandola_bound(kappa_s),
            kappa_s,
            leak_ratio: 1.0,
            status: PointStatus::Infeasible,
        }
    }
}

/// Repeaterless secret-key-efficiency limit, bits per mode.
pub fn pirandola_bound(kappa_s: f64) -> f64 {
    -(1.0 - kappa_s).log2()
}

/// Full evaluation of one (N_S, R) candidate.
pub fn skr_lower_bound(params: &SystemParams, f_e: f64, n_s: f64, mod_rate: f64) -> Result<OperatingPoint> {
    skr_lower_bound_with(params, f_e, n_s, mod_rate, false)
}

/// As `skr_lower_bound`, optionally folding the detection-time leak
/// correction into the Holevo bound before subtracting it.
pub fn skr_lower_bound_with(
    params: &SystemParams,
    f_e: f64,
    n_s: f64,
    mod_rate: f64,
    fold_leak_correction: bool,
) -> Result<OperatingPoint> {
    evaluate(params, f_e, n_s, mod_rate, fold_leak_correction, true)
}

/// Core evaluation; the optimizer skips the leak-ratio column in its inner
/// loop unless the correction is folded into the objective.
fn evaluate(
    params: &SystemParams,
    f_e: f64,
    n_s: f64,
    mod_rate: f64,
    fold_leak_correction: bool,
    with_leak_ratio: bool,
) -> Result<OperatingPoint> {
    let p = params.with_operating_point(n_s, mod_rate);
    p.validate()?;
    let kappa_s = p.kappa_s();
    let m = p.modes_per_bit();

    let pr_e = error_probability(&homodyne_moments(&p, f_e)?)?;
    let info = shannon_rate(pr_e.min(0.5), mod_rate)?;
    let chi = holevo_optimum_ub(&p, f_e)?;
    let chi_asym = holevo_asymptotic_ub(&p, f_e, n_s)?;

    let leak_ratio = if (with_leak_ratio || fold_leak_correction) && chi.uncapped_per_bit > 0.0 {
        monitor_leak_ratio(&p, f_e, chi.uncapped_per_bit)?.ratio
    } else {
        1.0
    };
    let chi_rate = if fold_leak_correction {
        (chi.per_bit * leak_ratio).min(1.0) * mod_rate
    } else {
        chi.rate_bps(mod_rate)
    };

    let margin = p.beta * info.i_ab_bps - chi_rate;
    let feasible = pr_e <= PR_E_MAX + 1e-12;
    let skr = if feasible { margin.max(0.0) } else { 0.0 };
    let status = if !feasible {
        PointStatus::ErrorConstraint
    } else if skr > 0.0 {
        PointStatus::Ok
    } else {
        PointStatus::ZeroRate
    };

    Ok(OperatingPoint {
        n_s_opt: n_s,
        r_opt: mod_rate,
        pr_e,
        i_ab_bps: info.i_ab_bps,
        chi_ub_bps: chi_rate,
        chi_asym_bps: chi_asym.rate_bps(mod_rate),
        skr_lb_bps: skr,
        margin_bps: margin,
        ppb_tx: n_s * m,
        ppb_rx: kappa_s * n_s * m,
        eff_per_use: skr / mod_rate,
        eff_per_mode: skr / p.bandwidth,
        pirandola_bound: pirandola_bound(kappa_s),
        kappa_s,
        leak_ratio,
        status,
    })
}

/// Search-space knobs for the operating-point optimizer.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Candidate modulation rates (bits/s); entries above 10 Gbps or above
    /// the source bandwidth are skipped.
    pub r_candidates: Vec<f64>,
    pub ns_min: f64,
    pub ns_max: f64,
    pub ns_grid_points: usize,
    /// Relative tolerance of the golden-section refinement in N_S.
    pub refine_rel_tol: f64,
    pub fold_leak_correction: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            r_candidates: vec![1e9, 2e9, 5e9, 1e10],
            ns_min: 1e-4,
            ns_max: 0.5,
            ns_grid_points: 60,
            refine_rel_tol: 1e-4,
            fold_leak_correction: false,
        }
    }
}

const R_CAP: f64 = 1e10;

/// Maximizes the key-rate lower bound over N_S and R subject to
/// Pr(e) <= 0.1 and R <= 10 Gbps. Returns a zero-rate point flagged
/// infeasible when nothing admissible exists. Deterministic.
pub fn optimize_operating_point(params: &SystemParams, f_e: f64) -> Result<OperatingPoint> {
    optimize_with(params, f_e, &OptimizerConfig::default())
}

pub fn optimize_with(
    params: &SystemParams,
    f_e: f64,
    cfg: &OptimizerConfig,
) -> Result<OperatingPoint> {
    let mut best: Option<OperatingPoint> = None;
    let mut consider = |cand: OperatingPoint| {
        let better = match &best {
            None => true,
            Some(b) => {
                (cand.skr_lb_bps, cand.margin_bps) > (b.skr_lb_bps, b.margin_bps)
            }
        };
        if cand.status != PointStatus::ErrorConstraint && better {
            best = Some(cand);
        }
    };

    // the combiner needs N_A = N_S/(1-kappa_A) < 1; keep every grid point
    // evaluable regardless of the configured ceiling
    let ns_cap = 0.999 * (1.0 - params.kappa_a);
    let ln_lo = cfg.ns_min.min(ns_cap).ln();
    let ln_hi = cfg.ns_max.min(ns_cap).ln();
    let n_pts = cfg.ns_grid_points.max(2);
    let ns_at = |i: usize| (ln_lo + (ln_hi - ln_lo) * i as f64 / (n_pts - 1) as f64).exp();

    for &mod_rate in &cfg.r_candidates {
        if mod_rate > R_CAP || mod_rate > params.bandwidth || mod_rate <= 0.0 {
            continue;
        }
        let eval = |n_s: f64| evaluate(params, f_e, n_s, mod_rate, cfg.fold_leak_correction, false);

        // coarse log grid
        let mut grid: Vec<OperatingPoint> = Vec::with_capacity(n_pts);
        for i in 0..n_pts {
            grid.push(eval(ns_at(i))?);
        }
        let feasible_from = grid
            .iter()
            .position(|p| p.status != PointStatus::ErrorConstraint);
        let Some(first_ok) = feasible_from else { continue };

        // the error constraint binds from below in N_S: bisect the boundary
        if first_ok > 0 {
            let (mut lo_ln, mut hi_ln) = (ns_at(first_ok - 1).ln(), ns_at(first_ok).ln());
            for _ in 0..80 {
                let mid = (lo_ln + hi_ln) / 2.0;
                if eval(mid.exp())?.status == PointStatus::ErrorConstraint {
                    lo_ln = mid;
                } else {
                    hi_ln = mid;
                }
            }
            consider(eval(hi_ln.exp())?);
        }

        let mut best_i = first_ok;
        for i in first_ok..n_pts {
            if (grid[i].skr_lb_bps, grid[i].margin_bps)
                > (grid[best_i].skr_lb_bps, grid[best_i].margin_bps)
            {
                best_i = i;
            }
        }
        for p in grid.iter().skip(first_ok) {
            consider(p.clone());
        }

        // golden-section refinement inside the feasible neighborhood of the
        // best grid point, in log N_S
        let lo = ns_at(best_i.saturating_sub(1)).max(ns_at(first_ok));
        let hi = ns_at((best_i + 1).min(n_pts - 1));
        if hi > lo {
            let obj = |ln_ns: f64| {
                evaluate(params, f_e, ln_ns.exp(), mod_rate, cfg.fold_leak_correction, false)
                    .map(|p| {
                        if p.status == PointStatus::ErrorConstraint {
                            f64::NEG_INFINITY
                        } else {
                            p.margin_bps
                        }
                    })
                    .unwrap_or(f64::NEG_INFINITY)
            };
            let ln_star =
                crate::adversary::golden_max(obj, lo.ln(), hi.ln(), cfg.refine_rel_tol);
            let refined = eval(ln_star.exp())?;
            consider(refined);
        }
    }

    // re-evaluate the winner with the reporting-only columns filled in
    match best {
        Some(b) => skr_lower_bound_with(params, f_e, b.n_s_opt, b.r_opt, cfg.fold_leak_correction),
        None => Ok(OperatingPoint::infeasible(params)),
    }
}

/// One sweep row: the independent variable plus the optimized point.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub x: f64,
    #[serde(flatten)]
    pub point: OperatingPoint,
}

fn check_ascending(grid: &[f64], name: &str) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidParams(format!("{name} grid needs >= 2 points")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(format!("{name} grid must be ascending")));
    }
    Ok(())
}

/// Optimized key rate versus one-way path length.
pub fn distance_sweep(
    params: &SystemParams,
    f_e: f64,
    l_grid: &[f64],
    cfg: &OptimizerConfig,
) -> Result<Vec<SweepRow>> {
    check_ascending(l_grid, "L")?;
    l_grid
        .par_iter()
        .map(|&l| {
            let p = SystemParams {
                path_km: l,
                ..params.clone()
            };
            Ok(SweepRow {
                x: l,
                point: optimize_with(&p, f_e, cfg)?,
            })
        })
        .collect()
}

/// Optimized key rate versus Eve's injection fraction at fixed path length.
pub fn fe_sweep(
    params: &SystemParams,
    fe_grid: &[f64],
    cfg: &OptimizerConfig,
) -> Result<Vec<SweepRow>> {
    check_ascending(fe_grid, "f_E")?;
    fe_grid
        .par_iter()
        .map(|&f_e| {
            Ok(SweepRow {
                x: f_e,
                point: optimize_with(params, f_e, cfg)?,
            })
        })
        .collect()
}

/// Per-mode information bounds versus source brightness at a fixed point.
#[derive(Debug, Clone, Serialize)]
pub struct HolevoSweepRow {
    pub n_s: f64,
    pub optimum_per_mode: f64,
    pub passive_per_mode: f64,
    pub active_per_mode: f64,
    pub capacity_per_mode: f64,
    pub optimum_asym_per_mode: f64,
    pub passive_asym_per_mode: f64,
    pub optimum_capped: bool,
    pub passive_capped: bool,
    pub active_capped: bool,
}

/// The four per-mode bound curves over an ascending brightness grid.
/// Per-mode values are the uncapped per-bit bounds divided by M; the capped
/// flags record where the per-bit cap would bind.
pub fn holevo_sweep(
    params: &SystemParams,
    f_e: f64,
    ns_grid: &[f64],
) -> Result<Vec<HolevoSweepRow>> {
    check_ascending(ns_grid, "N_S")?;
    let m = params.modes_per_bit();
    ns_grid
        .par_iter()
        .map(|&n_s| {
            let p = params.with_operating_point(n_s, params.mod_rate);
            let optimum = holevo_optimum_ub(&p, f_e)?;
            let passive = passive_ub(&p)?;
            let active = holevo_active_ub(&p, f_e)?;
            let capacity = entanglement_assisted_capacity(&p, f_e)?;
            let optimum_asym = holevo_asymptotic_ub(&p, f_e, n_s)?;
            let passive_asym = holevo_asymptotic_ub(&p, 0.0, n_s)?;
            Ok(HolevoSweepRow {
                n_s,
                optimum_per_mode: optimum.uncapped_per_bit / m,
                passive_per_mode: passive.uncapped_per_bit / m,
                active_per_mode: active.uncapped_per_bit / m,
                capacity_per_mode: capacity,
                optimum_asym_per_mode: optimum_asym.uncapped_per_bit / m,
                passive_asym_per_mode: passive_asym.uncapped_per_bit / m,
                optimum_capped: optimum.capped,
                passive_capped: passive.capped,
                active_capped: active.capped,
            })
        })
        .collect()
}
