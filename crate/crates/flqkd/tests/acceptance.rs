//! End-to-end acceptance gates for the engine: the headline operating point,
//! efficiency and fundamental-limit anchors, sweep shapes, bound orderings,
//! attack-parameter optimality, Gaussian-core invariants, monitor closed
//! loops, and the detection-time side-information correction.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see one
//! PASS/FAIL line per gate.

use std::time::Instant;

use flqkd::adversary::{
    holevo_asymptotic_ub, holevo_optimum_ub, monitor_leak_ratio, verify_optimum_angles,
    AttackParams, conditional_covariances,
};
use flqkd::gaussian::WignerCov;
use flqkd::keyrate::{
    distance_sweep, fe_sweep, holevo_sweep, optimize_operating_point, pirandola_bound,
    OptimizerConfig, PointStatus,
};
use flqkd::monitor::{estimate_fe, estimate_fe_stderr, expected_rates, simulate_events};
use flqkd::terminals::SystemParams;

fn baseline() -> SystemParams {
    SystemParams {
        path_km: 50.0,
        ..SystemParams::default()
    }
}

fn gate(name: &str, outcome: Result<String, String>) {
    match outcome {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(detail) => {
            println!("FAIL {name}: {detail}");
            panic!("{name}: {detail}");
        }
    }
}

#[test]
fn acceptance_01_headline_rate_and_brightness_at_50km() {
    let started = Instant::now();
    let pt = optimize_operating_point(&baseline(), 0.01).expect("optimization runs");
    let elapsed = started.elapsed().as_secs_f64();
    let mut errs = Vec::new();
    if (pt.skr_lb_bps - 2e9).abs() / 2e9 > 0.2 {
        errs.push(format!("skr {} outside 2 Gbps +/- 20%", pt.skr_lb_bps));
    }
    if (pt.n_s_opt - 0.043).abs() > 0.015 {
        errs.push(format!("N_S {} outside 0.043 +/- 0.015", pt.n_s_opt));
    }
    if elapsed >= 30.0 {
        errs.push(format!("took {elapsed:.1} s, budget 30 s"));
    }
    gate(
        "headline-rate-50km",
        if errs.is_empty() {
            Ok(format!(
                "skr = {:.4} Gbps at N_S = {:.4}, R = {} Gbps in {:.2} s",
                pt.skr_lb_bps / 1e9,
                pt.n_s_opt,
                pt.r_opt / 1e9,
                elapsed
            ))
        } else {
            Err(errs.join("; "))
        },
    );
}

#[test]
fn acceptance_02_secret_key_efficiency() {
    let pt = optimize_operating_point(&baseline(), 0.01).expect("optimization runs");
    let mut errs = Vec::new();
    if (pt.eff_per_use - 0.2).abs() / 0.2 > 0.2 {
        errs.push(format!("eff/use {} outside 0.2 +/- 20%", pt.eff_per_use));
    }
    if !(1e-3 / 1.5..=1e-3 * 1.5).contains(&pt.eff_per_mode) {
        errs.push(format!("eff/mode {} outside 1e-3 within x1.5", pt.eff_per_mode));
    }
    if pt.eff_per_mode >= pt.pirandola_bound || pt.eff_per_use / 200.0 >= pt.pirandola_bound {
        errs.push("efficiency not strictly below the repeaterless limit".into());
    }
    gate(
        "secret-key-efficiency",
        if errs.is_empty() {
            Ok(format!(
                "eff = {:.4} bits/use, {:.3e} bits/mode < {:.3} bits/mode limit",
                pt.eff_per_use, pt.eff_per_mode, pt.pirandola_bound
            ))
        } else {
            Err(errs.join("; "))
        },
    );
}

#[test]
fn acceptance_03_repeaterless_limit_value() {
    let kappa_s = baseline().kappa_s();
    let v = pirandola_bound(kappa_s);
    gate(
        "repeaterless-limit-50km",
        if (v - 0.152).abs() < 1e-3 {
            Ok(format!("-log2(1 - {kappa_s}) = {v:.6}"))
        } else {
            Err(format!("got {v}, want 0.152 +/- 1e-3"))
        },
    );
}

#[test]
fn acceptance_04_injection_sweep_shape() {
    let grid = vec![0.0, 0.0025, 0.005, 0.0075, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1];
    let rows = fe_sweep(&baseline(), &grid, &OptimizerConfig::default()).expect("sweep runs");
    let mut errs = Vec::new();
    for w in rows.windows(2) {
        if w[1].point.skr_lb_bps > w[0].point.skr_lb_bps + 1e-9 {
            errs.push(format!(
                "rate grew from f_E={} ({}) to f_E={} ({})",
                w[0].x, w[0].point.skr_lb_bps, w[1].x, w[1].point.skr_lb_bps
            ));
        }
    }
    let standalone = optimize_operating_point(&baseline(), 0.01).expect("optimization runs");
    let row = rows.iter().find(|r| r.x == 0.01).expect("grid contains 0.01");
    if row.point.skr_lb_bps.to_bits() != standalone.skr_lb_bps.to_bits()
        || row.point.n_s_opt.to_bits() != standalone.n_s_opt.to_bits()
    {
        errs.push("f_E = 0.01 row does not reproduce the standalone optimization".into());
    }
    gate(
        "injection-sweep-shape",
        if errs.is_empty() {
            Ok(format!(
                "nonincreasing over {} points; f_E=0.01 row = {:.4} Gbps",
                rows.len(),
                row.point.skr_lb_bps / 1e9
            ))
        } else {
            Err(errs.join("; "))
        },
    );
}

#[test]
fn acceptance_05_received_photons_per_bit_window() {
    // sub-Gbps modulation rates keep the far rows feasible; the documented
    // config override for long-haul scenarios
    let cfg = OptimizerConfig {
        r_candidates: vec![5e7, 1e8, 2.5e8, 5e8, 1e9, 2e9, 5e9, 1e10],
        ..OptimizerConfig::default()
    };
    let grid: Vec<f64> = (1..=8).map(|i| 25.0 * i as f64).collect();
    let rows = distance_sweep(&baseline(), 0.01, &grid, &cfg).expect("sweep runs");
    let mut errs = Vec::new();
    for r in &rows {
        if r.point.status == PointStatus::ErrorConstraint
            || r.point.status == PointStatus::Infeasible
        {
            errs.push(format!("L = {} km has no admissible point", r.x));
            continue;
        }
        if !(0.3..=3.0).contains(&r.point.ppb_rx) {
            errs.push(format!("L = {} km: ppb_rx = {}", r.x, r.point.ppb_rx));
        }
        let recomputed = r.point.kappa_s * r.point.n_s_opt * (2e12 / r.point.r_opt);
        if (r.point.ppb_rx - recomputed).abs() > 1e-12 {
            errs.push(format!("L = {} km: ppb_rx inconsistent with kappa_S N_S M", r.x));
        }
    }
    let row50 = rows.iter().find(|r| r.x == 50.0).expect("grid contains 50");
    if (row50.point.ppb_rx - 0.86).abs() > 0.1 {
        errs.push(format!(
            "ppb_rx at 50 km = {}, want 0.86 within optimizer granularity",
            row50.point.ppb_rx
        ));
    }
    gate(
        "received-ppb-window",
        if errs.is_empty() {
            Ok(format!(
                "ppb_rx in [0.3, 3] out to 200 km; 50 km value {:.4}",
                row50.point.ppb_rx
            ))
        } else {
            Err(errs.join("; "))
        },
    );
}

#[test]
fn acceptance_06_per_mode_bound_orderings() {
    let ns_grid: Vec<f64> = (0..25).map(|k| 10f64.powf(-4.0 + k as f64 / 6.0)).collect();
    let rows = holevo_sweep(&baseline(), 0.01, &ns_grid).expect("sweep runs");
    let mut errs = Vec::new();
    for r in &rows {
        if r.passive_per_mode > r.optimum_per_mode * (1.0 + 1e-12) {
            errs.push(format!("N_S = {}: passive > optimum", r.n_s));
        }
        if r.active_per_mode > r.capacity_per_mode * (1.0 + 1e-9) {
            errs.push(format!(
                "N_S = {}: active {} > capacity {}",
                r.n_s, r.active_per_mode, r.capacity_per_mode
            ));
        }
    }
    let near = |target: f64| {
        rows.iter()
            .min_by(|a, b| {
                ((a.n_s - target).abs())
                    .partial_cmp(&(b.n_s - target).abs())
                    .unwrap()
            })
            .unwrap()
    };
    let low = near(1e-3);
    let gap = (low.active_per_mode - low.optimum_per_mode).abs() / low.optimum_per_mode;
    if gap > 0.25 {
        errs.push(format!("at N_S = {}: |active-optimum|/optimum = {gap:.3}", low.n_s));
    }
    let high = near(0.1);
    // dominance threshold was calibrated on the leading-order curves; the
    // exact-form ratio is reported alongside
    let dominance_asym = high.passive_asym_per_mode / high.optimum_asym_per_mode;
    let dominance_exact = high.passive_per_mode / high.optimum_per_mode;
    if dominance_asym < 0.7 {
        errs.push(format!(
            "at N_S = {}: passive/optimum = {dominance_asym:.3} (asymptotic)",
            high.n_s
        ));
    }
    gate(
        "per-mode-bound-orderings",
        if errs.is_empty() {
            Ok(format!(
                "orderings hold on {} points; gap(1e-3) = {gap:.3}, dominance(0.1) = {dominance_asym:.3} asym / {dominance_exact:.3} exact",
                rows.len()
            ))
        } else {
            Err(errs.join("; "))
        },
    );
}

#[test]
fn acceptance_07_attack_angle_optimality() {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut errs = Vec::new();
    let mut details = Vec::new();
    for (path_km, f_e, n_s) in [(25.0, 0.1, 0.01), (50.0, 0.01, 0.043)] {
        let p = SystemParams {
            path_km,
            ..SystemParams::default()
        }
        .with_operating_point(n_s, 1e10);
        let (gamma, delta) = verify_optimum_angles(&p, f_e).expect("search runs");
        if (gamma - half_pi).abs() > 1e-3 || (delta - half_pi).abs() > 1e-3 {
            errs.push(format!(
                "L={path_km}, f_E={f_e}, N_S={n_s}: argmax = ({gamma:.5}, {delta:.5})"
            ));
        } else {
            details.push(format!("L={path_km}: ({gamma:.5}, {delta:.5})"));
        }
    }
    gate(
        "attack-angle-optimality",
        if errs.is_empty() {
            Ok(format!("corner optimum confirmed; {}", details.join(", ")))
        } else {
            Err(errs.join("; "))
        },
    );
}

#[test]
fn acceptance_08_gaussian_core_invariants() {
    let mut errs = Vec::new();

    // two-mode squeezed vacuum stays pure across five decades of brightness
    for k in 0..=25 {
        let n = 10f64.powf(-4.0 + 5.0 * k as f64 / 25.0);
        let c = 2.0 * (n * (n + 1.0)).sqrt();
        let m = nalgebra::DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0 * n + 1.0, 0.0, c, 0.0,
                0.0, 2.0 * n + 1.0, 0.0, -c,
                c, 0.0, 2.0 * n + 1.0, 0.0,
                0.0, -c, 0.0, 2.0 * n + 1.0,
            ],
        ) * 0.25;
        match WignerCov::new(m).and_then(|cov| cov.symplectic_eigenvalues()) {
            Ok(s) => {
                for xi in s.eigenvalues {
                    if (xi - 0.25).abs() > 1e-8 {
                        errs.push(format!("TMSV N={n}: xi = {xi}"));
                    }
                }
            }
            Err(e) => errs.push(format!("TMSV N={n}: {e}")),
        }
    }

    // every assembled attack covariance respects the vacuum bound (the
    // constructor rejects violations, so assembly succeeding is the check)
    for &path_km in &[10.0, 50.0, 150.0] {
        for &n_s in &[1e-4, 0.043, 0.4] {
            for &f_e in &[0.0, 0.01, 0.3] {
                let p = SystemParams {
                    path_km,
                    ..SystemParams::default()
                }
                .with_operating_point(n_s, 1e10);
                let attack = AttackParams::optimum(f_e, p.kappa_s(), n_s).expect("attack");
                if let Err(e) = conditional_covariances(&attack, &p) {
                    errs.push(format!("L={path_km}, N_S={n_s}, f_E={f_e}: {e}"));
                }
            }
        }
    }

    // exact and leading-order bounds agree in the stated regime
    let mut worst: f64 = 0.0;
    for &kappa_s in &[0.01, 0.05, 0.1] {
        for i in 0..7 {
            let n_s = 10f64.powf(-2.0 + i as f64 / 6.0);
            for &f_e in &[0.0, 0.01, 0.05] {
                let p = SystemParams {
                    kappa_s_override: Some(kappa_s),
                    ..SystemParams::default()
                }
                .with_operating_point(n_s, 1e10);
                let exact = holevo_optimum_ub(&p, f_e).unwrap().uncapped_per_bit;
                let asym = holevo_asymptotic_ub(&p, f_e, n_s).unwrap().uncapped_per_bit;
                let rel = (exact - asym).abs() / asym;
                worst = worst.max(rel);
                if rel > 0.15 {
                    errs.push(format!(
                        "kappa_S={kappa_s}, N_S={n_s}, f_E={f_e}: exact/asym disagree by {rel:.3}"
                    ));
                }
            }
        }
    }

    gate(
        "gaussian-core-invariants",
        if errs.is_empty() {
            Ok(format!(
                "TMSV pure, attack covariances physical, exact-vs-asym worst gap {:.1}%",
                worst * 100.0
            ))
        } else {
            Err(errs.join("; "))
        },
    );
}

#[test]
fn acceptance_09_monitor_closed_loop() {
    let mut errs = Vec::new();

    // analytic loop at 1e-9
    let p = baseline();
    for &f_e in &[0.0, 0.01, 0.1, 0.5] {
        let rates = expected_rates(&p, f_e).expect("rates");
        match estimate_fe(&rates) {
            Ok(hat) if (hat - f_e).abs() < 1e-9 => {}
            Ok(hat) => errs.push(format!("analytic loop f_E={f_e}: got {hat}")),
            Err(e) => errs.push(format!("analytic loop f_E={f_e}: {e}")),
        }
    }

    // Monte Carlo recovery at ~1e6 detected idler counts
    let sim_p = SystemParams {
        bandwidth: 1e10,
        mod_rate: 1e9,
        ..baseline()
    };
    let duration = 0.105;
    let sim = simulate_events(&sim_p, 0.01, duration, 2025).expect("simulation");
    let hat = sim.rates.f_e_hat.expect("baseline defined");
    let se = estimate_fe_stderr(&sim.rates, duration);
    let idler_counts = sim.rates.s_i * duration;
    if idler_counts < 1e6 {
        errs.push(format!("only {idler_counts:.2e} idler detections"));
    }
    if (hat - 0.01).abs() > 3.0 * se {
        errs.push(format!("MC recovery: f_E_hat = {hat:.5} vs 0.01 +/- {:.5}", 3.0 * se));
    }

    // small-instance brute-force double sum vs the reduced closed form
    let n_modes: i64 = 64;
    let delta = 0.25;
    let mut total = 0.0;
    for n in -n_modes / 2..=n_modes / 2 {
        for m in -n_modes / 2..=n_modes / 2 {
            let x = std::f64::consts::PI * (n - m) as f64 * delta;
            total += delta * if x == 0.0 { 1.0 } else { x.sin() / x };
        }
    }
    let closed = (n_modes + 1) as f64;
    if (total - closed).abs() / closed > 0.02 {
        errs.push(format!("double sum {total:.3} vs closed form {closed}"));
    }

    gate(
        "monitor-closed-loop",
        if errs.is_empty() {
            Ok(format!(
                "analytic exact; MC f_E_hat = {hat:.5} +/- {se:.5} at {idler_counts:.2e} counts; 64-mode sum within 2%"
            ))
        } else {
            Err(errs.join("; "))
        },
    );
}

#[test]
fn acceptance_10_detection_time_leak_bound() {
    let p = baseline();
    let pt = optimize_operating_point(&p, 0.01).expect("optimization runs");
    let op = p.with_operating_point(pt.n_s_opt, pt.r_opt);
    let chi = holevo_optimum_ub(&op, 0.01).expect("bound").uncapped_per_bit;
    let leak = monitor_leak_ratio(&op, 0.01, chi).expect("leak ratio");

    let mut errs = Vec::new();
    let mut kb0 = p.clone();
    kb0.kappa_b = 0.0;
    let op0 = kb0.with_operating_point(pt.n_s_opt, pt.r_opt);
    let chi0 = holevo_optimum_ub(&op0, 0.01).expect("bound").uncapped_per_bit;
    let leak0 = monitor_leak_ratio(&op0, 0.01, chi0).expect("leak ratio");
    if leak0.ratio != 1.0 {
        errs.push(format!("kappa_B = 0 gives ratio {}, want exactly 1", leak0.ratio));
    }
    if leak.ratio > 1.013 {
        errs.push(format!(
            "ratio = {:.6} exceeds 1.013 at the 50 km operating point \
             (chi0/chi = {:.6}, p_click = {:.6}, per-bit chi = {:.6})",
            leak.ratio, leak.chi0_over_chi, leak.p_click, chi
        ));
    }
    gate(
        "detection-time-leak-bound",
        if errs.is_empty() {
            Ok(format!(
                "ratio = {:.5} <= 1.013; exactly 1 at kappa_B = 0",
                leak.ratio
            ))
        } else {
            Err(errs.join("; "))
        },
    );
}
