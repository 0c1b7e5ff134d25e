//! Run orchestration: dispatches a RunConfig to the sweep drivers and emits
//! the data file plus a metadata sidecar that can re-run the job.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use serde_json::json;

use crate::config::{fmt_f64, Mode, OutputFormat, RunConfig};
use crate::error::Result;
use crate::keyrate::{
    distance_sweep, fe_sweep, holevo_sweep, optimize_with, HolevoSweepRow, SweepRow,
    ACTIVE_OPTIMUM_GAP_MAX, PASSIVE_DOMINANCE_MIN, PR_E_MAX,
};
use crate::monitor::{estimate_fe_stderr, expected_rates, simulate_events, write_event_streams, MonitorRates};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Executes one configured run. Returns warnings for the caller to surface.
pub fn run(config: &RunConfig) -> Result<Vec<String>> {
    config.validate()?;
    let started = Instant::now();
    let mut warnings = config.params.timing_warnings();
    if config.params.kappa_s() > 0.3 {
        warnings.push(format!(
            "kappa_S = {:.3} is outside the kappa_S << 1 regime; asymptotic chi columns are unreliable",
            config.params.kappa_s()
        ));
    }
    let optimizer = {
        let mut opt = config.optimizer.clone();
        opt.fold_leak_correction = config.fold_leak_correction;
        opt
    };

    let payload = match config.mode {
        Mode::KeyrateSweep => {
            let grid = config.grid.values()?;
            let rows = distance_sweep(&config.params, config.f_e, &grid, &optimizer)?;
            render_point_rows("L_km", &rows, config.format)
        }
        Mode::FeSweep => {
            let grid = config.grid.values()?;
            let rows = fe_sweep(&config.params, &grid, &optimizer)?;
            render_point_rows("f_E", &rows, config.format)
        }
        Mode::HolevoSweep => {
            let grid = config.grid.values()?;
            let rows = holevo_sweep(&config.params, config.f_e, &grid)?;
            render_holevo_rows(&rows, config.format)
        }
        Mode::Point => {
            let point = optimize_with(&config.params, config.f_e, &optimizer)?;
            let row = SweepRow {
                x: config.params.path_km,
                point,
            };
            render_point_rows("L_km", std::slice::from_ref(&row), config.format)
        }
        Mode::MonitorSim => {
            let expected = expected_rates(&config.params, config.f_e)?;
            let sim = simulate_events(&config.params, config.f_e, config.duration, config.seed)?;
            if let Some(events_path) = &config.events_out {
                let f = File::create(events_path)?;
                write_event_streams(&sim.streams, BufWriter::new(f))?;
            }
            let se = estimate_fe_stderr(&sim.rates, config.duration);
            render_monitor_rows(&expected, &sim.rates, se, config.format)
        }
    };

    std::fs::write(&config.out, payload)?;
    write_metadata(config, started.elapsed().as_secs_f64(), &warnings)?;
    Ok(warnings)
}

fn write_metadata(config: &RunConfig, wall_clock_s: f64, warnings: &[String]) -> Result<()> {
    let meta_path = {
        let mut os = config.out.as_os_str().to_owned();
        os.push(".meta");
        std::path::PathBuf::from(os)
    };
    let mut f = BufWriter::new(File::create(meta_path)?);
    writeln!(f, "# flqkd v{ENGINE_VERSION}")?;
    writeln!(f, "# wall_clock_s = {wall_clock_s}")?;
    writeln!(
        f,
        "# bound methods: chi_ub = exact symplectic; chi_asym = leading order in kappa_S"
    )?;
    writeln!(
        f,
        "# thresholds: pr_e_max = {PR_E_MAX}, active_optimum_gap_max = {ACTIVE_OPTIMUM_GAP_MAX}, \
         passive_dominance_min = {PASSIVE_DOMINANCE_MIN} (ratio checks use the asymptotic columns)"
    )?;
    for w in warnings {
        writeln!(f, "# warning: {w}")?;
    }
    writeln!(f, "# re-run with: flqkd <mode> --config <this file>")?;
    write!(f, "{}", config.to_config_text())?;
    Ok(())
}

const POINT_COLUMNS: &[&str] = &[
    "kappa_S",
    "N_S_opt",
    "R_opt",
    "pr_e",
    "I_AB_bps",
    "chi_ub_bps",
    "skr_lb_bps",
    "ppb_tx",
    "ppb_rx",
    "eff_per_use",
    "eff_per_mode",
    "pirandola_bound",
    "chi_asym_bps",
    "leak_ratio",
    "status",
];

fn point_cells(row: &SweepRow) -> Vec<String> {
    let p = &row.point;
    vec![
        fmt_f64(p.kappa_s),
        fmt_f64(p.n_s_opt),
        fmt_f64(p.r_opt),
        fmt_f64(p.pr_e),
        fmt_f64(p.i_ab_bps),
        fmt_f64(p.chi_ub_bps),
        fmt_f64(p.skr_lb_bps),
        fmt_f64(p.ppb_tx),
        fmt_f64(p.ppb_rx),
        fmt_f64(p.eff_per_use),
        fmt_f64(p.eff_per_mode),
        fmt_f64(p.pirandola_bound),
        fmt_f64(p.chi_asym_bps),
        fmt_f64(p.leak_ratio),
        serde_json::to_value(p.status)
            .expect("status serializes")
            .as_str()
            .expect("status is a string")
            .to_string(),
    ]
}

fn render_point_rows(x_name: &str, rows: &[SweepRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut s = String::new();
            s.push_str(x_name);
            for c in POINT_COLUMNS {
                s.push(',');
                s.push_str(c);
            }
            s.push('\n');
            for row in rows {
                s.push_str(&fmt_f64(row.x));
                for cell in point_cells(row) {
                    s.push(',');
                    s.push_str(&cell);
                }
                s.push('\n');
            }
            s
        }
        OutputFormat::JsonLines => {
            let mut s = String::new();
            for row in rows {
                let mut v = serde_json::to_value(&row.point).expect("point serializes");
                v.as_object_mut()
                    .expect("point is an object")
                    .insert(x_name.to_string(), json!(row.x));
                s.push_str(&v.to_string());
                s.push('\n');
            }
            s
        }
    }
}

fn render_holevo_rows(rows: &[HolevoSweepRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut s = String::from(
                "N_S,optimum_per_mode,passive_per_mode,active_per_mode,capacity_per_mode,\
                 optimum_asym_per_mode,passive_asym_per_mode,optimum_capped,passive_capped,active_capped\n",
            );
            for r in rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    fmt_f64(r.n_s),
                    fmt_f64(r.optimum_per_mode),
                    fmt_f64(r.passive_per_mode),
                    fmt_f64(r.active_per_mode),
                    fmt_f64(r.capacity_per_mode),
                    fmt_f64(r.optimum_asym_per_mode),
                    fmt_f64(r.passive_asym_per_mode),
                    r.optimum_capped,
                    r.passive_capped,
                    r.active_capped,
                ));
            }
            s
        }
        OutputFormat::JsonLines => {
            let mut s = String::new();
            for r in rows {
                s.push_str(&serde_json::to_string(r).expect("row serializes"));
                s.push('\n');
            }
            s
        }
    }
}

fn monitor_cells(kind: &str, r: &MonitorRates, stderr: Option<f64>) -> Vec<String> {
    vec![
        kind.to_string(),
        fmt_f64(r.s_i),
        fmt_f64(r.s_a),
        fmt_f64(r.s_b),
        fmt_f64(r.c_ia),
        fmt_f64(r.c_ia_shifted),
        fmt_f64(r.c_ib),
        fmt_f64(r.c_ib_shifted),
        r.f_e_hat.map(fmt_f64).unwrap_or_default(),
        stderr.map(fmt_f64).unwrap_or_default(),
        if r.f_e_hat.is_some() { "ok" } else { "undefined" }.to_string(),
    ]
}

fn render_monitor_rows(
    expected: &MonitorRates,
    simulated: &MonitorRates,
    stderr: f64,
    format: OutputFormat,
) -> String {
    match format {
        OutputFormat::Csv => {
            let mut s = String::from(
                "kind,S_I,S_A,S_B,C_IA,C_IA_shifted,C_IB,C_IB_shifted,f_E_hat,f_E_hat_stderr,estimate\n",
            );
            for cells in [
                monitor_cells("expected", expected, None),
                monitor_cells("simulated", simulated, Some(stderr)),
            ] {
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
        OutputFormat::JsonLines => {
            let mut s = String::new();
            for (kind, rates, se) in
                [("expected", expected, None), ("simulated", simulated, Some(stderr))]
            {
                let mut v = serde_json::to_value(rates).expect("rates serialize");
                let obj = v.as_object_mut().expect("rates are an object");
                obj.insert("kind".into(), json!(kind));
                if let Some(se) = se {
                    obj.insert("f_e_hat_stderr".into(), json!(se));
                }
                s.push_str(&v.to_string());
                s.push('\n');
            }
            s
        }
    }
}
