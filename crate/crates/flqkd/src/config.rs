//! Run configuration: a flat key = value text format with dotted keys,
//! command-line overrides, and lossless re-emission for reproducibility.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::keyrate::OptimizerConfig;
use crate::terminals::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    KeyrateSweep,
    FeSweep,
    HolevoSweep,
    Point,
    MonitorSim,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::KeyrateSweep => "keyrate-sweep",
            Mode::FeSweep => "fe-sweep",
            Mode::HolevoSweep => "holevo-sweep",
            Mode::Point => "point",
            Mode::MonitorSim => "monitor-sim",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        Ok(match s {
            "keyrate-sweep" => Mode::KeyrateSweep,
            "fe-sweep" => Mode::FeSweep,
            "holevo-sweep" => Mode::HolevoSweep,
            "point" => Mode::Point,
            "monitor-sim" => Mode::MonitorSim,
            other => return Err(Error::Config(format!("unknown mode '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

impl OutputFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "jsonl",
        }
    }

    pub fn parse(s: &str) -> Result<OutputFormat> {
        Ok(match s {
            "csv" => OutputFormat::Csv,
            "jsonl" => OutputFormat::JsonLines,
            other => return Err(Error::Config(format!("unknown format '{other}'"))),
        })
    }
}

/// Grid of the mode's independent variable.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log_scale: bool,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points < 2 {
            return Err(Error::Config(format!(
                "grid.points = {} but sweeps need at least 2",
                self.points
            )));
        }
        if self.stop <= self.start {
            return Err(Error::Config(format!(
                "grid.stop = {} must exceed grid.start = {}",
                self.stop, self.start
            )));
        }
        if self.log_scale {
            if self.start <= 0.0 {
                return Err(Error::Config("log grid needs grid.start > 0".into()));
            }
            let (a, b) = (self.start.ln(), self.stop.ln());
            Ok((0..self.points)
                .map(|i| (a + (b - a) * i as f64 / (self.points - 1) as f64).exp())
                .collect())
        } else {
            Ok((0..self.points)
                .map(|i| {
                    self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64
                })
                .collect())
        }
    }
}

/// Everything one run needs; every field has a config key.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: SystemParams,
    pub f_e: f64,
    pub grid: GridSpec,
    grid_explicit: bool,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub seed: u64,
    pub threads: usize,
    pub fold_leak_correction: bool,
    pub duration: f64,
    pub events_out: Option<PathBuf>,
    pub optimizer: OptimizerConfig,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        let mut cfg = RunConfig {
            mode,
            params: SystemParams::default(),
            f_e: 0.01,
            grid: GridSpec {
                start: 0.0,
                stop: 1.0,
                points: 2,
                log_scale: false,
            },
            grid_explicit: false,
            out: PathBuf::from("flqkd_out.csv"),
            format: OutputFormat::Csv,
            seed: 1,
            threads: 0,
            fold_leak_correction: false,
            duration: 1e-3,
            events_out: None,
            optimizer: OptimizerConfig::default(),
        };
        cfg.grid = cfg.default_grid();
        cfg
    }

    fn default_grid(&self) -> GridSpec {
        match self.mode {
            Mode::KeyrateSweep => GridSpec {
                start: 10.0,
                stop: 200.0,
                points: 20,
                log_scale: true,
            },
            Mode::FeSweep => GridSpec {
                start: 0.0,
                stop: 0.1,
                points: 21,
                log_scale: false,
            },
            Mode::HolevoSweep => GridSpec {
                start: 1e-4,
                stop: 1.0,
                points: 25,
                log_scale: true,
            },
            Mode::Point | Mode::MonitorSim => GridSpec {
                start: 0.0,
                stop: 1.0,
                points: 2,
                log_scale: false,
            },
        }
    }

    /// Applies a config file: `key = value` lines, '#' comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected 'key = value', got '{raw}'",
                    path.display(),
                    lineno + 1
                )));
            };
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Applies one dotted-key override.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |value: &str| -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: '{value}' is not a number")))
        };
        let int = |value: &str| -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{key}: '{value}' is not an integer")))
        };
        let flag = |value: &str| -> Result<bool> {
            match value {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::Config(format!("{key}: '{value}' is not a boolean"))),
            }
        };
        match key {
            "mode" => {
                let mode = Mode::parse(value)?;
                self.mode = mode;
                if !self.grid_explicit {
                    self.grid = self.default_grid();
                }
            }
            "f_E" => self.f_e = num(value)?,
            "out" => self.out = PathBuf::from(value),
            "format" => self.format = OutputFormat::parse(value)?,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("{key}: '{value}' is not a u64")))?
            }
            "threads" => self.threads = int(value)?,
            "fold_leak_correction" => self.fold_leak_correction = flag(value)?,
            "duration" => self.duration = num(value)?,
            "events_out" => {
                self.events_out = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "grid.start" => {
                self.grid.start = num(value)?;
                self.grid_explicit = true;
            }
            "grid.stop" => {
                self.grid.stop = num(value)?;
                self.grid_explicit = true;
            }
            "grid.points" => {
                self.grid.points = int(value)?;
                self.grid_explicit = true;
            }
            "grid.scale" => {
                self.grid.log_scale = match value {
                    "log" => true,
                    "lin" => false,
                    _ => {
                        return Err(Error::Config(format!(
                            "{key}: expected lin or log, got '{value}'"
                        )))
                    }
                };
                self.grid_explicit = true;
            }
            "opt.r_candidates" => {
                let mut rs = Vec::new();
                for part in value.split(',') {
                    rs.push(num(part.trim())?);
                }
                if rs.is_empty() {
                    return Err(Error::Config("opt.r_candidates list is empty".into()));
                }
                self.optimizer.r_candidates = rs;
            }
            "opt.ns_min" => self.optimizer.ns_min = num(value)?,
            "opt.ns_max" => self.optimizer.ns_max = num(value)?,
            "opt.ns_points" => self.optimizer.ns_grid_points = int(value)?,
            "opt.refine_tol" => self.optimizer.refine_rel_tol = num(value)?,
            "params.W" => self.params.bandwidth = num(value)?,
            "params.R" => self.params.mod_rate = num(value)?,
            "params.L" => self.params.path_km = num(value)?,
            "params.fiber_loss" => self.params.fiber_loss_db_per_km = num(value)?,
            "params.kappa_S" => {
                self.params.kappa_s_override = if value.is_empty() || value == "auto" {
                    None
                } else {
                    Some(num(value)?)
                }
            }
            "params.n" => self.params.ase_spdc_ratio = num(value)?,
            "params.N_A" => self.params.source_brightness = num(value)?,
            "params.kappa_A" => self.params.kappa_a = num(value)?,
            "params.kappa_B" => self.params.kappa_b = num(value)?,
            "params.G_B" => self.params.gain_bob = num(value)?,
            "params.N_B" => self.params.noise_bob = num(value)?,
            "params.eta" => self.params.eta_homodyne = num(value)?,
            "params.N_LO" => self.params.lo_brightness = num(value)?,
            "params.G_R" => self.params.gain_ref = num(value)?,
            "params.kappa_I" => self.params.kappa_store = num(value)?,
            "params.beta" => self.params.beta = num(value)?,
            "params.eta_I" => self.params.eta_mon_idler = num(value)?,
            "params.eta_A_mon" => self.params.eta_mon_alice = num(value)?,
            "params.eta_B_mon" => self.params.eta_mon_bob = num(value)?,
            "params.T_g" => self.params.gate_time = num(value)?,
            "params.T_s" => self.params.shift_time = num(value)?,
            "params.T_R" => self.params.session_time = num(value)?,
            other => {
                return Err(Error::Config(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    /// Validates everything the run will rely on, before any computation.
    pub fn validate(&self) -> Result<()> {
        self.params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.f_e) {
            return Err(Error::Config(format!("f_E = {} outside [0,1]", self.f_e)));
        }
        match self.mode {
            Mode::KeyrateSweep | Mode::FeSweep | Mode::HolevoSweep => {
                self.grid.values()?;
            }
            Mode::MonitorSim => {
                if self.duration <= 0.0 {
                    return Err(Error::Config(format!(
                        "duration = {} must be positive",
                        self.duration
                    )));
                }
            }
            Mode::Point => {}
        }
        Ok(())
    }

    /// The full resolved configuration as re-runnable key = value text.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mode", self.mode.as_str().into());
        kv("f_E", fmt_f64(self.f_e));
        kv("out", self.out.display().to_string());
        kv("format", self.format.as_str().into());
        kv("seed", self.seed.to_string());
        kv("threads", self.threads.to_string());
        kv("fold_leak_correction", self.fold_leak_correction.to_string());
        kv("duration", fmt_f64(self.duration));
        if let Some(p) = &self.events_out {
            kv("events_out", p.display().to_string());
        }
        kv("grid.start", fmt_f64(self.grid.start));
        kv("grid.stop", fmt_f64(self.grid.stop));
        kv("grid.points", self.grid.points.to_string());
        kv("grid.scale", if self.grid.log_scale { "log" } else { "lin" }.into());
        kv(
            "opt.r_candidates",
            self.optimizer
                .r_candidates
                .iter()
                .map(|&r| fmt_f64(r))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("opt.ns_min", fmt_f64(self.optimizer.ns_min));
        kv("opt.ns_max", fmt_f64(self.optimizer.ns_max));
        kv("opt.ns_points", self.optimizer.ns_grid_points.to_string());
        kv("opt.refine_tol", fmt_f64(self.optimizer.refine_rel_tol));
        let p = &self.params;
        kv("params.W", fmt_f64(p.bandwidth));
        kv("params.R", fmt_f64(p.mod_rate));
        kv("params.L", fmt_f64(p.path_km));
        kv("params.fiber_loss", fmt_f64(p.fiber_loss_db_per_km));
        if let Some(ks) = p.kappa_s_override {
            kv("params.kappa_S", fmt_f64(ks));
        }
        kv("params.n", fmt_f64(p.ase_spdc_ratio));
        kv("params.N_A", fmt_f64(p.source_brightness));
        kv("params.kappa_A", fmt_f64(p.kappa_a));
        kv("params.kappa_B", fmt_f64(p.kappa_b));
        kv("params.G_B", fmt_f64(p.gain_bob));
        kv("params.N_B", fmt_f64(p.noise_bob));
        kv("params.eta", fmt_f64(p.eta_homodyne));
        kv("params.N_LO", fmt_f64(p.lo_brightness));
        kv("params.G_R", fmt_f64(p.gain_ref));
        kv("params.kappa_I", fmt_f64(p.kappa_store));
        kv("params.beta", fmt_f64(p.beta));
        kv("params.eta_I", fmt_f64(p.eta_mon_idler));
        kv("params.eta_A_mon", fmt_f64(p.eta_mon_alice));
        kv("params.eta_B_mon", fmt_f64(p.eta_mon_bob));
        kv("params.T_g", fmt_f64(p.gate_time));
        kv("params.T_s", fmt_f64(p.shift_time));
        kv("params.T_R", fmt_f64(p.session_time));
        s
    }
}

/// Shortest representation that round-trips the double exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
