//! Photon-coincidence channel monitoring: expected singles and coincidence
//! rates, the intrusion-fraction estimator built from them, and an
//! event-level Monte Carlo validator.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::terminals::{derive_source, SourceDerived, SystemParams};

/// Expected or measured monitor observables for one session.
#[derive(Debug, Clone, Serialize)]
pub struct MonitorRates {
    /// Singles rates, counts/s.
    pub s_i: f64,
    pub s_a: f64,
    pub s_b: f64,
    /// Time-aligned and time-shifted coincidence rates, coincidences/s.
    pub c_ia: f64,
    pub c_ia_shifted: f64,
    pub c_ib: f64,
    pub c_ib_shifted: f64,
    /// Intrusion estimate; absent when the baseline is undefined.
    pub f_e_hat: Option<f64>,
}

/// Which coincidence pair a rate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoincidencePair {
    IdlerAlice,
    IdlerBob,
}

/// Expected singles rates (S_I, S_A, S_B) in counts/s.
pub fn expected_singles(params: &SystemParams, src: &SourceDerived) -> (f64, f64, f64) {
    let w = params.bandwidth;
    let n_a = params.source_brightness;
    (
        params.eta_mon_idler * src.n_spdc * w,
        params.eta_mon_alice * params.kappa_a * n_a * w,
        params.eta_mon_bob * params.kappa_b * src.kappa_s * src.n_s * w,
    )
}

/// Detectors whose gate occupancy S_K * T_g exceeds the low-flux margin, at
/// which point the closed-form rates start undercounting.
pub fn low_flux_violations(params: &SystemParams, src: &SourceDerived) -> Vec<&'static str> {
    let (s_i, s_a, s_b) = expected_singles(params, src);
    let mut v = Vec::new();
    for (name, s) in [("S_I", s_i), ("S_A", s_a), ("S_B", s_b)] {
        if s * params.gate_time > 0.1 {
            v.push(name);
        }
    }
    v
}

fn check_gate_regime(params: &SystemParams) -> Result<()> {
    if params.bandwidth * params.shift_time < 100.0 || params.shift_time < 10.0 * params.gate_time
    {
        return Err(Error::RegimeViolation(format!(
            "need W*T_s >= 100 and T_s >= 10*T_g; got W*T_s = {:.3}, T_s/T_g = {:.3}",
            params.bandwidth * params.shift_time,
            params.shift_time / params.gate_time
        )));
    }
    Ok(())
}

/// True-coincidence excess C_IK - C~_IK in coincidences/s, from the
/// phase-sensitive cross covariance between the idler and the tapped mode.
/// The optimum attack transmits Alice's light with |u0|^2 = (1-f_E) kappa_S.
pub fn expected_coincidence_excess(
    params: &SystemParams,
    src: &SourceDerived,
    pair: CoincidencePair,
    f_e: f64,
) -> Result<f64> {
    check_gate_regime(params)?;
    if !(0.0..=1.0).contains(&f_e) {
        return Err(Error::Domain(format!("f_E = {f_e} outside [0,1]")));
    }
    let w = params.bandwidth;
    let pair_strength = src.n_spdc * (src.n_spdc + 1.0);
    Ok(match pair {
        CoincidencePair::IdlerAlice => {
            params.eta_mon_idler
                * params.eta_mon_alice
                * w
                * params.kappa_a
                * src.kappa_c
                * pair_strength
        }
        CoincidencePair::IdlerBob => {
            let u0_sq = (1.0 - f_e) * src.kappa_s;
            params.eta_mon_idler
                * params.eta_mon_bob
                * w
                * params.kappa_b
                * (1.0 - params.kappa_a)
                * src.kappa_c
                * u0_sq
                * pair_strength
        }
    })
}

/// Analytic MonitorRates under the optimum attack, with accidental rates
/// S_I S_K T_g added to both gates.
pub fn expected_rates(params: &SystemParams, f_e: f64) -> Result<MonitorRates> {
    let src = derive_source(params)?;
    let (s_i, s_a, s_b) = expected_singles(params, &src);
    let ex_ia = expected_coincidence_excess(params, &src, CoincidencePair::IdlerAlice, f_e)?;
    let ex_ib = expected_coincidence_excess(params, &src, CoincidencePair::IdlerBob, f_e)?;
    let acc_ia = s_i * s_a * params.gate_time;
    let acc_ib = s_i * s_b * params.gate_time;
    let mut rates = MonitorRates {
        s_i,
        s_a,
        s_b,
        c_ia: ex_ia + acc_ia,
        c_ia_shifted: acc_ia,
        c_ib: ex_ib + acc_ib,
        c_ib_shifted: acc_ib,
        f_e_hat: None,
    };
    rates.f_e_hat = estimate_fe(&rates).ok();
    Ok(rates)
}

/// Intrusion estimator
/// f_E = 1 - [(C_IB - C~_IB)/S_B] / [(C_IA - C~_IA)/S_A].
pub fn estimate_fe(rates: &MonitorRates) -> Result<f64> {
    if rates.s_a <= 0.0 || rates.s_b <= 0.0 {
        return Err(Error::UndefinedBaseline(
            "singles rates must be positive".into(),
        ));
    }
    let ex_ia = rates.c_ia - rates.c_ia_shifted;
    if ex_ia <= 0.0 {
        return Err(Error::UndefinedBaseline(format!(
            "idler-Alice coincidence excess {ex_ia} is not positive; monitoring impossible"
        )));
    }
    let ex_ib = rates.c_ib - rates.c_ib_shifted;
    Ok(1.0 - (ex_ib / rates.s_b) / (ex_ia / rates.s_a))
}

/// Standard error of the estimator from Poisson counting statistics over a
/// session of the given duration.
pub fn estimate_fe_stderr(rates: &MonitorRates, duration: f64) -> f64 {
    let ex_ia = (rates.c_ia - rates.c_ia_shifted).max(f64::MIN_POSITIVE);
    let ex_ib = (rates.c_ib - rates.c_ib_shifted).max(f64::MIN_POSITIVE);
    let relvar_ia = (rates.c_ia + rates.c_ia_shifted) / (duration * ex_ia * ex_ia);
    let relvar_ib = (rates.c_ib + rates.c_ib_shifted) / (duration * ex_ib * ex_ib);
    let ratio = (ex_ib / rates.s_b) / (ex_ia / rates.s_a);
    ratio * (relvar_ia + relvar_ib).sqrt()
}

/// Which monitor detector an event stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Detector {
    Idler,
    AliceTap,
    BobTap,
}

impl Detector {
    pub fn code(&self) -> char {
        match self {
            Detector::Idler => 'I',
            Detector::AliceTap => 'A',
            Detector::BobTap => 'B',
        }
    }
}

/// Detection timestamps of one monitor detector, sorted, in seconds,
/// within [-duration/2, duration/2].
#[derive(Debug, Clone)]
pub struct EventStream {
    pub detector: Detector,
    pub timestamps: Vec<f64>,
    pub seed: u64,
}

/// Result of an event-level simulation.
#[derive(Debug)]
pub struct SimulatedMonitor {
    pub rates: MonitorRates,
    pub duration: f64,
    pub streams: [EventStream; 3],
}

/// Generates correlated detection events for the three monitors and counts
/// gated coincidences exactly as hardware would.
///
/// Photon pairs are drawn from the idler stream with the partner probability
/// set by the cross covariance; uncorrelated singles fill in the residual
/// rates; detector efficiencies thin each arm independently. Detector jitter
/// is folded into the gate by spreading pair partners over half a gate.
pub fn simulate_events(
    params: &SystemParams,
    f_e: f64,
    duration: f64,
    seed: u64,
) -> Result<SimulatedMonitor> {
    check_gate_regime(params)?;
    let src = derive_source(params)?;
    if duration <= 0.0 {
        return Err(Error::Domain("duration must be positive".into()));
    }

    // generation-side (pre-efficiency) rates
    let idler_rate = src.n_spdc * params.bandwidth;
    if idler_rate * duration > 5e7 {
        return Err(Error::Domain(format!(
            "{:.2e} expected idler events exceed the simulation budget",
            idler_rate * duration
        )));
    }
    let pair_strength = src.n_spdc + 1.0;
    let p_pair_a = params.kappa_a * src.kappa_c * pair_strength;
    let p_pair_b =
        params.kappa_b * (1.0 - params.kappa_a) * src.kappa_c * (1.0 - f_e) * src.kappa_s
            * pair_strength;
    let bg_a = params.kappa_a * params.source_brightness * params.bandwidth
        - idler_rate * p_pair_a;
    let bg_b = params.kappa_b * src.kappa_s * src.n_s * params.bandwidth - idler_rate * p_pair_b;
    debug_assert!(bg_a >= -1e-9 && bg_b >= -1e-9);

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let t0 = -duration / 2.0;
    let t1 = duration / 2.0;
    let jitter = params.gate_time / 4.0;

    let mut idler = Vec::new();
    let mut alice = Vec::new();
    let mut bob = Vec::new();

    // paired generation driven by the idler stream
    if idler_rate > 0.0 {
        let gap = Exp::new(idler_rate).expect("positive rate");
        let mut t = t0 + gap.sample(&mut rng);
        while t < t1 {
            let detected_idler = rng.gen::<f64>() < params.eta_mon_idler;
            if detected_idler {
                idler.push(t);
            }
            if rng.gen::<f64>() < p_pair_a && rng.gen::<f64>() < params.eta_mon_alice {
                let tp = t + rng.gen_range(-jitter..jitter);
                if tp >= t0 && tp < t1 {
                    alice.push(tp);
                }
            }
            if rng.gen::<f64>() < p_pair_b && rng.gen::<f64>() < params.eta_mon_bob {
                let tp = t + rng.gen_range(-jitter..jitter);
                if tp >= t0 && tp < t1 {
                    bob.push(tp);
                }
            }
            t += gap.sample(&mut rng);
        }
    }

    // uncorrelated singles at the residual rates
    for (rate, eta, sink) in [
        (bg_a.max(0.0), params.eta_mon_alice, &mut alice),
        (bg_b.max(0.0), params.eta_mon_bob, &mut bob),
    ] {
        let thinned = rate * eta;
        if thinned <= 0.0 {
            continue;
        }
        let gap = Exp::new(thinned).expect("positive rate");
        let mut t = t0 + gap.sample(&mut rng);
        while t < t1 {
            sink.push(t);
            t += gap.sample(&mut rng);
        }
    }

    idler.sort_by(|a, b| a.partial_cmp(b).expect("finite timestamps"));
    alice.sort_by(|a, b| a.partial_cmp(b).expect("finite timestamps"));
    bob.sort_by(|a, b| a.partial_cmp(b).expect("finite timestamps"));

    let gate = params.gate_time;
    let shift = params.shift_time;
    let mut rates = MonitorRates {
        s_i: idler.len() as f64 / duration,
        s_a: alice.len() as f64 / duration,
        s_b: bob.len() as f64 / duration,
        c_ia: gated_coincidences(&idler, &alice, 0.0, gate) as f64 / duration,
        c_ia_shifted: gated_coincidences(&idler, &alice, shift, gate) as f64 / duration,
        c_ib: gated_coincidences(&idler, &bob, 0.0, gate) as f64 / duration,
        c_ib_shifted: gated_coincidences(&idler, &bob, shift, gate) as f64 / duration,
        f_e_hat: None,
    };
    rates.f_e_hat = estimate_fe(&rates).ok();

    Ok(SimulatedMonitor {
        rates,
        duration,
        streams: [
            EventStream {
                detector: Detector::Idler,
                timestamps: idler,
                seed,
            },
            EventStream {
                detector: Detector::AliceTap,
                timestamps: alice,
                seed,
            },
            EventStream {
                detector: Detector::BobTap,
                timestamps: bob,
                seed,
            },
        ],
    })
}

/// Number of (idler, other) pairs with t_other in the gate around
/// t_idler + offset. Both inputs must be sorted.
pub fn gated_coincidences(idler: &[f64], other: &[f64], offset: f64, gate: f64) -> u64 {
    let mut lo = 0usize;
    let mut hi = 0usize;
    let mut count = 0u64;
    for &t in idler {
        let wlo = t + offset - gate / 2.0;
        let whi = t + offset + gate / 2.0;
        while lo < other.len() && other[lo] < wlo {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < other.len() && other[hi] <= whi {
            hi += 1;
        }
        count += (hi - lo) as u64;
    }
    count
}

/// Writes event streams as two-column text: detector code and integer
/// picosecond timestamp.
pub fn write_event_streams<W: Write>(streams: &[EventStream], mut out: W) -> Result<()> {
    for stream in streams {
        let code = stream.detector.code();
        for &t in &stream.timestamps {
            writeln!(out, "{code} {}", (t * 1e12).round() as i64)?;
        }
    }
    Ok(())
}
