//! Terminal models: Alice's composite ASE+SPDC source with monitor taps and
//! the amplify-then-store reference chain, plus Bob's tap/modulator/amplifier.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::WignerCov;

/// Broadband ASE reference brightness is pinned to one photon per mode; the
/// hierarchy N_ASE = 1 << N_LO is what makes the combiner arithmetic work.
pub const N_ASE: f64 = 1.0;

/// Full protocol/hardware parameter set.
///
/// Brightnesses are photons s^-1 Hz^-1, rates are in Hz/bps, times in
/// seconds, path length in km.
#[derive(Debug, Clone, Serialize)]
pub struct SystemParams {
    /// Source bandwidth W (Hz).
    pub bandwidth: f64,
    /// BPSK modulation rate R (bits/s).
    pub mod_rate: f64,
    /// One-way path length L (km).
    pub path_km: f64,
    /// Fiber loss (dB/km).
    pub fiber_loss_db_per_km: f64,
    /// Direct channel-transmissivity override for non-fiber scenarios.
    pub kappa_s_override: Option<f64>,
    /// ASE-to-SPDC ratio n (the combiner is set for n:1).
    pub ase_spdc_ratio: f64,
    /// Combined source brightness N_A.
    pub source_brightness: f64,
    /// Alice's monitor tap fraction kappa_A.
    pub kappa_a: f64,
    /// Bob's monitor tap fraction kappa_B.
    pub kappa_b: f64,
    /// Bob's amplifier gain G_B.
    pub gain_bob: f64,
    /// Bob's amplifier output ASE brightness N_B (>= G_B - 1).
    pub noise_bob: f64,
    /// Homodyne efficiency eta.
    pub eta_homodyne: f64,
    /// Local-oscillator brightness N_LO.
    pub lo_brightness: f64,
    /// Reference amplifier gain G_R.
    pub gain_ref: f64,
    /// Reference storage transmissivity kappa_I.
    pub kappa_store: f64,
    /// Reconciliation efficiency beta.
    pub beta: f64,
    /// Monitor detector efficiencies.
    pub eta_mon_idler: f64,
    pub eta_mon_alice: f64,
    pub eta_mon_bob: f64,
    /// Coincidence gate duration T_g (s).
    pub gate_time: f64,
    /// Accidental-estimation time shift T_s (s).
    pub shift_time: f64,
    /// Key-generation session duration T_R (s).
    pub session_time: f64,
}

impl Default for SystemParams {
    /// The baseline operating assumptions used throughout the rate sweeps:
    /// 2 THz source bandwidth, 99:1 ASE-to-SPDC ratio, G_B = N_B = 1e4,
    /// 1% monitor taps, 0.9 homodyne efficiency, N_LO = 1e4, beta = 0.94,
    /// 0.2 dB/km fiber.
    fn default() -> Self {
        SystemParams {
            bandwidth: 2e12,
            mod_rate: 1e10,
            path_km: 50.0,
            fiber_loss_db_per_km: 0.2,
            kappa_s_override: None,
            ase_spdc_ratio: 99.0,
            source_brightness: 0.1,
            kappa_a: 0.01,
            kappa_b: 0.01,
            gain_bob: 1e4,
            noise_bob: 1e4,
            eta_homodyne: 0.9,
            lo_brightness: 1e4,
            gain_ref: 100.0,
            kappa_store: 0.01,
            beta: 0.94,
            eta_mon_idler: 0.9,
            eta_mon_alice: 0.9,
            eta_mon_bob: 0.9,
            gate_time: 100e-12,
            shift_time: 10e-9,
            session_time: 1.0,
        }
    }
}

impl SystemParams {
    /// One-way channel transmissivity, from path length and fiber loss
    /// unless overridden.
    pub fn kappa_s(&self) -> f64 {
        self.kappa_s_override
            .unwrap_or_else(|| 10f64.powf(-self.fiber_loss_db_per_km * self.path_km / 10.0))
    }

    /// Modes per bit, M = W/R.
    pub fn modes_per_bit(&self) -> f64 {
        self.bandwidth / self.mod_rate
    }

    /// Hard validity checks.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if self.bandwidth <= 0.0 || !self.bandwidth.is_finite() {
            return fail(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        if !(self.mod_rate > 0.0 && self.mod_rate <= self.bandwidth) {
            return fail(format!(
                "mod_rate must satisfy 0 < R <= W, got R={} W={}",
                self.mod_rate, self.bandwidth
            ));
        }
        if self.path_km < 0.0 || self.fiber_loss_db_per_km < 0.0 {
            return fail("path length and fiber loss must be nonnegative".into());
        }
        if let Some(ks) = self.kappa_s_override {
            if !(0.0..=1.0).contains(&ks) {
                return fail(format!("kappa_s override {ks} outside [0,1]"));
            }
        }
        for (name, val) in [
            ("kappa_A", self.kappa_a),
            ("kappa_B", self.kappa_b),
            ("eta", self.eta_homodyne),
            ("kappa_I", self.kappa_store),
            ("beta", self.beta),
            ("eta_I", self.eta_mon_idler),
            ("eta_A_mon", self.eta_mon_alice),
            ("eta_B_mon", self.eta_mon_bob),
        ] {
            if !(0.0..=1.0).contains(&val) {
                return fail(format!("{name} = {val} outside [0,1]"));
            }
        }
        for (name, val) in [
            ("N_A", self.source_brightness),
            ("N_LO", self.lo_brightness),
            ("N_B", self.noise_bob),
        ] {
            if val < 0.0 {
                return fail(format!("{name} = {val} must be nonnegative"));
            }
        }
        if self.gain_bob < 1.0 {
            return fail(format!("G_B = {} must be >= 1", self.gain_bob));
        }
        if self.noise_bob < self.gain_bob - 1.0 {
            return fail(format!(
                "N_B = {} violates the quantum limit N_B >= G_B - 1 = {}",
                self.noise_bob,
                self.gain_bob - 1.0
            ));
        }
        if self.gain_ref < 1.0 {
            return fail(format!("G_R = {} must be >= 1", self.gain_ref));
        }
        if !(self.gate_time > 0.0 && self.shift_time > 0.0 && self.session_time > 0.0) {
            return fail("monitor times must be positive".into());
        }
        Ok(())
    }

    /// Soft monitor-timing margins. The coincidence formulas assume
    /// W*T_s >> 1, T_s >> T_g, and T_s << T_R; below these margins the
    /// time-shifted gate no longer isolates accidentals cleanly.
    pub fn timing_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.bandwidth * self.shift_time < 100.0 {
            w.push(format!(
                "W*T_s = {:.3} < 100: shifted gate may retain true coincidences",
                self.bandwidth * self.shift_time
            ));
        }
        if self.shift_time < 10.0 * self.gate_time {
            w.push(format!(
                "T_s = {:.3e} < 10*T_g = {:.3e}: aligned and shifted gates overlap",
                self.shift_time,
                10.0 * self.gate_time
            ));
        }
        if self.session_time < 1e4 * self.shift_time {
            w.push(format!(
                "T_R = {:.3e} < 1e4*T_s = {:.3e}: session too short for stable accidentals",
                self.session_time,
                1e4 * self.shift_time
            ));
        }
        w
    }

    /// Copy with the brightness sent to Bob set to `n_s` (adjusting N_A for
    /// Alice's tap) and the modulation rate set to `mod_rate`.
    pub fn with_operating_point(&self, n_s: f64, mod_rate: f64) -> SystemParams {
        let mut p = self.clone();
        p.source_brightness = n_s / (1.0 - p.kappa_a);
        p.mod_rate = mod_rate;
        p
    }
}

/// Quantities fixed by the source design once SystemParams is known.
#[derive(Debug, Clone, Serialize)]
pub struct SourceDerived {
    /// Combiner transmissivity kappa_C.
    pub kappa_c: f64,
    /// SPDC brightness needed for the n:1 combine.
    pub n_spdc: f64,
    /// Brightness sent to Bob, N_S = (1 - kappa_A) N_A.
    pub n_s: f64,
    /// Modes per bit, M = W/R.
    pub modes_per_bit: f64,
    /// One-way channel transmissivity.
    pub kappa_s: f64,
    /// Normalized squared signal-reference correlation, n/(n+1).
    pub ref_correlation: f64,
    /// ASE-to-SPDC ratio carried along for reporting.
    pub ase_spdc_ratio: f64,
}

/// Combiner transmissivity and SPDC brightness for an n:1 ASE-to-SPDC mix at
/// total brightness N_A, plus the derived channel quantities.
pub fn derive_source(params: &SystemParams) -> Result<SourceDerived> {
    params.validate()?;
    let n = params.ase_spdc_ratio;
    let n_a = params.source_brightness;
    if n < 1.0 {
        return Err(Error::InvalidParams(format!(
            "ASE-to-SPDC ratio n = {n} must be >= 1"
        )));
    }
    if n_a >= 1.0 {
        return Err(Error::InfeasibleSource(format!(
            "N_A = {n_a} >= 1 leaves no combiner headroom"
        )));
    }
    let kappa_c = 1.0 - n * n_a / (n + 1.0);
    let n_spdc = n_a / (n * (1.0 - n_a) + 1.0);
    Ok(SourceDerived {
        kappa_c,
        n_spdc,
        n_s: (1.0 - params.kappa_a) * n_a,
        modes_per_bit: params.modes_per_bit(),
        kappa_s: params.kappa_s(),
        ref_correlation: n / (n + 1.0),
        ase_spdc_ratio: n,
    })
}

/// 6x6 covariance of a (signal-to-Bob, SPDC idler, ASE reference) mode
/// triple, interleaved quadrature ordering, modes in that order.
pub fn source_covariance(src: &SourceDerived, kappa_a: f64, n_lo: f64) -> Result<WignerCov> {
    if !(0.0..=1.0).contains(&kappa_a) {
        return Err(Error::InvalidParams(format!("kappa_A = {kappa_a} outside [0,1]")));
    }
    let a_s = 2.0 * src.n_s + 1.0;
    let a_spdc = 2.0 * src.n_spdc + 1.0;
    let a_lo = 2.0 * n_lo + 1.0;
    let c_spdc = 2.0 * (src.n_spdc * (src.n_spdc + 1.0)).sqrt();
    let c_ase = 2.0 * (N_ASE * n_lo).sqrt();
    let cp_spdc = ((1.0 - kappa_a) * src.kappa_c).sqrt() * c_spdc;
    let cp_ase = ((1.0 - kappa_a) * (1.0 - src.kappa_c)).sqrt() * c_ase;

    let mut m = DMatrix::zeros(6, 6);
    for q in 0..2 {
        m[(q, q)] = a_s;
        m[(2 + q, 2 + q)] = a_spdc;
        m[(4 + q, 4 + q)] = a_lo;
        // ASE cross block is proportional to the identity
        m[(q, 4 + q)] = cp_ase;
        m[(4 + q, q)] = cp_ase;
    }
    // SPDC cross block is phase sensitive: diag(+c, -c)
    m[(0, 2)] = cp_spdc;
    m[(2, 0)] = cp_spdc;
    m[(1, 3)] = -cp_spdc;
    m[(3, 1)] = -cp_spdc;
    WignerCov::new(m * 0.25)
}

/// Brightness and normalized squared correlation of Alice's reference after
/// the amplify-then-store chain.
///
/// The stored noise contribution is kappa_I * N_R with N_R = G_R; at G_R = 1
/// the amplifier term vanishes identically and storage is noiseless.
pub fn reference_storage_fidelity(
    src: &SourceDerived,
    gain_ref: f64,
    kappa_store: f64,
    n_lo: f64,
) -> Result<(f64, f64)> {
    if gain_ref < 1.0 {
        return Err(Error::Domain(format!("G_R = {gain_ref} must be >= 1")));
    }
    if !(kappa_store > 0.0 && kappa_store <= 1.0) {
        return Err(Error::Domain(format!("kappa_I = {kappa_store} outside (0,1]")));
    }
    let added_noise = if gain_ref > 1.0 { gain_ref } else { 0.0 };
    let stored_brightness = kappa_store * gain_ref * n_lo + kappa_store * added_noise;
    let stored_correlation =
        src.ref_correlation * (gain_ref * n_lo) / (gain_ref * n_lo + added_noise);
    Ok((stored_brightness, stored_correlation))
}

/// Brightness leaving Bob's terminal: tap, then gain, plus amplifier ASE.
pub fn bob_amplifier_output_brightness(params: &SystemParams, arriving: f64) -> Result<f64> {
    if arriving < 0.0 {
        return Err(Error::Domain(format!(
            "arriving brightness {arriving} must be nonnegative"
        )));
    }
    Ok(params.gain_bob * (1.0 - params.kappa_b) * arriving + params.noise_bob)
}
