//! Alice's broadband homodyne receiver: conditional moments of the
//! photon-count difference, bit error probability, and the resulting
//! Shannon-information rate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::q_function;
use crate::terminals::{derive_source, SystemParams, N_ASE};

/// Conditional mean and standard deviation of the homodyne measurement for
/// each of Bob's bit values. BPSK symmetry gives mu1 = -mu0 and a
/// bit-independent standard deviation.
#[derive(Debug, Clone, Serialize)]
pub struct HomodyneMoments {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    /// (mu0 - mu1) / (sigma0 + sigma1); the detection SNR argument.
    pub snr_argument: f64,
}

/// Error probability and Shannon rate of the reconciled channel.
#[derive(Debug, Clone, Serialize)]
pub struct InfoRates {
    pub pr_e: f64,
    pub i_ab_bps: f64,
    pub i_ab_per_bit: f64,
}

/// Homodyne moments with every loss included, assuming perfect reference
/// storage. The correlated part of the return light is the ASE component
/// that survives both taps, Eve's injection, and the combiner.
pub fn homodyne_moments(params: &SystemParams, f_e: f64) -> Result<HomodyneMoments> {
    if !(0.0..=1.0).contains(&f_e) {
        return Err(Error::Domain(format!("f_E = {f_e} outside [0,1]")));
    }
    let src = derive_source(params)?;
    let m = params.modes_per_bit();
    let kappa_s = src.kappa_s;
    let eta = params.eta_homodyne;

    let n_ase_eff = (1.0 - params.kappa_b)
        * (1.0 - f_e)
        * (1.0 - params.kappa_a)
        * (1.0 - src.kappa_c)
        * N_ASE;
    let mu0 = 2.0
        * m
        * eta
        * kappa_s
        * (params.gain_bob * n_ase_eff * params.lo_brightness).sqrt();

    let n_r_alice = kappa_s * params.gain_bob * (1.0 - params.kappa_b) * kappa_s * src.n_s
        + kappa_s * params.noise_bob;
    let n_1 = n_r_alice + params.lo_brightness;
    let sigma = (m
        * (eta * n_1
            + 2.0
                * eta
                * eta
                * (n_r_alice * params.lo_brightness
                    + kappa_s * kappa_s * params.gain_bob * n_ase_eff * params.lo_brightness)))
        .sqrt();

    let snr_argument = if sigma > 0.0 { mu0 / sigma } else { 0.0 };
    Ok(HomodyneMoments {
        mu0,
        mu1: -mu0,
        sigma0: sigma,
        sigma1: sigma,
        snr_argument,
    })
}

/// Bit error probability Q((mu0 - mu1)/(sigma0 + sigma1)).
pub fn error_probability(m: &HomodyneMoments) -> Result<f64> {
    let denom = m.sigma0 + m.sigma1;
    if denom <= 0.0 {
        return Err(Error::DegenerateReceiver(
            "zero measurement spread; dead detector".into(),
        ));
    }
    Ok(q_function((m.mu0 - m.mu1) / denom))
}

/// Large-N_B, large-N_LO error probability, with the small SPDC component of
/// the transmitted light and Bob's tap both neglected. Cross-validation
/// route only.
pub fn asymptotic_error_probability(params: &SystemParams, f_e: f64, n_s: f64) -> f64 {
    let m = params.modes_per_bit();
    let kappa_s = params.kappa_s();
    q_function(
        (2.0 * m * kappa_s * params.gain_bob * (1.0 - f_e) * n_s / params.noise_bob).sqrt(),
    )
}

/// Binary entropy with the 0 log 0 = 0 convention.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Shannon-information rate R (1 - h2(pr_e)) of the BPSK channel.
pub fn shannon_rate(pr_e: f64, mod_rate: f64) -> Result<InfoRates> {
    if !(0.0..=0.5).contains(&pr_e) {
        return Err(Error::Domain(format!(
            "pr_e = {pr_e} outside [0, 0.5]; relabel bits instead"
        )));
    }
    let per_bit = 1.0 - binary_entropy(pr_e);
    Ok(InfoRates {
        pr_e,
        i_ab_bps: mod_rate * per_bit,
        i_ab_per_bit: per_bit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params_at(n_s: f64, mod_rate: f64) -> SystemParams {
        SystemParams {
            path_km: 50.0,
            ..SystemParams::default()
        }
        .with_operating_point(n_s, mod_rate)
    }

    #[test]
    fn dead_detector_is_degenerate() {
        let mut p = params_at(0.043, 1e10);
        p.eta_homodyne = 0.0;
        let m = homodyne_moments(&p, 0.01).unwrap();
        assert_eq!(m.mu0, 0.0);
        assert_eq!(m.sigma0, 0.0);
        assert!(matches!(
            error_probability(&m),
            Err(Error::DegenerateReceiver(_))
        ));
    }

    #[test]
    fn pure_spdc_source_carries_no_homodyne_signal() {
        // kappa_C = 1 zeroes the ASE component: N_A -> 0 forces it
        let p = params_at(0.0, 1e10);
        let m = homodyne_moments(&p, 0.0).unwrap();
        assert_eq!(m.mu0, 0.0);
        assert!(m.sigma0 > 0.0);
        assert_relative_eq!(error_probability(&m).unwrap(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn headline_snr_and_asymptotic_agreement() {
        let p = params_at(0.043, 1e10);
        let m = homodyne_moments(&p, 0.01).unwrap();
        assert!((1.2..1.4).contains(&m.snr_argument), "snr = {}", m.snr_argument);
        assert_relative_eq!(m.mu1, -m.mu0, max_relative = 1e-12);
        assert_eq!(m.sigma0, m.sigma1);
        let exact = error_probability(&m).unwrap();
        let asym = asymptotic_error_probability(&p, 0.01, 0.043);
        assert!(
            (exact - asym).abs() / asym < 0.1,
            "exact={exact} asym={asym}"
        );
        // Chernoff-style bound on the tail
        assert!(exact <= 0.5 * (-m.snr_argument * m.snr_argument / 2.0).exp());
    }

    #[test]
    fn error_probability_monotone_in_brightness_and_modes() {
        let mut last = 1.0;
        for i in 1..=10 {
            let n_s = 0.005 * i as f64;
            let p = params_at(n_s, 1e10);
            let pe = error_probability(&homodyne_moments(&p, 0.01).unwrap()).unwrap();
            assert!(pe < last, "pr_e must fall with N_S");
            last = pe;
        }
        let mut last = 1.0;
        for &rate in &[4e10, 2e10, 1e10, 5e9, 2e9] {
            let p = params_at(0.02, rate);
            let pe = error_probability(&homodyne_moments(&p, 0.01).unwrap()).unwrap();
            assert!(pe < last, "pr_e must fall as M grows");
            last = pe;
        }
    }

    #[test]
    fn error_probability_increases_with_injection() {
        let p = params_at(0.043, 1e10);
        let mut last = 0.0;
        for k in 0..=5 {
            let f_e = 0.2 * k as f64;
            let pe = error_probability(&homodyne_moments(&p, f_e).unwrap()).unwrap();
            assert!(pe > last, "pr_e must rise with f_E");
            last = pe;
        }
    }

    #[test]
    fn snr_insensitive_to_homodyne_efficiency() {
        let p9 = params_at(0.043, 1e10);
        let mut p10 = params_at(0.043, 1e10);
        p10.eta_homodyne = 1.0;
        let pe9 = error_probability(&homodyne_moments(&p9, 0.01).unwrap()).unwrap();
        let pe10 = error_probability(&homodyne_moments(&p10, 0.01).unwrap()).unwrap();
        assert!((pe9 - pe10).abs() / pe10 < 0.02, "pe9={pe9} pe10={pe10}");
    }

    #[test]
    fn snr_argument_of_two_gives_q2() {
        let m = HomodyneMoments {
            mu0: 2.0,
            mu1: -2.0,
            sigma0: 1.0,
            sigma1: 1.0,
            snr_argument: 2.0,
        };
        assert_relative_eq!(
            error_probability(&m).unwrap(),
            0.02275,
            max_relative = 1e-3
        );
    }

    #[test]
    fn shannon_rate_endpoints_and_interior() {
        assert_eq!(shannon_rate(0.0, 1e9).unwrap().i_ab_bps, 1e9);
        assert_relative_eq!(shannon_rate(0.5, 1e9).unwrap().i_ab_bps, 0.0, epsilon = 1e-6);
        // 1 - h2(0.1) = 0.53100 from direct binary-entropy evaluation
        assert_relative_eq!(
            shannon_rate(0.1, 1e9).unwrap().i_ab_bps,
            5.310e8,
            max_relative = 1e-4
        );
        assert!(shannon_rate(0.6, 1e9).is_err());
    }
}
