//! Eve's frequency-domain collective Gaussian attack: parametrization under
//! the commutator/flux/injection constraints, the conditional covariance
//! matrices it induces, and the resulting information bounds (optimum,
//! passive, active, entanglement-assisted capacity), plus the correction for
//! what Eve learns from Bob's published monitor detections.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{entropy_from_cov, thermal_entropy, WignerCov};
use crate::terminals::SystemParams;

/// Channel transmissivity and sent brightness, the only source quantities
/// the attack bounds depend on. Deliberately independent of the combiner
/// feasibility checks so the bounds stay evaluable at any N_S.
fn channel_point(params: &SystemParams) -> Result<(f64, f64)> {
    params.validate()?;
    Ok((
        params.kappa_s(),
        (1.0 - params.kappa_a) * params.source_brightness,
    ))
}

const CONSTRAINT_TOL: f64 = 1e-9;

/// Bogoliubov coefficients of a constraint-satisfying collective Gaussian
/// attack. Phases are fixed so that u0, v0, and |v^dag u| are real and
/// nonnegative; phase tracking makes this lossless in generality.
#[derive(Debug, Clone)]
pub struct AttackParams {
    pub f_e: f64,
    pub gamma_v: f64,
    pub delta: f64,
    pub u0_mag: f64,
    pub v0_mag: f64,
    pub u_norm_sq: f64,
    pub v_norm_sq: f64,
    pub vu_inner_mag: f64,
    /// w = v^dag u + (2 N_S + 1) v0* u0, stored as (Re, Im).
    pub w_re: f64,
    pub w_im: f64,
    /// Channel context the constraints were solved against.
    pub kappa_s: f64,
    pub n_s: f64,
}

/// Attack satisfying the three constraints at the given cone angles.
///
/// gamma_v is admissible only when cos^2(gamma_v) <= f_E N_S / (1 - f_E);
/// outside that cone the ancilla norm ||v||^2 would have to be negative.
pub fn attack_from_angles(
    f_e: f64,
    gamma_v: f64,
    delta: f64,
    kappa_s: f64,
    n_s: f64,
) -> Result<AttackParams> {
    if !(0.0..=1.0).contains(&f_e) {
        return Err(Error::InfeasibleAttack(format!("f_E = {f_e} outside [0,1]")));
    }
    if !(0.0..=1.0).contains(&kappa_s) || n_s < 0.0 {
        return Err(Error::InfeasibleAttack(format!(
            "kappa_S = {kappa_s}, N_S = {n_s} outside their domains"
        )));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    if !(0.0..=half_pi + 1e-12).contains(&gamma_v) || !(0.0..=half_pi + 1e-12).contains(&delta) {
        return Err(Error::InfeasibleAttack(format!(
            "angles ({gamma_v}, {delta}) outside [0, pi/2]"
        )));
    }
    // cos(pi/2) rounds to ~6e-17; snap so the corner attack is exact
    let snap = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    let cos_gamma = snap(gamma_v.cos());
    let cos2 = cos_gamma * cos_gamma;
    let cone = if f_e < 1.0 { f_e * n_s / (1.0 - f_e) } else { f64::INFINITY };
    if cos2 > cone * (1.0 + 1e-9) + 1e-15 {
        return Err(Error::InfeasibleAttack(format!(
            "cos^2(gamma_v) = {cos2:.3e} exceeds the admissible cone {cone:.3e}"
        )));
    }
    let s = (1.0 - f_e) * kappa_s;
    let v0_mag = s.sqrt() * cos_gamma;
    let u0_mag = s.sqrt() * gamma_v.sin();
    let v_norm_sq = (f_e * kappa_s * n_s - s * cos2).max(0.0);
    let u_norm_sq = f_e * kappa_s * n_s + 1.0 - s + s * cos2;
    let vu_inner_mag = (v_norm_sq * u_norm_sq).sqrt() * snap(delta.cos());
    let attack = AttackParams {
        f_e,
        gamma_v,
        delta,
        u0_mag,
        v0_mag,
        u_norm_sq,
        v_norm_sq,
        vu_inner_mag,
        w_re: vu_inner_mag + (2.0 * n_s + 1.0) * v0_mag * u0_mag,
        w_im: 0.0,
        kappa_s,
        n_s,
    };
    attack.verify_constraints()?;
    Ok(attack)
}

impl AttackParams {
    /// Checks commutator preservation, photon-flux preservation, the
    /// injection-fraction identity, and Cauchy-Schwarz, all to 1e-9.
    pub fn verify_constraints(&self) -> Result<()> {
        let commutator =
            self.u0_mag.powi(2) - self.v0_mag.powi(2) + self.u_norm_sq - self.v_norm_sq;
        if (commutator - 1.0).abs() > CONSTRAINT_TOL {
            return Err(Error::InfeasibleAttack(format!(
                "commutator bracket {commutator} != 1"
            )));
        }
        let flux = (self.u0_mag.powi(2) + self.v0_mag.powi(2)) * self.n_s
            + self.v0_mag.powi(2)
            + self.v_norm_sq;
        if (flux - self.kappa_s * self.n_s).abs() > CONSTRAINT_TOL {
            return Err(Error::InfeasibleAttack(format!(
                "flux {flux} != kappa_S N_S = {}",
                self.kappa_s * self.n_s
            )));
        }
        if self.kappa_s * self.n_s > 0.0 {
            let f_e = (self.v0_mag.powi(2) + self.v_norm_sq) / (self.kappa_s * self.n_s);
            if (f_e - self.f_e).abs() > CONSTRAINT_TOL {
                return Err(Error::InfeasibleAttack(format!(
                    "injected fraction {f_e} != f_E = {}",
                    self.f_e
                )));
            }
        }
        if self.vu_inner_mag > (self.v_norm_sq * self.u_norm_sq).sqrt() + 1e-12 {
            return Err(Error::InfeasibleAttack(
                "|v^dag u| violates Cauchy-Schwarz".into(),
            ));
        }
        Ok(())
    }

    /// The information-maximizing attack: gamma_v = delta = pi/2, which
    /// zeroes v0 and v^dag u.
    pub fn optimum(f_e: f64, kappa_s: f64, n_s: f64) -> Result<AttackParams> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        attack_from_angles(f_e, half_pi, half_pi, kappa_s, n_s)
    }
}

/// Brightness of the SPDC source realizing the optimum attack,
/// N_E = f_E kappa_S N_S / [1 - (1 - f_E) kappa_S].
pub fn eve_spdc_brightness(f_e: f64, kappa_s: f64, n_s: f64) -> Result<f64> {
    let denom = 1.0 - (1.0 - f_e) * kappa_s;
    if denom <= 0.0 {
        return Err(Error::InfeasibleAttack(format!(
            "lossless channel with full transmission: 1 - (1 - f_E) kappa_S = {denom}"
        )));
    }
    Ok(f_e * kappa_s * n_s / denom)
}

/// The three Wigner covariances of the collective-attack bound, built with
/// the bound's concessions (kappa_B = 0, quantum-limited amplifier): the
/// idler/arriving-mode state, the bit-conditional idler/amplifier-complement
/// state, and the returned-mode state.
pub fn conditional_covariances(
    attack: &AttackParams,
    params: &SystemParams,
) -> Result<(WignerCov, WignerCov, WignerCov)> {
    attack.verify_constraints()?;
    let n_s = attack.n_s;
    let g_b = params.gain_bob;
    let a_s = 2.0 * n_s + 1.0;
    let (u0, v0) = (attack.u0_mag, attack.v0_mag);
    let (w_re, w_im) = (attack.w_re, attack.w_im);

    // idler + arriving mode
    let b = 0.5 + attack.kappa_s * n_s;
    let c = 2.0 * (n_s * (n_s + 1.0)).sqrt();
    let l_is = {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = a_s;
        m[(1, 1)] = a_s;
        m[(0, 2)] = c * (u0 + v0);
        m[(1, 3)] = -c * (u0 - v0);
        m[(2, 0)] = m[(0, 2)];
        m[(3, 1)] = m[(1, 3)];
        m[(2, 2)] = 2.0 * (b + w_re);
        m[(3, 3)] = 2.0 * (b - w_re);
        m[(2, 3)] = 2.0 * w_im;
        m[(3, 2)] = 2.0 * w_im;
        WignerCov::new(m * 0.25)?
    };

    // idler + amplifier complement, bit value 0
    let b_p = 1.0 + 2.0 * (g_b - 1.0) * (attack.kappa_s * n_s + 1.0);
    let (x_re, x_im) = (2.0 * (g_b - 1.0) * w_re, 2.0 * (g_b - 1.0) * w_im);
    let d = 2.0 * ((g_b - 1.0) * n_s * (n_s + 1.0)).sqrt();
    let l_ib = {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = a_s;
        m[(1, 1)] = a_s;
        m[(0, 2)] = d * (u0 + v0);
        m[(1, 3)] = d * (u0 - v0);
        m[(2, 0)] = m[(0, 2)];
        m[(3, 1)] = m[(1, 3)];
        m[(2, 2)] = b_p + x_re;
        m[(3, 3)] = b_p - x_re;
        m[(2, 3)] = -x_im;
        m[(3, 2)] = -x_im;
        WignerCov::new(m * 0.25)?
    };

    // returned mode; independent of Bob's bit
    let b_pp = -1.0 + 2.0 * g_b * (attack.kappa_s * n_s + 1.0);
    let l_b = {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = b_pp + 2.0 * g_b * w_re;
        m[(1, 1)] = b_pp - 2.0 * g_b * w_re;
        m[(0, 1)] = 2.0 * g_b * w_im;
        m[(1, 0)] = 2.0 * g_b * w_im;
        WignerCov::new(m * 0.25)?
    };

    Ok((l_is, l_ib, l_b))
}

/// Which route produced a Holevo bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundMethod {
    ExactSymplectic,
    AsymptoticNb,
    AsymptoticKappaS,
}

/// Holevo-information upper bound for one bit interval.
#[derive(Debug, Clone, Serialize)]
pub struct HolevoBound {
    /// Bits per bit interval after the min(.,1) cap.
    pub per_bit: f64,
    /// per_bit / M.
    pub per_mode: f64,
    /// Bits per bit interval before the cap; equals per_bit unless capped.
    pub uncapped_per_bit: f64,
    pub capped: bool,
    pub method: BoundMethod,
}

impl HolevoBound {
    fn from_uncapped(uncapped: f64, modes_per_bit: f64, method: BoundMethod) -> Self {
        let uncapped = uncapped.max(0.0);
        let per_bit = uncapped.min(1.0);
        HolevoBound {
            per_bit,
            per_mode: per_bit / modes_per_bit,
            uncapped_per_bit: uncapped,
            capped: uncapped > 1.0,
            method,
        }
    }

    /// Bound as a rate in bits/s.
    pub fn rate_bps(&self, mod_rate: f64) -> f64 {
        self.per_bit * mod_rate
    }
}

/// Exact symplectic evaluation of the collective-attack bound for an
/// arbitrary constraint-satisfying attack.
pub fn holevo_exact(attack: &AttackParams, params: &SystemParams) -> Result<HolevoBound> {
    let (l_is, l_ib, l_b) = conditional_covariances(attack, params)?;
    let combo = entropy_from_cov(&l_is)? + entropy_from_cov(&l_b)? - entropy_from_cov(&l_ib)?;
    Ok(HolevoBound::from_uncapped(
        params.modes_per_bit() * combo,
        params.modes_per_bit(),
        BoundMethod::ExactSymplectic,
    ))
}

/// Upper bound on Eve's Holevo information per bit for her optimum
/// frequency-domain collective Gaussian attack (exact form).
pub fn holevo_optimum_ub(params: &SystemParams, f_e: f64) -> Result<HolevoBound> {
    let (kappa_s, n_s) = channel_point(params)?;
    let attack = AttackParams::optimum(f_e, kappa_s, n_s)?;
    holevo_exact(&attack, params)
}

/// Passive-attack bound: the optimum attack with nothing injected.
pub fn passive_ub(params: &SystemParams) -> Result<HolevoBound> {
    holevo_optimum_ub(params, 0.0)
}

/// Leading-order form of the optimum-attack bound in the kappa_S << 1
/// regime. Omits O(kappa_S^{3/2}) and O(N_B^{-1/2}) corrections, so it is a
/// cross-validation route, not the production bound.
pub fn holevo_asymptotic_ub(params: &SystemParams, f_e: f64, n_s: f64) -> Result<HolevoBound> {
    if !(0.0..=1.0).contains(&f_e) || n_s < 0.0 {
        return Err(Error::Domain(format!("f_E = {f_e}, N_S = {n_s} out of domain")));
    }
    let kappa_s = params.kappa_s();
    let m = params.modes_per_bit();
    let fkn = f_e * kappa_s * n_s;
    // x log x -> 0 as the injected flux vanishes
    let injection_term = if fkn > 0.0 {
        f_e * (1.0 / std::f64::consts::LN_2 - fkn.log2())
    } else {
        0.0
    };
    let beamsplit_term = if n_s > 0.0 {
        (1.0 - f_e) * n_s * (1.0 + 1.0 / n_s).log2()
    } else {
        0.0
    };
    Ok(HolevoBound::from_uncapped(
        m * kappa_s * n_s * (injection_term + beamsplit_term),
        m,
        BoundMethod::AsymptoticKappaS,
    ))
}

/// Grid search plus golden-section refinement of the exact bound over the
/// admissible (gamma_v, delta) cone. Returns the maximizing angles.
pub fn verify_optimum_angles(params: &SystemParams, f_e: f64) -> Result<(f64, f64)> {
    let (kappa_s, n_s) = channel_point(params)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let cone = if f_e < 1.0 { (f_e * n_s / (1.0 - f_e)).min(1.0) } else { 1.0 };
    let gamma_min = cone.sqrt().acos();

    let eval = |gamma: f64, delta: f64| -> f64 {
        attack_from_angles(f_e, gamma, delta, kappa_s, n_s)
            .and_then(|a| holevo_exact(&a, params))
            .map(|b| b.uncapped_per_bit)
            .unwrap_or(f64::NEG_INFINITY)
    };

    // degenerate cone: only gamma_v = pi/2 is admissible
    if half_pi - gamma_min < 1e-12 {
        return Ok((half_pi, half_pi));
    }

    const GRID: usize = 64;
    let gamma_at = |i: usize| gamma_min + (half_pi - gamma_min) * i as f64 / (GRID - 1) as f64;
    let delta_at = |j: usize| half_pi * j as f64 / (GRID - 1) as f64;
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for i in 0..GRID {
        for j in 0..GRID {
            let v = eval(gamma_at(i), delta_at(j));
            if v > best.0 {
                best = (v, i, j);
            }
        }
    }

    // one golden-section pass per axis around the grid argmax
    let (_, bi, bj) = best;
    let glo = gamma_at(bi.saturating_sub(1));
    let ghi = gamma_at((bi + 1).min(GRID - 1));
    let gamma_star = golden_max(|g| eval(g, delta_at(bj)), glo, ghi, 1e-4);
    let dlo = delta_at(bj.saturating_sub(1));
    let dhi = delta_at((bj + 1).min(GRID - 1));
    let delta_star = golden_max(|d| eval(gamma_star, d), dlo, dhi, 1e-4);
    Ok((gamma_star, delta_star))
}

/// Golden-section maximization on [a, b] to absolute tolerance `tol`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    if b <= a {
        return a;
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    // prefer the endpoint when the optimum sits on the bracket edge
    let mid = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(mid), f(b));
    if fa >= fm && fa >= fb {
        a
    } else if fb >= fm && fb >= fa {
        b
    } else {
        mid
    }
}

/// Active-attack bound: Eve measures only her retained idler and the
/// returned light. Built from the SPDC beam-splitter realization with Bob's
/// actual tap and amplifier noise, so that the attack channel coincides with
/// the one whose entanglement-assisted capacity caps it.
pub fn holevo_active_ub(params: &SystemParams, f_e: f64) -> Result<HolevoBound> {
    let (kappa_s, n_s) = channel_point(params)?;
    let m = params.modes_per_bit();
    let n_e = eve_spdc_brightness(f_e, kappa_s, n_s)?;
    if n_e == 0.0 {
        return Ok(HolevoBound::from_uncapped(0.0, m, BoundMethod::ExactSymplectic));
    }
    let reach = (1.0 - params.kappa_b) * (1.0 - (1.0 - f_e) * kappa_s);
    let a = 2.0 * n_e + 1.0;
    let b = 2.0 * (params.gain_bob * (1.0 - params.kappa_b) * kappa_s * n_s
        + params.noise_bob)
        + 1.0;
    let c = 2.0 * (params.gain_bob * reach * n_e * (n_e + 1.0)).sqrt();

    let mut cond = DMatrix::zeros(4, 4);
    cond[(0, 0)] = a;
    cond[(1, 1)] = a;
    cond[(2, 2)] = b;
    cond[(3, 3)] = b;
    cond[(0, 2)] = c;
    cond[(2, 0)] = c;
    cond[(1, 3)] = -c;
    cond[(3, 1)] = -c;
    let cond = WignerCov::new(cond * 0.25)?;

    // the equal-weight bit mixture zeroes the bit-dependent cross block
    let mut mix = DMatrix::zeros(4, 4);
    mix[(0, 0)] = a;
    mix[(1, 1)] = a;
    mix[(2, 2)] = b;
    mix[(3, 3)] = b;
    let mix = WignerCov::new(mix * 0.25)?;

    let combo = entropy_from_cov(&mix)? - entropy_from_cov(&cond)?;
    Ok(HolevoBound::from_uncapped(m * combo, m, BoundMethod::ExactSymplectic))
}

/// Single-mode entanglement-assisted capacity of the channel Eve's active
/// attack communicates over (bits per mode).
pub fn entanglement_assisted_capacity(params: &SystemParams, f_e: f64) -> Result<f64> {
    let (kappa_s, n_s) = channel_point(params)?;
    let n_e = eve_spdc_brightness(f_e, kappa_s, n_s)?;
    let reach = (1.0 - params.kappa_b) * (1.0 - (1.0 - f_e) * kappa_s);
    let input = reach * n_e;
    Ok(thermal_entropy(input)?
        + thermal_entropy(params.gain_bob * input + params.noise_bob)?
        - thermal_entropy((1.0 + input) * params.noise_bob)?)
}

/// Bound on how much Eve's Holevo information grows when she exploits the
/// detection times Bob publishes for channel monitoring.
#[derive(Debug, Clone, Serialize)]
pub struct LeakRatio {
    /// Upper bound on chi-with-detection-times over chi-without.
    pub ratio: f64,
    /// No-click conditional bound over the unconditional bound.
    pub chi0_over_chi: f64,
    /// Per-bit probability of a click at Bob's monitor.
    pub p_click: f64,
    /// True when p_click is large enough that two-photon terms matter.
    pub regime_warning: bool,
}

/// Evaluates the detection-time leak bound at an operating point whose
/// exact per-bit Holevo bound is `per_bit_chi`.
///
/// Eve only learns the detections Bob publishes, so the per-bit click
/// probability is one minus the thermal no-click probability across the M
/// tapped modes at detected occupancy eta_B kappa_B kappa_S N_S per mode
/// (approximately M eta_B kappa_B kappa_S N_S in the low-flux regime).
/// chi0 re-runs the Gaussian bound at the no-click conditional brightness
/// (1-kappa_B) kappa_S N_S / (1 + kappa_B kappa_S N_S); the click branch uses
/// the conservative per-mode increment of one bit.
pub fn monitor_leak_ratio(params: &SystemParams, f_e: f64, per_bit_chi: f64) -> Result<LeakRatio> {
    if per_bit_chi <= 0.0 {
        return Err(Error::Domain(format!(
            "per-bit Holevo bound must be positive, got {per_bit_chi}"
        )));
    }
    let (kappa_s, n_s) = channel_point(params)?;
    let flux = kappa_s * n_s;
    let occupancy = params.eta_mon_bob * params.kappa_b * flux;
    let p_click = 1.0 - (1.0 + occupancy).powf(-params.modes_per_bit());
    let shrink = (1.0 - params.kappa_b) / (1.0 + params.kappa_b * flux);
    let chi0 = holevo_optimum_ub(&params.with_operating_point(n_s * shrink, params.mod_rate), f_e)?
        .uncapped_per_bit;
    let chi0_over_chi = chi0 / per_bit_chi;
    if chi0_over_chi > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "conditional bound {chi0} exceeds the unconditional bound {per_bit_chi}"
        )));
    }
    Ok(LeakRatio {
        ratio: chi0_over_chi + p_click / per_bit_chi,
        chi0_over_chi,
        p_click,
        regime_warning: p_click > 0.1,
    })
}
