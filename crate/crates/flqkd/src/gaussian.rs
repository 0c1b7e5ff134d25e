//! Gaussian-state numerics: Wigner covariance matrices, symplectic
//! eigenvalues, thermal entropy, and the Gaussian tail function.
//!
//! Convention: quadratures are ordered (q1, p1, q2, p2, ...) and the vacuum
//! covariance is I/4, so every symplectic eigenvalue of a physical state is
//! at least 1/4.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative symmetry tolerance for accepting a covariance matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack on the Heisenberg bound xi >= 1/4.
pub const HEISENBERG_SLACK: f64 = 1e-9;
/// Pair-matching tolerance when collapsing +/- eigenvalue pairs.
const PAIR_TOL: f64 = 1e-9;

/// Real symmetric Wigner covariance matrix of a Gaussian state.
#[derive(Debug, Clone)]
pub struct WignerCov {
    mat: DMatrix<f64>,
}

impl WignerCov {
    /// Wraps a matrix after checking symmetry, even dimension, and the
    /// symplectic Heisenberg bound.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        let cov = Self::new_unchecked_shape(mat)?;
        let spectrum = cov.symplectic_eigenvalues()?;
        if let Some(&xi) = spectrum
            .eigenvalues
            .iter()
            .find(|&&xi| xi < 0.25 - HEISENBERG_SLACK)
        {
            return Err(Error::InvalidCovariance(format!(
                "symplectic eigenvalue {xi} below the vacuum bound 1/4"
            )));
        }
        Ok(cov)
    }

    /// Shape/symmetry checks only; used internally before the spectral check.
    fn new_unchecked_shape(mat: DMatrix<f64>) -> Result<Self> {
        let (r, c) = mat.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(Error::InvalidCovariance(format!(
                "dimension {r}x{c} is not a positive even square"
            )));
        }
        let scale = mat.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        for i in 0..r {
            for j in (i + 1)..r {
                if (mat[(i, j)] - mat[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidCovariance(format!(
                        "asymmetric at ({i},{j}): {} vs {}",
                        mat[(i, j)],
                        mat[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.dim() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Moduli of the eigenvalues of i*Omega*Lambda, collapsed to one value
    /// per +/- pair and sorted descending.
    pub fn symplectic_eigenvalues(&self) -> Result<SymplecticSpectrum> {
        symplectic_eigenvalues(self)
    }

    /// Von Neumann entropy in bits of the Gaussian state with this covariance.
    pub fn entropy_bits(&self) -> Result<f64> {
        entropy_from_cov(self)
    }
}

/// Symplectic spectrum of a covariance matrix: one eigenvalue per mode,
/// sorted descending. A pure state has all entries equal to 1/4.
#[derive(Debug, Clone)]
pub struct SymplecticSpectrum {
    pub eigenvalues: Vec<f64>,
}

/// Standard symplectic form in interleaved mode ordering.
fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Symplectic eigenvalues, i.e. the moduli of the eigenvalues of
/// i*Omega*Lambda collapsed to one value per +/- pair.
///
/// M = Lambda^(1/2) Omega Lambda^(1/2) is real antisymmetric with the same
/// +/-(i nu) spectrum, so the symmetric embedding [[0, M],[-M, 0]] hands the
/// problem to a symmetric eigensolver. That keeps absolute accuracy at
/// eps * nu_max even for near-degenerate pairs, where nonsymmetric routes
/// lose half the digits.
pub fn symplectic_eigenvalues(cov: &WignerCov) -> Result<SymplecticSpectrum> {
    let eigenvalues = match cov.n_modes() {
        1 => {
            let m = cov.matrix();
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            vec![det.max(0.0).sqrt()]
        }
        _ => general_spectrum(cov.matrix())?,
    };
    Ok(SymplecticSpectrum { eigenvalues })
}

fn general_spectrum(v: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = v.nrows() / 2;
    let eig = nalgebra::SymmetricEigen::new(v.clone());
    let mut root = DMatrix::zeros(2 * n, 2 * n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        root += lam.max(0.0).sqrt() * col * col.transpose();
    }
    let m = &root * symplectic_form(n) * &root;

    // [[0, M],[-M, 0]] is symmetric for antisymmetric M, with eigenvalues
    // +/- nu, each twice
    let dim = 2 * n;
    let mut embed = DMatrix::zeros(2 * dim, 2 * dim);
    for i in 0..dim {
        for j in 0..dim {
            embed[(i, dim + j)] = m[(i, j)];
            embed[(dim + i, j)] = -m[(i, j)];
        }
    }
    let mut mods: Vec<f64> = nalgebra::SymmetricEigen::new(embed)
        .eigenvalues
        .iter()
        .map(|x| x.abs())
        .collect();
    mods.sort_by(|a, b| b.partial_cmp(a).expect("eigenvalues are finite"));

    let mut eigenvalues = Vec::with_capacity(n);
    for k in 0..n {
        let quad = &mods[4 * k..4 * k + 4];
        if (quad[0] - quad[3]).abs() > PAIR_TOL * quad[0].max(1.0) {
            return Err(Error::InvalidCovariance(format!(
                "unpaired symplectic eigenvalues {} and {}",
                quad[0], quad[3]
            )));
        }
        eigenvalues.push(quad.iter().sum::<f64>() / 4.0);
    }
    Ok(eigenvalues)
}

/// Von Neumann entropy of a thermal state with mean photon number `x`, in bits.
///
/// g(x) = (x+1) log2(x+1) - x log2(x), with g(0) = 0 by continuity.
pub fn thermal_entropy(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!(
            "thermal entropy needs a nonnegative photon number, got {x}"
        )));
    }
    // Below 1e-12 the x*log2(x) term is numerically indistinguishable from
    // its continuity limit of zero.
    if x < 1e-12 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// Entropy of a Gaussian state from its covariance: sum of g((4*xi - 1)/2)
/// over the symplectic eigenvalues xi.
pub fn entropy_from_cov(cov: &WignerCov) -> Result<f64> {
    let spectrum = symplectic_eigenvalues(cov)?;
    let mut total = 0.0;
    for &xi in &spectrum.eigenvalues {
        // Rounding can push a pure-state eigenvalue a hair below 1/4.
        let photons = ((4.0 * xi - 1.0) / 2.0).max(0.0);
        total += thermal_entropy(photons)?;
    }
    Ok(total)
}

/// Gaussian upper-tail probability Q(x) = P(Z > x) for standard normal Z.
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}
