//! Circular-symmetric complex Gaussian vectors, the unitary FFT pair used by
//! the multicarrier encoder/decoder, and Gaussian-state entropies via
//! symplectic spectra.
//!
//! Conventions fixed here and relied on everywhere else:
//! - the FFT is unitary (1/sqrt(n) scaling in both directions), so white
//!   covariance passes through the transform unchanged;
//! - all variances are per-quadrature in shot-noise units;
//! - `0*log 0 := 0` in the thermal entropy function at `s = 1`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Tolerance for exact linear-algebra identities.
pub const TOL_EXACT: f64 = 1e-12;
/// Tolerance for physicality bounds (symplectic eigenvalues, PSD checks).
pub const TOL_PHYSICAL: f64 = 1e-9;

/// A zero-mean circular-symmetric complex Gaussian specification: dimension,
/// Hermitian PSD covariance (per-component complex variances, i.e. twice the
/// per-quadrature variance), and optionally the samples drawn from it.
#[derive(Debug, Clone)]
pub struct ComplexGaussianVector {
    dimension: usize,
    covariance: nalgebra::DMatrix<Complex64>,
    pub samples: Vec<Vec<Complex64>>,
}

impl ComplexGaussianVector {
    /// Builds the distribution after verifying the covariance is Hermitian
    /// (entrywise within 1e-12) and positive semidefinite (eigenvalues >= -1e-10).
    pub fn new(covariance: nalgebra::DMatrix<Complex64>) -> Result<Self> {
        let n = covariance.nrows();
        if n == 0 || covariance.ncols() != n {
            return Err(Error::Parameter(
                "covariance must be square and non-empty".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let d = covariance[(i, j)] - covariance[(j, i)].conj();
                if d.norm() > TOL_EXACT {
                    return Err(Error::Parameter(format!(
                        "covariance is not Hermitian at ({i},{j}): deviation {}",
                        d.norm()
                    )));
                }
            }
        }
        let min_eig = hermitian_min_eigenvalue(&covariance);
        if min_eig < -1e-10 {
            return Err(Error::Parameter(format!(
                "covariance is not positive semidefinite: min eigenvalue {min_eig}"
            )));
        }
        Ok(Self {
            dimension: n,
            covariance,
            samples: Vec::new(),
        })
    }

    /// White covariance `c I` with complex per-component variance
    /// `c = 2 * variance_per_quadrature`.
    pub fn white(dimension: usize, variance_per_quadrature: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Parameter("dimension must be >= 1".into()));
        }
        if !(variance_per_quadrature > 0.0) {
            return Err(Error::Parameter(format!(
                "variance must be positive, got {variance_per_quadrature}"
            )));
        }
        let c = Complex64::new(2.0 * variance_per_quadrature, 0.0);
        let cov = nalgebra::DMatrix::from_diagonal_element(dimension, dimension, c);
        Self::new(cov)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn covariance(&self) -> &nalgebra::DMatrix<Complex64> {
        &self.covariance
    }

    /// Empirical pseudo-covariance `E[z z^T]` of the stored samples. For a
    /// circular-symmetric ensemble every entry converges to zero.
    pub fn empirical_pseudo_covariance(&self) -> Result<nalgebra::DMatrix<Complex64>> {
        if self.samples.is_empty() {
            return Err(Error::State("no samples stored".into()));
        }
        let n = self.dimension;
        let mut acc = nalgebra::DMatrix::<Complex64>::zeros(n, n);
        for s in &self.samples {
            for i in 0..n {
                for j in 0..n {
                    acc[(i, j)] += s[i] * s[j];
                }
            }
        }
        Ok(acc / Complex64::new(self.samples.len() as f64, 0.0))
    }
}

/// Minimum eigenvalue of a Hermitian matrix via its real symmetric embedding
/// [[X, -Y], [Y, X]] (eigenvalues appear doubled, values unchanged).
pub fn hermitian_min_eigenvalue(m: &nalgebra::DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut real = nalgebra::DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            real[(i, j)] = z.re;
            real[(i + n, j + n)] = z.re;
            real[(i, j + n)] = -z.im;
            real[(i + n, j)] = z.im;
        }
    }
    // enforce exact symmetry against rounding before the eigensolve
    let sym = (&real + real.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Minimum eigenvalue of a real symmetric matrix.
pub fn symmetric_min_eigenvalue(m: &nalgebra::DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Draws one zero-mean circular-symmetric complex Gaussian vector whose real
/// and imaginary parts are i.i.d. `N(0, variance_per_quadrature)`.
/// Deterministic for a fixed seed.
pub fn sample_circular_symmetric(
    dimension: usize,
    variance_per_quadrature: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    if dimension == 0 {
        return Err(Error::Parameter("dimension must be >= 1".into()));
    }
    if !(variance_per_quadrature > 0.0) {
        return Err(Error::Parameter(format!(
            "variance must be positive, got {variance_per_quadrature}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_into(&mut rng, dimension, variance_per_quadrature))
}

/// Draws one circular-symmetric vector from an already-positioned stream.
pub(crate) fn sample_into(
    rng: &mut ChaCha8Rng,
    dimension: usize,
    variance_per_quadrature: f64,
) -> Vec<Complex64> {
    let sd = variance_per_quadrature.sqrt();
    (0..dimension)
        .map(|_| {
            let x: f64 = StandardNormal.sample(rng);
            let p: f64 = StandardNormal.sample(rng);
            Complex64::new(sd * x, sd * p)
        })
        .collect()
}

/// Unitary DFT pair for a fixed length, reusable across many transforms.
pub struct UnitaryFft {
    n: usize,
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl UnitaryFft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("vector length must be >= 1".into()));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place unitary forward transform (1/sqrt(n) scaling).
    pub fn forward(&self, v: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.n);
        self.forward.process(v);
        let s = 1.0 / (self.n as f64).sqrt();
        for z in v.iter_mut() {
            *z *= s;
        }
    }

    /// In-place unitary inverse transform (1/sqrt(n) scaling).
    pub fn inverse(&self, v: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.n);
        self.inverse.process(v);
        let s = 1.0 / (self.n as f64).sqrt();
        for z in v.iter_mut() {
            *z *= s;
        }
    }
}

/// Unitary FFT of a complex vector (energy-preserving convention).
pub fn unitary_fft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let fft = UnitaryFft::new(v.len())?;
    let mut out = v.to_vec();
    fft.forward(&mut out);
    Ok(out)
}

/// Unitary inverse FFT of a complex vector.
pub fn unitary_ifft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let fft = UnitaryFft::new(v.len())?;
    let mut out = v.to_vec();
    fft.inverse(&mut out);
    Ok(out)
}

/// Ordered symplectic eigenvalues of a Gaussian state; each entry must sit at
/// or above the physical floor of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    eigenvalues: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        for &s in &eigenvalues {
            if !s.is_finite() || s < 1.0 - TOL_PHYSICAL {
                return Err(Error::Domain(format!(
                    "unphysical symplectic eigenvalue {s} (must be >= 1)"
                )));
            }
        }
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Von Neumann entropy of the state: the sum of `entropy_g` over the
    /// spectrum, in bits.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|&s| entropy_g_unchecked(s))
            .sum()
    }
}

/// Thermal-state entropy contribution of one symplectic eigenvalue, in bits:
/// `g(s) = ((s+1)/2) log2((s+1)/2) - ((s-1)/2) log2((s-1)/2)`,
/// with `g(1) = 0` by the `0*log 0 := 0` convention.
pub fn entropy_g(s: f64) -> Result<f64> {
    if !s.is_finite() || s < 1.0 - TOL_PHYSICAL {
        return Err(Error::Domain(format!(
            "unphysical symplectic eigenvalue {s} (must be >= 1)"
        )));
    }
    Ok(entropy_g_unchecked(s))
}

pub(crate) fn entropy_g_unchecked(s: f64) -> f64 {
    let s = s.max(1.0);
    let a = (s + 1.0) / 2.0;
    let b = (s - 1.0) / 2.0;
    let tb = if b > 0.0 { b * b.log2() } else { 0.0 };
    a * a.log2() - tb
}

/// Entropy of a full spectrum, in bits.
pub fn spectrum_entropy(spectrum: &SymplecticSpectrum) -> f64 {
    spectrum.entropy()
}

/// Differential entropy of a real Gaussian with the given variance, in bits:
/// `(1/2) log2(2 pi e variance)`.
pub fn differential_entropy_gaussian(variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::Parameter(format!(
            "variance must be positive, got {variance}"
        )));
    }
    Ok(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = sample_circular_symmetric(4, 1.0, 77).unwrap();
        let b = sample_circular_symmetric(4, 1.0, 77).unwrap();
        assert_eq!(a, b);
        let c = sample_circular_symmetric(4, 1.0, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampler_degenerate_variance() {
        let v = sample_circular_symmetric(1, 1e-12, 5).unwrap();
        assert!(v[0].norm() <= 1e-4);
    }

    #[test]
    fn sampler_rejects_bad_inputs() {
        assert!(sample_circular_symmetric(0, 1.0, 0).is_err());
        assert!(sample_circular_symmetric(3, 0.0, 0).is_err());
        assert!(sample_circular_symmetric(3, -1.0, 0).is_err());
    }

    #[test]
    fn empirical_quadrature_variance_matches() {
        // law of large numbers: sample variance of each quadrature -> sigma^2
        // within 3 standard errors, SE = sigma^2 * sqrt(2/N)
        let sigma2 = 2.0;
        let trials = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut sum_x = 0.0;
        let mut sum_p = 0.0;
        for _ in 0..trials {
            let z = sample_into(&mut rng, 1, sigma2);
            sum_x += z[0].re * z[0].re;
            sum_p += z[0].im * z[0].im;
        }
        let se = sigma2 * (2.0 / trials as f64).sqrt();
        close(sum_x / trials as f64, sigma2, 3.0 * se);
        close(sum_p / trials as f64, sigma2, 3.0 * se);
    }

    #[test]
    fn ifft_of_zeros_is_zeros() {
        let v = vec![Complex64::new(0.0, 0.0); 6];
        let out = unitary_ifft(&v).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn fft_round_trip() {
        let v = sample_circular_symmetric(8, 1.0, 99).unwrap();
        let back = unitary_fft(&unitary_ifft(&v).unwrap()).unwrap();
        let max_err = v
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-12, "round-trip error {max_err}");
    }

    #[test]
    fn fft_rejects_empty() {
        assert!(unitary_fft(&[]).is_err());
        assert!(unitary_ifft(&[]).is_err());
    }

    #[test]
    fn white_covariance_invariant_under_fft() {
        // K_{F(Delta)} = K_Delta for white noise: empirical covariance of
        // F(Delta) over many draws stays sigma^2 per quadrature (complex
        // variance 2 sigma^2) within 3 standard errors.
        let n = 8;
        let sigma2 = 1.0;
        let trials = 100_000usize;
        let fft = UnitaryFft::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut acc = nalgebra::DMatrix::<Complex64>::zeros(n, n);
        for _ in 0..trials {
            let mut d = sample_into(&mut rng, n, sigma2);
            fft.forward(&mut d);
            for i in 0..n {
                for j in 0..n {
                    acc[(i, j)] += d[i] * d[j].conj();
                }
            }
        }
        let c = 2.0 * sigma2;
        // per-entry 3-standard-error band, widened for the simultaneous
        // max over all n^2 entries
        let band = 1.5 * 3.0 * c / (trials as f64).sqrt();
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { c } else { 0.0 };
                let got = acc[(i, j)] / Complex64::new(trials as f64, 0.0);
                assert!(
                    (got - Complex64::new(expect, 0.0)).norm() < band,
                    "covariance entry ({i},{j}) = {got} expected {expect}"
                );
            }
        }
    }

    #[test]
    fn entropy_g_known_values() {
        assert_eq!(entropy_g(1.0).unwrap(), 0.0);
        assert_eq!(entropy_g(3.0).unwrap(), 2.0);
        close(entropy_g(1.2).unwrap(), 0.4834466856136646, 1e-12);
        assert!(entropy_g(0.5).is_err());
        // just inside the physicality tolerance
        assert!(entropy_g(1.0 - 0.5e-9).is_ok());
    }

    #[test]
    fn spectrum_entropy_sums() {
        let s = SymplecticSpectrum::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(spectrum_entropy(&s), 0.0);
        let s = SymplecticSpectrum::new(vec![3.0]).unwrap();
        assert_eq!(spectrum_entropy(&s), 2.0);
        let s = SymplecticSpectrum::new(vec![3.0, 1.2]).unwrap();
        close(spectrum_entropy(&s), 2.4834466856136646, 1e-4);
        assert!(SymplecticSpectrum::new(vec![0.9]).is_err());
    }

    #[test]
    fn differential_entropy_values() {
        let v0 = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E);
        close(differential_entropy_gaussian(v0).unwrap(), 0.0, 1e-12);
        close(
            differential_entropy_gaussian(1.0).unwrap(),
            2.047_095_585_180_641,
            1e-12,
        );
        // scaling identity: H(4 v) - H(v) = 1 bit
        for &v in &[0.1, 1.0, 7.3] {
            let d = differential_entropy_gaussian(4.0 * v).unwrap()
                - differential_entropy_gaussian(v).unwrap();
            close(d, 1.0, 1e-12);
        }
        assert!(differential_entropy_gaussian(0.0).is_err());
    }

    #[test]
    fn complex_gaussian_vector_validation() {
        let ok = ComplexGaussianVector::white(3, 1.5).unwrap();
        assert_eq!(ok.dimension(), 3);
        // non-Hermitian rejected
        let mut bad = nalgebra::DMatrix::<Complex64>::identity(2, 2);
        bad[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!(ComplexGaussianVector::new(bad).is_err());
        // negative-definite rejected
        let neg = nalgebra::DMatrix::from_diagonal_element(2, 2, Complex64::new(-1.0, 0.0));
        assert!(ComplexGaussianVector::new(neg).is_err());
    }

    #[test]
    fn pseudo_covariance_vanishes_for_circular_samples() {
        let n = 4;
        let mut spec = ComplexGaussianVector::white(n, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50_000 {
            spec.samples.push(sample_into(&mut rng, n, 1.0));
        }
        let pseudo = spec.empirical_pseudo_covariance().unwrap();
        // per-entry 3-standard-error band, widened for the simultaneous max
        let band = 1.5 * 3.0 * 2.0 / (50_000f64).sqrt();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    pseudo[(i, j)].norm() < band,
                    "pseudo-covariance entry ({i},{j}) = {}",
                    pseudo[(i, j)]
                );
            }
        }
    }
}
