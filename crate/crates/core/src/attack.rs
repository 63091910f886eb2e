//! Entangling-cloner attack statistics: estimator coefficients, conditional
//! variances, the assembled covariance matrices of the Bob/Eve systems, and
//! the Holevo quantities built from them.
//!
//! The averaging convention follows the derivation: averaged gain and EPR
//! variance are plugged into the per-carrier formulas, not the other way
//! around.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::symmetric_min_eigenvalue;

/// Second moments of a quadrature pair (a, b): variances and covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePairStats {
    pub var_a: f64,
    pub var_b: f64,
    pub cov_ab: f64,
}

impl QuadraturePairStats {
    pub fn new(var_a: f64, var_b: f64, cov_ab: f64) -> Result<Self> {
        if !(var_a > 0.0) || !(var_b > 0.0) {
            return Err(Error::Parameter(format!(
                "variances must be positive, got ({var_a}, {var_b})"
            )));
        }
        let s = Self {
            var_a,
            var_b,
            cov_ab,
        };
        s.check_cauchy_schwarz()?;
        Ok(s)
    }

    fn check_cauchy_schwarz(&self) -> Result<()> {
        let bound = self.var_a * self.var_b;
        if self.cov_ab * self.cov_ab > bound * (1.0 + 1e-9) {
            return Err(Error::Data(format!(
                "Cauchy-Schwarz violation: cov^2 = {} exceeds var_a*var_b = {bound}",
                self.cov_ab * self.cov_ab
            )));
        }
        Ok(())
    }
}

/// Conditional variance `var_a - cov^2 / var_b`; non-negative by
/// Cauchy-Schwarz (clamped against float noise at perfect correlation).
pub fn conditional_variance(stats: &QuadraturePairStats) -> Result<f64> {
    stats.check_cauchy_schwarz()?;
    if !(stats.var_b > 0.0) {
        return Err(Error::Parameter(
            "conditioning variance must be positive".into(),
        ));
    }
    Ok((stats.var_a - stats.cov_ab * stats.cov_ab / stats.var_b).max(0.0))
}

/// Linear estimator coefficient `cov / var_b`, sign preserved (EPR
/// anti-correlation enters as a negative covariance).
pub fn estimator_coefficient(stats: &QuadraturePairStats) -> Result<f64> {
    if !(stats.var_b > 0.0) {
        return Err(Error::Parameter(
            "denominator variance must be positive".into(),
        ));
    }
    Ok(stats.cov_ab / stats.var_b)
}

/// Averaged conditional variances of the one-way channel:
/// `sigma^2_{B|A} = (1 - T) W + T` and `sigma^2_{E|A} = (1 - T) + T W`.
/// Both are >= 1 for W >= 1, and they swap under T -> 1 - T.
pub fn conditional_variances_oneway(t_bar: f64, w_bar: f64) -> Result<(f64, f64)> {
    if !(t_bar > 0.0 && t_bar < 1.0) {
        return Err(Error::Parameter(format!(
            "averaged gain must lie in (0, 1), got {t_bar}"
        )));
    }
    if w_bar < 1.0 {
        return Err(Error::Parameter(format!(
            "averaged Eve variance must be >= 1, got {w_bar}"
        )));
    }
    let b_given_a = (1.0 - t_bar) * w_bar + t_bar;
    let e_given_a = (1.0 - t_bar) + t_bar * w_bar;
    Ok((b_given_a, e_given_a))
}

/// Scalars and assembled covariance blocks of the one-way Bob/Eve joint
/// state under an entangling-cloner attack.
#[derive(Debug, Clone)]
pub struct EveCovarianceOneWay {
    /// Conditional variance of Eve's system given Alice's variable.
    pub sigma2_e_given_a: f64,
    /// Averaged EPR variance.
    pub w_bar: f64,
    /// Bob-Eve entanglement scalar kappa = sqrt(T (W^2 - 1)).
    pub kappa: f64,
    /// Cross-block scalar mu = (W - sigma_w^2) sqrt((1 - T) T).
    pub mu: f64,
    /// Cross-block scalar theta = sqrt((1 - T) (W^2 - 1)).
    pub theta: f64,
    /// Bob's received quadrature variance (1 - T) W + T sigma_w^2.
    pub bob_variance: f64,
    /// Eve's received quadrature variance (1 - T) sigma_w^2 + T W.
    pub eve_variance: f64,
    /// 4x4 covariance of Eve's two modes (received arm, retained EPR half).
    pub eve_matrix: DMatrix<f64>,
    /// 6x6 covariance of the joint Eve (4) + Bob (2) system.
    pub joint_matrix: DMatrix<f64>,
}

/// Assembles the one-way Eve covariance blocks from the averaged channel
/// parameters and the modulation variance.
pub fn eve_covariance_oneway(
    t_bar: f64,
    w_bar: f64,
    sigma_omega2: f64,
) -> Result<EveCovarianceOneWay> {
    let (_, sigma2_e_given_a) = conditional_variances_oneway(t_bar, w_bar)?;
    if !(sigma_omega2 > 0.0) {
        return Err(Error::Parameter(format!(
            "modulation variance must be positive, got {sigma_omega2}"
        )));
    }
    let kappa = (t_bar * (w_bar * w_bar - 1.0)).sqrt();
    let mu = (w_bar - sigma_omega2) * ((1.0 - t_bar) * t_bar).sqrt();
    let theta = ((1.0 - t_bar) * (w_bar * w_bar - 1.0)).sqrt();
    let bob_variance = (1.0 - t_bar) * w_bar + t_bar * sigma_omega2;
    let eve_variance = (1.0 - t_bar) * sigma_omega2 + t_bar * w_bar;

    let eve_matrix = two_mode_matrix(eve_variance, w_bar, kappa);

    // joint system ordering: (E1x, E1p, E2x, E2p, Bx, Bp); the cross block
    // stacks (mu I) over (theta Z)
    let mut joint = DMatrix::<f64>::zeros(6, 6);
    joint.view_mut((0, 0), (4, 4)).copy_from(&eve_matrix);
    joint[(4, 4)] = bob_variance;
    joint[(5, 5)] = bob_variance;
    for (row, col, v) in [(0, 4, mu), (1, 5, mu), (2, 4, theta), (3, 5, -theta)] {
        joint[(row, col)] = v;
        joint[(col, row)] = v;
    }

    for (name, m) in [("eve", &eve_matrix), ("joint", &joint)] {
        let min_eig = symmetric_min_eigenvalue(m);
        if min_eig < -1e-9 {
            return Err(Error::Internal(format!(
                "assembled {name} covariance is not PSD (min eigenvalue {min_eig})"
            )));
        }
    }

    Ok(EveCovarianceOneWay {
        sigma2_e_given_a,
        w_bar,
        kappa,
        mu,
        theta,
        bob_variance,
        eve_variance,
        eve_matrix,
        joint_matrix: joint,
    })
}

/// 4x4 two-mode block [[a I, k Z], [k Z, b I]].
pub(crate) fn two_mode_matrix(a: f64, b: f64, k: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            a, 0.0, k, 0.0, //
            0.0, a, 0.0, -k, //
            k, 0.0, b, 0.0, //
            0.0, -k, 0.0, b,
        ],
    )
}

/// Holevo-style information from a variance and its conditional counterpart:
/// `(1/2) log2(variance / conditional)`, returned raw (may be negative).
pub fn holevo_from_conditionals(variance: f64, conditional_variance: f64) -> Result<f64> {
    if !(conditional_variance > 0.0) {
        return Err(Error::Parameter(format!(
            "conditional variance must be positive, got {conditional_variance}"
        )));
    }
    if variance < 1.0 {
        return Err(Error::Parameter(format!(
            "variance must be >= 1 (shot-noise floor), got {variance}"
        )));
    }
    Ok(0.5 * (variance / conditional_variance).log2())
}

/// Protocol-level parameters needed by the estimator-variance formulas.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorConfig {
    /// Subcarrier modulation variance sigma_w^2.
    pub modulation_variance: f64,
    /// Total link noise sigma_X^2 = vacuum + excess.
    pub sigma_x_squared: f64,
    /// Squeezing factor s, constrained into (1/sigma_w^2, sigma_w^2).
    pub squeezing: f64,
    /// Shot-noise variance N_0.
    pub shot_noise: f64,
    /// Internal beam-splitter transmittance used to split the quadratures
    /// at a heterodyne detector; must lie strictly inside (0, 1).
    pub beam_splitter: f64,
}

impl EstimatorConfig {
    fn validate_common(&self) -> Result<()> {
        if !(self.modulation_variance > 0.0)
            || !(self.sigma_x_squared > 0.0)
            || !(self.shot_noise > 0.0)
        {
            return Err(Error::Parameter(
                "modulation variance, sigma_X^2 and shot noise must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Homodyne conditional variances on Bob's and Eve's side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomVariances {
    /// sigma^2_{x|e} = g (sigma_X^2 + s) N_0
    pub bob_x: f64,
    /// sigma^2_{p|e} = g (sigma_X^2 + 1/s) N_0
    pub bob_p: f64,
    /// Eve-side reciprocal N_0 / (g (sigma_X^2 + 1/sigma_w^2)), both quadratures.
    pub eve_x: f64,
    pub eve_p: f64,
    /// Common lower bound g (sigma_X^2 + 1/sigma_w^2) N_0 on the Bob-side pair.
    pub lower_bound: f64,
}

/// Homodyne estimator conditional variances for a sub-channel of Fourier
/// gain `t_bar`. The squeezing factor must lie strictly inside
/// `(1/sigma_w^2, sigma_w^2)`.
pub fn hom_estimator_variances(config: &EstimatorConfig, t_bar: f64) -> Result<HomVariances> {
    config.validate_common()?;
    if !(0.0..=1.0).contains(&t_bar) || t_bar == 0.0 {
        return Err(Error::Parameter(format!(
            "gain must lie in (0, 1], got {t_bar}"
        )));
    }
    let sw = config.modulation_variance;
    let s = config.squeezing;
    if !(s > 1.0 / sw && s < sw) {
        return Err(Error::Parameter(format!(
            "squeezing {s} outside the allowed range (1/{sw}, {sw})"
        )));
    }
    let sx = config.sigma_x_squared;
    let n0 = config.shot_noise;
    let bob_x = t_bar * (sx + s) * n0;
    let bob_p = t_bar * (sx + 1.0 / s) * n0;
    let eve = n0 / (t_bar * (sx + 1.0 / sw));
    let lower_bound = t_bar * (sx + 1.0 / sw) * n0;
    Ok(HomVariances {
        bob_x,
        bob_p,
        eve_x: eve,
        eve_p: eve,
        lower_bound,
    })
}

/// Heterodyne conditional variances; the pair always satisfies
/// `x * p = N_0^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HetVariances {
    pub x: f64,
    pub p: f64,
}

/// Heterodyne estimator conditional variances. `v` is the received variance
/// `T sigma_w0^2 + sigma_N^2` entering the x-side form `(H V + 1)/(V + H) N_0`;
/// the p-side follows from the uncertainty product.
pub fn het_estimator_variances(
    config: &EstimatorConfig,
    t_bar: f64,
    sigma_omega0_squared: f64,
    sigma_n_squared: f64,
) -> Result<HetVariances> {
    config.validate_common()?;
    let bs = config.beam_splitter;
    if !(bs > 0.0 && bs < 1.0) {
        return Err(Error::Parameter(format!(
            "beam-splitter transmittance must lie strictly inside (0, 1), got {bs}"
        )));
    }
    if !(t_bar > 0.0) || !(sigma_omega0_squared > 0.0) || !(sigma_n_squared >= 0.0) {
        return Err(Error::Parameter(
            "gain and variances must be positive".into(),
        ));
    }
    let h = (1.0 - bs) / bs;
    let v = t_bar * sigma_omega0_squared + sigma_n_squared;
    let n0 = config.shot_noise;
    let x = (h * v + 1.0) / (v + h) * n0;
    let p = (v + h) / (h * v + 1.0) * n0;
    Ok(HetVariances { x, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn conditional_variance_values() {
        let s = QuadraturePairStats::new(4.0, 2.0, 0.0).unwrap();
        assert_eq!(conditional_variance(&s).unwrap(), 4.0);
        let s = QuadraturePairStats::new(4.0, 2.0, 2.0).unwrap();
        assert_eq!(conditional_variance(&s).unwrap(), 2.0);
        // perfect correlation: cov^2 = var_a var_b
        let s = QuadraturePairStats::new(4.0, 2.0, 8f64.sqrt()).unwrap();
        close(conditional_variance(&s).unwrap(), 0.0, 1e-12);
        // beyond-tolerance violation
        assert!(QuadraturePairStats::new(1.0, 1.0, 1.1).is_err());
    }

    #[test]
    fn estimator_coefficient_values() {
        let s = QuadraturePairStats::new(4.0, 2.0, 0.0).unwrap();
        assert_eq!(estimator_coefficient(&s).unwrap(), 0.0);
        let s = QuadraturePairStats::new(4.0, 2.0, 2.0).unwrap();
        assert_eq!(estimator_coefficient(&s).unwrap(), 1.0);
        let s = QuadraturePairStats::new(5.0, 2.0, -3.0).unwrap();
        assert_eq!(estimator_coefficient(&s).unwrap(), -1.5);
    }

    #[test]
    fn oneway_conditional_variances() {
        let (b, e) = conditional_variances_oneway(0.3, 1.0).unwrap();
        assert_eq!((b, e), (1.0, 1.0));
        let (b, e) = conditional_variances_oneway(0.9, 1.2).unwrap();
        close(b, 1.02, 1e-12);
        close(e, 1.18, 1e-12);
        let (b, e) = conditional_variances_oneway(1.0 - 1e-12, 3.0).unwrap();
        close(b, 1.0, 1e-9);
        close(e, 3.0, 1e-9);
        assert!(conditional_variances_oneway(0.0, 1.0).is_err());
        assert!(conditional_variances_oneway(0.5, 0.9).is_err());
    }

    #[test]
    fn oneway_swap_symmetry_and_floor() {
        for i in 1..10 {
            let t = i as f64 / 10.0;
            for &w in &[1.0, 1.5, 3.0, 10.0] {
                let (b, e) = conditional_variances_oneway(t, w).unwrap();
                let (b2, e2) = conditional_variances_oneway(1.0 - t, w).unwrap();
                close(b, e2, 1e-12);
                close(e, b2, 1e-12);
                assert!(b >= 1.0 && e >= 1.0);
                assert!(b * e >= 1.0);
            }
        }
    }

    #[test]
    fn eve_covariance_scalars() {
        let c = eve_covariance_oneway(0.5, 1.0, 10.0).unwrap();
        assert_eq!(c.kappa, 0.0);
        assert_eq!(c.theta, 0.0);
        let c = eve_covariance_oneway(1e-9, 2.0, 10.0).unwrap();
        close(c.kappa, 0.0, 1e-4);
        close(c.theta, 3f64.sqrt(), 1e-6);
        let c = eve_covariance_oneway(0.5, 2.0, 10.0).unwrap();
        close(c.kappa, (1.5f64).sqrt(), 1e-12);
        close(c.bob_variance, 0.5 * 2.0 + 0.5 * 10.0, 1e-12);
        close(c.eve_variance, 0.5 * 10.0 + 0.5 * 2.0, 1e-12);
    }

    #[test]
    fn eve_covariance_psd_grid() {
        for &t in &[0.05, 0.3, 0.5, 0.7, 0.95] {
            for &w in &[1.0, 1.5, 3.0, 8.0] {
                for &sw in &[1.0, 10.0, 100.0] {
                    let c = eve_covariance_oneway(t, w, sw).unwrap();
                    assert!(symmetric_min_eigenvalue(&c.eve_matrix) >= -1e-9);
                    assert!(symmetric_min_eigenvalue(&c.joint_matrix) >= -1e-9);
                }
            }
        }
    }

    #[test]
    fn holevo_values() {
        assert_eq!(holevo_from_conditionals(2.0, 2.0).unwrap(), 0.0);
        assert_eq!(holevo_from_conditionals(4.0, 1.0).unwrap(), 1.0);
        assert_eq!(holevo_from_conditionals(1.0, 2.0).unwrap(), -0.5);
        assert!(holevo_from_conditionals(4.0, 0.0).is_err());
    }

    fn cfg(sw: f64, sx: f64, s: f64) -> EstimatorConfig {
        EstimatorConfig {
            modulation_variance: sw,
            sigma_x_squared: sx,
            squeezing: s,
            shot_noise: 1.0,
            beam_splitter: 0.5,
        }
    }

    #[test]
    fn hom_variances_values() {
        // coherent: x and p coincide
        let v = hom_estimator_variances(&cfg(2.0, 1.5, 1.0), 0.5).unwrap();
        assert_eq!(v.bob_x, v.bob_p);
        // Eve side: N_0 / (0.5 (1.5 + 0.5)) = N_0
        close(v.eve_x, 1.0, 1e-12);
        // noiseless limit
        let v = hom_estimator_variances(&cfg(2.0, 1e-12, 1.0), 1.0).unwrap();
        close(v.bob_x, 1.0, 1e-9);
        // lower bounds honored
        let v = hom_estimator_variances(&cfg(4.0, 0.8, 1.7), 0.6).unwrap();
        assert!(v.bob_x >= v.lower_bound - 1e-12);
        assert!(v.bob_p >= v.lower_bound - 1e-12);
        // squeezing outside range rejected
        assert!(hom_estimator_variances(&cfg(2.0, 1.0, 2.0), 0.5).is_err());
        assert!(hom_estimator_variances(&cfg(2.0, 1.0, 0.4), 0.5).is_err());
    }

    #[test]
    fn het_variances_values() {
        // balanced splitter: both equal N_0
        let c = cfg(10.0, 1.0, 1.0);
        let v = het_estimator_variances(&c, 0.5, 10.0, 0.5).unwrap();
        close(v.x, 1.0, 1e-12);
        close(v.p, 1.0, 1e-12);
        // V = 10, H = 0.25
        let mut c2 = c;
        c2.beam_splitter = 0.8;
        let v = het_estimator_variances(&c2, 0.95, 10.0, 0.5).unwrap();
        close(v.x, 3.5 / 10.25, 1e-12);
        // degenerate splitter rejected
        let mut bad = c;
        bad.beam_splitter = 1.0;
        assert!(het_estimator_variances(&bad, 0.5, 10.0, 0.5).is_err());
    }

    #[test]
    fn het_uncertainty_product() {
        let mut c = cfg(10.0, 1.0, 1.0);
        for i in 1..=20 {
            c.beam_splitter = i as f64 / 21.0;
            c.shot_noise = 0.5 + i as f64 * 0.1;
            let v = het_estimator_variances(&c, 0.7, 12.0, 0.3).unwrap();
            close(v.x * v.p, c.shot_noise * c.shot_noise, 1e-10);
        }
    }
}
