//! Two-way multicarrier CVQKD: covariance matrices of the double channel
//! use, symplectic spectra, and the four asymptotic key rates.
//!
//! Several spectra are constrained only through products of their entries.
//! The default resolves them with the symmetric split (documented, not
//! claimed canonical); the splits cancel in every rate except the RR
//! heterodyne one, where the policy is explicit.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::attack::{conditional_variances_oneway, eve_covariance_oneway};
use crate::error::{Error, Result};
use crate::gaussian::{entropy_g, symmetric_min_eigenvalue, SymplecticSpectrum};
use crate::protocol::{
    GammaSplitPolicy, KeyRateResult, Measurement, ProtocolConfig, Reconciliation,
};

/// Scalars and assembled covariance matrices of the two-way protocol.
#[derive(Debug, Clone)]
pub struct TwoWayCovariances {
    /// Bob's second-mode variance 2 T sigma_w^2 + (1 - T^2) W.
    pub lambda_b: f64,
    /// Eve's third-mode core scalar
    /// T (1 - T) sigma_w^2 + (1 - T)^2 W + T W.
    pub xi: f64,
    /// Eve's third-mode variance xi + (1 - T) sigma_w^2.
    pub lambda_e: f64,
    /// Cross scalar mu'' = -sqrt(1 - T) mu (one-way mu).
    pub mu_dd: f64,
    /// Cross scalar theta'' = -sqrt(1 - T) theta (one-way theta).
    pub theta_dd: f64,
    /// Entanglement scalar kappa = sqrt(T (W^2 - 1)).
    pub kappa: f64,
    /// Conditional variance of Eve's system given Alice, (1 - T) + T W.
    pub sigma2_e_given_a: f64,
    /// Eve's first-mode (received arm) variance (1 - T) sigma_w^2 + T W.
    pub eve_mode_variance: f64,
    /// 4x4 covariance of Bob's system over the two uses.
    pub bob_matrix: DMatrix<f64>,
    /// 8x8 covariance of Eve's four modes.
    pub eve_matrix: DMatrix<f64>,
}

/// Assembles the two-way covariance scalars and matrices and verifies both
/// matrices are positive semidefinite.
pub fn twoway_covariances(t_bar: f64, w_bar: f64, sigma_omega2: f64) -> Result<TwoWayCovariances> {
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
    if !(sigma_omega2 > 0.0) {
        return Err(Error::Parameter(format!(
            "modulation variance must be positive, got {sigma_omega2}"
        )));
    }
    let one_way = eve_covariance_oneway(t_bar, w_bar, sigma_omega2)?;
    let (_, sigma2_e_given_a) = conditional_variances_oneway(t_bar, w_bar)?;

    let lambda_b = 2.0 * t_bar * sigma_omega2 + (1.0 - t_bar * t_bar) * w_bar;
    let xi = t_bar * (1.0 - t_bar) * sigma_omega2
        + (1.0 - t_bar) * (1.0 - t_bar) * w_bar
        + t_bar * w_bar;
    let lambda_e = xi + (1.0 - t_bar) * sigma_omega2;
    let root = (1.0 - t_bar).sqrt();
    let mu_dd = -root * one_way.mu;
    let theta_dd = -root * one_way.theta;
    let kappa = one_way.kappa;
    let eve_mode_variance = one_way.eve_variance;

    // Bob: modes (initial, returned), off-diagonal T sqrt(sigma_w^4 - 1) Z
    let ent = t_bar * (sigma_omega2 * sigma_omega2 - 1.0).max(0.0).sqrt();
    let mut bob = DMatrix::<f64>::zeros(4, 4);
    bob[(0, 0)] = sigma_omega2;
    bob[(1, 1)] = sigma_omega2;
    bob[(2, 2)] = lambda_b;
    bob[(3, 3)] = lambda_b;
    bob[(0, 2)] = ent;
    bob[(2, 0)] = ent;
    bob[(1, 3)] = -ent;
    bob[(3, 1)] = -ent;

    // Eve: modes (arm 1, EPR 1, arm 2, EPR 2); Z-blocks carry the sign flip
    let mut eve = DMatrix::<f64>::zeros(8, 8);
    let diag = [eve_mode_variance, w_bar, lambda_e, w_bar];
    for (m, &v) in diag.iter().enumerate() {
        eve[(2 * m, 2 * m)] = v;
        eve[(2 * m + 1, 2 * m + 1)] = v;
    }
    let mut set_block = |a: usize, b: usize, scalar: f64, pauli_z: bool| {
        let sign = if pauli_z { -1.0 } else { 1.0 };
        eve[(2 * a, 2 * b)] = scalar;
        eve[(2 * b, 2 * a)] = scalar;
        eve[(2 * a + 1, 2 * b + 1)] = sign * scalar;
        eve[(2 * b + 1, 2 * a + 1)] = sign * scalar;
    };
    set_block(0, 1, kappa, true);
    set_block(0, 2, mu_dd, false);
    set_block(1, 2, theta_dd, true);
    set_block(2, 3, kappa, true);

    for (name, m) in [("Bob", &bob), ("Eve", &eve)] {
        let min_eig = symmetric_min_eigenvalue(m);
        if min_eig < -1e-9 {
            return Err(Error::Internal(format!(
                "two-way {name} covariance is not PSD (min eigenvalue {min_eig})"
            )));
        }
    }

    Ok(TwoWayCovariances {
        lambda_b,
        xi,
        lambda_e,
        mu_dd,
        theta_dd,
        kappa,
        sigma2_e_given_a,
        eve_mode_variance,
        bob_matrix: bob,
        eve_matrix: eve,
    })
}

/// Labeled two-way spectra together with the product constraints that pin
/// the under-determined entries.
#[derive(Debug, Clone)]
pub struct TwoWaySpectra {
    pub spectra: BTreeMap<String, SymplecticSpectrum>,
    /// Product of the Bob-spectrum split factors, equal to T-bar.
    pub rho_product: f64,
    /// Product of the Eve-spectrum split factors, equal to (1 - T-bar)^2.
    pub omega_product: f64,
    /// Product constraint of the RR homodyne conditional spectrum.
    pub pi_product: f64,
    /// Product constraint of the RR heterodyne conditional triple.
    pub gamma_product: f64,
    /// The resolved triple under the active split policy.
    pub gamma_entries: [f64; 3],
    /// Conditioning scalar of the homodyne conditional spectrum.
    pub gamma_scalar: f64,
    /// Conditioning scalar of the DR homodyne spectrum.
    pub ell_scalar: f64,
}

/// Product of the RR heterodyne conditional triple.
pub fn gamma_triple_product(t_bar: f64, w_bar: f64) -> f64 {
    (1.0 + w_bar * (1.0 + t_bar.powi(3) + (1.0 - t_bar) * (1.0 + t_bar * t_bar) * w_bar))
        / (t_bar * (1.0 + t_bar))
}

fn resolve_gamma(policy: &GammaSplitPolicy, product: f64) -> Result<[f64; 3]> {
    match policy {
        GammaSplitPolicy::Symmetric => {
            let g = product.cbrt().max(1.0);
            Ok([g, g, g])
        }
        GammaSplitPolicy::Explicit(values) => {
            let p: f64 = values.iter().product();
            if (p - product).abs() > 1e-9 * product.abs().max(1.0) {
                return Err(Error::Parameter(format!(
                    "explicit split product {p} does not match the required {product}"
                )));
            }
            Ok(*values)
        }
        GammaSplitPolicy::Strict => Err(Error::Parameter(
            "strict split mode requires explicit eigenvalues for the conditional triple".into(),
        )),
    }
}

fn floored(values: &[f64]) -> Result<SymplecticSpectrum> {
    for &v in values {
        if !v.is_finite() {
            return Err(Error::Internal(format!(
                "non-finite symplectic eigenvalue {v}"
            )));
        }
    }
    SymplecticSpectrum::new(values.iter().map(|&v| v.max(1.0)).collect())
}

/// Labeled symplectic spectra of the two-way protocol in the
/// large-modulation regime, with product-constrained entries resolved by
/// the given split policy.
pub fn twoway_spectra(
    t_bar: f64,
    w_bar: f64,
    sigma_omega0_squared: f64,
    gamma: &GammaSplitPolicy,
) -> Result<TwoWaySpectra> {
    if sigma_omega0_squared < crate::protocol::REGIME_FLOOR {
        return Err(Error::Regime(format!(
            "single-carrier modulation variance {sigma_omega0_squared} is below the \
             large-modulation regime floor {}",
            crate::protocol::REGIME_FLOOR
        )));
    }
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
    let sw0 = sigma_omega0_squared;
    let t = t_bar;
    let w = w_bar;

    let rho_product = t;
    let rho = t.sqrt();
    let omega_product = (1.0 - t) * (1.0 - t);
    let omega = 1.0 - t;
    let pi_product = ((1.0 / t) * (1.0 - t).powi(3) * (1.0 + t.powi(3))).sqrt() * w;
    let pi = pi_product.sqrt();
    let gamma_product = gamma_triple_product(t, w);
    let gamma_entries = resolve_gamma(gamma, gamma_product)?;

    let gamma_scalar = (1.0 + t * t * (t * t + t - 2.0)).sqrt();
    let ell_scalar = (1.0 + 3.0 * t + t * t).sqrt();

    let mut spectra = BTreeMap::new();
    spectra.insert("S_B".to_string(), floored(&[t * sw0 / rho, t * sw0 / rho])?);
    spectra.insert(
        "S_B_given_A".to_string(),
        floored(&[
            gamma_scalar * sw0,
            (t * (1.0 - t * t)).sqrt() * w * sw0 / gamma_scalar,
        ])?,
    );
    spectra.insert(
        "S_E".to_string(),
        floored(&[
            omega_product * sw0 / omega,
            omega_product * sw0 / omega,
            w,
            w,
        ])?,
    );
    spectra.insert("S_E_given_B_hom".to_string(), floored(&[pi * sw0, w, 1.0])?);
    spectra.insert(
        "S_E_given_A_hom".to_string(),
        floored(&[
            ell_scalar * (1.0 - t) * sw0,
            (1.0 - t * t).sqrt() * sw0 * w / ell_scalar,
            w,
            1.0,
        ])?,
    );
    spectra.insert(
        "S_B_given_A_het".to_string(),
        floored(&[(1.0 - t * t) * sw0, w])?,
    );
    spectra.insert(
        "S_E_given_B_het".to_string(),
        floored(&[
            gamma_entries[0],
            gamma_entries[1],
            gamma_entries[2],
            (1.0 - t * t) * sw0,
        ])?,
    );
    spectra.insert(
        "S_E_given_A_het".to_string(),
        floored(&[(1.0 - t * t) * sw0, w, 1.0, 1.0])?,
    );

    Ok(TwoWaySpectra {
        spectra,
        rho_product,
        omega_product,
        pi_product,
        gamma_product,
        gamma_entries,
        gamma_scalar,
        ell_scalar,
    })
}

/// Information and eavesdropper terms of the two-way asymptotic rate.
pub fn rate_components_twoway(
    measurement: Measurement,
    reconciliation: Reconciliation,
    t_bar: f64,
    w_bar: f64,
    gamma: &GammaSplitPolicy,
    s48_alternate: bool,
) -> Result<(f64, f64)> {
    if !(t_bar > 0.0 && t_bar < 1.0) {
        return Err(Error::Parameter(format!(
            "averaged gain must lie in (0, 1), got {t_bar}"
        )));
    }
    let g_w = entropy_g(w_bar)?;
    let t = t_bar;
    let w = w_bar;
    Ok(match (measurement, reconciliation) {
        (Measurement::Hom, Reconciliation::Rr) => {
            let info = 0.5 * ((1.0 - t + t * t) / ((1.0 - t) * (1.0 - t))).log2();
            (info, g_w)
        }
        (Measurement::Hom, Reconciliation::Dr) => {
            let info = 0.5 * (t / ((1.0 - t) * (1.0 - t))).log2();
            (info, g_w)
        }
        (Measurement::Het, Reconciliation::Rr) => {
            let gammas = resolve_gamma(gamma, gamma_triple_product(t, w))?;
            let sigma2_e_given_a = (1.0 - t) + t * w;
            let lead = if s48_alternate { 2.0 * t } else { 2f64.powf(t) };
            let numerator = lead * (1.0 + t);
            let denominator = sigma2_e_given_a * (1.0 - t) * (1.0 + t * t + w - t * t * w);
            let mut info = (numerator / denominator).log2();
            for &gi in &gammas {
                info += entropy_g(gi.max(1.0))?;
            }
            (info, 2.0 * g_w)
        }
        (Measurement::Het, Reconciliation::Dr) => {
            let info = (t / ((1.0 - t) * (1.0 - t))).log2();
            (info, 2.0 * g_w)
        }
    })
}

/// Asymptotic two-way secret key rate with its decomposition and the
/// spectra of the configured variant.
pub fn keyrate_twoway(config: &ProtocolConfig) -> Result<KeyRateResult> {
    config.validate()?;
    config.check_regime()?;
    let (t_bar, w_bar) = config.averaged_parameters()?;
    // assemble the covariances first so inconsistent parameters surface as
    // internal errors before any rate is reported
    twoway_covariances(t_bar, w_bar, config.multicarrier_variance)?;
    let all = twoway_spectra(
        t_bar,
        w_bar,
        config.single_carrier_variance,
        &config.gamma_split,
    )?;
    let (info, eve) = rate_components_twoway(
        config.measurement,
        config.reconciliation,
        t_bar,
        w_bar,
        &config.gamma_split,
        config.s48_alternate,
    )?;
    Ok(KeyRateResult::new(info, eve, all.spectra, (t_bar, w_bar)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelEnsemble;
    use crate::oneway::rate_components_oneway;
    use crate::protocol::Direction;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn covariance_scalars() {
        // vacuum ancilla: kappa and theta'' vanish
        let c = twoway_covariances(0.5, 1.0, 10.0).unwrap();
        assert_eq!(c.kappa, 0.0);
        assert_eq!(c.theta_dd, 0.0);
        close(c.xi, 0.25 * 10.0 + 0.25 + 0.5, 1e-12);
        // generic point
        let c = twoway_covariances(0.5, 2.0, 10.0).unwrap();
        close(c.xi, 4.0, 1e-12);
        // transparent limit kills the cross scalars
        let c = twoway_covariances(1.0 - 1e-12, 2.0, 10.0).unwrap();
        close(c.mu_dd, 0.0, 1e-5);
        close(c.theta_dd, 0.0, 1e-5);
    }

    #[test]
    fn covariance_cross_module_identity() {
        let (t, w, sw) = (0.7, 2.5, 12.0);
        let two = twoway_covariances(t, w, sw).unwrap();
        let one = crate::attack::eve_covariance_oneway(t, w, sw).unwrap();
        close(two.mu_dd, -(1.0 - t).sqrt() * one.mu, 1e-12);
        close(two.theta_dd, -(1.0 - t).sqrt() * one.theta, 1e-12);
    }

    #[test]
    fn covariance_psd_grid() {
        for &t in &[0.1, 0.35, 0.6, 0.85, 0.97] {
            for &w in &[1.0, 1.7, 4.0, 9.0] {
                for &sw in &[1.5, 10.0, 60.0] {
                    let c = twoway_covariances(t, w, sw).unwrap();
                    assert!(symmetric_min_eigenvalue(&c.bob_matrix) >= -1e-9);
                    assert!(symmetric_min_eigenvalue(&c.eve_matrix) >= -1e-9);
                }
            }
        }
    }

    #[test]
    fn spectra_product_identities() {
        let s = twoway_spectra(0.9, 1.5, 100.0, &GammaSplitPolicy::Symmetric).unwrap();
        assert_eq!(s.rho_product, 0.9);
        close(s.omega_product, 0.01, 1e-15);
        close(s.gamma_scalar, 0.8746999485537884, 1e-12);
    }

    #[test]
    fn vacuum_rates() {
        let cases = [
            (Measurement::Hom, Reconciliation::Rr, 3.253_897_320_099_348),
            (Measurement::Hom, Reconciliation::Dr, 3.2459265481648374),
            (Measurement::Het, Reconciliation::Dr, 6.491_853_096_329_675),
        ];
        for (m, r, expect) in cases {
            let (info, eve) =
                rate_components_twoway(m, r, 0.9, 1.0, &GammaSplitPolicy::Symmetric, false)
                    .unwrap();
            close(info - eve, expect, 1e-12);
            assert_eq!(eve, 0.0, "g-terms must vanish at the vacuum point");
        }
    }

    #[test]
    fn dr_het_is_twice_dr_hom() {
        for i in 1..=20 {
            let t = 0.55 + 0.02 * i as f64;
            for k in 0..=10 {
                let w = 1.0 + 0.4 * k as f64;
                let (ih, eh) = rate_components_twoway(
                    Measurement::Hom,
                    Reconciliation::Dr,
                    t,
                    w,
                    &GammaSplitPolicy::Symmetric,
                    false,
                )
                .unwrap();
                let (it, et) = rate_components_twoway(
                    Measurement::Het,
                    Reconciliation::Dr,
                    t,
                    w,
                    &GammaSplitPolicy::Symmetric,
                    false,
                )
                .unwrap();
                assert!(
                    ((it - et) - 2.0 * (ih - eh)).abs() <= 1e-12,
                    "identity violated at T={t}, W={w}"
                );
            }
        }
    }

    #[test]
    fn twoway_dominates_oneway_dr_hom() {
        for i in 1..40 {
            let t = 0.5 + i as f64 * 0.0122;
            let (i2, e2) = rate_components_twoway(
                Measurement::Hom,
                Reconciliation::Dr,
                t,
                1.0,
                &GammaSplitPolicy::Symmetric,
                false,
            )
            .unwrap();
            let (i1, e1) =
                rate_components_oneway(Measurement::Hom, Reconciliation::Dr, t, 1.0).unwrap();
            assert!(i2 - e2 >= i1 - e1, "two-way below one-way at T={t}");
        }
    }

    #[test]
    fn strict_split_errors_for_rr_het_only() {
        let strict = GammaSplitPolicy::Strict;
        assert!(rate_components_twoway(
            Measurement::Het,
            Reconciliation::Rr,
            0.9,
            1.2,
            &strict,
            false
        )
        .is_err());
        // the split never enters the other three rates
        for (m, r) in [
            (Measurement::Hom, Reconciliation::Rr),
            (Measurement::Hom, Reconciliation::Dr),
            (Measurement::Het, Reconciliation::Dr),
        ] {
            let a = rate_components_twoway(m, r, 0.9, 1.2, &strict, false).unwrap();
            let b = rate_components_twoway(m, r, 0.9, 1.2, &GammaSplitPolicy::Symmetric, false)
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn explicit_split_must_match_product() {
        let prod = gamma_triple_product(0.9, 1.2);
        let g = prod.cbrt();
        let ok = GammaSplitPolicy::Explicit([g, g, g]);
        assert!(
            rate_components_twoway(Measurement::Het, Reconciliation::Rr, 0.9, 1.2, &ok, false)
                .is_ok()
        );
        let bad = GammaSplitPolicy::Explicit([1.0, 1.0, 1.0]);
        assert!(rate_components_twoway(
            Measurement::Het,
            Reconciliation::Rr,
            0.9,
            1.2,
            &bad,
            false
        )
        .is_err());
    }

    #[test]
    fn keyrate_end_to_end() {
        let ensemble = ChannelEnsemble::uniform(8, 0.9, 0.1, 1.0, 1e12).unwrap();
        let cfg = ProtocolConfig::new(
            Direction::TwoWay,
            Measurement::Hom,
            Reconciliation::Rr,
            100.0,
            10.0,
            ensemble,
        )
        .unwrap();
        let res = keyrate_twoway(&cfg).unwrap();
        close(res.rate_bits, 3.253_897_320_099_348, 1e-12);
        assert_eq!(res.rate_bits, res.mutual_info_term - res.eve_term);
        assert!(res.spectra_used.contains_key("S_E_given_B_hom"));
    }
}
