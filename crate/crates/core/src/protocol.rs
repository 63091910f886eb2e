//! Protocol configuration and the key-rate result type shared by the one-way
//! and two-way rate modules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::attack::EstimatorConfig;
use crate::channel::{ChannelEnsemble, QuadratureConvention};
use crate::error::{Error, Result};
use crate::gaussian::SymplecticSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    OneWay,
    TwoWay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measurement {
    Hom,
    Het,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reconciliation {
    Dr,
    Rr,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::OneWay => "one_way",
            Direction::TwoWay => "two_way",
        })
    }
}

impl std::fmt::Display for Measurement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Measurement::Hom => "hom",
            Measurement::Het => "het",
        })
    }
}

impl std::fmt::Display for Reconciliation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Reconciliation::Dr => "dr",
            Reconciliation::Rr => "rr",
        })
    }
}

/// How the under-determined eigenvalue triple of the two-way RR heterodyne
/// spectra is split. Only the product is fixed by the model; the symmetric
/// split is the documented default, `Strict` refuses to guess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GammaSplitPolicy {
    #[default]
    Symmetric,
    Explicit([f64; 3]),
    Strict,
}

/// Floor of the large-modulation regime in which the closed-form spectra are
/// valid; configurations below it are rejected with a regime error.
pub const REGIME_FLOOR: f64 = 10.0;
/// Upper edge of the warning band: the regime holds but only marginally.
pub const REGIME_COMFORT: f64 = 100.0;

/// Full protocol parameterization: variant, modulation variances, squeezing,
/// shot noise, detection beam splitter, and the sub-channel ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub direction: Direction,
    pub measurement: Measurement,
    pub reconciliation: Reconciliation,
    /// Single-carrier modulation variance sigma_w0^2.
    pub single_carrier_variance: f64,
    /// Multicarrier (subcarrier) modulation variance sigma_w^2.
    pub multicarrier_variance: f64,
    /// Squeezing factor s; 1 for coherent states.
    pub squeezing: f64,
    /// Shot-noise variance N_0.
    pub shot_noise: f64,
    /// Internal beam-splitter transmittance of the heterodyne detector.
    pub beam_splitter: f64,
    pub ensemble: ChannelEnsemble,
    pub quadrature_convention: QuadratureConvention,
    pub gamma_split: GammaSplitPolicy,
    /// Use the alternate reading of the two-way RR heterodyne leading term
    /// (plain product instead of the literal power-of-two factor).
    pub s48_alternate: bool,
}

impl ProtocolConfig {
    /// A coherent-state configuration with the conventional defaults
    /// (s = 1, N_0 = 1, balanced detector splitter).
    pub fn new(
        direction: Direction,
        measurement: Measurement,
        reconciliation: Reconciliation,
        single_carrier_variance: f64,
        multicarrier_variance: f64,
        ensemble: ChannelEnsemble,
    ) -> Result<Self> {
        let cfg = Self {
            direction,
            measurement,
            reconciliation,
            single_carrier_variance,
            multicarrier_variance,
            squeezing: 1.0,
            shot_noise: 1.0,
            beam_splitter: 0.5,
            ensemble,
            quadrature_convention: QuadratureConvention::Complex,
            gamma_split: GammaSplitPolicy::Symmetric,
            s48_alternate: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.single_carrier_variance > 0.0) || !(self.multicarrier_variance > 0.0) {
            return Err(Error::Parameter(
                "modulation variances must be positive".into(),
            ));
        }
        if !(self.shot_noise > 0.0) {
            return Err(Error::Parameter("shot noise must be positive".into()));
        }
        if !(self.beam_splitter > 0.0 && self.beam_splitter < 1.0) {
            return Err(Error::Parameter(
                "beam splitter transmittance must lie strictly inside (0, 1)".into(),
            ));
        }
        let l = self.ensemble.selected.len();
        let n = self.ensemble.slots.len();
        if l > 0 && l as f64 * self.multicarrier_variance >= n as f64 * self.single_carrier_variance
        {
            return Err(Error::Parameter(format!(
                "variance budget violated: l*sigma_w^2 = {} must stay below n*sigma_w0^2 = {}",
                l as f64 * self.multicarrier_variance,
                n as f64 * self.single_carrier_variance
            )));
        }
        let sw = self.multicarrier_variance;
        if sw > 1.0 && !(self.squeezing > 1.0 / sw && self.squeezing < sw) {
            return Err(Error::Parameter(format!(
                "squeezing {} outside the allowed range (1/{sw}, {sw})",
                self.squeezing
            )));
        }
        if let GammaSplitPolicy::Explicit(g) = &self.gamma_split {
            if g.iter().any(|&x| x < 1.0) {
                return Err(Error::Parameter(
                    "explicit spectrum split entries must be >= 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Rejects configurations below the large-modulation regime floor.
    pub fn check_regime(&self) -> Result<()> {
        if self.single_carrier_variance < REGIME_FLOOR {
            return Err(Error::Regime(format!(
                "single-carrier modulation variance {} is below the large-modulation \
                 regime floor {REGIME_FLOOR}; the closed-form spectra do not apply",
                self.single_carrier_variance
            )));
        }
        Ok(())
    }

    /// Warning text when the regime holds only marginally.
    pub fn regime_warning(&self) -> Option<String> {
        if (REGIME_FLOOR..REGIME_COMFORT).contains(&self.single_carrier_variance) {
            Some(format!(
                "single-carrier modulation variance {} sits in the marginal band \
                 [{REGIME_FLOOR}, {REGIME_COMFORT}); closed-form spectra carry O(1/variance) error",
                self.single_carrier_variance
            ))
        } else {
            None
        }
    }

    /// Averaged (T-bar, W-bar) of the selected sub-channels.
    pub fn averaged_parameters(&self) -> Result<(f64, f64)> {
        Ok((
            self.ensemble.averaged_fourier_gain()?,
            self.ensemble.averaged_eve_variance()?,
        ))
    }

    /// Estimator-formula parameters derived from this configuration.
    pub fn estimator_config(&self, sigma_x_squared: f64) -> EstimatorConfig {
        EstimatorConfig {
            modulation_variance: self.multicarrier_variance,
            sigma_x_squared,
            squeezing: self.squeezing,
            shot_noise: self.shot_noise,
            beam_splitter: self.beam_splitter,
        }
    }
}

/// A secret key rate split into its information and eavesdropper terms;
/// `rate_bits = mutual_info_term - eve_term` holds exactly.
#[derive(Debug, Clone, Serialize)]
pub struct KeyRateResult {
    pub rate_bits: f64,
    pub mutual_info_term: f64,
    pub eve_term: f64,
    #[serde(skip)]
    pub spectra_used: BTreeMap<String, SymplecticSpectrum>,
    /// The resolved (T-bar, W-bar) the formulas were evaluated at.
    pub parameters_echo: (f64, f64),
}

impl KeyRateResult {
    pub fn new(
        mutual_info_term: f64,
        eve_term: f64,
        spectra_used: BTreeMap<String, SymplecticSpectrum>,
        parameters_echo: (f64, f64),
    ) -> Self {
        Self {
            rate_bits: mutual_info_term - eve_term,
            mutual_info_term,
            eve_term,
            spectra_used,
            parameters_echo,
        }
    }

    /// Rate clamped at zero, the operationally meaningful value.
    pub fn rate_clamped(&self) -> f64 {
        self.rate_bits.max(0.0)
    }
}
