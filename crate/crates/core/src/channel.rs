//! Gaussian sub-channel parameterization: Fourier-domain transmittance,
//! entangling-cloner excess noise, noise-to-gain sub-channel selection, and
//! the per-sub-channel private classical capacity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One Gaussian sub-channel: its phase-space transmittance, Fourier-domain
/// gain, classical noise variance, and the entangling-cloner parameters of
/// the eavesdropper tapping it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubChannel {
    /// Complex phase-space gain; real and imaginary parts are equal by
    /// construction and each lies in [0, 1/sqrt(2)].
    pub transmittance: Complex64,
    /// Fourier-transformed squared transmittance |F(T)|^2 in [0, 1].
    pub fourier_gain: f64,
    /// Classical noise variance of the sub-channel (shot-noise units).
    pub noise_variance: f64,
    /// Variance of the EPR state used to attack this sub-channel (>= 1).
    pub eve_variance: f64,
    /// Eavesdropper beam-splitter gain, the complement 1 - fourier_gain.
    pub eve_fourier_gain: f64,
}

impl SubChannel {
    /// Builds a sub-channel from its Fourier-domain gain. The phase-space
    /// transmittance is reconstructed with equal quadrature components, and
    /// the eavesdropper gain is the beam-splitter complement of the gain.
    pub fn from_fourier_gain(
        fourier_gain: f64,
        noise_variance: f64,
        eve_variance: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&fourier_gain) {
            return Err(Error::Parameter(format!(
                "fourier gain must lie in [0, 1], got {fourier_gain}"
            )));
        }
        if !(noise_variance > 0.0) {
            return Err(Error::Parameter(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        if eve_variance < 1.0 {
            return Err(Error::Parameter(format!(
                "Eve variance must be >= 1, got {eve_variance}"
            )));
        }
        let q = (fourier_gain / 2.0).sqrt();
        Ok(Self {
            transmittance: Complex64::new(q, q),
            fourier_gain,
            noise_variance,
            eve_variance,
            eve_fourier_gain: 1.0 - fourier_gain,
        })
    }

    /// Squared magnitude of the phase-space transmittance.
    pub fn magnitude_squared(&self) -> f64 {
        self.transmittance.norm_sqr()
    }

    /// Noise-to-gain coefficient nu = sigma_N^2 / |F(T)|^2; infinite for a
    /// dead slot.
    pub fn nu(&self) -> f64 {
        if self.fourier_gain > 0.0 {
            self.noise_variance / self.fourier_gain
        } else {
            f64::INFINITY
        }
    }
}

/// The n-slot sub-channel ensemble with the l slots selected for key
/// material and the security threshold used to select them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelEnsemble {
    pub slots: Vec<SubChannel>,
    pub selected: Vec<usize>,
    pub nu_eve: f64,
}

impl ChannelEnsemble {
    /// Builds an ensemble, selecting exactly the slots whose noise-to-gain
    /// coefficient stays below the security threshold.
    pub fn new(slots: Vec<SubChannel>, nu_eve: f64) -> Result<Self> {
        if !(nu_eve > 0.0) && nu_eve != 0.0 {
            return Err(Error::Parameter(format!(
                "nu_eve must be non-negative, got {nu_eve}"
            )));
        }
        let selected = select_good_subchannels(&slots, nu_eve);
        Ok(Self {
            slots,
            selected,
            nu_eve,
        })
    }

    /// Uniform shorthand: n identical slots, the first l of which are eligible.
    pub fn uniform(
        n: usize,
        gain: f64,
        noise_variance: f64,
        eve_variance: f64,
        nu_eve: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter(
                "ensemble must have at least one slot".into(),
            ));
        }
        let slot = SubChannel::from_fourier_gain(gain, noise_variance, eve_variance)?;
        Self::new(vec![slot; n], nu_eve)
    }

    pub fn selected_slots(&self) -> impl Iterator<Item = &SubChannel> {
        self.selected.iter().map(|&i| &self.slots[i])
    }

    /// Averaged Fourier gain T-bar = (1/l) sum |F(T_i)|^2 over the selection.
    pub fn averaged_fourier_gain(&self) -> Result<f64> {
        averaged_fourier_gain(self)
    }

    /// Complementary averaged eavesdropper gain 1 - T-bar.
    pub fn averaged_eve_gain(&self) -> Result<f64> {
        Ok(1.0 - self.averaged_fourier_gain()?)
    }

    /// Averaged EPR variance W-bar over the selection.
    pub fn averaged_eve_variance(&self) -> Result<f64> {
        if self.selected.is_empty() {
            return Err(Error::State("no selected sub-channels".into()));
        }
        Ok(self.selected_slots().map(|s| s.eve_variance).sum::<f64>() / self.selected.len() as f64)
    }

    /// Averaged classical noise variance over the selection.
    pub fn averaged_noise_variance(&self) -> Result<f64> {
        if self.selected.is_empty() {
            return Err(Error::State("no selected sub-channels".into()));
        }
        Ok(self.selected_slots().map(|s| s.noise_variance).sum::<f64>()
            / self.selected.len() as f64)
    }

    /// Minimum noise-to-gain coefficient over the selection.
    pub fn nu_min(&self) -> Result<f64> {
        self.selected_slots()
            .map(|s| s.nu())
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
            .ok_or_else(|| Error::State("no selected sub-channels".into()))
    }

    /// Largest Fourier gain over the selection.
    pub fn max_gain(&self) -> Result<f64> {
        self.selected_slots()
            .map(|s| s.fourier_gain)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            .ok_or_else(|| Error::State("no selected sub-channels".into()))
    }
}

/// Indices of the slots carrying key material: exactly those with
/// `sigma_N^2 / |F(T)|^2 < nu_eve`, in input order. Dead slots (zero gain)
/// are never selected. An empty result is legal and means no secure
/// sub-channels exist.
pub fn select_good_subchannels(slots: &[SubChannel], nu_eve: f64) -> Vec<usize> {
    slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.fourier_gain > 0.0 && s.nu() < nu_eve)
        .map(|(i, _)| i)
        .collect()
}

/// Averaged Fourier gain of the selected slots.
pub fn averaged_fourier_gain(ensemble: &ChannelEnsemble) -> Result<f64> {
    if ensemble.selected.is_empty() {
        return Err(Error::State("no selected sub-channels".into()));
    }
    Ok(ensemble
        .selected_slots()
        .map(|s| s.fourier_gain)
        .sum::<f64>()
        / ensemble.selected.len() as f64)
}

/// Excess noise induced by an entangling cloner of EPR variance W coupled
/// through a beam splitter of gain g_E: `N = (W - 1) g_E / (1 - g_E)`.
/// Zero iff W = 1 or g_E = 0.
pub fn excess_noise(eve_variance: f64, eve_fourier_gain: f64) -> Result<f64> {
    if eve_variance < 1.0 {
        return Err(Error::Parameter(format!(
            "Eve variance must be >= 1, got {eve_variance}"
        )));
    }
    if !(0.0..1.0).contains(&eve_fourier_gain) {
        return Err(Error::Domain(format!(
            "Eve gain must lie in [0, 1); total interception (gain {eve_fourier_gain}) diverges"
        )));
    }
    Ok((eve_variance - 1.0) * eve_fourier_gain / (1.0 - eve_fourier_gain))
}

/// Multicarrier dominance predicate: the averaged Fourier gain exceeds the
/// single-carrier squared transmittance, the condition under which every
/// multicarrier rate dominates its single-carrier counterpart.
pub fn multicarrier_dominates(averaged_gain: f64, single_carrier_gain: f64) -> bool {
    averaged_gain > single_carrier_gain
}

/// Private-SNR ratio `R = (sigma_w^2 g + sigma_X^2) / (1 + sigma_X^2 sigma_w^2 g)`.
fn private_snr_ratio(
    modulation_variance: f64,
    fourier_gain: f64,
    sigma_x_squared: f64,
) -> Result<f64> {
    if !(modulation_variance > 0.0) {
        return Err(Error::Parameter(format!(
            "modulation variance must be positive, got {modulation_variance}"
        )));
    }
    if !(sigma_x_squared > 0.0) {
        return Err(Error::Parameter(format!(
            "sigma_X^2 must be positive, got {sigma_x_squared}"
        )));
    }
    if !(0.0..=1.0).contains(&fourier_gain) {
        return Err(Error::Parameter(format!(
            "fourier gain must lie in [0, 1], got {fourier_gain}"
        )));
    }
    let sg = modulation_variance * fourier_gain;
    Ok((sg + sigma_x_squared) / (1.0 + sigma_x_squared * sg))
}

/// Effective noise variance seen by private transmission:
/// `sigma_N*^2 = sigma_w^2 / (R - 1)`, infinite when R <= 1 (zero private SNR).
pub fn private_noise_variance(
    modulation_variance: f64,
    fourier_gain: f64,
    sigma_x_squared: f64,
) -> Result<f64> {
    let r = private_snr_ratio(modulation_variance, fourier_gain, sigma_x_squared)?;
    if r <= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(modulation_variance / (r - 1.0))
}

/// Which per-quadrature accounting the capacity formulas use: `Real` counts
/// one quadrature (1/2 log2 factors), `Complex` counts both (full log2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureConvention {
    Real,
    #[default]
    Complex,
}

/// Real-domain private classical capacity of one sub-channel:
/// `(1/2) log2(R)`, clamped at zero when R <= 1. Equals
/// `(1/2) log2(1 + sigma_w^2 g / sigma_N*^2)`.
pub fn private_capacity_subchannel(
    modulation_variance: f64,
    fourier_gain: f64,
    sigma_x_squared: f64,
) -> Result<f64> {
    let r = private_snr_ratio(modulation_variance, fourier_gain, sigma_x_squared)?;
    Ok((0.5 * r.log2()).max(0.0))
}

/// Inputs for the directional (DR/RR) private capacity: the modulation
/// headroom term plus an eavesdropper conditional-information term in bits.
#[derive(Debug, Clone, Copy)]
pub struct DirectionalStats {
    /// Modulation variance sigma_w^2 of the quadratures.
    pub modulation_variance: f64,
    /// Total link noise sigma_X^2 = vacuum + excess.
    pub sigma_x_squared: f64,
    /// Squeezing factor s (1 for coherent states).
    pub squeezing: f64,
    /// Eavesdropper conditional-information term in bits (>= 0 when Eve is
    /// correlated; 0 when uncorrelated).
    pub eve_term_bits: f64,
}

impl DirectionalStats {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("modulation_variance", self.modulation_variance),
            ("sigma_x_squared", self.sigma_x_squared),
            ("squeezing", self.squeezing),
            ("eve_term_bits", self.eve_term_bits),
        ] {
            if !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "missing or non-finite field {name}"
                )));
            }
        }
        if self.modulation_variance <= 0.0 || self.sigma_x_squared <= 0.0 || self.squeezing <= 0.0 {
            return Err(Error::Parameter(
                "modulation variance, sigma_X^2 and squeezing must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Directional private capacity of a sub-channel:
/// `max(0, (1/2) log2((sigma_w^2 + sigma_X^2)/(s + sigma_X^2)) - eve_term)`.
pub fn private_capacity_directional(stats: &DirectionalStats) -> Result<f64> {
    stats.validate()?;
    let head = 0.5
        * ((stats.modulation_variance + stats.sigma_x_squared)
            / (stats.squeezing + stats.sigma_x_squared))
            .log2();
    Ok((head - stats.eve_term_bits).max(0.0))
}
