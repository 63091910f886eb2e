//! Strict JSON run configuration: versioned schema, unknown fields rejected,
//! command-line overrides applied after parsing.

use amqd_core::{
    ChannelEnsemble, Direction, Error, GammaSplitPolicy, Measurement, ProtocolConfig,
    QuadratureConvention, Reconciliation, Result, SubChannel,
};
use serde::Deserialize;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: String,
    pub protocol: ProtocolSection,
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub users: Option<usize>,
    #[serde(default)]
    pub eve_terms: Option<Vec<f64>>,
    #[serde(default)]
    pub vacuum_noise: Option<f64>,
    #[serde(default)]
    pub svd_v: Option<Vec<f64>>,
    #[serde(default)]
    pub alloc: Option<AllocPolicy>,
    #[serde(default)]
    pub variant: Option<String>,
    #[serde(default)]
    pub quantity: Option<QuantityKind>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub direction: Direction,
    pub measurement: Measurement,
    pub reconciliation: Reconciliation,
    pub single_carrier_variance: f64,
    pub multicarrier_variance: f64,
    #[serde(default = "one")]
    pub squeezing: f64,
    #[serde(default = "one")]
    pub shot_noise: f64,
    #[serde(default = "half")]
    pub beam_splitter: f64,
    #[serde(default)]
    pub quadrature_convention: QuadratureConvention,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}

/// Either an explicit slot list or the uniform (n, l, gain, noise) shorthand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum EnsembleSection {
    Explicit {
        slots: Vec<SlotSpec>,
        nu_eve: f64,
    },
    Uniform {
        n: usize,
        #[serde(default)]
        l: Option<usize>,
        gain: f64,
        noise_variance: f64,
        #[serde(default = "one")]
        eve_variance: f64,
        nu_eve: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSpec {
    pub fourier_gain: f64,
    pub noise_variance: f64,
    #[serde(default = "one")]
    pub eve_variance: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Tbar,
    EveVariance,
    ModVariance,
    NuEve,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tbar" | "t_bar" => Ok(Self::Tbar),
            "wbar" | "w_bar" | "eve_variance" => Ok(Self::EveVariance),
            "mod_variance" => Ok(Self::ModVariance),
            "nu_eve" => Ok(Self::NuEve),
            other => Err(Error::Parameter(format!(
                "sweep axis must name a declared numeric field \
                 (tbar, eve_variance, mod_variance, nu_eve), got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: OutputFormat,
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocPolicy {
    Uniform,
    Waterfill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityKind {
    ExcessNoise,
    EveVariance,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Parameter(format!("config parse failure: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Parameter(format!(
                "unrecognized schema_version '{}' (expected '{SCHEMA_VERSION}')",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// Materializes the ensemble section into a selected ensemble.
    pub fn build_ensemble(&self) -> Result<ChannelEnsemble> {
        match &self.ensemble {
            EnsembleSection::Explicit { slots, nu_eve } => {
                let built: Result<Vec<SubChannel>> = slots
                    .iter()
                    .map(|s| {
                        SubChannel::from_fourier_gain(
                            s.fourier_gain,
                            s.noise_variance,
                            s.eve_variance,
                        )
                    })
                    .collect();
                ChannelEnsemble::new(built?, *nu_eve)
            }
            EnsembleSection::Uniform {
                n,
                l,
                gain,
                noise_variance,
                eve_variance,
                nu_eve,
            } => {
                let n = *n;
                let l = l.unwrap_or(n);
                if l > n {
                    return Err(Error::Parameter(format!(
                        "shorthand ensemble has l = {l} > n = {n}"
                    )));
                }
                let live = SubChannel::from_fourier_gain(*gain, *noise_variance, *eve_variance)?;
                let mut slots = vec![live; l];
                // the n - l unused slots are dead and never selected
                let dead = SubChannel::from_fourier_gain(0.0, *noise_variance, *eve_variance)?;
                slots.resize(n, dead);
                ChannelEnsemble::new(slots, *nu_eve)
            }
        }
    }

    /// Full protocol configuration at the current (possibly overridden)
    /// parameter values.
    pub fn build_protocol(&self) -> Result<ProtocolConfig> {
        let p = &self.protocol;
        let cfg = ProtocolConfig {
            direction: p.direction,
            measurement: p.measurement,
            reconciliation: p.reconciliation,
            single_carrier_variance: p.single_carrier_variance,
            multicarrier_variance: p.multicarrier_variance,
            squeezing: p.squeezing,
            shot_noise: p.shot_noise,
            beam_splitter: p.beam_splitter,
            ensemble: self.build_ensemble()?,
            quadrature_convention: p.quadrature_convention,
            gamma_split: GammaSplitPolicy::Symmetric,
            s48_alternate: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one sweep-axis value, rebuilding the affected section.
    pub fn apply_axis(&mut self, axis: SweepAxis, value: f64) -> Result<()> {
        match axis {
            SweepAxis::Tbar => self.set_uniform_gain(value),
            SweepAxis::EveVariance => self.set_eve_variance(value),
            SweepAxis::ModVariance => {
                self.protocol.multicarrier_variance = value;
                Ok(())
            }
            SweepAxis::NuEve => {
                match &mut self.ensemble {
                    EnsembleSection::Explicit { nu_eve, .. }
                    | EnsembleSection::Uniform { nu_eve, .. } => *nu_eve = value,
                }
                Ok(())
            }
        }
    }

    pub fn set_uniform_gain(&mut self, value: f64) -> Result<()> {
        match &mut self.ensemble {
            EnsembleSection::Uniform { gain, .. } => {
                *gain = value;
                Ok(())
            }
            EnsembleSection::Explicit { .. } => Err(Error::Parameter(
                "gain override requires the uniform ensemble shorthand".into(),
            )),
        }
    }

    pub fn set_eve_variance(&mut self, value: f64) -> Result<()> {
        match &mut self.ensemble {
            EnsembleSection::Uniform { eve_variance, .. } => {
                *eve_variance = value;
                Ok(())
            }
            EnsembleSection::Explicit { slots, .. } => {
                for s in slots {
                    s.eve_variance = value;
                }
                Ok(())
            }
        }
    }

    /// Grid of sweep values in declaration order. `None` means no sweep was
    /// declared (callers evaluate the single configured point); a declared
    /// sweep with zero steps yields an empty grid (header-only output).
    pub fn sweep_points(&self) -> Option<Vec<f64>> {
        self.sweep.as_ref().map(|s| match s.steps {
            0 => Vec::new(),
            1 => vec![s.lo],
            n => (0..n)
                .map(|i| s.lo + (s.hi - s.lo) * i as f64 / (n - 1) as f64)
                .collect(),
        })
    }
}
