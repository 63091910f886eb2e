//! Security thresholds: tolerable excess noise (closed forms and zero-rate
//! root finding), maximum eavesdropper variance boundaries, and the measured
//! improvement ratios between single-carrier and multicarrier operation.
//!
//! Plain bisection everywhere: the rate functions are cheap and the entropy
//! term has a singular derivative at W = 1, where safeguarded interpolation
//! buys nothing.

use serde::Serialize;

use crate::channel::excess_noise;
use crate::error::{Error, Result};
use crate::oneway::rate_components_oneway;
use crate::protocol::{Direction, GammaSplitPolicy, Measurement, ProtocolConfig, Reconciliation};
use crate::twoway::rate_components_twoway;

const BISECT_MAX_ITER: usize = 200;
const BISECT_XTOL: f64 = 1e-13;
/// Upper cap on bracket expansion before a sweep reports "unbounded".
const BRACKET_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdQuantity {
    ExcessNoise,
    EveVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedForm,
    Bisection,
}

/// A solved security threshold with its sign-change certificate.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdResult {
    pub quantity: ThresholdQuantity,
    pub value: f64,
    pub method: SolveMethod,
    /// Bracket across which the rate changes sign.
    pub bracket: (f64, f64),
    /// |rate(value)| in bits.
    pub residual: f64,
    pub direction: Direction,
    pub measurement: Measurement,
    pub reconciliation: Reconciliation,
    pub t_bar: f64,
}

/// Outcome of a threshold solve; the non-solved cases are legal results,
/// not errors.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdOutcome {
    Solved(ThresholdResult),
    /// The rate is non-positive over the whole bracket (e.g. DR below
    /// half transmittance): no excess noise is tolerable.
    NoPositiveRate,
    /// The rate stayed positive up to the expansion cap; flagged for review.
    Unbounded,
}

impl ThresholdOutcome {
    pub fn solved(&self) -> Option<&ThresholdResult> {
        match self {
            ThresholdOutcome::Solved(r) => Some(r),
            _ => None,
        }
    }
}

/// Asymptotic rate of any protocol variant from the averaged channel
/// parameters, using the documented defaults for the split policy.
pub fn asymptotic_rate(
    direction: Direction,
    measurement: Measurement,
    reconciliation: Reconciliation,
    t_bar: f64,
    w_bar: f64,
) -> Result<f64> {
    let (info, eve) = match direction {
        Direction::OneWay => rate_components_oneway(measurement, reconciliation, t_bar, w_bar)?,
        Direction::TwoWay => rate_components_twoway(
            measurement,
            reconciliation,
            t_bar,
            w_bar,
            &GammaSplitPolicy::Symmetric,
            false,
        )?,
    };
    Ok(info - eve)
}

/// Eve variance realizing a given excess noise at averaged gain `t_bar`
/// (the eavesdropper gain is the beam-splitter complement `1 - t_bar`).
pub fn eve_variance_for_excess_noise(t_bar: f64, excess: f64) -> f64 {
    1.0 + excess * t_bar / (1.0 - t_bar)
}

fn rate_at_excess_noise(
    direction: Direction,
    measurement: Measurement,
    reconciliation: Reconciliation,
    t_bar: f64,
    excess: f64,
) -> Result<f64> {
    asymptotic_rate(
        direction,
        measurement,
        reconciliation,
        t_bar,
        eve_variance_for_excess_noise(t_bar, excess),
    )
}

struct BisectSolution {
    root: f64,
    bracket: (f64, f64),
    residual: f64,
}

/// Bisection on a function with f(lo) > 0 > f(hi).
fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<BisectSolution> {
    let original = (lo, hi);
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Internal(format!(
            "bisection bracket has no sign change: f({lo}) = {f_lo}, f({hi}) = {f_hi}"
        )));
    }
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo < BISECT_XTOL * mid.abs().max(1.0) {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid > 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        let _ = f_lo;
    }
    let root = 0.5 * (lo + hi);
    Ok(BisectSolution {
        root,
        bracket: original,
        residual: f(root)?.abs(),
    })
}

/// The four single-carrier reference variants with published closed forms
/// or reference values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SingleCarrierVariant {
    RrOneWaySingle,
    DrOneWaySingle,
    RrTwoWaySingle,
    DrTwoWaySingle,
}

impl std::str::FromStr for SingleCarrierVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rr_one_way_single" => Ok(Self::RrOneWaySingle),
            "dr_one_way_single" => Ok(Self::DrOneWaySingle),
            "rr_two_way_single" => Ok(Self::RrTwoWaySingle),
            "dr_two_way_single" => Ok(Self::DrTwoWaySingle),
            other => Err(Error::Parameter(format!("unknown variant '{other}'"))),
        }
    }
}

impl std::fmt::Display for SingleCarrierVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::RrOneWaySingle => "rr_one_way_single",
            Self::DrOneWaySingle => "dr_one_way_single",
            Self::RrTwoWaySingle => "rr_two_way_single",
            Self::DrTwoWaySingle => "dr_two_way_single",
        })
    }
}

/// A single-carrier tolerable-excess-noise reference value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClosedFormThreshold {
    pub variant: SingleCarrierVariant,
    pub value: f64,
    pub method: SolveMethod,
    pub residual: f64,
}

/// The implicit single-carrier DR condition: the left side equals e^2 at
/// the tolerable excess noise.
pub fn dr_one_way_condition(excess: f64) -> f64 {
    let r = (1.0 + excess).sqrt();
    (1.0 / (1.0 + excess)) * ((r + 1.0) / (r - 1.0)).powf(r)
}

/// Tolerable excess noise of the single-carrier reference variants:
/// the RR one-way analytic form, the DR one-way implicit-equation root, and
/// the two-way reference values.
pub fn tolerable_excess_noise_closed_form(
    variant: SingleCarrierVariant,
) -> Result<ClosedFormThreshold> {
    match variant {
        SingleCarrierVariant::RrOneWaySingle => {
            let e2 = std::f64::consts::E * std::f64::consts::E;
            Ok(ClosedFormThreshold {
                variant,
                value: 0.5 * ((1.0 + 16.0 / e2).sqrt() - 1.0),
                method: SolveMethod::ClosedForm,
                residual: 0.0,
            })
        }
        SingleCarrierVariant::DrOneWaySingle => {
            let e2 = std::f64::consts::E * std::f64::consts::E;
            let f = move |n: f64| -> Result<f64> { Ok(dr_one_way_condition(n) - e2) };
            let sol = bisect(&f, 0.5, 1.2)?;
            Ok(ClosedFormThreshold {
                variant,
                value: sol.root,
                method: SolveMethod::Bisection,
                residual: sol.residual,
            })
        }
        SingleCarrierVariant::RrTwoWaySingle => Ok(ClosedFormThreshold {
            variant,
            value: 0.8,
            method: SolveMethod::ClosedForm,
            residual: 0.0,
        }),
        SingleCarrierVariant::DrTwoWaySingle => Ok(ClosedFormThreshold {
            variant,
            value: 0.75,
            method: SolveMethod::ClosedForm,
            residual: 0.0,
        }),
    }
}

/// Grouping of the coherent-state RR positivity product; the factored form
/// is the default, the trailing form keeps the modulation correction outside
/// the product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RrBoundGrouping {
    #[default]
    Factored,
    Trailing,
}

/// The coherent-state RR positivity product at gain `t_bar` and excess
/// noise `excess`; private transmission needs it below 1.
pub fn rr_positivity_product(
    t_bar: f64,
    excess: f64,
    sigma_omega0_squared: f64,
    grouping: RrBoundGrouping,
) -> f64 {
    let sx = 1.0 + excess;
    let a = t_bar * sx + t_bar;
    match grouping {
        RrBoundGrouping::Factored => a * (t_bar * sx + t_bar / sigma_omega0_squared),
        RrBoundGrouping::Trailing => a * t_bar * sx + t_bar / sigma_omega0_squared,
    }
}

/// Closed-form upper bound on the tolerable excess noise of the configured
/// variant, when one exists: the DR transmittance bound, or the largest
/// excess noise keeping the RR positivity product below 1.
pub fn closed_form_bound(
    reconciliation: Reconciliation,
    t_bar: f64,
    sigma_omega0_squared: f64,
    grouping: RrBoundGrouping,
) -> Option<f64> {
    match reconciliation {
        Reconciliation::Dr => {
            let b = 2.0 - 1.0 / t_bar;
            (b > 0.0).then_some(b)
        }
        Reconciliation::Rr => {
            if rr_positivity_product(t_bar, 0.0, sigma_omega0_squared, grouping) >= 1.0 {
                return None;
            }
            // coarse scan for the boundary, then bisect the product itself
            let mut hi = 1.0;
            while rr_positivity_product(t_bar, hi, sigma_omega0_squared, grouping) < 1.0 {
                hi *= 2.0;
                if hi > BRACKET_CAP {
                    return None;
                }
            }
            let f = move |n: f64| -> Result<f64> {
                Ok(1.0 - rr_positivity_product(t_bar, n, sigma_omega0_squared, grouping))
            };
            bisect(&f, 0.0, hi).ok().map(|s| s.root)
        }
    }
}

/// Multicarrier tolerable excess noise with the accompanying diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct MulticarrierThreshold {
    pub outcome: ThresholdOutcome,
    /// Closed-form upper bound of the matching variant, when defined.
    pub closed_form_bound: Option<f64>,
    /// Measured additive constant against a single-carrier baseline gain.
    pub c_constant: Option<f64>,
}

/// Tolerable excess noise of the configured multicarrier protocol: bisection
/// on the zero of the key rate as a function of the excess noise, bracketed
/// by the closed-form bound where one exists. `single_carrier_gain` enables
/// the reported additive constant against the single-carrier baseline.
pub fn tolerable_excess_noise_multicarrier(
    config: &ProtocolConfig,
    single_carrier_gain: Option<f64>,
) -> Result<MulticarrierThreshold> {
    config.validate()?;
    config.check_regime()?;
    let t_bar = config.ensemble.averaged_fourier_gain()?;
    solve_excess_noise_at(
        config.direction,
        config.measurement,
        config.reconciliation,
        t_bar,
        config.single_carrier_variance,
        single_carrier_gain,
    )
}

/// Same solve from bare averaged parameters (used by sweeps and ratios).
pub fn solve_excess_noise_at(
    direction: Direction,
    measurement: Measurement,
    reconciliation: Reconciliation,
    t_bar: f64,
    sigma_omega0_squared: f64,
    single_carrier_gain: Option<f64>,
) -> Result<MulticarrierThreshold> {
    if !(t_bar > 0.0 && t_bar < 1.0) {
        return Err(Error::Parameter(format!(
            "averaged gain must lie in (0, 1), got {t_bar}"
        )));
    }
    let bound = closed_form_bound(
        reconciliation,
        t_bar,
        sigma_omega0_squared,
        RrBoundGrouping::Factored,
    );
    let c_constant = single_carrier_gain.map(|single| match reconciliation {
        Reconciliation::Dr => 1.0 / single - 1.0 / t_bar,
        Reconciliation::Rr => {
            rr_positivity_product(t_bar, 0.0, sigma_omega0_squared, RrBoundGrouping::Factored)
                - rr_positivity_product(
                    single,
                    0.0,
                    sigma_omega0_squared,
                    RrBoundGrouping::Factored,
                )
        }
    });

    let rate = |n: f64| rate_at_excess_noise(direction, measurement, reconciliation, t_bar, n);
    if rate(0.0)? <= 0.0 {
        return Ok(MulticarrierThreshold {
            outcome: ThresholdOutcome::NoPositiveRate,
            closed_form_bound: bound,
            c_constant,
        });
    }
    // expand the bracket from the closed-form bound (or 1) until the rate
    // goes negative
    let mut hi = bound.unwrap_or(1.0).max(1e-3);
    while rate(hi)? > 0.0 {
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Ok(MulticarrierThreshold {
                outcome: ThresholdOutcome::Unbounded,
                closed_form_bound: bound,
                c_constant,
            });
        }
    }
    let sol = bisect(&|n| rate(n), 0.0, hi)?;
    Ok(MulticarrierThreshold {
        outcome: ThresholdOutcome::Solved(ThresholdResult {
            quantity: ThresholdQuantity::ExcessNoise,
            value: sol.root,
            method: SolveMethod::Bisection,
            bracket: sol.bracket,
            residual: sol.residual,
            direction,
            measurement,
            reconciliation,
            t_bar,
        }),
        closed_form_bound: bound,
        c_constant,
    })
}

/// A sweep of maximum tolerable Eve variances over a transmittance grid,
/// with the monotone-shape check result.
#[derive(Debug, Clone, Serialize)]
pub struct EveVarianceSweep {
    pub points: Vec<(f64, ThresholdOutcome)>,
    /// Whether W_max is non-decreasing in the gain over the solved points.
    pub monotone: bool,
}

/// Maximum tolerable Eve variance per grid point: bisection on the zero of
/// the rate as a function of W over [1, W_hi], doubling W_hi until a sign
/// change appears or the cap flags the point as unbounded.
pub fn max_eve_variance(
    direction: Direction,
    measurement: Measurement,
    reconciliation: Reconciliation,
    t_bar_grid: &[f64],
) -> Result<EveVarianceSweep> {
    let mut points = Vec::with_capacity(t_bar_grid.len());
    for &t_bar in t_bar_grid {
        if !(t_bar > 0.0 && t_bar < 1.0) {
            return Err(Error::Parameter(format!(
                "grid gain must lie in (0, 1), got {t_bar}"
            )));
        }
        let rate = |w: f64| asymptotic_rate(direction, measurement, reconciliation, t_bar, w);
        let outcome = if rate(1.0)? <= 0.0 {
            // no headroom: the boundary sits at the vacuum ancilla
            ThresholdOutcome::Solved(ThresholdResult {
                quantity: ThresholdQuantity::EveVariance,
                value: 1.0,
                method: SolveMethod::ClosedForm,
                bracket: (1.0, 1.0),
                residual: rate(1.0)?.abs(),
                direction,
                measurement,
                reconciliation,
                t_bar,
            })
        } else {
            let mut hi = 2.0;
            let mut capped = false;
            while rate(hi)? > 0.0 {
                hi *= 2.0;
                if hi > BRACKET_CAP {
                    capped = true;
                    break;
                }
            }
            if capped {
                ThresholdOutcome::Unbounded
            } else {
                let sol = bisect(&|w| rate(w), 1.0, hi)?;
                ThresholdOutcome::Solved(ThresholdResult {
                    quantity: ThresholdQuantity::EveVariance,
                    value: sol.root,
                    method: SolveMethod::Bisection,
                    bracket: sol.bracket,
                    residual: sol.residual,
                    direction,
                    measurement,
                    reconciliation,
                    t_bar,
                })
            }
        };
        points.push((t_bar, outcome));
    }
    let mut ordered: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|(t, o)| o.solved().map(|r| (*t, r.value)))
        .collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = ordered.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-9);
    Ok(EveVarianceSweep { points, monotone })
}

/// Ratio of single-carrier to multicarrier excess noise at the given
/// parameters; infinite when the multicarrier side has zero excess noise
/// while the single-carrier side does not.
pub fn improvement_ratio_kappa(single: (f64, f64), multi: (f64, f64)) -> Result<f64> {
    let n_single = excess_noise(single.0, single.1)?;
    let n_multi = excess_noise(multi.0, multi.1)?;
    if n_multi == 0.0 {
        if n_single == 0.0 {
            return Ok(1.0);
        }
        return Ok(f64::INFINITY);
    }
    Ok(n_single / n_multi)
}

/// Measured threshold improvement of a multicarrier ensemble over a
/// single-carrier baseline evaluated with the same variant: the ratio of the
/// two solved tolerable-excess-noise values. `None` when either side has no
/// positive-rate region.
pub fn measured_threshold_ratio(
    direction: Direction,
    measurement: Measurement,
    reconciliation: Reconciliation,
    t_bar_multi: f64,
    gain_single: f64,
    sigma_omega0_squared: f64,
) -> Result<Option<f64>> {
    let multi = solve_excess_noise_at(
        direction,
        measurement,
        reconciliation,
        t_bar_multi,
        sigma_omega0_squared,
        None,
    )?;
    let single = solve_excess_noise_at(
        direction,
        measurement,
        reconciliation,
        gain_single,
        sigma_omega0_squared,
        None,
    )?;
    Ok(match (multi.outcome.solved(), single.outcome.solved()) {
        (Some(m), Some(s)) if s.value > 0.0 => Some(m.value / s.value),
        _ => None,
    })
}

/// Aggregate excess noise before and after the SVD transform of the Eve
/// gains; the transformed value never exceeds the original.
pub fn svd_threshold_boost(
    ensemble: &crate::channel::ChannelEnsemble,
    v: &[f64],
) -> Result<(f64, f64)> {
    let l = ensemble.selected.len();
    if l == 0 {
        return Err(Error::State("no selected sub-channels".into()));
    }
    if v.len() != l {
        return Err(Error::Parameter(format!(
            "expected {l} SVD gains, got {}",
            v.len()
        )));
    }
    let w_bar = ensemble.averaged_eve_variance()?;
    let eve_gain: f64 = ensemble
        .selected_slots()
        .map(|s| s.eve_fourier_gain)
        .sum::<f64>()
        / l as f64;
    let transformed: f64 = ensemble
        .selected_slots()
        .zip(v)
        .map(|(s, &vi)| crate::mqa::svd_transformed_eve_gain(s.eve_fourier_gain, vi))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>()
        / l as f64;
    let n_plain = excess_noise(w_bar, eve_gain)?;
    let n_svd = excess_noise(w_bar, transformed)?;
    if n_svd > n_plain + 1e-12 {
        return Err(Error::Internal(format!(
            "SVD transform increased the excess noise: {n_svd} > {n_plain}"
        )));
    }
    Ok((n_plain, n_svd))
}
