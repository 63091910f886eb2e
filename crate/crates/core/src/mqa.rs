//! Multiuser capacity and private-capacity regions over a shared sub-channel
//! set: sum/symmetric capacities, corner points, secret-key-rate regions,
//! and their SVD-assisted variants.
//!
//! All users share the selected sub-channels of one physical link, so every
//! corner point equals the sum capacity with the whole variance budget
//! handed to that user.

use serde::{Deserialize, Serialize};

use crate::channel::{excess_noise, private_noise_variance, ChannelEnsemble, QuadratureConvention};
use crate::error::{Error, Result};

/// Per-slot modulation-variance allocation under the mean-budget constraint
/// `(1/l) sum sigma_wi^2 = sigma_w^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Per-selected-slot variances, in selection order.
    pub per_slot: Vec<f64>,
    /// The budgeted mean variance sigma_w^2.
    pub budget: f64,
}

impl Allocation {
    /// Constant allocation: every selected slot gets the budget.
    pub fn uniform(slots: usize, budget: f64) -> Result<Self> {
        if slots == 0 {
            return Err(Error::State("no selected sub-channels to allocate".into()));
        }
        if !(budget > 0.0) {
            return Err(Error::Parameter(format!(
                "variance budget must be positive, got {budget}"
            )));
        }
        Ok(Self {
            per_slot: vec![budget; slots],
            budget,
        })
    }

    /// Water-filling allocation maximizing the sum rate under the same
    /// total-variance budget: `p_i = max(0, level - sigma_Ni^2 / g_i)`.
    pub fn waterfill(ensemble: &ChannelEnsemble, budget: f64) -> Result<Self> {
        let l = ensemble.selected.len();
        if l == 0 {
            return Err(Error::State("no selected sub-channels to allocate".into()));
        }
        if !(budget > 0.0) {
            return Err(Error::Parameter(format!(
                "variance budget must be positive, got {budget}"
            )));
        }
        let total = budget * l as f64;
        let floors: Vec<f64> = ensemble
            .selected_slots()
            .map(|s| {
                if s.fourier_gain > 0.0 {
                    s.noise_variance / s.fourier_gain
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..l).collect();
        order.sort_by(|&a, &b| floors[a].total_cmp(&floors[b]));

        // raise the water level over progressively more slots; the level is
        // exact for the last prefix whose floors stay below it
        let mut level = 0.0;
        let mut active = 0;
        let mut floor_sum = 0.0;
        for k in 1..=l {
            let f = floors[order[k - 1]];
            if !f.is_finite() {
                break;
            }
            let candidate = (total + floor_sum + f) / k as f64;
            if candidate <= f {
                break;
            }
            floor_sum += f;
            level = candidate;
            active = k;
        }
        if active == 0 {
            return Err(Error::State(
                "water-filling found no usable sub-channel".into(),
            ));
        }
        let mut per_slot = vec![0.0; l];
        for &idx in order.iter().take(active) {
            per_slot[idx] = level - floors[idx];
        }
        Ok(Self { per_slot, budget })
    }

    fn validate(&self, slots: usize) -> Result<()> {
        if self.per_slot.len() != slots {
            return Err(Error::Parameter(format!(
                "allocation covers {} slots but the selection has {slots}",
                self.per_slot.len()
            )));
        }
        if self.per_slot.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Parameter(
                "per-slot variances must be non-negative and finite".into(),
            ));
        }
        let mean = self.per_slot.iter().sum::<f64>() / slots as f64;
        if (mean - self.budget).abs() > 1e-9 * self.budget.max(1.0) {
            return Err(Error::Parameter(format!(
                "variance budget violated: mean allocation {mean} != budget {}",
                self.budget
            )));
        }
        Ok(())
    }
}

/// One achievable rate tuple of the K users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub per_user_rates: Vec<f64>,
}

impl RegionPoint {
    /// Checks the point sits inside the region: non-negative rates, each
    /// below its corner point, and the sum below the sum capacity.
    pub fn validate_against(&self, region: &CapacityRegion) -> Result<()> {
        if self.per_user_rates.len() != region.corner_points.len() {
            return Err(Error::Parameter("user-count mismatch".into()));
        }
        let tol = 1e-9;
        for (rate, corner) in self.per_user_rates.iter().zip(&region.corner_points) {
            if *rate < -tol || *rate > corner + tol {
                return Err(Error::Parameter(format!(
                    "per-user rate {rate} outside [0, {corner}]"
                )));
            }
        }
        let sum: f64 = self.per_user_rates.iter().sum();
        if sum > region.sum_capacity + tol {
            return Err(Error::Parameter(format!(
                "rate sum {sum} exceeds the sum capacity {}",
                region.sum_capacity
            )));
        }
        Ok(())
    }
}

/// A capacity (or private-capacity) region summary: corner points, sum and
/// symmetric capacities, and for private regions the eavesdropper terms and
/// the noise-form capacities.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityRegion {
    /// C_k (or the floored private S_k) for each user.
    pub corner_points: Vec<f64>,
    pub sum_capacity: f64,
    /// Exactly `sum_capacity / K`.
    pub symmetric_capacity: f64,
    /// Whether this region carries private (secret-key) semantics.
    pub private: bool,
    pub eve_terms: Vec<f64>,
    /// Private sum capacity through the effective private-noise variance.
    pub noise_form_sum: Option<f64>,
    pub noise_form_symmetric: Option<f64>,
}

fn convention_factor(convention: QuadratureConvention) -> f64 {
    match convention {
        QuadratureConvention::Complex => 1.0,
        QuadratureConvention::Real => 0.5,
    }
}

/// Total throughput over the selected sub-channels:
/// `sum_l log2(1 + sigma_wi^2 |F(T_i)|^2 / sigma_Ni^2)`.
pub fn sum_capacity(
    ensemble: &ChannelEnsemble,
    alloc: &Allocation,
    convention: QuadratureConvention,
) -> Result<f64> {
    let l = ensemble.selected.len();
    if l == 0 {
        return Err(Error::State("no selected sub-channels".into()));
    }
    alloc.validate(l)?;
    let mut total = 0.0;
    for (slot, &sw) in ensemble.selected_slots().zip(&alloc.per_slot) {
        total += (1.0 + sw * slot.fourier_gain / slot.noise_variance).log2();
    }
    Ok(total * convention_factor(convention))
}

/// Maximum common rate of K users: `sum_capacity / K`.
pub fn symmetric_capacity(
    ensemble: &ChannelEnsemble,
    alloc: &Allocation,
    users: usize,
    convention: QuadratureConvention,
) -> Result<f64> {
    if users == 0 {
        return Err(Error::Parameter("user count must be >= 1".into()));
    }
    Ok(sum_capacity(ensemble, alloc, convention)? / users as f64)
}

/// Corner points of the region: the whole budget dedicated to one user at a
/// time, which over a shared sub-channel set makes every corner equal to the
/// sum capacity.
pub fn corner_points(
    ensemble: &ChannelEnsemble,
    alloc: &Allocation,
    users: usize,
    convention: QuadratureConvention,
) -> Result<Vec<f64>> {
    if users == 0 {
        return Err(Error::Parameter("user count must be >= 1".into()));
    }
    let c = sum_capacity(ensemble, alloc, convention)?;
    Ok(vec![c; users])
}

/// The classical capacity region of K users.
pub fn capacity_region(
    ensemble: &ChannelEnsemble,
    alloc: &Allocation,
    users: usize,
    convention: QuadratureConvention,
) -> Result<CapacityRegion> {
    let sum = sum_capacity(ensemble, alloc, convention)?;
    Ok(CapacityRegion {
        corner_points: vec![sum; users],
        sum_capacity: sum,
        symmetric_capacity: sum / users as f64,
        private: false,
        eve_terms: Vec::new(),
        noise_form_sum: None,
        noise_form_symmetric: None,
    })
}

/// Private sum capacity through the per-slot private-noise variance, with
/// per-slot gain/Eve parameters optionally overridden (used by the
/// SVD-assisted variant).
fn noise_form_sum_capacity(
    ensemble: &ChannelEnsemble,
    alloc: &Allocation,
    vacuum_noise: f64,
    convention: QuadratureConvention,
    scale: Option<&[f64]>,
) -> Result<f64> {
    let mut total = 0.0;
    for (k, (slot, &sw)) in ensemble.selected_slots().zip(&alloc.per_slot).enumerate() {
        if sw == 0.0 {
            continue;
        }
        let v = scale.map_or(1.0, |s| s[k]);
        let gain = slot.fourier_gain * v;
        let eve_gain = crate::mqa::svd_transformed_eve_gain(slot.eve_fourier_gain, v)?;
        let sigma_x = vacuum_noise + excess_noise(slot.eve_variance, eve_gain)?;
        let noise = private_noise_variance(sw, gain.min(1.0), sigma_x)?;
        if noise.is_finite() {
            total += (1.0 + sw * gain.min(1.0) / noise).log2();
        }
    }
    Ok(total * convention_factor(convention))
}

/// Private region of K users: per-user corners `C_k - eve_k`, sum and
/// symmetric secret rates, and the private sum capacity through the
/// private-noise form. Everything is floored at zero.
pub fn private_region(
    ensemble: &ChannelEnsemble,
    alloc: &Allocation,
    users: usize,
    eve_terms: &[f64],
    vacuum_noise: f64,
    convention: QuadratureConvention,
) -> Result<CapacityRegion> {
    if eve_terms.len() != users {
        return Err(Error::Parameter(format!(
            "expected {users} eavesdropper terms, got {}",
            eve_terms.len()
        )));
    }
    if eve_terms.iter().any(|&e| e < 0.0 || !e.is_finite()) {
        return Err(Error::Parameter(
            "eavesdropper terms must be non-negative".into(),
        ));
    }
    let c = capacity_region(ensemble, alloc, users, convention)?;
    let corners: Vec<f64> = c
        .corner_points
        .iter()
        .zip(eve_terms)
        .map(|(c_k, e_k)| (c_k - e_k).max(0.0))
        .collect();
    let eve_total: f64 = eve_terms.iter().sum();
    let s_sum = (c.sum_capacity - eve_total).max(0.0);
    let p_sum = noise_form_sum_capacity(ensemble, alloc, vacuum_noise, convention, None)?;
    Ok(CapacityRegion {
        corner_points: corners,
        sum_capacity: s_sum,
        symmetric_capacity: s_sum / users as f64,
        private: true,
        eve_terms: eve_terms.to_vec(),
        noise_form_sum: Some(p_sum),
        noise_form_symmetric: Some(p_sum / users as f64),
    })
}

/// Virtual modulation-variance gain of the SVD assistance:
/// `v = (nu_Eve - sigma_N^2 / lambda_max^2) / (nu_Eve - sigma_N^2 / gain_max)`,
/// at least 1, with equality iff the top eigenvalue equals the top gain.
pub fn svd_gain(
    nu_eve: f64,
    sigma_n_squared: f64,
    lambda_max_squared: f64,
    gain_max: f64,
) -> Result<f64> {
    if !(gain_max > 0.0) || lambda_max_squared < gain_max {
        return Err(Error::Parameter(format!(
            "need lambda_max^2 >= gain_max > 0, got ({lambda_max_squared}, {gain_max})"
        )));
    }
    if !(sigma_n_squared > 0.0) {
        return Err(Error::Parameter(format!(
            "noise variance must be positive, got {sigma_n_squared}"
        )));
    }
    let denominator = nu_eve - sigma_n_squared / gain_max;
    if denominator <= 0.0 {
        return Err(Error::Domain(format!(
            "security threshold {nu_eve} too small for any secure transmission \
             (needs > {})",
            sigma_n_squared / gain_max
        )));
    }
    Ok((nu_eve - sigma_n_squared / lambda_max_squared) / denominator)
}

/// Eavesdropper gain under the SVD transform:
/// `1 - v (1 - eve_gain)`, strictly below the original for v > 1.
pub fn svd_transformed_eve_gain(eve_gain: f64, v: f64) -> Result<f64> {
    if v < 1.0 {
        return Err(Error::Parameter(format!("SVD gain must be >= 1, got {v}")));
    }
    if !(0.0..1.0).contains(&eve_gain) {
        return Err(Error::Parameter(format!(
            "Eve gain must lie in [0, 1), got {eve_gain}"
        )));
    }
    let complement = 1.0 - eve_gain;
    if complement >= 1.0 / v && v > 1.0 {
        return Err(Error::Domain(format!(
            "SVD gain {v} too large for Eve gain {eve_gain}: the transformed \
             channel gain would exceed 1"
        )));
    }
    Ok(1.0 - v * complement)
}

/// Private region under SVD assistance: per-slot gains scaled by `v_i`, Eve
/// gains transformed accordingly. Guaranteed to dominate the unassisted
/// region, with equality iff every v_i = 1.
pub fn svd_private_capacities(
    ensemble: &ChannelEnsemble,
    alloc: &Allocation,
    users: usize,
    v: &[f64],
    eve_terms: &[f64],
    vacuum_noise: f64,
    convention: QuadratureConvention,
) -> Result<CapacityRegion> {
    let l = ensemble.selected.len();
    if v.len() != l {
        return Err(Error::Parameter(format!(
            "expected {l} SVD gains, got {}",
            v.len()
        )));
    }
    if v.iter().any(|&x| x < 1.0) {
        return Err(Error::Parameter("every SVD gain must be >= 1".into()));
    }
    let base = private_region(ensemble, alloc, users, eve_terms, vacuum_noise, convention)?;

    // scaled classical side
    alloc.validate(l)?;
    let mut c_sum = 0.0;
    for ((slot, &sw), &vi) in ensemble.selected_slots().zip(&alloc.per_slot).zip(v) {
        let gain = (slot.fourier_gain * vi).min(1.0);
        c_sum += (1.0 + sw * gain / slot.noise_variance).log2();
    }
    c_sum *= convention_factor(convention);
    let eve_total: f64 = eve_terms.iter().sum();
    let s_sum = (c_sum - eve_total).max(0.0);
    let corners: Vec<f64> = eve_terms.iter().map(|e| (c_sum - e).max(0.0)).collect();

    let p_sum = noise_form_sum_capacity(ensemble, alloc, vacuum_noise, convention, Some(v))?;
    let p_base = base.noise_form_sum.unwrap_or(0.0);
    if p_sum + 1e-12 < p_base {
        return Err(Error::Internal(format!(
            "SVD-assisted private capacity {p_sum} fell below the unassisted {p_base}"
        )));
    }

    Ok(CapacityRegion {
        corner_points: corners,
        sum_capacity: s_sum,
        symmetric_capacity: s_sum / users as f64,
        private: true,
        eve_terms: eve_terms.to_vec(),
        noise_form_sum: Some(p_sum),
        noise_form_symmetric: Some(p_sum / users as f64),
    })
}
