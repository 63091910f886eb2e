//! Python bindings: the entropy functions, key rates, thresholds, multiuser
//! regions, and the Monte Carlo block simulator, exposed as plain functions
//! plus a thin ensemble class.

use amqd_core as core;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py_err(e: core::Error) -> PyErr {
    match e {
        core::Error::Internal(msg) => PyRuntimeError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_direction(s: &str) -> PyResult<core::Direction> {
    match s {
        "one_way" => Ok(core::Direction::OneWay),
        "two_way" => Ok(core::Direction::TwoWay),
        other => Err(PyValueError::new_err(format!(
            "direction must be one_way or two_way, got '{other}'"
        ))),
    }
}

fn parse_measurement(s: &str) -> PyResult<core::Measurement> {
    match s {
        "hom" => Ok(core::Measurement::Hom),
        "het" => Ok(core::Measurement::Het),
        other => Err(PyValueError::new_err(format!(
            "measurement must be hom or het, got '{other}'"
        ))),
    }
}

fn parse_reconciliation(s: &str) -> PyResult<core::Reconciliation> {
    match s {
        "dr" => Ok(core::Reconciliation::Dr),
        "rr" => Ok(core::Reconciliation::Rr),
        other => Err(PyValueError::new_err(format!(
            "reconciliation must be dr or rr, got '{other}'"
        ))),
    }
}

/// Thermal-state entropy of one symplectic eigenvalue, in bits.
#[pyfunction]
fn entropy_g(s: f64) -> PyResult<f64> {
    core::entropy_g(s).map_err(to_py_err)
}

/// Entropy of a full symplectic spectrum, in bits.
#[pyfunction]
fn spectrum_entropy(eigenvalues: Vec<f64>) -> PyResult<f64> {
    let spectrum = core::SymplecticSpectrum::new(eigenvalues).map_err(to_py_err)?;
    Ok(core::spectrum_entropy(&spectrum))
}

/// Differential entropy of a real Gaussian, in bits.
#[pyfunction]
fn differential_entropy_gaussian(variance: f64) -> PyResult<f64> {
    core::differential_entropy_gaussian(variance).map_err(to_py_err)
}

/// Entangling-cloner excess noise (W - 1) g / (1 - g).
#[pyfunction]
fn excess_noise(eve_variance: f64, eve_fourier_gain: f64) -> PyResult<f64> {
    core::excess_noise(eve_variance, eve_fourier_gain).map_err(to_py_err)
}

/// Real-domain private classical capacity of one sub-channel, in bits.
#[pyfunction]
fn private_capacity_subchannel(
    modulation_variance: f64,
    fourier_gain: f64,
    sigma_x_squared: f64,
) -> PyResult<f64> {
    core::private_capacity_subchannel(modulation_variance, fourier_gain, sigma_x_squared)
        .map_err(to_py_err)
}

/// Asymptotic secret key rate of any protocol variant from the averaged
/// channel parameters.
#[pyfunction]
fn keyrate(
    direction: &str,
    measurement: &str,
    reconciliation: &str,
    t_bar: f64,
    w_bar: f64,
) -> PyResult<f64> {
    core::asymptotic_rate(
        parse_direction(direction)?,
        parse_measurement(measurement)?,
        parse_reconciliation(reconciliation)?,
        t_bar,
        w_bar,
    )
    .map_err(to_py_err)
}

/// Single-carrier tolerable excess noise for a named reference variant.
#[pyfunction]
fn tolerable_excess_noise(variant: &str) -> PyResult<f64> {
    let v: core::SingleCarrierVariant = variant.parse().map_err(to_py_err)?;
    Ok(core::tolerable_excess_noise_closed_form(v)
        .map_err(to_py_err)?
        .value)
}

/// Multicarrier tolerable excess noise at the given averaged gain, or None
/// when no positive-rate region exists.
#[pyfunction]
#[pyo3(signature = (direction, measurement, reconciliation, t_bar, sigma_omega0_squared = 100.0))]
fn tolerable_excess_noise_multicarrier(
    direction: &str,
    measurement: &str,
    reconciliation: &str,
    t_bar: f64,
    sigma_omega0_squared: f64,
) -> PyResult<Option<f64>> {
    let out = core::solve_excess_noise_at(
        parse_direction(direction)?,
        parse_measurement(measurement)?,
        parse_reconciliation(reconciliation)?,
        t_bar,
        sigma_omega0_squared,
        None,
    )
    .map_err(to_py_err)?;
    Ok(out.outcome.solved().map(|r| r.value))
}

/// Maximum tolerable Eve variance at the given averaged gain, or None when
/// the rate stays positive past the search cap.
#[pyfunction]
fn max_eve_variance(
    direction: &str,
    measurement: &str,
    reconciliation: &str,
    t_bar: f64,
) -> PyResult<Option<f64>> {
    let sweep = core::max_eve_variance(
        parse_direction(direction)?,
        parse_measurement(measurement)?,
        parse_reconciliation(reconciliation)?,
        &[t_bar],
    )
    .map_err(to_py_err)?;
    Ok(sweep.points[0].1.solved().map(|r| r.value))
}

/// SVD virtual-gain factor from the security threshold and spectra.
#[pyfunction]
fn svd_gain(
    nu_eve: f64,
    sigma_n_squared: f64,
    lambda_max_squared: f64,
    gain_max: f64,
) -> PyResult<f64> {
    core::svd_gain(nu_eve, sigma_n_squared, lambda_max_squared, gain_max).map_err(to_py_err)
}

/// A sub-channel ensemble built from per-slot Fourier gains.
#[pyclass]
struct Ensemble {
    inner: core::ChannelEnsemble,
}

#[pymethods]
impl Ensemble {
    #[new]
    #[pyo3(signature = (gains, noise_variances, eve_variances = None, nu_eve = 1e12))]
    fn new(
        gains: Vec<f64>,
        noise_variances: Vec<f64>,
        eve_variances: Option<Vec<f64>>,
        nu_eve: f64,
    ) -> PyResult<Self> {
        if gains.len() != noise_variances.len() {
            return Err(PyValueError::new_err(
                "gains and noise_variances must have equal length",
            ));
        }
        let eves = eve_variances.unwrap_or_else(|| vec![1.0; gains.len()]);
        if eves.len() != gains.len() {
            return Err(PyValueError::new_err(
                "eve_variances must match the slot count",
            ));
        }
        let slots: Result<Vec<core::SubChannel>, core::Error> = gains
            .iter()
            .zip(&noise_variances)
            .zip(&eves)
            .map(|((&g, &n), &w)| core::SubChannel::from_fourier_gain(g, n, w))
            .collect();
        Ok(Self {
            inner: core::ChannelEnsemble::new(slots.map_err(to_py_err)?, nu_eve)
                .map_err(to_py_err)?,
        })
    }

    /// Indices of the slots carrying key material.
    fn selected(&self) -> Vec<usize> {
        self.inner.selected.clone()
    }

    fn averaged_fourier_gain(&self) -> PyResult<f64> {
        self.inner.averaged_fourier_gain().map_err(to_py_err)
    }

    fn averaged_eve_variance(&self) -> PyResult<f64> {
        self.inner.averaged_eve_variance().map_err(to_py_err)
    }

    fn nu_min(&self) -> PyResult<f64> {
        self.inner.nu_min().map_err(to_py_err)
    }

    /// Multiuser region summary as a dict (sum/symmetric capacities, corner
    /// points, and the private noise-form capacities).
    #[pyo3(signature = (budget, users = 2, eve_terms = None, vacuum_noise = 1.0, svd_v = None))]
    fn region<'py>(
        &self,
        py: Python<'py>,
        budget: f64,
        users: usize,
        eve_terms: Option<Vec<f64>>,
        vacuum_noise: f64,
        svd_v: Option<Vec<f64>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let l = self.inner.selected.len();
        let alloc = core::Allocation::uniform(l, budget).map_err(to_py_err)?;
        let convention = core::QuadratureConvention::Complex;
        let eve_terms = eve_terms.unwrap_or_else(|| vec![0.0; users]);
        let classical =
            core::capacity_region(&self.inner, &alloc, users, convention).map_err(to_py_err)?;
        let private = match svd_v {
            None => core::private_region(
                &self.inner,
                &alloc,
                users,
                &eve_terms,
                vacuum_noise,
                convention,
            )
            .map_err(to_py_err)?,
            Some(v) => core::svd_private_capacities(
                &self.inner,
                &alloc,
                users,
                &v,
                &eve_terms,
                vacuum_noise,
                convention,
            )
            .map_err(to_py_err)?,
        };
        let out = PyDict::new(py);
        out.set_item("sum_capacity", classical.sum_capacity)?;
        out.set_item("symmetric_capacity", classical.symmetric_capacity)?;
        out.set_item("corner_points", classical.corner_points)?;
        out.set_item("private_corner_points", private.corner_points)?;
        out.set_item("private_sum_rate", private.sum_capacity)?;
        out.set_item("private_sum_capacity", private.noise_form_sum)?;
        out.set_item("private_symmetric_capacity", private.noise_form_symmetric)?;
        Ok(out)
    }
}

/// Monte Carlo simulation of a uniform multicarrier block; returns the
/// headline statistics as a dict.
#[pyfunction]
#[pyo3(signature = (n, gain, noise_variance, sigma_omega0_squared, trials, seed))]
fn simulate_block<'py>(
    py: Python<'py>,
    n: usize,
    gain: f64,
    noise_variance: f64,
    sigma_omega0_squared: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let ensemble =
        core::ChannelEnsemble::uniform(n, gain, noise_variance, 1.0, 1e12).map_err(to_py_err)?;
    let config = core::ProtocolConfig::new(
        core::Direction::OneWay,
        core::Measurement::Hom,
        core::Reconciliation::Rr,
        sigma_omega0_squared,
        sigma_omega0_squared / 2.0,
        ensemble,
    )
    .map_err(to_py_err)?;
    let report = core::simulate_block(&config, trials, seed).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("trials", report.trials)?;
    out.set_item("seed", report.seed)?;
    out.set_item("rng", &report.rng)?;
    out.set_item(
        "empirical_output_quadrature_variance",
        report.empirical_output_quadrature_variance,
    )?;
    out.set_item(
        "analytic_output_quadrature_variance",
        report.analytic_output_quadrature_variance,
    )?;
    out.set_item(
        "empirical_mutual_info_bits",
        report.empirical_mutual_info_bits,
    )?;
    out.set_item(
        "analytic_mutual_info_bits",
        report.analytic_mutual_info_bits,
    )?;
    out.set_item("max_abs_deviation", report.max_abs_deviation)?;
    Ok(out)
}

/// White-noise covariance invariance check of the decode transform.
#[pyfunction]
fn verify_fft_noise_invariance<'py>(
    py: Python<'py>,
    dimension: usize,
    trials: u64,
    seed: u64,
    sigma2: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r =
        core::verify_fft_noise_invariance(dimension, trials, seed, sigma2).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("pass", r.pass)?;
    out.set_item("max_deviation", r.max_deviation)?;
    out.set_item("band", r.band)?;
    Ok(out)
}

#[pymodule]
fn amqd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(entropy_g, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(differential_entropy_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(excess_noise, m)?)?;
    m.add_function(wrap_pyfunction!(private_capacity_subchannel, m)?)?;
    m.add_function(wrap_pyfunction!(keyrate, m)?)?;
    m.add_function(wrap_pyfunction!(tolerable_excess_noise, m)?)?;
    m.add_function(wrap_pyfunction!(tolerable_excess_noise_multicarrier, m)?)?;
    m.add_function(wrap_pyfunction!(max_eve_variance, m)?)?;
    m.add_function(wrap_pyfunction!(svd_gain, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_block, m)?)?;
    m.add_function(wrap_pyfunction!(verify_fft_noise_invariance, m)?)?;
    m.add_class::<Ensemble>()?;
    Ok(())
}
