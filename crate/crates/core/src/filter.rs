//! Truncated cosine-power approximation of the Gaussian energy filter.
//!
//! `exp(-(H-E)^2 / 2 delta^2)` is approximated by `cos^M((H-E)/alpha)` with
//! `M = alpha^2 / delta^2`. Expanding the cosine power gives a sum of
//! Loschmidt amplitudes on the grid `t_m = 2m / alpha` with binomial weights.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{contract, Result};
use crate::interferometry::TimeSeries;
use crate::model::ProductState;

/// Parameters and coefficients of a truncated cosine filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub delta: f64,
    /// Truncation control: the series keeps `R = ceil(x alpha / delta)` terms.
    pub x: f64,
    pub alpha: f64,
    /// Cosine power, always even.
    pub m: usize,
    pub r: usize,
    /// `c_0 ..= c_R`.
    pub coefficients: Vec<f64>,
    /// Binomial mass `sum_{|m| > R} c_m` dropped by the truncation.
    pub tail: f64,
}

/// Filtered density of states at one energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdosEstimate {
    pub energy: f64,
    pub value: f64,
    pub truncation_bound: f64,
}

/// `2^{-M} binom(M, M/2 - m)` evaluated in log space.
pub fn cosine_coefficient(m_power: usize, m: usize) -> f64 {
    let half = m_power / 2;
    if m > half {
        return 0.0;
    }
    let n = m_power as f64;
    let k = (half - m) as f64;
    let log = ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0) - n * std::f64::consts::LN_2;
    log.exp()
}

/// Filter for an `n_qubits` register with `alpha = 2 sqrt(n_qubits)`.
pub fn make_filter(n_qubits: usize, delta: f64, x: f64) -> Result<FilterSpec> {
    if n_qubits == 0 {
        return Err(contract("filter needs at least one qubit"));
    }
    let alpha = 2.0 * (n_qubits as f64).sqrt();
    let ratio = alpha * alpha / (delta * delta);
    if !(delta > 0.0 && x > 0.0 && ratio.is_finite()) {
        return Err(contract(format!("filter needs delta > 0 and x > 0, got delta={delta}, x={x}")));
    }
    // Guard against `32.000000000000004`-style overshoot before flooring.
    let mut m = (ratio * (1.0 + 1e-12)).floor() as usize;
    m -= m % 2;
    let r = (x * alpha / delta * (1.0 - 1e-12)).ceil() as usize;
    filter_with_power(alpha, delta, x, m.max(2), r)
}

/// Filter with an explicit cosine power and term count.
pub fn filter_with_power(alpha: f64, delta: f64, x: f64, m: usize, r: usize) -> Result<FilterSpec> {
    if m % 2 != 0 || m == 0 {
        return Err(contract(format!("cosine power must be even and positive, got {m}")));
    }
    if !(alpha > 0.0 && delta > 0.0 && x > 0.0) {
        return Err(contract("filter parameters must be positive"));
    }
    let coefficients: Vec<f64> = (0..=r).map(|k| cosine_coefficient(m, k)).collect();
    let tail = 2.0 * (r + 1..=m / 2).map(|k| cosine_coefficient(m, k)).sum::<f64>();
    Ok(FilterSpec { delta, x, alpha, m, r, coefficients, tail })
}

impl FilterSpec {
    /// `t_m = 2m / alpha`.
    pub fn time(&self, m: usize) -> f64 {
        2.0 * m as f64 / self.alpha
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.r).map(|m| self.time(m)).collect()
    }

    /// `c_0 v_0 + sum_{m>=1} 2 c_m v_m` over the first `R + 1` values.
    pub fn combine(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.r + 1 {
            return Err(contract(format!("series has {} points, filter needs {}", values.len(), self.r + 1)));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(values)
            .enumerate()
            .map(|(m, (c, v))| if m == 0 { c * v } else { 2.0 * c * v })
            .sum())
    }
}

/// Rebuilds `D(E)` from a series of `Re(G(t_m) e^{iE t_m})` values.
pub fn fdos_from_series(series: &TimeSeries, spec: &FilterSpec) -> Result<FdosEstimate> {
    if series.points.len() != spec.r + 1 {
        return Err(contract(format!(
            "series has {} points, filter needs {}",
            series.points.len(),
            spec.r + 1
        )));
    }
    for (m, p) in series.points.iter().enumerate() {
        if p.m != m || (p.t - spec.time(m)).abs() > 1e-9 * (1.0 + p.t.abs()) {
            return Err(contract(format!("series point {m} is off the filter grid (t={})", p.t)));
        }
    }
    let values: Vec<f64> = series.points.iter().map(|p| p.re_g).collect();
    Ok(FdosEstimate { energy: series.energy, value: spec.combine(&values)?, truncation_bound: spec.tail })
}

/// Where the time-series values of [`fdos_batch`] come from.
pub enum SeriesSource<'a> {
    /// Complex `G(t) = <psi|U(t)|psi>`; one series serves every energy.
    Amplitude(Box<dyn Fn(&ProductState, f64) -> Result<Complex64> + Sync + 'a>),
    /// `Re(G(t) e^{iEt})` measured afresh for each `(E, t)`.
    RealPart(Box<dyn Fn(&ProductState, f64, f64) -> Result<f64> + Sync + 'a>),
}

/// Filtered density of states of `psi` at each energy.
pub fn fdos_batch(psi: &ProductState, energies: &[f64], spec: &FilterSpec, source: &SeriesSource) -> Result<Vec<FdosEstimate>> {
    let times = spec.times();
    match source {
        SeriesSource::Amplitude(g) => {
            let amps = times.iter().map(|&t| g(psi, t)).collect::<Result<Vec<_>>>()?;
            energies
                .iter()
                .map(|&e| {
                    let values: Vec<f64> =
                        amps.iter().zip(&times).map(|(a, &t)| (a * Complex64::from_polar(1.0, e * t)).re).collect();
                    Ok(FdosEstimate { energy: e, value: spec.combine(&values)?, truncation_bound: spec.tail })
                })
                .collect()
        }
        SeriesSource::RealPart(f) => energies
            .iter()
            .map(|&e| {
                let values = times.iter().map(|&t| f(psi, e, t)).collect::<Result<Vec<_>>>()?;
                Ok(FdosEstimate { energy: e, value: spec.combine(&values)?, truncation_bound: spec.tail })
            })
            .collect(),
    }
}
