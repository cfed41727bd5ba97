//! Running Loschmidt circuits and reading `Re(G e^{iEt})` from the 0-string
//! and pi-string probabilities.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_trotter_evolution, permute_product_state, LoschmidtCircuit};
use crate::error::{contract, invalid, Result};
use crate::filter::FilterSpec;
use crate::model::{HubbardParams, LatticeSpec, ProductState};
use crate::sim::StateVector;

/// Readout of one Loschmidt circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferometryOutcome {
    pub p0: f64,
    pub p_pi: f64,
    pub re_g: f64,
    /// `None` for an exact evaluation.
    pub shots: Option<u64>,
    /// Measured basis index to count; empty for exact runs.
    pub raw_counts: BTreeMap<u64, u64>,
}

impl InterferometryOutcome {
    pub fn exact(p0: f64, p_pi: f64) -> Self {
        InterferometryOutcome { p0, p_pi, re_g: p0 - p_pi, shots: None, raw_counts: BTreeMap::new() }
    }

    /// Multinomial variance of `p0 - p_pi`; zero for exact outcomes.
    pub fn variance(&self) -> f64 {
        match self.shots {
            Some(n) => ((self.p0 + self.p_pi) - self.re_g * self.re_g).max(0.0) / n as f64,
            None => 0.0,
        }
    }
}

/// One time-series entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub m: usize,
    pub t: f64,
    pub p0: f64,
    pub p_pi: f64,
    pub re_g: f64,
    pub variance: f64,
    pub shots: Option<u64>,
}

/// `Re(G(t_m) e^{iE t_m})` on a filter grid for one target energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub energy: f64,
    pub points: Vec<SeriesPoint>,
}

impl TimeSeries {
    /// Noiseless series from complex amplitudes `G(t_m)` without the energy
    /// phase.
    pub fn from_amplitudes(energy: f64, times: &[f64], amps: &[Complex64]) -> Self {
        let points = times
            .iter()
            .zip(amps)
            .enumerate()
            .map(|(m, (&t, g))| {
                let rot = g * Complex64::from_polar(1.0, energy * t);
                let (p0, p_pi) = ghz_probabilities(rot);
                SeriesPoint { m, t, p0, p_pi, re_g: rot.re, variance: 0.0, shots: None }
            })
            .collect();
        TimeSeries { energy, points }
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.re_g).collect()
    }
}

/// Noiseless `(p0, p_pi) = ((1 + |G|^2 +- 2 Re G') / 4)` for `G' = G e^{iEt}`.
pub fn ghz_probabilities(g_rotated: Complex64) -> (f64, f64) {
    let base = 1.0 + g_rotated.norm_sqr();
    ((base + 2.0 * g_rotated.re) / 4.0, (base - 2.0 * g_rotated.re) / 4.0)
}

/// Evaluation times `t_m = 2m / alpha` for `m = 0..=R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub alpha: f64,
    pub times: Vec<f64>,
}

impl TimeGrid {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

pub fn make_time_grid(spec: &FilterSpec) -> TimeGrid {
    TimeGrid { alpha: spec.alpha, times: spec.times() }
}

/// How many Trotter steps to spend on each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StepPolicy {
    Fixed { steps: usize },
    /// `early_steps` for the first `early_points` grid points, `late_steps`
    /// afterwards.
    Staged { early_points: usize, early_steps: usize, late_steps: usize },
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Staged { early_points: 2, early_steps: 1, late_steps: 2 }
    }
}

impl StepPolicy {
    pub fn steps_for(&self, m: usize) -> usize {
        match *self {
            StepPolicy::Fixed { steps } => steps.max(1),
            StepPolicy::Staged { early_points, early_steps, late_steps } => {
                if m < early_points {
                    early_steps.max(1)
                } else {
                    late_steps.max(1)
                }
            }
        }
    }
}

/// Final statevector of a Loschmidt circuit started from `|0...0>`.
pub fn output_state(lc: &LoschmidtCircuit) -> Result<StateVector> {
    let mut state = StateVector::zero(lc.circuit.n_qubits());
    state.apply_circuit(&lc.circuit)?;
    Ok(state)
}

/// Exact `p0`, `p_pi` from the simulated output amplitudes.
pub fn run_exact(lc: &LoschmidtCircuit) -> Result<InterferometryOutcome> {
    let state = output_state(lc)?;
    Ok(InterferometryOutcome::exact(
        state.amplitude(lc.zero_string()).norm_sqr(),
        state.amplitude(lc.pi_string()).norm_sqr(),
    ))
}

/// Draws `shots` basis indices from a probability vector.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Result<BTreeMap<u64, u64>> {
    let dist = WeightedIndex::new(probs.iter().map(|p| p.max(0.0))).map_err(|e| contract(format!("bad distribution: {e}")))?;
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        *counts.entry(dist.sample(rng) as u64).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Empirical frequencies of the 0-string and pi-string.
pub fn outcome_from_counts(counts: BTreeMap<u64, u64>, zero: u64, pi: u64) -> Result<InterferometryOutcome> {
    let shots: u64 = counts.values().sum();
    if shots == 0 {
        return Err(contract("no shots recorded"));
    }
    let p0 = *counts.get(&zero).unwrap_or(&0) as f64 / shots as f64;
    let p_pi = *counts.get(&pi).unwrap_or(&0) as f64 / shots as f64;
    Ok(InterferometryOutcome { p0, p_pi, re_g: p0 - p_pi, shots: Some(shots), raw_counts: counts })
}

/// Shot-sampled readout of the exact output distribution.
pub fn run_sampled<R: Rng + ?Sized>(lc: &LoschmidtCircuit, shots: u64, rng: &mut R) -> Result<InterferometryOutcome> {
    if shots == 0 {
        return Err(invalid("shots must be at least 1"));
    }
    let probs = output_state(lc)?.probabilities();
    outcome_from_counts(sample_counts(&probs, shots, rng)?, lc.zero_string(), lc.pi_string())
}

/// `<psi| U_trot(t) |psi>` in logical mode order, read directly from the
/// evolved statevector.
pub fn trotter_amplitude(
    psi: &ProductState,
    lattice: &LatticeSpec,
    params: &HubbardParams,
    t: f64,
    n_steps: usize,
) -> Result<Complex64> {
    if n_steps == 0 {
        return Err(invalid("n_steps must be at least 1"));
    }
    let evolution = build_trotter_evolution(lattice, params, t, n_steps);
    let mut state = StateVector::from_product(psi);
    state.apply_circuit(&evolution)?;
    let (target, sign) = permute_product_state(&evolution, psi);
    Ok(state.amplitude(target.bits()) * sign)
}
