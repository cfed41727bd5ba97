//! Error mitigation for GHZ interferometry: rescaling by `q`, particle-number
//! post-selection, and folding experiments that measure `(q, gamma)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::LoschmidtCircuit;
use crate::error::{contract, Result};
use crate::interferometry::InterferometryOutcome;
use crate::noise::ChannelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MitigationMethod {
    None,
    Rescale,
    Symmetry,
    ZneRescale,
}

/// A mitigated estimate of `Re(G e^{iEt})` with its 1-sigma error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigatedOutcome {
    pub re_g_mitigated: f64,
    pub sigma: f64,
    pub method: MitigationMethod,
    pub q_used: f64,
    pub gamma_used: f64,
    pub kept_fraction: f64,
}

/// `(p0* - p_pi*) / q`.
pub fn rescale(p0_star: f64, p_pi_star: f64, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(contract(format!("rescaling needs q > 0, got {q}")));
    }
    Ok((p0_star - p_pi_star) / q)
}

/// Rescales a measured outcome and propagates its shot error.
pub fn rescale_outcome(outcome: &InterferometryOutcome, params: &ChannelParams) -> Result<MitigatedOutcome> {
    let value = rescale(outcome.p0, outcome.p_pi, params.q)?;
    Ok(MitigatedOutcome {
        re_g_mitigated: value,
        sigma: outcome.variance().sqrt() / params.q,
        method: MitigationMethod::Rescale,
        q_used: params.q,
        gamma_used: params.gamma,
        kept_fraction: 1.0,
    })
}

/// Inverts the outcome channel for the individual probabilities.
pub fn invert_channel(p0_star: f64, p_pi_star: f64, params: &ChannelParams) -> Result<(f64, f64)> {
    let diff = rescale(p0_star, p_pi_star, params.q)?;
    let sum = (p0_star + p_pi_star - 2.0 * params.kappa) / (params.q + 2.0 * params.gamma);
    Ok(((sum + diff) / 2.0, (sum - diff) / 2.0))
}

/// Result of particle-number post-selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryFiltered {
    pub p0: f64,
    pub p_pi: f64,
    pub re_g: f64,
    pub kept_shots: u64,
    pub kept_fraction: f64,
}

impl SymmetryFiltered {
    pub fn sigma(&self) -> f64 {
        (((self.p0 + self.p_pi) - self.re_g * self.re_g).max(0.0) / self.kept_shots as f64).sqrt()
    }
}

/// The two basis states before decoding that can produce `measured`: one for
/// each value of the pilot bit before its Hadamard.
pub fn decode_pullback(measured: u64, lc: &LoschmidtCircuit) -> [u64; 2] {
    let pilot_bit = 1u64 << lc.pilot;
    let fan: u64 = lc.decode_fan.iter().skip(1).fold(0, |m, &q| m | 1 << q);
    [measured & !pilot_bit, (measured | pilot_bit) ^ fan]
}

/// Keeps the shots whose decode pullback lies in the vacuum or in the
/// `(n_up, n_down)` sector of the initial state, then renormalizes `p0` and
/// `p_pi` over the kept shots.
pub fn symmetry_filter(raw_counts: &BTreeMap<u64, u64>, lc: &LoschmidtCircuit) -> Result<SymmetryFiltered> {
    let n = lc.psi0.n_sites();
    let up_mask = (1u64 << n) - 1;
    let target = (lc.psi0.n_up() as u32, lc.psi0.n_down() as u32);
    let allowed = |s: u64| {
        let sector = ((s & up_mask).count_ones(), (s >> n).count_ones());
        s == 0 || sector == target
    };
    let total: u64 = raw_counts.values().sum();
    let mut kept = 0;
    for (&b, &c) in raw_counts {
        if decode_pullback(b, lc).iter().any(|&s| allowed(s)) {
            kept += c;
        }
    }
    if kept == 0 {
        return Err(contract("symmetry filter discarded every shot"));
    }
    let p0 = *raw_counts.get(&lc.zero_string()).unwrap_or(&0) as f64 / kept as f64;
    let p_pi = *raw_counts.get(&lc.pi_string()).unwrap_or(&0) as f64 / kept as f64;
    Ok(SymmetryFiltered { p0, p_pi, re_g: p0 - p_pi, kept_shots: kept, kept_fraction: kept as f64 / total as f64 })
}

/// Appends the exact inverse so the noiseless circuit is the identity.
pub fn zne_fold(lc: &LoschmidtCircuit) -> LoschmidtCircuit {
    let mut circuit = lc.circuit.clone();
    circuit.extend(&lc.circuit.inverse());
    let fan = lc.psi0.occupied();
    LoschmidtCircuit {
        circuit,
        psi0: lc.psi0,
        pilot: fan[0],
        decode_len: fan.len() + 1,
        decode_fan: fan,
        n_steps: 2 * lc.n_steps,
        t: lc.t,
        energy: lc.energy,
    }
}

/// Folded-circuit readout predicted by the channel model:
/// `p0 = (q + gamma)^2 + gamma^2 + 2K`, `p_pi = 2 gamma (q + gamma) + 2K`.
pub fn fold_channel(params: &ChannelParams) -> (f64, f64) {
    let (q, g, k) = (params.q, params.gamma, params.kappa);
    ((q + g).powi(2) + g * g + 2.0 * k, 2.0 * g * (q + g) + 2.0 * k)
}

/// Solves the folded readout for `(q, gamma)`.
///
/// `q` is `sqrt(p0 - p_pi)`. With `K = (1 - q - 2 gamma) / 2^n` substituted,
/// the `p_pi` equation is a quadratic in `gamma`, solved in closed form.
pub fn zne_extract(p0_zne: f64, p_pi_zne: f64, n_qubits: usize) -> Result<ChannelParams> {
    if p0_zne < p_pi_zne {
        return Err(contract(format!("folded readout has p0 < p_pi ({p0_zne} < {p_pi_zne})")));
    }
    let q = (p0_zne - p_pi_zne).sqrt().min(1.0);
    let inv_dim = 0.5f64.powi(n_qubits as i32);
    // 2 g^2 + (2q - 4/D) g + (2(1 - q)/D - p_pi) = 0
    let b = 2.0 * q - 4.0 * inv_dim;
    let c = 2.0 * (1.0 - q) * inv_dim - p_pi_zne;
    let disc = (b * b - 8.0 * c).max(0.0);
    let gamma = ((-b + disc.sqrt()) / 4.0).clamp(0.0, (1.0 - q) / 2.0);
    ChannelParams::new(q, gamma, n_qubits)
}
