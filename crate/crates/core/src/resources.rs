//! Closed-form resource estimates for square and rectangular lattices.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::q_factor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Jw,
    Compact,
}

impl Encoding {
    pub fn name(&self) -> &'static str {
        match self {
            Encoding::Jw => "jw",
            Encoding::Compact => "compact",
        }
    }
}

/// Entangling gates per second-order Trotter step under Jordan-Wigner.
pub fn n_jw(x: usize, y: usize) -> usize {
    let (x, y) = (x as i64, y as i64);
    (2 * y * x * x + 3 * x * y + 14 * x - 2 * y - 15) as usize
}

/// Entangling gates per second-order Trotter step under the compact encoding.
pub fn n_compact(x: usize, y: usize) -> usize {
    let (x, y) = (x as i64, y as i64);
    (26 * x * y - 24 * (x + y)) as usize
}

/// `ceil(sqrt(n / 8))`, i.e. `ceil((2 / sqrt 32) sqrt n)` without rounding
/// error.
pub fn n_trotter_steps(n_qubits: usize) -> usize {
    let mut k = ((n_qubits as f64 / 8.0).sqrt().floor() as usize).max(1);
    while 8 * k * k < n_qubits {
        k += 1;
    }
    while k > 1 && 8 * (k - 1) * (k - 1) >= n_qubits {
        k -= 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub x: usize,
    pub y: usize,
    pub encoding: Encoding,
    pub fidelity: f64,
    pub n_steps: usize,
    pub gates_per_step: usize,
    pub total_2q: usize,
    pub q: f64,
    pub shot_overhead: f64,
}

/// Gate budget, signal factor `q = f^total` and shot overhead `1/q^2` of one
/// Loschmidt measurement including GHZ preparation and unpreparation.
///
/// Takes bare dimensions: estimates reach lattices far beyond what
/// [`crate::model::LatticeSpec`] admits for simulation.
pub fn shot_overhead(x: usize, y: usize, encoding: Encoding, fidelity: f64) -> Result<ResourceEstimate> {
    if !(fidelity > 0.0 && fidelity <= 1.0) {
        return Err(invalid(format!("fidelity must lie in (0, 1], got {fidelity}")));
    }
    if x < 2 || y < 2 {
        return Err(invalid(format!("gate formulas need x, y >= 2, got {x}x{y}")));
    }
    let gates_per_step = match encoding {
        Encoding::Jw => n_jw(x, y),
        Encoding::Compact => n_compact(x, y),
    };
    let n_steps = n_trotter_steps(2 * x * y);
    let total_2q = n_steps * gates_per_step + 2 * (x * y - 1);
    let q = q_factor(total_2q, fidelity);
    Ok(ResourceEstimate { x, y, encoding, fidelity, n_steps, gates_per_step, total_2q, q, shot_overhead: 1.0 / (q * q) })
}

/// Square side from which on the compact encoding needs fewer gates per step
/// than Jordan-Wigner for every larger square. The cubic Jordan-Wigner term
/// dominates well before `L = 100`.
pub fn compact_crossover() -> usize {
    (2..100).rev().find(|&l| n_compact(l, l) >= n_jw(l, l)).map_or(2, |l| l + 1)
}
